#![no_main]

use libfuzzer_sys::fuzz_target;
use tripanel::config::parse_far_field;
use tripanel::sweep::{CanonicalLine, GridPlane};
use tripanel::vec3::parse_vec3;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Some(v) = parse_vec3(s) {
        assert!(v.is_finite());
    }
    let _ = parse_far_field(s);
    let _ = s.parse::<GridPlane>();
    if let Ok(c) = s.parse::<CanonicalLine>() {
        assert_eq!(c.name(), s);
    }
});
