#![no_main]

use libfuzzer_sys::fuzz_target;
use tripanel::kernel::{self, KernelInputs};
use tripanel::robust::{classify_location, EvalPolicy};
use tripanel::{TrianglePrimitive, Vec3};

/// Maps to `[lo, hi]`; odd inputs snap to a 1/64 lattice so that corners,
/// edges and the panel plane are hit exactly.
fn unit(v: u32, lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) * f64::from(v >> 1) / f64::from(u32::MAX >> 1);
    if v & 1 == 1 {
        (t * 64.0).round() / 64.0
    } else {
        t
    }
}

fuzz_target!(|data: ([u32; 4], [f64; 4])| {
    let ([a, b, c, d], raw) = data;
    let z_m = 10f64.powf(unit(a, -3.0, 3.0));
    let p = Vec3::new(unit(b, -3.0, 3.0), unit(c, -3.0, 3.0), unit(d, -3.0, 3.0) * z_m);
    for (zm, q) in [(z_m, p), (raw[0], Vec3::new(raw[1], raw[2], raw[3]))] {
        if let Ok(v) = kernel::influence(&KernelInputs::at(zm, q)) {
            assert!(v.potential.is_finite() && v.potential > 0.0 && v.flux.is_finite());
        }
        if let Ok(prim) = TrianglePrimitive::new(zm) {
            if q.is_finite() {
                let _ = classify_location(&prim, q, &EvalPolicy::default());
            }
        }
    }
});
