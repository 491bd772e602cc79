#![no_main]

use libfuzzer_sys::fuzz_target;
use tripanel::csvio::{read_table, Cell, TableWriter};

fuzz_target!(|data: &[u8]| {
    let Ok(t) = read_table(data) else { return };
    assert!(t.rows.iter().all(|r| r.len() == t.columns.len()));
    for c in &t.columns {
        let _ = t.floats(c);
    }
    let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
    let Ok(mut w) = TableWriter::new(Vec::new(), &t.schema, t.version, &cols) else {
        return;
    };
    for r in &t.rows {
        let cells: Vec<Cell> = r.iter().map(|s| Cell::Text(s.clone())).collect();
        w.row(&cells).unwrap();
    }
    let bytes = w.finish().unwrap();
    let again = read_table(bytes.as_slice()).unwrap();
    assert_eq!(again.columns, t.columns);
    assert_eq!(again.rows.len(), t.rows.len());
});
