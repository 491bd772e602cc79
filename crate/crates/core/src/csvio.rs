//! CSV tables with a versioned schema comment as the first line.
//!
//! ```text
//! # tripanel influence v1
//! x,y,z,potential,fx,fy,fz,path,flags
//! ```
//!
//! Floats are written with 17 significant digits so that a parse returns
//! the same bits.

use std::io::{Read, Write};
use thiserror::Error;

pub const SCHEMA_PREFIX: &str = "# tripanel ";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("missing or malformed schema line")]
    Schema,
    #[error("header has {found} columns, schema {schema} expects {expected}")]
    Header { schema: String, found: usize, expected: usize },
    #[error("row {row} has {found} fields, expected {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
    #[error("column {column} is not a number in row {row}: {value:?}")]
    NotANumber { row: usize, column: String, value: String },
    #[error("table has no columns")]
    NoColumns,
    #[error("no column named {0}")]
    NoColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Writes rows of a fixed schema.
pub struct TableWriter<W: Write> {
    inner: csv::Writer<W>,
    width: usize,
    rows: usize,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut out: W, schema: &str, version: u32, columns: &[&str]) -> Result<Self, CsvError> {
        if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
            return Err(CsvError::NoColumns);
        }
        writeln!(out, "{SCHEMA_PREFIX}{schema} v{version}")?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(columns)?;
        Ok(Self {
            inner,
            width: columns.len(),
            rows: 0,
        })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<(), CsvError> {
        if cells.len() != self.width {
            return Err(CsvError::RowLength {
                row: self.rows,
                found: cells.len(),
                expected: self.width,
            });
        }
        self.inner.write_record(cells.iter().map(Cell::render))?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, CsvError> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| CsvError::Io(e.into_error()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: String,
    pub version: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize, CsvError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CsvError::NoColumn(name.to_string()))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>, CsvError> {
        let k = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(row, r)| {
                r[k].parse::<f64>().map_err(|_| CsvError::NotANumber {
                    row,
                    column: name.to_string(),
                    value: r[k].clone(),
                })
            })
            .collect()
    }
}

fn parse_schema(line: &str) -> Option<(String, u32)> {
    let rest = line.strip_prefix(SCHEMA_PREFIX)?;
    let (name, version) = rest.trim_end().rsplit_once(' ')?;
    let version = version.strip_prefix('v')?.parse().ok()?;
    if name.is_empty() || name.contains(char::is_whitespace) {
        return None;
    }
    Some((name.to_string(), version))
}

/// Parses a table written by [`TableWriter`].
pub fn read_table<R: Read>(mut input: R) -> Result<Table, CsvError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (first, body) = text.split_once('\n').ok_or(CsvError::Schema)?;
    let (schema, version) = parse_schema(first.trim_end_matches('\r')).ok_or(CsvError::Schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if columns.iter().all(String::is_empty) {
        return Err(CsvError::NoColumns);
    }
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != columns.len() {
            return Err(CsvError::RowLength {
                row,
                found: rec.len(),
                expected: columns.len(),
            });
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table {
        schema,
        version,
        columns,
        rows,
    })
}

/// Checks that a table carries the expected schema name and columns.
pub fn expect_schema(table: &Table, schema: &str, columns: &[&str]) -> Result<(), CsvError> {
    if table.schema != schema {
        return Err(CsvError::Schema);
    }
    if table.columns.len() != columns.len() || table.columns.iter().zip(columns).any(|(a, b)| a != b) {
        return Err(CsvError::Header {
            schema: schema.to_string(),
            found: table.columns.len(),
            expected: columns.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_keeps_bits() {
        let vals = [0.1, -1.0 / 3.0, 5.0017e-4, f64::MIN_POSITIVE, 1e300, -0.0];
        let mut w = TableWriter::new(Vec::new(), "demo", 1, &["k", "v", "tag"]).unwrap();
        for (k, &v) in vals.iter().enumerate() {
            w.row(&[k.into(), v.into(), "a,b".into()]).unwrap();
        }
        let bytes = w.finish().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("# tripanel demo v1\nk,v,tag\n"));
        let t = read_table(&bytes[..]).unwrap();
        assert_eq!(t.schema, "demo");
        assert_eq!(t.version, 1);
        expect_schema(&t, "demo", &["k", "v", "tag"]).unwrap();
        let back = t.floats("v").unwrap();
        for (a, b) in vals.iter().zip(back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(t.rows[0][2], "a,b");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(read_table("x,y\n1,2\n".as_bytes()), Err(CsvError::Schema)));
        assert!(matches!(read_table("# tripanel a vx\nx\n".as_bytes()), Err(CsvError::Schema)));
        assert!(matches!(
            read_table("# tripanel a v1\nx,y\n1\n".as_bytes()),
            Err(CsvError::RowLength { .. })
        ));
        let t = read_table("# tripanel a v1\nx,y\n1,zz\n".as_bytes()).unwrap();
        assert!(matches!(t.floats("y"), Err(CsvError::NotANumber { .. })));
        assert!(matches!(t.floats("w"), Err(CsvError::NoColumn(_))));
        assert!(expect_schema(&t, "b", &["x", "y"]).is_err());
        assert!(expect_schema(&t, "a", &["x"]).is_err());
        let mut w = TableWriter::new(Vec::new(), "a", 1, &["x"]).unwrap();
        assert!(w.row(&[1.0.into(), 2.0.into()]).is_err());
        assert!(matches!(TableWriter::new(Vec::new(), "a", 1, &[]), Err(CsvError::NoColumns)));
        assert!(matches!(
            read_table(
                "# tripanel a v1
"
                .as_bytes()
            ),
            Err(CsvError::NoColumns)
        ));
    }

    #[test]
    fn hash_prefixed_cells_are_data() {
        let mut w = TableWriter::new(Vec::new(), "a", 1, &["#k", "v"]).unwrap();
        w.row(&["# not a comment".into(), "".into()]).unwrap();
        let t = read_table(w.finish().unwrap().as_slice()).unwrap();
        assert_eq!(t.columns, ["#k", "v"]);
        assert_eq!(t.rows, [["# not a comment", ""]]);
    }

    proptest! {
        #[test]
        fn float_cells_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let mut w = TableWriter::new(Vec::new(), "p", 2, &["v"]).unwrap();
            w.row(&[v.into()]).unwrap();
            let bytes = w.finish().unwrap();
            let t = read_table(&bytes[..]).unwrap();
            prop_assert_eq!(t.floats("v").unwrap()[0].to_bits(), v.to_bits());
        }

        #[test]
        fn text_cells_round_trip(cells in proptest::collection::vec("\\PC{0,12}", 1..5)) {
            let cols: Vec<String> = (0..cells.len()).map(|k| format!("c{k}")).collect();
            let names: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut w = TableWriter::new(Vec::new(), "p", 1, &names).unwrap();
            let row: Vec<Cell> = cells.iter().map(|c| c.as_str().into()).collect();
            w.row(&row).unwrap();
            let t = read_table(w.finish().unwrap().as_slice()).unwrap();
            prop_assert_eq!(&t.rows, &vec![cells]);
        }

        #[test]
        fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
            let _ = read_table(s.as_bytes());
        }
    }
}
