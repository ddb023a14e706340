//! Bare matrices as CSV: one row per line, rationals as `p/q`, integers or
//! decimals. Blank lines and lines starting with `#` are skipped.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rational::{format_rational, parse_rational};

pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                parse_rational(field).map_err(|_| Error::Document {
                    message: format!("malformed rational `{field}`"),
                    line,
                    column: c + 1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(rows)
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(format_rational).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
