//! CSV input: one matrix row per line, comma separated, optional header line.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

fn read_rows<R: std::io::Read>(reader: R, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("record {}, field {}: cannot parse {field:?}", line + 1, col + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a dense matrix from CSV text.
pub fn parse_matrix<R: std::io::Read>(reader: R, header: bool) -> Result<Array2<f64>> {
    let rows = read_rows(reader, header)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("no data rows".into()));
    }
    let p = rows[0].len();
    let mut flat = Vec::with_capacity(n * p);
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != p {
            return Err(Error::Parse(format!("row {} has {} fields, expected {p}", i + 1, row.len())));
        }
        flat.extend(row);
    }
    Array2::from_shape_vec((n, p), flat).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses a vector stored either as a single column or a single row.
pub fn parse_vector<R: std::io::Read>(reader: R, header: bool) -> Result<Array1<f64>> {
    let m = parse_matrix(reader, header)?;
    match m.dim() {
        (_, 1) => Ok(m.column(0).to_owned()),
        (1, _) => Ok(m.row(0).to_owned()),
        (r, c) => Err(Error::Parse(format!("expected a vector, found a {r}×{c} table"))),
    }
}

pub fn read_matrix_csv(path: impl AsRef<Path>, header: bool) -> Result<Array2<f64>> {
    parse_matrix(std::fs::File::open(path)?, header)
}

pub fn read_vector_csv(path: impl AsRef<Path>, header: bool) -> Result<Array1<f64>> {
    parse_vector(std::fs::File::open(path)?, header)
}
