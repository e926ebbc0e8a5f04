//! Plain-text matrix layouts for fixtures and bundles.
//!
//! JSON: `{"rows": r, "cols": c, "data": [[re, im], ...]}` with `data` in
//! row-major order. CSV: one line per matrix row, each entry written as two
//! columns `re,im`.

use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixRecord {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<&MatrixRecord> for ComplexMatrix {
    type Error = Error;

    fn try_from(r: &MatrixRecord) -> Result<Self> {
        if r.data.len() != r.rows * r.cols {
            return Err(Error::Parse(format!(
                "matrix record declares {}x{} but holds {} entries",
                r.rows,
                r.cols,
                r.data.len()
            )));
        }
        if r.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse("matrix record has non-finite entries".into()));
        }
        Ok(ComplexMatrix::from_row_iterator(r.rows, r.cols, r.data.iter().map(|&[re, im]| C64::new(re, im))))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Result<String> {
    Ok(serde_json::to_string(&MatrixRecord::from(m))?)
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    let record: MatrixRecord = serde_json::from_str(s)?;
    ComplexMatrix::try_from(&record)
}

pub fn matrix_to_csv(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(s: &str) -> Result<ComplexMatrix> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (line_no, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", line_no + 1)))?;
        if !fields.len().is_multiple_of(2) {
            return Err(Error::Parse(format!("line {}: odd number of re,im fields", line_no + 1)));
        }
        rows.push(fields.chunks(2).map(|p| C64::new(p[0], p[1])).collect());
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(ComplexMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

/// `#[serde(with = "...")]` adaptor storing a matrix as a [`MatrixRecord`].
pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRecord::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let record = MatrixRecord::deserialize(d)?;
        ComplexMatrix::try_from(&record).map_err(serde::de::Error::custom)
    }
}

/// Same as [`matrix_serde`] for a list of matrices.
pub mod matrix_vec_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let records: Vec<MatrixRecord> = ms.iter().map(MatrixRecord::from).collect();
        records.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let records = Vec::<MatrixRecord>::deserialize(d)?;
        records.iter().map(|r| ComplexMatrix::try_from(r).map_err(serde::de::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::pauli;
    use proptest::prelude::*;

    #[test]
    fn json_layout_is_row_major() {
        let s = matrix_to_json(&pauli::y()).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":2,"data":[[0.0,0.0],[-0.0,-1.0],[0.0,1.0],[0.0,0.0]]}"#);
        assert!(matrix_from_json(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
    }

    #[test]
    fn csv_layout() {
        assert_eq!(matrix_to_csv(&pauli::plus()), "0,0,1,0\n0,0,0,0\n");
        assert!(matrix_from_csv("1,0,2\n").is_err());
    }

    proptest! {
        #[test]
        fn text_layouts_round_trip(rows in 1usize..5, cols in 1usize..5, seed in proptest::collection::vec(-1e3f64..1e3, 50)) {
            let m = ComplexMatrix::from_fn(rows, cols, |i, j| C64::new(seed[2 * (i * cols + j)], seed[2 * (i * cols + j) + 1]));
            prop_assert_eq!(matrix_from_json(&matrix_to_json(&m).unwrap()).unwrap(), m.clone());
            prop_assert_eq!(matrix_from_csv(&matrix_to_csv(&m)).unwrap(), m);
        }
    }
}
