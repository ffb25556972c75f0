//! JSON encodings shared by the library types and the CLI.
//!
//! Complex matrices are nested row-major arrays of `[re, im]` pairs.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub type MatrixPairs = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_pairs(m: &CMatrix) -> MatrixPairs {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!(
            "matrix must be square: {n} rows but a row of length {}",
            bad.len()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64 - 0.5));
        assert_eq!(matrix_from_pairs(&matrix_to_pairs(&m)).unwrap(), m);
    }

    #[test]
    fn ragged_rejected() {
        let rows = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[1.0, 0.0]]];
        assert!(matrix_from_pairs(&rows).is_err());
    }
}
