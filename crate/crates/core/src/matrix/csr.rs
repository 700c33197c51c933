use super::{CooMatrix, MatrixError};
use crate::cancel::{CancelToken, Cancelled, CHECK_INTERVAL_ROWS};

/// Compressed sparse row storage with strictly increasing columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_coo(coo: &CooMatrix) -> Self {
        let mut row_ptr = vec![0usize; coo.nrows() + 1];
        for &r in coo.rows() {
            row_ptr[r + 1] += 1;
        }
        for i in 0..coo.nrows() {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows: coo.nrows(),
            ncols: coo.ncols(),
            row_ptr,
            col_idx: coo.cols().to_vec(),
            values: coo.values().to_vec(),
        }
    }

    /// Same as [`from_coo`](Self::from_coo) but polls `cancel` every
    /// [`CHECK_INTERVAL_ROWS`] rows.
    pub fn from_coo_cancellable(coo: &CooMatrix, cancel: &CancelToken) -> Result<Self, Cancelled> {
        if cancel.checkpoint(0) {
            return Err(Cancelled);
        }
        let nrows = coo.nrows();
        let rows = coo.rows();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(coo.nnz());
        let mut values = Vec::with_capacity(coo.nnz());
        row_ptr.push(0);
        let mut k = 0;
        for start in (0..nrows).step_by(CHECK_INTERVAL_ROWS) {
            let end = (start + CHECK_INTERVAL_ROWS).min(nrows);
            let k0 = k;
            for i in start..end {
                while k < rows.len() && rows[k] == i {
                    k += 1;
                }
                row_ptr.push(k);
            }
            col_idx.extend_from_slice(&coo.cols()[k0..k]);
            values.extend_from_slice(&coo.values()[k0..k]);
            if cancel.checkpoint(end - start) {
                return Err(Cancelled);
            }
        }
        Ok(Self {
            nrows,
            ncols: coo.ncols(),
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, MatrixError> {
        let bad = |msg: String| Err(MatrixError::InvalidStructure(msg));
        if row_ptr.len() != nrows + 1 {
            return bad(format!("row_ptr has length {}, expected {}", row_ptr.len(), nrows + 1));
        }
        if row_ptr[0] != 0 || row_ptr[nrows] != col_idx.len() || col_idx.len() != values.len() {
            return bad("row_ptr endpoints do not match nnz".into());
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return bad(format!("row_ptr decreases at row {i}"));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for (k, &c) in cols.iter().enumerate() {
                if c >= ncols {
                    return Err(MatrixError::IndexOutOfRange {
                        row: i,
                        col: c,
                        nrows,
                        ncols,
                    });
                }
                if k > 0 && cols[k - 1] >= c {
                    return bad(format!("columns not strictly increasing in row {i}"));
                }
            }
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let row = row_ptr.partition_point(|&p| p <= k) - 1;
            return Err(MatrixError::NonFinite { row, col: col_idx[k] });
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut rows = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            rows.extend(std::iter::repeat_n(i, self.row_ptr[i + 1] - self.row_ptr[i]));
        }
        CooMatrix::from_sorted_parts(
            self.nrows,
            self.ncols,
            rows,
            self.col_idx.clone(),
            self.values.clone(),
        )
        .expect("CSR invariants imply COO invariants")
    }
}
