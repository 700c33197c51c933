use super::{CooMatrix, FormatTag, MatrixError, PADDED_STORAGE_LIMIT};

/// ELLPACK storage: every row padded to `width` slots, stored column-major
/// (slot `k` of row `i` lives at `k * nrows + i`).
///
/// Padding slots carry column index `ncols` and value `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllMatrix {
    nrows: usize,
    ncols: usize,
    width: usize,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl EllMatrix {
    pub fn from_coo(coo: &CooMatrix) -> Result<Self, MatrixError> {
        let width = coo.row_counts().into_iter().max().unwrap_or(0);
        Self::with_width(coo, width)
    }

    /// Builds an ELL matrix of the given width; every row must fit.
    pub(crate) fn with_width(coo: &CooMatrix, width: usize) -> Result<Self, MatrixError> {
        let nrows = coo.nrows();
        let slots = width.saturating_mul(nrows);
        if slots > PADDED_STORAGE_LIMIT {
            return Err(MatrixError::PaddingLimitExceeded {
                format: FormatTag::Ell,
                slots,
                limit: PADDED_STORAGE_LIMIT,
            });
        }
        let sentinel = coo.ncols();
        let mut col_idx = vec![sentinel; slots];
        let mut values = vec![0.0; slots];
        let mut fill = vec![0usize; nrows];
        for (r, c, v) in coo.triplets() {
            let k = fill[r];
            if k >= width {
                return Err(MatrixError::InvalidStructure(format!(
                    "row {r} has more than {width} entries"
                )));
            }
            col_idx[k * nrows + r] = c;
            values[k * nrows + r] = v;
            fill[r] += 1;
        }
        Ok(Self {
            nrows,
            ncols: coo.ncols(),
            width,
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

    pub fn width(&self) -> usize {
        self.width
    }

    /// Column index used for padding slots.
    pub fn sentinel(&self) -> usize {
        self.ncols
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of non-padding slots.
    pub fn stored_entries(&self) -> usize {
        self.col_idx.iter().filter(|&&c| c != self.ncols).count()
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut triplets = Vec::new();
        for i in 0..self.nrows {
            for k in 0..self.width {
                let c = self.col_idx[k * self.nrows + i];
                if c != self.ncols {
                    triplets.push((i, c, self.values[k * self.nrows + i]));
                }
            }
        }
        CooMatrix::from_triplets(self.nrows, self.ncols, triplets)
            .expect("ELL entries are in range")
    }
}
