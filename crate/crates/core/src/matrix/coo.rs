use super::MatrixError;

/// Coordinate storage, sorted row-major with no duplicate coordinates.
///
/// Stored as three parallel arrays so kernels can stream them directly.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CooMatrix {
    /// Builds a matrix from unordered triplets. Duplicate coordinates are
    /// summed; the result is sorted by `(row, col)`.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (row, col, value) in triplets {
            if row >= nrows || col >= ncols {
                return Err(MatrixError::IndexOutOfRange {
                    row,
                    col,
                    nrows,
                    ncols,
                });
            }
            if !value.is_finite() {
                return Err(MatrixError::NonFinite { row, col });
            }
            entries.push((row, col, value));
        }
        // stable: duplicates are summed in input order
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut rows = Vec::with_capacity(entries.len());
        let mut cols = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                values.push(v);
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: rows[i],
                col: cols[i],
            });
        }
        Ok(Self {
            nrows,
            ncols,
            rows,
            cols,
            values,
        })
    }

    /// Builds a matrix from arrays that already satisfy the COO invariants.
    pub fn from_sorted_parts(
        nrows: usize,
        ncols: usize,
        rows: Vec<usize>,
        cols: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, MatrixError> {
        if rows.len() != cols.len() || rows.len() != values.len() {
            return Err(MatrixError::InvalidStructure(format!(
                "array lengths differ: rows {}, cols {}, values {}",
                rows.len(),
                cols.len(),
                values.len()
            )));
        }
        for k in 0..rows.len() {
            let (r, c) = (rows[k], cols[k]);
            if r >= nrows || c >= ncols {
                return Err(MatrixError::IndexOutOfRange {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            if !values[k].is_finite() {
                return Err(MatrixError::NonFinite { row: r, col: c });
            }
            if k > 0 && (rows[k - 1], cols[k - 1]) >= (r, c) {
                return Err(MatrixError::InvalidStructure(format!(
                    "entry {k} at ({r}, {c}) is not strictly after its predecessor"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            rows,
            cols,
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

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.values)
            .map(|((&r, &c), &v)| (r, c, v))
    }

    /// Number of stored entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nrows];
        for &r in &self.rows {
            counts[r] += 1;
        }
        counts
    }
}
