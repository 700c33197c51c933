use super::{CooMatrix, EllMatrix, MatrixError};

/// ELL + COO hybrid. The first `split_width` entries of every row live in
/// the ELL part, the overflow in the COO part.
#[derive(Debug, Clone, PartialEq)]
pub struct HybMatrix {
    ell: EllMatrix,
    coo: CooMatrix,
    split_width: usize,
}

/// Smallest width that holds at least two thirds of the rows completely.
pub fn hyb_split_width(row_counts: &[usize]) -> usize {
    if row_counts.is_empty() {
        return 0;
    }
    let mut sorted = row_counts.to_vec();
    sorted.sort_unstable();
    let covered = (2 * sorted.len()).div_ceil(3);
    sorted[covered - 1]
}

impl HybMatrix {
    pub fn from_coo(coo: &CooMatrix) -> Result<Self, MatrixError> {
        let split_width = hyb_split_width(&coo.row_counts());
        let mut seen = vec![0usize; coo.nrows()];
        let mut head = Vec::new();
        let mut tail = Vec::new();
        for (r, c, v) in coo.triplets() {
            if seen[r] < split_width {
                head.push((r, c, v));
            } else {
                tail.push((r, c, v));
            }
            seen[r] += 1;
        }
        let head = CooMatrix::from_triplets(coo.nrows(), coo.ncols(), head)?;
        Ok(Self {
            ell: EllMatrix::with_width(&head, split_width)?,
            coo: CooMatrix::from_triplets(coo.nrows(), coo.ncols(), tail)?,
            split_width,
        })
    }

    pub fn nrows(&self) -> usize {
        self.ell.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.ell.ncols()
    }

    pub fn split_width(&self) -> usize {
        self.split_width
    }

    pub fn ell_part(&self) -> &EllMatrix {
        &self.ell
    }

    pub fn coo_part(&self) -> &CooMatrix {
        &self.coo
    }

    pub fn to_coo(&self) -> CooMatrix {
        let all = self.ell.to_coo().triplets().chain(self.coo.triplets()).collect::<Vec<_>>();
        CooMatrix::from_triplets(self.nrows(), self.ncols(), all).expect("HYB parts are in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_width_covers_two_thirds() {
        assert_eq!(hyb_split_width(&[]), 0);
        assert_eq!(hyb_split_width(&[1, 1, 9]), 1);
        assert_eq!(hyb_split_width(&[5, 1, 2, 3]), 3);
        assert_eq!(hyb_split_width(&[0, 0, 0]), 0);
    }

    #[test]
    fn partition_is_exact() {
        let t = [(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0), (1, 0, 2.0), (2, 2, 3.0)];
        let coo = CooMatrix::from_triplets(3, 3, t).unwrap();
        let hyb = HybMatrix::from_coo(&coo).unwrap();
        assert_eq!(hyb.split_width(), 1);
        assert_eq!(hyb.ell_part().width(), 1);
        assert_eq!(hyb.ell_part().stored_entries() + hyb.coo_part().nnz(), 5);
        assert_eq!(hyb.coo_part().triplets().collect::<Vec<_>>(), vec![(0, 1, 1.0), (0, 2, 1.0)]);
        assert_eq!(hyb.to_coo(), coo);
    }
}
