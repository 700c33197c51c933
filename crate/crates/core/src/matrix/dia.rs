use super::{CooMatrix, FormatTag, MatrixError, PADDED_STORAGE_LIMIT};

/// Maximum number of stored diagonals before DIA conversion refuses.
pub const DIA_OFFSET_CAP: usize = 4096;

/// Diagonal storage. Diagonal `d` (offset `offsets[d] = col - row`) is a
/// dense array of length `nrows` indexed by row; unstored slots hold 0.
///
/// An occupancy bitmap remembers which slots came from the source matrix so
/// that explicitly stored zeros survive a round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct DiaMatrix {
    nrows: usize,
    ncols: usize,
    offsets: Vec<isize>,
    data: Vec<f64>,
    occupied: Vec<u64>,
}

impl DiaMatrix {
    pub fn from_coo(coo: &CooMatrix) -> Result<Self, MatrixError> {
        let (nrows, ncols) = (coo.nrows(), coo.ncols());
        // slot for offset o is o + nrows - 1, in 0..nrows+ncols-1
        let mut slot_of = vec![usize::MAX; (nrows + ncols).saturating_sub(1)];
        for (r, c, _) in coo.triplets() {
            slot_of[c + nrows - 1 - r] = 0;
        }
        let mut offsets = Vec::new();
        for (s, slot) in slot_of.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = offsets.len();
                offsets.push(s as isize - (nrows as isize - 1));
            }
        }
        if offsets.len() > DIA_OFFSET_CAP {
            return Err(MatrixError::DiaCapExceeded {
                ndiag: offsets.len(),
                cap: DIA_OFFSET_CAP,
            });
        }
        let slots = offsets.len().saturating_mul(nrows);
        if slots > PADDED_STORAGE_LIMIT {
            return Err(MatrixError::PaddingLimitExceeded {
                format: FormatTag::Dia,
                slots,
                limit: PADDED_STORAGE_LIMIT,
            });
        }
        let mut data = vec![0.0; slots];
        let mut occupied = vec![0u64; slots.div_ceil(64)];
        for (r, c, v) in coo.triplets() {
            let k = slot_of[c + nrows - 1 - r] * nrows + r;
            data[k] = v;
            occupied[k / 64] |= 1 << (k % 64);
        }
        Ok(Self {
            nrows,
            ncols,
            offsets,
            data,
            occupied,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn offsets(&self) -> &[isize] {
        &self.offsets
    }

    pub fn ndiag(&self) -> usize {
        self.offsets.len()
    }

    /// Values of diagonal `d`, indexed by row.
    pub fn diagonal(&self, d: usize) -> &[f64] {
        &self.data[d * self.nrows..(d + 1) * self.nrows]
    }

    /// Rows `i` for which column `i + offset` lies inside the matrix.
    pub fn row_range(&self, offset: isize) -> std::ops::Range<usize> {
        let start = (-offset).max(0) as usize;
        let end = (self.ncols as isize - offset).clamp(0, self.nrows as isize) as usize;
        start.min(end)..end
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut triplets = Vec::new();
        for (d, &off) in self.offsets.iter().enumerate() {
            for i in self.row_range(off) {
                let k = d * self.nrows + i;
                if self.occupied[k / 64] >> (k % 64) & 1 == 1 {
                    triplets.push((i, (i as isize + off) as usize, self.data[k]));
                }
            }
        }
        CooMatrix::from_triplets(self.nrows, self.ncols, triplets).expect("DIA entries are in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_sorted_and_explicit_zero_kept() {
        let coo =
            CooMatrix::from_triplets(3, 4, [(0, 3, 1.0), (1, 1, 0.0), (2, 0, 2.0), (2, 2, 3.0)])
                .unwrap();
        let dia = DiaMatrix::from_coo(&coo).unwrap();
        assert_eq!(dia.offsets(), &[-2, 0, 3]);
        assert_eq!(dia.to_coo(), coo);
    }

    #[test]
    fn row_range_clips_to_matrix() {
        let coo = CooMatrix::from_triplets(3, 4, [(0, 0, 1.0)]).unwrap();
        let dia = DiaMatrix::from_coo(&coo).unwrap();
        assert_eq!(dia.row_range(3), 0..1);
        assert_eq!(dia.row_range(-2), 2..3);
        assert_eq!(dia.row_range(0), 0..3);
        assert_eq!(dia.row_range(5), 0..0);
    }

    #[test]
    fn cap_is_enforced() {
        let n = DIA_OFFSET_CAP + 1;
        let coo = CooMatrix::from_triplets(n, n, (0..n).map(|i| (i, n - 1 - i, 1.0))).unwrap();
        assert_eq!(
            DiaMatrix::from_coo(&coo).unwrap_err(),
            MatrixError::DiaCapExceeded { ndiag: n, cap: DIA_OFFSET_CAP }
        );
    }
}
