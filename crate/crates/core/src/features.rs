//! The 15-feature sparsity profile fed to every classifier.
//!
//! Features are computed in three groups of increasing cost: constant-time
//! ones from the dimensions, a pass over the row pointers for the row-length
//! statistics, and a pass over the column indices for the structural
//! features. Both passes poll the cancellation token every
//! [`CHECK_INTERVAL_ROWS`] rows.

use crate::cancel::{CancelToken, Cancelled, CHECK_INTERVAL_ROWS};
use crate::matrix::CsrMatrix;
use serde::{Deserialize, Serialize};

/// Column order shared by dataset CSVs and model files.
pub const FEATURE_NAMES: [&str; 15] = [
    "nrows",
    "ncols",
    "nnz",
    "density",
    "mean",
    "sd",
    "cov",
    "max",
    "min",
    "maxavg",
    "distavg",
    "clusteravg",
    "fill",
    "ndiag",
    "diagfill",
];

pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub nrows: usize,
    pub ncols: usize,
    pub nnz: usize,
    /// `nnz / (nrows * ncols)`
    pub density: f64,
    /// Mean entries per row.
    pub mean: f64,
    /// Population standard deviation of entries per row.
    pub sd: f64,
    /// `sd / mean`, 0 when `mean` is 0.
    pub cov: f64,
    pub max: f64,
    pub min: f64,
    /// `max - mean`
    pub maxavg: f64,
    /// Mean over rows of `|first column - last column|`.
    pub distavg: f64,
    /// Mean over rows of the longest run of consecutive column indices.
    pub clusteravg: f64,
    /// `nrows * max / nnz`
    pub fill: f64,
    /// Number of distinct `col - row` offsets.
    pub ndiag: f64,
    /// `nrows * ndiag / nnz`
    pub diagfill: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.nrows as f64,
            self.ncols as f64,
            self.nnz as f64,
            self.density,
            self.mean,
            self.sd,
            self.cov,
            self.max,
            self.min,
            self.maxavg,
            self.distavg,
            self.clusteravg,
            self.fill,
            self.ndiag,
            self.diagfill,
        ]
    }

    /// Inverse of [`to_array`](Self::to_array). Count fields are truncated.
    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        Self {
            nrows: a[0] as usize,
            ncols: a[1] as usize,
            nnz: a[2] as usize,
            density: a[3],
            mean: a[4],
            sd: a[5],
            cov: a[6],
            max: a[7],
            min: a[8],
            maxavg: a[9],
            distavg: a[10],
            clusteravg: a[11],
            fill: a[12],
            ndiag: a[13],
            diagfill: a[14],
        }
    }
}

/// Array reads performed by one extraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractionStats {
    pub row_ptr_reads: usize,
    pub col_idx_reads: usize,
}

pub fn extract_features(m: &CsrMatrix, cancel: &CancelToken) -> Result<FeatureVector, Cancelled> {
    extract_features_instrumented(m, cancel, &mut ExtractionStats::default())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// [`extract_features`] that also counts array reads into `stats`.
pub fn extract_features_instrumented(
    m: &CsrMatrix,
    cancel: &CancelToken,
    stats: &mut ExtractionStats,
) -> Result<FeatureVector, Cancelled> {
    if cancel.checkpoint(0) {
        return Err(Cancelled);
    }
    let row_ptr = m.row_ptr();
    let col_idx = m.col_idx();
    let (nrows, ncols, nnz) = (m.nrows(), m.ncols(), m.nnz());

    let nrows_f = nrows as f64;
    let nnz_f = nnz as f64;
    let density = ratio(nnz_f, nrows_f * ncols as f64);
    let mean = ratio(nnz_f, nrows_f);

    // row-length statistics
    let mut sq_dev = 0.0;
    let mut max = 0usize;
    let mut min = if nrows == 0 { 0 } else { usize::MAX };
    let mut prev = row_ptr[0];
    stats.row_ptr_reads += 1;
    for start in (0..nrows).step_by(CHECK_INTERVAL_ROWS) {
        let end = (start + CHECK_INTERVAL_ROWS).min(nrows);
        for &next in &row_ptr[start + 1..end + 1] {
            let r = next - prev;
            prev = next;
            let dev = mean - r as f64;
            sq_dev += dev * dev;
            max = max.max(r);
            min = min.min(r);
        }
        stats.row_ptr_reads += end - start;
        if cancel.checkpoint(end - start) {
            return Err(Cancelled);
        }
    }
    let sd = ratio(sq_dev, nrows_f).sqrt();
    let (max, min) = (max as f64, min as f64);
    let cov = ratio(sd, mean);
    let maxavg = max - mean;
    let fill = ratio(nrows_f * max, nnz_f);

    // structural features
    let mut diagonal_seen = vec![false; (nrows + ncols).saturating_sub(1)];
    let mut ndiag = 0usize;
    let mut dist_sum = 0usize;
    let mut cluster_sum = 0usize;
    stats.row_ptr_reads += 1;
    for start in (0..nrows).step_by(CHECK_INTERVAL_ROWS) {
        let end = (start + CHECK_INTERVAL_ROWS).min(nrows);
        for i in start..end {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            stats.col_idx_reads += cols.len();
            let (Some(&first), Some(&last)) = (cols.first(), cols.last()) else {
                continue;
            };
            dist_sum += last - first;
            let mut run = 1;
            let mut longest = 1;
            let mut prev_col = first;
            for &c in cols {
                let slot = c + nrows - 1 - i;
                if !diagonal_seen[slot] {
                    diagonal_seen[slot] = true;
                    ndiag += 1;
                }
                if c == prev_col + 1 {
                    run += 1;
                    longest = longest.max(run);
                } else if c != prev_col {
                    run = 1;
                }
                prev_col = c;
            }
            cluster_sum += longest;
        }
        stats.row_ptr_reads += end - start;
        if cancel.checkpoint(end - start) {
            return Err(Cancelled);
        }
    }
    let distavg = ratio(dist_sum as f64, nrows_f);
    let clusteravg = ratio(cluster_sum as f64, nrows_f);
    let ndiag = ndiag as f64;
    let diagfill = ratio(nrows_f * ndiag, nnz_f);

    Ok(FeatureVector {
        nrows,
        ncols,
        nnz,
        density,
        mean,
        sd,
        cov,
        max,
        min,
        maxavg,
        distavg,
        clusteravg,
        fill,
        ndiag,
        diagfill,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CooMatrix;

    fn csr(nrows: usize, ncols: usize, coords: &[(usize, usize)]) -> CsrMatrix {
        let t = coords.iter().map(|&(r, c)| (r, c, 1.0));
        CsrMatrix::from_coo(&CooMatrix::from_triplets(nrows, ncols, t).unwrap())
    }

    fn features(m: &CsrMatrix) -> FeatureVector {
        extract_features(m, &CancelToken::new()).unwrap()
    }

    #[test]
    fn identity() {
        let f = features(&csr(3, 3, &[(0, 0), (1, 1), (2, 2)]));
        let expected = FeatureVector {
            nrows: 3,
            ncols: 3,
            nnz: 3,
            density: 1.0 / 3.0,
            mean: 1.0,
            sd: 0.0,
            cov: 0.0,
            max: 1.0,
            min: 1.0,
            maxavg: 0.0,
            distavg: 0.0,
            clusteravg: 1.0,
            fill: 1.0,
            ndiag: 1.0,
            diagfill: 1.0,
        };
        assert_eq!(f, expected);
    }

    #[test]
    fn ones_two_by_three() {
        let f = features(&csr(2, 3, &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]));
        assert_eq!(f.nnz, 6);
        assert_eq!((f.density, f.mean, f.sd), (1.0, 3.0, 0.0));
        assert_eq!((f.max, f.min, f.distavg, f.clusteravg), (3.0, 3.0, 2.0, 3.0));
        assert_eq!((f.fill, f.ndiag), (1.0, 4.0));
        assert!((f.diagfill - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_row_with_gap() {
        let f = features(&csr(1, 3, &[(0, 0), (0, 2)]));
        assert_eq!((f.mean, f.sd, f.distavg, f.clusteravg), (2.0, 0.0, 2.0, 1.0));
        assert_eq!((f.ndiag, f.diagfill), (2.0, 1.0));
    }

    #[test]
    fn empty_rows_count_toward_min_and_means() {
        let f = features(&csr(4, 4, &[(0, 0), (0, 1), (0, 2), (3, 3)]));
        assert_eq!(f.min, 0.0);
        assert_eq!(f.max, 3.0);
        assert_eq!(f.mean, 1.0);
        assert_eq!(f.distavg, 0.5);
        assert_eq!(f.clusteravg, 1.0);
    }

    #[test]
    fn empty_matrix_is_total() {
        let f = features(&csr(0, 0, &[]));
        assert!(f.to_array().iter().all(|v| *v == 0.0));
        let f = features(&csr(3, 3, &[]));
        assert_eq!((f.cov, f.fill, f.diagfill, f.min), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn cancelled_before_start_reads_nothing() {
        let token = CancelToken::new();
        token.cancel();
        let mut stats = ExtractionStats::default();
        let m = csr(3, 3, &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(extract_features_instrumented(&m, &token, &mut stats), Err(Cancelled));
        assert_eq!(stats, ExtractionStats::default());
    }

    #[test]
    fn reads_are_linear() {
        let coords: Vec<_> = (0..10_000).flat_map(|i| [(i, i), (i, (i * 31) % 10_000)]).collect();
        let m = csr(10_000, 10_000, &coords);
        let mut stats = ExtractionStats::default();
        extract_features_instrumented(&m, &CancelToken::new(), &mut stats).unwrap();
        assert_eq!(stats.col_idx_reads, m.nnz());
        assert_eq!(stats.row_ptr_reads, 2 * (m.nrows() + 1));
    }

    #[test]
    fn array_round_trip() {
        let f = features(&csr(2, 3, &[(0, 0), (1, 2)]));
        assert_eq!(FeatureVector::from_array(f.to_array()), f);
    }
}
