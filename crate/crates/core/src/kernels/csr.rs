//! CSR kernels: lane-vectorized rows (LibA), row-parallel scalar (LibB) and
//! merge-path balanced (LibC).

use super::{for_each_row_blocked, partition_start};
use crate::matrix::CsrMatrix;
use rayon::prelude::*;

/// Dot product of one row with `x` using `L` interleaved accumulators,
/// folded pairwise at the end.
#[inline]
fn row_dot_lanes<const L: usize>(cols: &[usize], vals: &[f64], x: &[f64]) -> f64 {
    let mut acc = [0.0f64; L];
    let mut c = cols.chunks_exact(L);
    let mut v = vals.chunks_exact(L);
    for (cs, vs) in (&mut c).zip(&mut v) {
        for j in 0..L {
            acc[j] += vs[j] * x[cs[j]];
        }
    }
    for (j, (&cj, &vj)) in c.remainder().iter().zip(v.remainder()).enumerate() {
        acc[j] += vj * x[cj];
    }
    let mut width = L;
    while width > 1 {
        width /= 2;
        for j in 0..width {
            acc[j] += acc[j + width];
        }
    }
    acc[0]
}

pub(crate) fn lanes<const L: usize>(m: &CsrMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    for_each_row_blocked(y, workers, |i| {
        let (cols, vals) = m.row(i);
        row_dot_lanes::<L>(cols, vals, x)
    });
}

#[inline]
fn row_dot(cols: &[usize], vals: &[f64], x: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&c, &v) in cols.iter().zip(vals) {
        sum += v * x[c];
    }
    sum
}

/// One task per row, scheduled by rayon's work stealing.
pub(crate) fn row_scalar(m: &CsrMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    if workers <= 1 {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = m.row(i);
            *yi = row_dot(cols, vals, x);
        }
        return;
    }
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let (cols, vals) = m.row(i);
        *yi = row_dot(cols, vals, x);
    });
}

/// Finds the merge-path coordinate `(row, entry)` on `diagonal`, merging
/// row end offsets with the entry indices.
fn merge_path_search(diagonal: usize, row_end: &[usize], nnz: usize) -> (usize, usize) {
    let mut lo = diagonal.saturating_sub(nnz);
    let mut hi = diagonal.min(row_end.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if row_end[mid] < diagonal - mid {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (lo, diagonal - lo)
}

/// Splits the combined `nrows + nnz` work evenly across `workers`. Each
/// partition finishes the rows it fully consumes and carries out the partial
/// sum of the row it stops inside.
pub(crate) fn merge_path(m: &CsrMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    let nrows = m.nrows();
    let nnz = m.nnz();
    let row_end = &m.row_ptr()[1..];
    let (cols, vals) = (m.col_idx(), m.values());
    let total = nrows + nnz;
    let parts = workers.min(total).max(1);

    let run = |start: (usize, usize), end: (usize, usize), out: &mut [f64]| -> (usize, f64) {
        let (mut row, mut k) = start;
        for slot in out.iter_mut() {
            let mut sum = 0.0;
            while k < row_end[row] {
                sum += vals[k] * x[cols[k]];
                k += 1;
            }
            *slot = sum;
            row += 1;
        }
        let mut partial = 0.0;
        while k < end.1 {
            partial += vals[k] * x[cols[k]];
            k += 1;
        }
        (end.0, partial)
    };

    if parts == 1 {
        let carry = run((0, 0), (nrows, nnz), y);
        debug_assert_eq!(carry, (nrows, 0.0));
        return;
    }

    let coords: Vec<(usize, usize)> = (0..=parts)
        .map(|p| merge_path_search(partition_start(total, parts, p), row_end, nnz))
        .collect();
    let mut pieces = Vec::with_capacity(parts);
    let mut rest: &mut [f64] = y;
    for p in 0..parts {
        let (a, b) = (coords[p], coords[p + 1]);
        let (own, after) = std::mem::take(&mut rest).split_at_mut(b.0 - a.0);
        rest = after;
        pieces.push((a, b, own));
    }
    let carries: Vec<(usize, f64)> = pieces
        .into_par_iter()
        .map(|(a, b, own)| run(a, b, own))
        .collect();
    for (row, partial) in carries {
        if row < nrows {
            y[row] += partial;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{spmv_reference, CooMatrix};

    fn skewed() -> CsrMatrix {
        let mut t = vec![(0, 3, 1.0)];
        t.extend((0..40).map(|j| (2, j, 0.5 + j as f64)));
        t.extend([(3, 0, 2.0), (3, 39, -1.0), (5, 5, 7.0)]);
        CsrMatrix::from_coo(&CooMatrix::from_triplets(6, 40, t).unwrap())
    }

    #[test]
    fn merge_path_search_endpoints() {
        let m = skewed();
        let row_end = &m.row_ptr()[1..];
        assert_eq!(merge_path_search(0, row_end, m.nnz()), (0, 0));
        assert_eq!(
            merge_path_search(m.nrows() + m.nnz(), row_end, m.nnz()),
            (m.nrows(), m.nnz())
        );
    }

    #[test]
    fn merge_path_any_worker_count() {
        let m = skewed();
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let want = spmv_reference(&m, &x).unwrap();
        for workers in 1..60 {
            let mut y = vec![f64::NAN; 6];
            merge_path(&m, &x, &mut y, workers);
            for (a, b) in want.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{workers} workers");
            }
        }
    }

    #[test]
    fn lanes_fold_all_partials() {
        let cols: Vec<usize> = (0..37).collect();
        let vals = vec![1.0; 37];
        let x = vec![1.0; 37];
        assert_eq!(row_dot_lanes::<2>(&cols, &vals, &x), 37.0);
        assert_eq!(row_dot_lanes::<8>(&cols, &vals, &x), 37.0);
        assert_eq!(row_dot_lanes::<32>(&cols, &vals, &x), 37.0);
        assert_eq!(row_dot_lanes::<4>(&[], &[], &x), 0.0);
    }
}
