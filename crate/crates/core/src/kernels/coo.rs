//! COO kernels: segmented reduction (LibA) and atomic accumulate (LibB).

use super::partition_start;
use crate::matrix::CooMatrix;
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// `y = A x`
    Overwrite,
    /// `y += A x`
    Accumulate,
}

/// Partial sums a partition could not finish on its own: its first row,
/// and its last row when different from the first.
struct Carry {
    head: Option<(usize, f64)>,
    tail: Option<(usize, f64)>,
}

/// Segmented reduction over the entry array. Entries are split into
/// `workers` equal slices; rows wholly inside a slice are written directly,
/// rows cut by a slice boundary are fixed up afterwards in slice order.
pub(crate) fn segmented(m: &CooMatrix, x: &[f64], y: &mut [f64], workers: usize, mode: Mode) {
    if mode == Mode::Overwrite {
        y.fill(0.0);
    }
    let nnz = m.nnz();
    if nnz == 0 {
        return;
    }
    let (rows, cols, vals) = (m.rows(), m.cols(), m.values());
    let parts = workers.min(nnz).max(1);

    if parts == 1 {
        let carry = reduce_slice(rows, cols, vals, x, 0..nnz, y, 0, mode);
        apply_carry(y, carry);
        return;
    }

    // Rows strictly between a slice's head and tail row belong to it alone.
    let mut slices = Vec::with_capacity(parts);
    let mut rest: &mut [f64] = y;
    let mut consumed = 0usize;
    for p in 0..parts {
        let (s, e) = (partition_start(nnz, parts, p), partition_start(nnz, parts, p + 1));
        if s == e {
            slices.push((s..e, 0, &mut [][..]));
            continue;
        }
        let (head, tail) = (rows[s], rows[e - 1]);
        let lo = (head + 1).max(consumed);
        let hi = tail.max(lo);
        let (_, after) = std::mem::take(&mut rest).split_at_mut(lo - consumed);
        let (own, after) = after.split_at_mut(hi - lo);
        rest = after;
        consumed = hi;
        slices.push((s..e, lo, own));
    }
    let carries: Vec<Carry> = slices
        .into_par_iter()
        .map(|(range, base, own)| reduce_slice(rows, cols, vals, x, range, own, base, mode))
        .collect();
    for carry in carries {
        apply_carry(y, carry);
    }
}

/// Reduces entries in `range`. Completed interior rows go to `own`, whose
/// first element is row `base`.
#[allow(clippy::too_many_arguments)]
fn reduce_slice(
    rows: &[usize],
    cols: &[usize],
    vals: &[f64],
    x: &[f64],
    range: std::ops::Range<usize>,
    own: &mut [f64],
    base: usize,
    mode: Mode,
) -> Carry {
    let mut carry = Carry {
        head: None,
        tail: None,
    };
    if range.is_empty() {
        return carry;
    }
    let head_row = rows[range.start];
    let mut row = head_row;
    let mut sum = 0.0;
    for k in range {
        let r = rows[k];
        if r != row {
            if row == head_row {
                carry.head = Some((row, sum));
            } else {
                let slot = &mut own[row - base];
                match mode {
                    Mode::Overwrite => *slot = sum,
                    Mode::Accumulate => *slot += sum,
                }
            }
            row = r;
            sum = 0.0;
        }
        sum += vals[k] * x[cols[k]];
    }
    if row == head_row {
        carry.head = Some((row, sum));
    } else {
        carry.tail = Some((row, sum));
    }
    carry
}

fn apply_carry(y: &mut [f64], carry: Carry) {
    for (row, sum) in carry.head.into_iter().chain(carry.tail) {
        y[row] += sum;
    }
}

const _: () = assert!(std::mem::align_of::<f64>() == std::mem::align_of::<AtomicU64>());

/// One atomic add per entry. Summation order depends on scheduling, so
/// results are only reproducible with a single worker.
pub(crate) fn atomic_accumulate(m: &CooMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    y.fill(0.0);
    let (rows, cols, vals) = (m.rows(), m.cols(), m.values());
    let nnz = m.nnz();
    if workers <= 1 || nnz < 2 {
        for k in 0..nnz {
            y[rows[k]] += vals[k] * x[cols[k]];
        }
        return;
    }
    // SAFETY: AtomicU64 has the same size and alignment as f64 (checked
    // above), and `y` is exclusively borrowed for the duration of the call.
    let cells: &[AtomicU64] =
        unsafe { std::slice::from_raw_parts(y.as_mut_ptr() as *const AtomicU64, y.len()) };
    let parts = workers.min(nnz);
    (0..parts).into_par_iter().for_each(|p| {
        for k in partition_start(nnz, parts, p)..partition_start(nnz, parts, p + 1) {
            let add = vals[k] * x[cols[k]];
            let cell = &cells[rows[k]];
            let mut cur = cell.load(Ordering::Relaxed);
            loop {
                let next = (f64::from_bits(cur) + add).to_bits();
                match cell.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
                    Ok(_) => break,
                    Err(seen) => cur = seen,
                }
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn long_rows() -> CooMatrix {
        // row 1 spans many partitions; rows 0 and 3 are short; row 2 empty
        let mut t = vec![(0, 0, 1.0), (0, 5, 2.0)];
        t.extend((0..50).map(|j| (1, j, j as f64 + 1.0)));
        t.push((3, 7, -2.0));
        CooMatrix::from_triplets(4, 50, t).unwrap()
    }

    #[test]
    fn segmented_handles_rows_spanning_partitions() {
        let m = long_rows();
        let x: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 * 0.5).collect();
        let mut seq = vec![9.0; 4];
        segmented(&m, &x, &mut seq, 1, Mode::Overwrite);
        for workers in 2..20 {
            let mut par = vec![9.0; 4];
            segmented(&m, &x, &mut par, workers, Mode::Overwrite);
            for (a, b) in seq.iter().zip(&par) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{workers}: {seq:?} vs {par:?}");
            }
            assert_eq!(par[2], 0.0);
        }
    }

    #[test]
    fn accumulate_adds_to_existing() {
        let m = long_rows();
        let x = vec![1.0; 50];
        let mut y = vec![1.0; 4];
        segmented(&m, &x, &mut y, 3, Mode::Accumulate);
        assert_eq!(y, vec![4.0, 1276.0, 1.0, -1.0]);
    }

    #[test]
    fn atomic_matches_sequential() {
        let m = long_rows();
        let x = vec![1.0; 50];
        let mut y = vec![0.0; 4];
        atomic_accumulate(&m, &x, &mut y, 4);
        assert_eq!(y, vec![3.0, 1275.0, 0.0, -2.0]);
    }
}
