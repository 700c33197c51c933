//! ELL kernels: per-row slot walk (LibA) and column-major strided sweep
//! (LibC).

use super::{for_each_row_blocked, partition_start};
use crate::matrix::EllMatrix;
use rayon::prelude::*;

/// Walks each row's slots, stopping at the first padding slot.
pub(crate) fn row_major(m: &EllMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    let (n, width, sentinel) = (m.nrows(), m.width(), m.sentinel());
    let (cols, vals) = (m.col_idx(), m.values());
    for_each_row_blocked(y, workers, |i| {
        let mut sum = 0.0;
        for k in 0..width {
            let c = cols[k * n + i];
            if c == sentinel {
                break;
            }
            sum += vals[k * n + i] * x[c];
        }
        sum
    });
}

/// Sweeps slot columns in storage order over a block of rows, so that
/// consecutive rows touch consecutive memory.
pub(crate) fn column_strided(m: &EllMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    let n = m.nrows();
    let sweep = |rows: std::ops::Range<usize>, out: &mut [f64]| {
        out.fill(0.0);
        for k in 0..m.width() {
            let base = k * n;
            let cols = &m.col_idx()[base + rows.start..base + rows.end];
            let vals = &m.values()[base + rows.start..base + rows.end];
            for ((o, &c), &v) in out.iter_mut().zip(cols).zip(vals) {
                if c != m.sentinel() {
                    *o += v * x[c];
                }
            }
        }
    };
    if workers <= 1 || n < 2 {
        sweep(0..n, y);
        return;
    }
    let parts = workers.min(n);
    let mut pieces = Vec::with_capacity(parts);
    let mut rest: &mut [f64] = y;
    for p in 0..parts {
        let (s, e) = (partition_start(n, parts, p), partition_start(n, parts, p + 1));
        let (own, after) = std::mem::take(&mut rest).split_at_mut(e - s);
        rest = after;
        pieces.push((s..e, own));
    }
    pieces.into_par_iter().for_each(|(rows, out)| sweep(rows, out));
}
