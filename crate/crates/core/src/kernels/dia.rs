//! DIA kernel: diagonal-at-a-time sweep over row blocks.

use super::partition_start;
use crate::matrix::DiaMatrix;
use rayon::prelude::*;

pub(crate) fn diagonals(m: &DiaMatrix, x: &[f64], y: &mut [f64], workers: usize) {
    let n = m.nrows();
    let sweep = |rows: std::ops::Range<usize>, out: &mut [f64]| {
        out.fill(0.0);
        for (d, &off) in m.offsets().iter().enumerate() {
            let valid = m.row_range(off);
            let (lo, hi) = (valid.start.max(rows.start), valid.end.min(rows.end));
            if lo >= hi {
                continue;
            }
            let diag = &m.diagonal(d)[lo..hi];
            let xs = &x[(lo as isize + off) as usize..(hi as isize + off) as usize];
            let out = &mut out[lo - rows.start..hi - rows.start];
            for ((o, &a), &xv) in out.iter_mut().zip(diag).zip(xs) {
                *o += a * xv;
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
