//! Runs the default, predict-then-solve and predict-while-solve drivers on
//! the same system and prints the comparison table.
//!
//! ```text
//! cargo run --release --example compare_modes -- [models_dir]
//! ```

use spmv_cascade::bench::compare_solvers;
use spmv_cascade::inference::CascadeModelSet;
use spmv_cascade::matrix::CooMatrix;
use spmv_cascade::solver::{GmresParams, SolveOptions};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/models").into());
    let models = CascadeModelSet::load_dir(&dir).unwrap_or_else(|e| panic!("{dir}: {e}"));
    let n: usize = 50_000;
    let t = (0..n).flat_map(|i| (i.saturating_sub(2)..(i + 3).min(n)).map(move |j| (i, j, if i == j { 6.0 } else { -1.0 })));
    let m = CooMatrix::from_triplets(n, n, t).expect("valid triplets");
    let params = GmresParams::default();
    let b = params.rhs(&m);
    let mut report = compare_solvers(&m, &b, &params, &models, &SolveOptions::default()).expect("solve");
    report.set_matrix("pentadiagonal");
    print!("{}", report.render());
}
