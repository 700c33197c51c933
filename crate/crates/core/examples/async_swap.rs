//! Predict-while-solve: the advisor picks a configuration while GMRES runs,
//! and the solver swaps at the first iteration boundary after each decision
//! arrives. Delays make the swap points reproducible.
//!
//! ```text
//! cargo run --release --example async_swap
//! ```

use spmv_cascade::inference::CascadeModelSet;
use spmv_cascade::matrix::CooMatrix;
use spmv_cascade::solver::{async_solve, DelayInjection, GmresParams, SolveOptions};

fn main() {
    let n: usize = 20_000;
    let t = (0..n).flat_map(|i| (i.saturating_sub(3)..(i + 4).min(n)).map(move |j| (i, j, if i == j { 8.0 } else { -1.0 })));
    let m = CooMatrix::from_triplets(n, n, t).expect("valid triplets");
    let models = CascadeModelSet::forced("ELL/LibC".parse().expect("config token"));
    let params = GmresParams {
        tol: 1e-12,
        ..GmresParams::default()
    };
    let b = params.rhs(&m);
    for delay in [DelayInjection::None, DelayInjection::Uniform(3), DelayInjection::PerDecision(vec![2, 6])] {
        let opts = SolveOptions::with_workers(2).with_delay(delay.clone());
        let r = async_solve(&m, &b, &params, &models, &opts).expect("solve");
        println!("{delay:?}: iterations={} advisor={:?}", r.iterations, r.advisor_outcome);
        for e in &r.config_timeline {
            println!("  from iteration {:>3}: {} (swap cost {:.1}us)", e.iteration, e.config, e.swap_cost_seconds * 1e6);
        }
    }
}
