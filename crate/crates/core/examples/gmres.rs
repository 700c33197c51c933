//! Solves a 2D Poisson problem with restarted GMRES under a fixed SpMV
//! configuration.
//!
//! ```text
//! cargo run --example gmres -- [grid_size] [config]
//! ```

use spmv_cascade::matrix::CooMatrix;
use spmv_cascade::solver::{fixed_solve, GmresParams};

fn poisson(k: usize) -> CooMatrix {
    let mut t = Vec::new();
    for i in 0..k * k {
        let (x, y) = (i % k, i / k);
        t.push((i, i, 4.0));
        if x > 0 {
            t.push((i, i - 1, -1.0));
        }
        if x + 1 < k {
            t.push((i, i + 1, -1.0));
        }
        if y > 0 {
            t.push((i, i - k, -1.0));
        }
        if y + 1 < k {
            t.push((i, i + k, -1.0));
        }
    }
    CooMatrix::from_triplets(k * k, k * k, t).expect("valid triplets")
}

fn main() {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(32, |s| s.parse().expect("grid size"));
    let config = args.next().unwrap_or_else(|| "DIA/LibA".into()).parse().expect("config token");
    let m = poisson(k);
    let params = GmresParams::default();
    let b = params.rhs(&m);
    let r = fixed_solve(&m, &b, &params, config, 1).expect("solve");
    println!("n={} config={config} converged={} iterations={}", m.nrows(), r.converged, r.iterations);
    for (i, res) in r.residual_history.iter().enumerate().step_by(10) {
        println!("  iter {i:>4}  residual {res:.3e}");
    }
    let err = r.solution.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    println!("max |x - 1| = {err:.2e}");
}
