//! Runs all thirteen SpMV configurations on one random matrix and reports
//! each one's deviation from the reference product.
//!
//! ```text
//! SPMV_WORKERS=4 cargo run --example spmv_configs
//! ```

use rand::{Rng, SeedableRng};
use spmv_cascade::kernels::{default_workers, enumerate_configs, execute_spmv};
use spmv_cascade::matrix::{convert, spmv_reference, CooMatrix, CsrMatrix};

fn main() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(42);
    let n = 500;
    let t: Vec<_> = (0..n * 8)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(-1.0..1.0)))
        .collect();
    let m = CooMatrix::from_triplets(n, n, t).expect("valid triplets");
    let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
    let reference = spmv_reference(&CsrMatrix::from_coo(&m), &x).expect("square");
    let workers = default_workers();
    println!("{n}x{n}, {} nonzeros, {workers} workers", m.nnz());
    for cfg in enumerate_configs() {
        let stored = convert(&m, cfg.format()).expect("small matrix fits every format");
        let y = execute_spmv(*cfg, &stored, &x, workers).expect("matching shapes");
        let err = y.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{:>2} {:<12} max abs diff {err:.2e}", cfg.index(), cfg.to_string());
    }
}
