//! Times every configuration on a handful of generated matrices, labels
//! them and writes the five training CSVs.
//!
//! ```text
//! cargo run --release --example dataset -- out_dir
//! ```

use spmv_cascade::bench::{build_dataset, TimingOptions};
use spmv_cascade::matrix::CooMatrix;
use std::fmt::Write as _;
use std::path::PathBuf;

fn write_mtx(path: &std::path::Path, m: &CooMatrix) {
    let mut s = format!("%%MatrixMarket matrix coordinate real general\n{} {} {}\n", m.nrows(), m.ncols(), m.nnz());
    for (r, c, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {v}", r + 1, c + 1);
    }
    std::fs::write(path, s).expect("write matrix");
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dataset-out".into()));
    let mats = out.join("matrices");
    std::fs::create_dir_all(&mats).expect("create output directory");
    for (name, n, spread) in [("narrow", 4000, 1), ("wide", 4000, 9), ("random", 3000, 0)] {
        let t = (0..n).flat_map(|i| {
            (0..5).map(move |k| {
                let j = if spread == 0 { (i * 7919 + k * 104_729) % n } else { (i + k * spread) % n };
                (i, j, 1.0 + k as f64)
            })
        });
        write_mtx(&mats.join(format!("{name}.mtx")), &CooMatrix::from_triplets(n, n, t).expect("valid triplets"));
    }
    let opts = TimingOptions {
        runs: 50,
        warmups: 5,
        ..TimingOptions::default()
    };
    let summary = build_dataset(&mats, &out, &opts).expect("dataset");
    for row in &summary.rows {
        println!("{:<8} {:?}", row.matrix, row.labels);
    }
    println!("rows per dataset: {:?}", summary.counts.0);
}
