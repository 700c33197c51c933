//! Walks the five-model cascade for a few synthetic matrices using the
//! bundled model files.
//!
//! ```text
//! cargo run --example cascade -- [models_dir]
//! ```

use spmv_cascade::cancel::CancelToken;
use spmv_cascade::features::extract_features;
use spmv_cascade::inference::{cascade_predict, CascadeModelSet};
use spmv_cascade::matrix::{CooMatrix, CsrMatrix};

fn banded(n: usize, half: usize) -> CooMatrix {
    let t = (0..n).flat_map(|i| (i.saturating_sub(half)..(i + half + 1).min(n)).map(move |j| (i, j, 1.0)));
    CooMatrix::from_triplets(n, n, t).expect("valid triplets")
}

fn scattered(n: usize, per_row: usize, jitter: usize) -> CooMatrix {
    let t = (0..n).flat_map(|i| (0..per_row + i % jitter).map(move |k| (i, (i * 31 + k * 97) % n, 1.0)));
    CooMatrix::from_triplets(n, n, t).expect("valid triplets")
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/models").into());
    let models = CascadeModelSet::load_dir(&dir).unwrap_or_else(|e| panic!("{dir}: {e}"));
    for (name, m) in [("banded", banded(2000, 2)), ("scattered", scattered(3000, 6, 18)), ("uniform", scattered(3000, 6, 1))] {
        let f = extract_features(&CsrMatrix::from_coo(&m), &CancelToken::new()).expect("not cancelled");
        println!("{name}: mean {:.2}, cov {:.2}, ndiag {}", f.mean, f.cov, f.ndiag);
        let cfg = cascade_predict(&models, &f, |d| {
            println!("  {:<8} -> {:<12} terminal={}", d.model.file_stem(), d.config.to_string(), d.is_terminal)
        });
        println!("  final {cfg}");
    }
}
