//! Prints the fifteen structural features of a matrix.
//!
//! ```text
//! cargo run --example features -- matrix.mtx
//! ```

use spmv_cascade::cancel::CancelToken;
use spmv_cascade::features::{extract_features, FEATURE_NAMES};
use spmv_cascade::matrix::{read_matrix_market, CooMatrix, CsrMatrix};

fn main() {
    let m = match std::env::args().nth(1) {
        Some(path) => read_matrix_market(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => {
            let t = (0..100).flat_map(|i| [(i, i, 4.0), (i, (i * 7) % 100, 1.0)]);
            CooMatrix::from_triplets(100, 100, t).expect("valid triplets")
        }
    };
    let f = extract_features(&CsrMatrix::from_coo(&m), &CancelToken::new()).expect("not cancelled");
    for (name, value) in FEATURE_NAMES.iter().zip(f.to_array()) {
        println!("{name:<11} {value}");
    }
}
