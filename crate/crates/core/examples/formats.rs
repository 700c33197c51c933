//! Reads a Matrix Market file (or builds a small banded matrix) and converts
//! it into every storage format.
//!
//! ```text
//! cargo run --example formats -- [matrix.mtx]
//! ```

use spmv_cascade::matrix::{convert, read_matrix_market, AnyMatrix, CooMatrix, FormatTag};

fn tridiagonal(n: usize) -> CooMatrix {
    let t = (0..n).flat_map(|i| {
        let mut row = vec![(i, i, 2.0)];
        if i > 0 {
            row.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            row.push((i, i + 1, -1.0));
        }
        row
    });
    CooMatrix::from_triplets(n, n, t).expect("valid triplets")
}

fn main() {
    let m = match std::env::args().nth(1) {
        Some(path) => read_matrix_market(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => tridiagonal(8),
    };
    println!("{}x{} with {} nonzeros", m.nrows(), m.ncols(), m.nnz());
    for tag in FormatTag::ALL {
        match convert(&m, tag) {
            Ok(AnyMatrix::Ell(e)) => println!("{tag}: width {}, {} stored slots", e.width(), e.stored_entries()),
            Ok(AnyMatrix::Dia(d)) => println!("{tag}: offsets {:?}", d.offsets()),
            Ok(AnyMatrix::Hyb(h)) => println!("{tag}: split width {}, {} overflow entries", h.split_width(), h.coo_part().nnz()),
            Ok(a) => println!("{tag}: round trip exact = {}", a.to_coo() == m),
            Err(e) => println!("{tag}: not applicable ({e})"),
        }
    }
}
