mod common;

use common::*;
use proptest::prelude::*;
use spmv_cascade::kernels::{enumerate_configs, execute_spmv, Library};
use spmv_cascade::matrix::{
    convert, parse_matrix_market, spmv_reference, AnyMatrix, CooMatrix, CsrMatrix, FormatTag,
};

fn arb_matrix(max_n: usize) -> impl Strategy<Value = CooMatrix> {
    (1..=max_n, 1..=max_n).prop_flat_map(|(r, c)| {
        prop::collection::vec((0..r, 0..c, -10.0f64..10.0), 0..=(r * c).min(400))
            .prop_map(move |t| CooMatrix::from_triplets(r, c, t).unwrap())
    })
}

fn dense_product(m: &CooMatrix, x: &[f64]) -> Vec<f64> {
    let mut a = vec![vec![0.0; m.ncols()]; m.nrows()];
    for (r, c, v) in m.triplets() {
        a[r][c] += v;
    }
    a.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn tolerance(cfg: &spmv_cascade::kernels::SpmvConfig) -> f64 {
    if cfg.format() == FormatTag::Coo && cfg.library() == Library::LibB {
        1e-8
    } else {
        1e-10
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_format_round_trips(m in arb_matrix(40)) {
        for tag in FormatTag::ALL {
            let converted = convert(&m, tag).unwrap();
            prop_assert_eq!(converted.format(), tag);
            prop_assert_eq!(&converted.to_coo(), &m);
            let back = convert(&converted, FormatTag::Csr).unwrap();
            prop_assert_eq!(&back.to_coo(), &m);
        }
    }

    #[test]
    fn every_kernel_matches_reference(m in arb_matrix(48), seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng(seed);
        let x: Vec<f64> = (0..m.ncols()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let reference = spmv_reference(&CsrMatrix::from_coo(&m), &x).unwrap();
        for cfg in enumerate_configs() {
            let a = convert(&m, cfg.format()).unwrap();
            let y = execute_spmv(*cfg, &a, &x, 3).unwrap();
            let err = rel_err(&y, &reference);
            prop_assert!(err <= tolerance(cfg), "{} error {}", cfg, err);
        }
    }

    #[test]
    fn matrix_market_round_trips(m in arb_matrix(30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix_market(&path, &m);
        let back = spmv_cascade::matrix::read_matrix_market(&path).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn reference_matches_dense_product() {
    use rand::Rng;
    let mut r = rng(3);
    let mut t = Vec::new();
    for i in 0..100 {
        for j in 0..100 {
            if r.gen_bool(0.1) {
                t.push((i, j, r.gen_range(-1.0..1.0)));
            }
        }
    }
    let m = CooMatrix::from_triplets(100, 100, t).unwrap();
    let x: Vec<f64> = (0..100).map(|_| r.gen_range(-1.0..1.0)).collect();
    let y = spmv_reference(&CsrMatrix::from_coo(&m), &x).unwrap();
    assert!(rel_err(&y, &dense_product(&m, &x)) <= 1e-12);
}

#[test]
fn lane_width_never_changes_the_result() {
    let mut r = rng(5);
    for _ in 0..20 {
        let m = random_coo(&mut r, 200, 0.2, false);
        let a = AnyMatrix::Csr(CsrMatrix::from_coo(&m));
        let x: Vec<f64> = (0..m.ncols()).map(|k| (k as f64).sin()).collect();
        let lanes: Vec<_> = enumerate_configs()
            .iter()
            .filter(|c| c.lane_width().is_some())
            .map(|c| execute_spmv(*c, &a, &x, 4).unwrap())
            .collect();
        for y in &lanes[1..] {
            assert!(rel_err(y, &lanes[0]) <= 1e-12);
        }
    }
}

#[test]
fn pattern_and_symmetric_inputs_expand() {
    let text = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n1 1\n3 1\n";
    let m = parse_matrix_market(text.as_bytes()).unwrap();
    let t: Vec<_> = m.triplets().collect();
    assert_eq!(t, [(0, 0, 1.0), (0, 2, 1.0), (2, 0, 1.0)]);
    let skew = "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3.5\n";
    let m = parse_matrix_market(skew.as_bytes()).unwrap();
    assert_eq!(m.triplets().collect::<Vec<_>>(), [(0, 1, -3.5), (1, 0, 3.5)]);
}

#[test]
fn banded_matrix_fits_dia() {
    let m = banded(1000, 3);
    let d = convert(&m, FormatTag::Dia).unwrap();
    let AnyMatrix::Dia(d) = d else { unreachable!() };
    assert_eq!(d.ndiag(), 7);
}
