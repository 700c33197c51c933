#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use spmv_cascade::inference::{CascadeModel, CascadeModelSet};
use spmv_cascade::kernels::{enumerate_configs, SpmvConfig};
use spmv_cascade::matrix::CooMatrix;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random matrix with side lengths in `1..=max_n`, density up to
/// `max_density`, and nonzero values in `[-1, 1]`.
pub fn random_coo(rng: &mut StdRng, max_n: usize, max_density: f64, square: bool) -> CooMatrix {
    let nrows = rng.gen_range(1..=max_n);
    let ncols = if square { nrows } else { rng.gen_range(1..=max_n) };
    let density = rng.gen_range(0.0..=max_density);
    let mut t = Vec::new();
    for i in 0..nrows {
        for j in 0..ncols {
            if rng.gen_bool(density) {
                let mut v: f64 = rng.gen_range(-1.0..1.0);
                if v == 0.0 {
                    v = 0.5;
                }
                t.push((i, j, v));
            }
        }
    }
    CooMatrix::from_triplets(nrows, ncols, t).unwrap()
}

/// 5-point Laplacian on a `k x k` grid.
pub fn poisson2d(k: usize) -> CooMatrix {
    let n = k * k;
    let mut t = Vec::new();
    for gy in 0..k {
        for gx in 0..k {
            let i = gy * k + gx;
            t.push((i, i, 4.0));
            if gx > 0 {
                t.push((i, i - 1, -1.0));
            }
            if gx + 1 < k {
                t.push((i, i + 1, -1.0));
            }
            if gy > 0 {
                t.push((i, i - k, -1.0));
            }
            if gy + 1 < k {
                t.push((i, i + k, -1.0));
            }
        }
    }
    CooMatrix::from_triplets(n, n, t).unwrap()
}

/// Banded matrix with `half` sub- and super-diagonals, diagonally dominant.
pub fn banded(n: usize, half: usize) -> CooMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        for j in lo..=hi {
            let v = if i == j { 2.0 * half as f64 + 2.0 } else { -1.0 / (1.0 + i.abs_diff(j) as f64) };
            t.push((i, j, v));
        }
    }
    CooMatrix::from_triplets(n, n, t).unwrap()
}

/// The feature definitions evaluated directly on a dense 0/1 pattern, in
/// `FEATURE_NAMES` order.
pub fn oracle_features(m: &CooMatrix) -> [f64; 15] {
    let (nrows, ncols) = (m.nrows(), m.ncols());
    let mut dense = vec![vec![false; ncols]; nrows];
    for (r, c, _) in m.triplets() {
        dense[r][c] = true;
    }
    let row_len: Vec<usize> = dense.iter().map(|row| row.iter().filter(|&&b| b).count()).collect();
    let nnz: usize = row_len.iter().sum();
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let n = nrows as f64;
    let mean = div(nnz as f64, n);
    let sd = div(row_len.iter().map(|&r| (mean - r as f64).powi(2)).sum::<f64>(), n).sqrt();
    let max = row_len.iter().copied().max().unwrap_or(0) as f64;
    let min = row_len.iter().copied().min().unwrap_or(0) as f64;
    let mut dist = 0usize;
    let mut cluster = 0usize;
    let mut diagonals = BTreeSet::new();
    for (i, row) in dense.iter().enumerate() {
        let cols: Vec<usize> = (0..ncols).filter(|&j| row[j]).collect();
        if let (Some(f), Some(l)) = (cols.first(), cols.last()) {
            dist += f.abs_diff(*l);
        }
        let mut best = 0;
        let mut run = 0;
        for &present in row {
            run = if present { run + 1 } else { 0 };
            best = best.max(run);
        }
        cluster += best;
        for &j in &cols {
            diagonals.insert(j as i64 - i as i64);
        }
    }
    let ndiag = diagonals.len() as f64;
    [
        n,
        ncols as f64,
        nnz as f64,
        div(nnz as f64, n * ncols as f64),
        mean,
        sd,
        div(sd, mean),
        max,
        min,
        max - mean,
        div(dist as f64, n),
        div(cluster as f64, n),
        div(n * max, nnz as f64),
        ndiag,
        div(n * ndiag, nnz as f64),
    ]
}

/// Expected `(format, library, lane)` labels for a timing table, by
/// enumerating the whole configuration list.
pub fn oracle_labels(times: &[Option<f64>]) -> Option<(String, Option<String>, Option<String>)> {
    let configs = enumerate_configs();
    let argmin = |pred: &dyn Fn(&SpmvConfig) -> bool| -> Option<SpmvConfig> {
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in configs.iter().enumerate() {
            if !pred(c) {
                continue;
            }
            let Some(t) = times[i] else { continue };
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
        best.map(|(_, i)| configs[i])
    };
    let f = argmin(&|c| c.library().as_str() == "LibA")?;
    let format = f.format().as_str().to_string();
    let has_lib = matches!(format.as_str(), "COO" | "CSR" | "ELL");
    let lib_cfg = if has_lib { argmin(&|c| c.format() == f.format()) } else { None };
    let library = lib_cfg.map(|c| c.library().as_str().to_string());
    let lane = (format == "CSR" && library.as_deref() == Some("LibA"))
        .then(|| argmin(&|c| c.format() == f.format() && c.library().as_str() == "LibA"))
        .flatten()
        .and_then(|c| c.lane_width())
        .map(|l| l.to_string());
    Some((format, library, lane))
}

/// Writes constant models that always route the cascade to `config`.
pub fn write_forced_models(dir: &Path, config: &str) -> PathBuf {
    let set = CascadeModelSet::forced(config.parse().unwrap());
    std::fs::create_dir_all(dir).unwrap();
    for model in CascadeModel::ALL {
        let path = dir.join(format!("{}.json", model.file_stem()));
        std::fs::write(path, set.get(model).to_json()).unwrap();
    }
    dir.to_path_buf()
}

/// Expected `(model, config, terminal)` per emitted decision.
pub fn branch_table(config: &str) -> Vec<(CascadeModel, &'static str, bool)> {
    match config {
        "DIA/LibA" => vec![(CascadeModel::Format, "DIA/LibA", true)],
        "HYB/LibA" => vec![(CascadeModel::Format, "HYB/LibA", true)],
        "COO/LibB" => vec![
            (CascadeModel::Format, "COO/LibA", false),
            (CascadeModel::CooLib, "COO/LibB", true),
        ],
        "ELL/LibC" => vec![
            (CascadeModel::Format, "ELL/LibA", false),
            (CascadeModel::EllLib, "ELL/LibC", true),
        ],
        "CSR/LibC" => vec![
            (CascadeModel::Format, "CSR/LibA/8", false),
            (CascadeModel::CsrLib, "CSR/LibC", true),
        ],
        "CSR/LibA/16" => vec![
            (CascadeModel::Format, "CSR/LibA/8", false),
            (CascadeModel::CsrLib, "CSR/LibA/8", false),
            (CascadeModel::CsrTpv, "CSR/LibA/16", true),
        ],
        other => panic!("no branch for {other}"),
    }
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn write_matrix_market(path: &Path, m: &CooMatrix) {
    let mut s = format!(
        "%%MatrixMarket matrix coordinate real general\n{} {} {}\n",
        m.nrows(),
        m.ncols(),
        m.nnz()
    );
    for (r, c, v) in m.triplets() {
        s.push_str(&format!("{} {} {:e}\n", r + 1, c + 1, v));
    }
    std::fs::write(path, s).unwrap();
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn count_by<T: Ord + Clone>(items: &[T]) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i.clone()).or_insert(0) += 1;
    }
    m
}

pub const BRANCH_TARGETS: [&str; 6] = ["DIA/LibA", "HYB/LibA", "COO/LibB", "ELL/LibC", "CSR/LibC", "CSR/LibA/16"];
