//! Building the five labeled CSV datasets from a Matrix Market directory.

use super::labeling::{label_timings, LabeledRow};
use super::timing::{time_all_configs, Fingerprint, TimingOptions, TimingRecord};
use crate::cancel::CancelToken;
use crate::features::{extract_features, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::inference::CascadeModel;
use crate::matrix::{read_matrix_market, CsrMatrix};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("no .mtx files in {}", .0.display())]
    EmptyDirectory(PathBuf),
    #[error("none of the {0} matrices could be labeled")]
    NoValidMatrices(usize),
    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", file.display())]
    Csv {
        file: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: line {line}: {message}", file.display())]
    Format {
        file: PathBuf,
        line: usize,
        message: String,
    },
}

/// Rows written to each dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetCounts(pub BTreeMap<&'static str, usize>);

impl DatasetCounts {
    pub fn get(&self, model: CascadeModel) -> usize {
        self.0.get(model.file_stem()).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub rows: Vec<LabeledRow>,
    pub skipped: Vec<(String, String)>,
    pub counts: DatasetCounts,
    pub cached: usize,
}

pub fn dataset_path(dir: &Path, model: CascadeModel) -> PathBuf {
    dir.join(format!("{}.csv", model.file_stem()))
}

/// Labels each `(features, timings)` pair; tables without any LibA time are
/// dropped.
pub fn label_records(entries: impl IntoIterator<Item = (FeatureVector, TimingRecord)>) -> Vec<LabeledRow> {
    entries
        .into_iter()
        .filter_map(|(features, record)| {
            label_timings(&record).map(|labels| LabeledRow {
                matrix: record.matrix.clone(),
                features,
                labels,
            })
        })
        .collect()
}

fn io_err(file: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        file: file.to_path_buf(),
        source,
    }
}

/// Writes `FORMAT.csv`, `COO-LIB.csv`, `CSR-LIB.csv`, `ELL-LIB.csv` and
/// `CSR-TPV.csv`. Each starts with a `# fingerprint:` comment line followed
/// by the feature columns and `label`.
pub fn write_datasets(rows: &[LabeledRow], out_dir: &Path, fingerprint: &str) -> Result<DatasetCounts, DatasetError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut counts = DatasetCounts::default();
    for model in CascadeModel::ALL {
        let path = dataset_path(out_dir, model);
        let mut file = std::fs::File::create(&path).map_err(io_err(&path))?;
        use std::io::Write;
        writeln!(file, "# fingerprint: {fingerprint}").map_err(io_err(&path))?;
        let csv_err = |source| DatasetError::Csv {
            file: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_writer(file);
        w.write_record(FEATURE_NAMES.iter().copied().chain(["label"])).map_err(csv_err)?;
        let mut n = 0;
        for row in rows {
            let Some((_, label)) = row.labels.routed().into_iter().find(|(m, _)| *m == model) else {
                continue;
            };
            let mut record: Vec<String> = row.features.to_array().iter().map(|v| v.to_string()).collect();
            record.push(label);
            w.write_record(&record).map_err(csv_err)?;
            n += 1;
        }
        w.flush().map_err(io_err(&path))?;
        counts.0.insert(model.file_stem(), n);
    }
    Ok(counts)
}

/// Reads a dataset written by [`write_datasets`].
pub fn read_dataset(path: &Path) -> Result<Vec<([f64; FEATURE_COUNT], String)>, DatasetError> {
    let csv_err = |source| DatasetError::Csv {
        file: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["label"]).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(DatasetError::Format {
            file: path.to_path_buf(),
            line: 2,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 3;
        let mut x = [0.0; FEATURE_COUNT];
        for (slot, field) in x.iter_mut().zip(rec.iter()) {
            *slot = field.parse().map_err(|_| DatasetError::Format {
                file: path.to_path_buf(),
                line,
                message: format!("invalid number `{field}`"),
            })?;
        }
        out.push((x, rec[FEATURE_COUNT].to_string()));
    }
    Ok(out)
}

/// `.mtx` files in `dir`, sorted by name.
pub fn matrix_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "mtx"))
        .collect();
    files.sort();
    Ok(files)
}

/// Times, featurizes and labels every matrix in `matrix_dir`, then writes
/// the datasets to `out_dir`. Timing tables are cached under
/// `out_dir/timings/` and reused when measured with the same settings.
pub fn build_dataset(matrix_dir: &Path, out_dir: &Path, opts: &TimingOptions) -> Result<DatasetSummary, DatasetError> {
    let files = matrix_files(matrix_dir)?;
    if files.is_empty() {
        return Err(DatasetError::EmptyDirectory(matrix_dir.to_path_buf()));
    }
    let cache_dir = out_dir.join("timings");
    std::fs::create_dir_all(&cache_dir).map_err(io_err(&cache_dir))?;
    let fingerprint = Fingerprint::current(opts.workers);

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut cached = 0;
    for path in &files {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let m = match read_matrix_market(path) {
            Ok(m) if m.nnz() == 0 => {
                log::warn!("skipping {}: matrix has no entries", path.display());
                skipped.push((id, "matrix has no entries".into()));
                continue;
            }
            Ok(m) => m,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                skipped.push((id, e.to_string()));
                continue;
            }
        };
        let features = extract_features(&CsrMatrix::from_coo(&m), &CancelToken::new()).expect("fresh token is never cancelled");
        let cache = cache_dir.join(format!("{id}.json"));
        let record = match TimingRecord::load(&cache) {
            Ok(r) if r.matches(opts, &fingerprint) => {
                cached += 1;
                r
            }
            _ => {
                log::info!("timing {id} ({}x{}, {} nonzeros)", m.nrows(), m.ncols(), m.nnz());
                let r = time_all_configs(&id, &m, opts);
                if let Err(e) = r.save(&cache) {
                    log::warn!("could not cache timings: {e}");
                }
                r
            }
        };
        entries.push((features, record));
    }
    let rows = label_records(entries);
    if rows.is_empty() {
        return Err(DatasetError::NoValidMatrices(files.len()));
    }
    let comment = format!("{fingerprint} runs={} warmups={}", opts.runs, opts.warmups);
    let counts = write_datasets(&rows, out_dir, &comment)?;
    Ok(DatasetSummary {
        rows,
        skipped,
        counts,
        cached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{enumerate_configs, Library, SpmvConfig};

    fn features(seed: f64) -> FeatureVector {
        FeatureVector::from_array([seed; FEATURE_COUNT])
    }

    /// `best` is fastest overall and its format wins under LibA.
    fn table(best: &str) -> TimingRecord {
        let best: SpmvConfig = best.parse().unwrap();
        let mut t = vec![Some(1.0); 13];
        let liba = enumerate_configs()
            .iter()
            .find(|c| c.format() == best.format() && c.library() == Library::LibA)
            .unwrap();
        t[liba.index()] = Some(0.5);
        t[best.index()] = Some(0.1);
        let best = best.to_string();
        let best = best.as_str();
        TimingRecord::from_times(best, &t, Fingerprint::current(1))
    }

    #[test]
    fn routing_counts() {
        let rows = label_records(
            ["DIA/LibA", "CSR/LibA/8", "CSR/LibB", "ELL/LibC", "COO/LibB", "HYB/LibA"]
                .iter()
                .enumerate()
                .map(|(i, b)| (features(i as f64), table(b))),
        );
        let dir = tempfile::tempdir().unwrap();
        let counts = write_datasets(&rows, dir.path(), "workers=1 host=test").unwrap();
        assert_eq!(counts.get(CascadeModel::Format), 6);
        assert_eq!(counts.get(CascadeModel::CsrLib), 2);
        assert_eq!(counts.get(CascadeModel::CooLib), 1);
        assert_eq!(counts.get(CascadeModel::EllLib), 1);
        assert_eq!(counts.get(CascadeModel::CsrTpv), 1);

        let format = read_dataset(&dataset_path(dir.path(), CascadeModel::Format)).unwrap();
        let labels: Vec<&str> = format.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["DIA", "CSR", "CSR", "ELL", "COO", "HYB"]);
        assert_eq!(format[3].0, [3.0; FEATURE_COUNT]);
        let tpv = read_dataset(&dataset_path(dir.path(), CascadeModel::CsrTpv)).unwrap();
        assert_eq!(tpv[0].1, "8");
        let text = std::fs::read_to_string(dataset_path(dir.path(), CascadeModel::CooLib)).unwrap();
        assert!(text.starts_with("# fingerprint: workers=1 host=test\nnrows,ncols,"));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let err = build_dataset(dir.path(), out.path(), &TimingOptions::default()).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyDirectory(_)));
    }

    #[test]
    fn builds_from_files_and_reuses_cache() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("diag.mtx"),
            "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 2\n3 3 3\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("broken.mtx"), "not a matrix\n").unwrap();
        let out = tempfile::tempdir().unwrap();
        let opts = TimingOptions {
            runs: 2,
            warmups: 0,
            workers: 1,
        };
        let s = build_dataset(dir.path(), out.path(), &opts).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.skipped.len(), 1);
        assert_eq!(s.counts.get(CascadeModel::Format), 1);
        assert_eq!(s.cached, 0);
        let again = build_dataset(dir.path(), out.path(), &opts).unwrap();
        assert_eq!(again.cached, 1);
        assert_eq!(again.rows, s.rows);
    }
}
