//! Staged prediction: format, then kernel family for that format, then the
//! lane width for CSR/LibA. Every stage emits a decision as soon as it is
//! known so a running solver can act on it.

use super::model::{Classifier, ModelError, Prediction, TreeEnsembleModel};
use crate::cancel::{CancelToken, Cancelled};
use crate::features::FeatureVector;
use crate::kernels::{LaneWidth, Library, SpmvConfig};
use crate::matrix::FormatTag;
use serde::Serialize;
use std::path::Path;
use std::time::{Duration, Instant};

/// Which model of the cascade produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CascadeModel {
    #[serde(rename = "FORMAT")]
    Format,
    #[serde(rename = "COO-LIB")]
    CooLib,
    #[serde(rename = "CSR-LIB")]
    CsrLib,
    #[serde(rename = "ELL-LIB")]
    EllLib,
    #[serde(rename = "CSR-TPV")]
    CsrTpv,
}

impl CascadeModel {
    pub const ALL: [CascadeModel; 5] = [
        CascadeModel::Format,
        CascadeModel::CooLib,
        CascadeModel::CsrLib,
        CascadeModel::EllLib,
        CascadeModel::CsrTpv,
    ];

    /// File stem used for model files and dataset CSVs.
    pub fn file_stem(self) -> &'static str {
        match self {
            CascadeModel::Format => "FORMAT",
            CascadeModel::CooLib => "COO-LIB",
            CascadeModel::CsrLib => "CSR-LIB",
            CascadeModel::EllLib => "ELL-LIB",
            CascadeModel::CsrTpv => "CSR-TPV",
        }
    }

    /// Labels this model may emit.
    pub fn allowed_labels(self) -> &'static [&'static str] {
        match self {
            CascadeModel::Format => &["COO", "CSR", "ELL", "DIA", "HYB"],
            CascadeModel::CooLib => &["LibA", "LibB"],
            CascadeModel::CsrLib => &["LibA", "LibB", "LibC"],
            CascadeModel::EllLib => &["LibA", "LibC"],
            CascadeModel::CsrTpv => &["2", "4", "8", "16", "32"],
        }
    }

    pub fn stage(self) -> CascadeStage {
        match self {
            CascadeModel::Format => CascadeStage::Format,
            CascadeModel::CooLib | CascadeModel::CsrLib | CascadeModel::EllLib => {
                CascadeStage::Library
            }
            CascadeModel::CsrTpv => CascadeStage::LaneWidth,
        }
    }

    /// The library model that follows a format prediction, if any.
    pub fn library_model_for(format: FormatTag) -> Option<CascadeModel> {
        match format {
            FormatTag::Coo => Some(CascadeModel::CooLib),
            FormatTag::Csr => Some(CascadeModel::CsrLib),
            FormatTag::Ell => Some(CascadeModel::EllLib),
            FormatTag::Dia | FormatTag::Hyb => None,
        }
    }
}

impl std::fmt::Display for CascadeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.file_stem())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CascadeStage {
    Format,
    Library,
    LaneWidth,
}

/// One step of the cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeDecision {
    pub stage: CascadeStage,
    pub model: CascadeModel,
    pub format: FormatTag,
    pub library: Option<Library>,
    pub lane_width: Option<LaneWidth>,
    /// Runnable configuration implied so far. Undecided parts default to
    /// LibA and a lane width derived from the mean row length.
    pub config: SpmvConfig,
    pub is_terminal: bool,
    /// Per-class raw scores of the model that made this decision.
    pub scores: Vec<(String, f64)>,
    #[serde(serialize_with = "serialize_secs")]
    pub elapsed: Duration,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, thiserror::Error)]
pub enum CascadeError {
    #[error("{model}: {source}")]
    Model {
        model: CascadeModel,
        #[source]
        source: ModelError,
    },
    #[error("{model}: class `{label}` is not a valid label for this model")]
    Label { model: CascadeModel, label: String },
}

/// The five models of the cascade.
#[derive(Debug, Clone)]
pub struct CascadeModelSet<M = TreeEnsembleModel> {
    format: M,
    coo_lib: M,
    csr_lib: M,
    ell_lib: M,
    csr_tpv: M,
}

impl<M: Classifier> CascadeModelSet<M> {
    pub fn new(format: M, coo_lib: M, csr_lib: M, ell_lib: M, csr_tpv: M) -> Result<Self, CascadeError> {
        let set = Self {
            format,
            coo_lib,
            csr_lib,
            ell_lib,
            csr_tpv,
        };
        for which in CascadeModel::ALL {
            let allowed = which.allowed_labels();
            if let Some(bad) = set.get(which).classes().iter().find(|c| !allowed.contains(&c.as_str())) {
                return Err(CascadeError::Label {
                    model: which,
                    label: bad.clone(),
                });
            }
        }
        Ok(set)
    }

    pub fn get(&self, which: CascadeModel) -> &M {
        match which {
            CascadeModel::Format => &self.format,
            CascadeModel::CooLib => &self.coo_lib,
            CascadeModel::CsrLib => &self.csr_lib,
            CascadeModel::EllLib => &self.ell_lib,
            CascadeModel::CsrTpv => &self.csr_tpv,
        }
    }
}

impl CascadeModelSet<TreeEnsembleModel> {
    /// Loads `FORMAT.json`, `COO-LIB.json`, `CSR-LIB.json`, `ELL-LIB.json`
    /// and `CSR-TPV.json` from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, CascadeError> {
        let dir = dir.as_ref();
        let load = |which: CascadeModel| {
            TreeEnsembleModel::load(dir.join(format!("{}.json", which.file_stem())))
                .map_err(|source| CascadeError::Model { model: which, source })
        };
        Self::new(
            load(CascadeModel::Format)?,
            load(CascadeModel::CooLib)?,
            load(CascadeModel::CsrLib)?,
            load(CascadeModel::EllLib)?,
            load(CascadeModel::CsrTpv)?,
        )
    }

    /// Models that always follow one fixed path through the cascade.
    pub fn forced(config: SpmvConfig) -> Self {
        let pick = |which: CascadeModel, label: &str| {
            let labels = which.allowed_labels();
            let winner = labels.iter().position(|l| *l == label).unwrap_or(0);
            TreeEnsembleModel::constant(which.file_stem(), labels, winner).expect("valid stub")
        };
        let lib = config.library().as_str();
        let lane = config.lane_width().unwrap_or(LaneWidth::W32).to_string();
        Self::new(
            pick(CascadeModel::Format, config.format().as_str()),
            pick(CascadeModel::CooLib, lib),
            pick(CascadeModel::CsrLib, lib),
            pick(CascadeModel::EllLib, lib),
            pick(CascadeModel::CsrTpv, &lane),
        )
        .expect("stub labels are allowed")
    }
}

fn implied(format: FormatTag, library: Library, lane: Option<LaneWidth>, mean: f64) -> SpmvConfig {
    let lane = (format == FormatTag::Csr && library == Library::LibA)
        .then(|| lane.unwrap_or_else(|| LaneWidth::for_mean_row_length(mean)));
    SpmvConfig::new(format, library, lane).expect("cascade only builds supported configs")
}

fn scored(model: &impl Classifier, p: &Prediction) -> Vec<(String, f64)> {
    model.classes().iter().cloned().zip(p.scores.iter().copied()).collect()
}

/// Runs the cascade, calling `emit` after every stage, and returns the final
/// configuration.
pub fn cascade_predict<M: Classifier>(
    models: &CascadeModelSet<M>,
    features: &FeatureVector,
    emit: impl FnMut(CascadeDecision),
) -> SpmvConfig {
    cascade_predict_cancellable(models, features, &CancelToken::new(), emit)
        .expect("fresh token is never cancelled")
}

/// [`cascade_predict`] that checks `cancel` before each stage.
pub fn cascade_predict_cancellable<M: Classifier>(
    models: &CascadeModelSet<M>,
    features: &FeatureVector,
    cancel: &CancelToken,
    mut emit: impl FnMut(CascadeDecision),
) -> Result<SpmvConfig, Cancelled> {
    let mean = features.mean;
    let run = |which: CascadeModel| {
        let start = Instant::now();
        let model = models.get(which);
        let p = model.predict(features);
        (scored(model, &p), p.label, start.elapsed())
    };

    if cancel.is_cancelled() {
        return Err(Cancelled);
    }
    let (scores, label, elapsed) = run(CascadeModel::Format);
    let format = FormatTag::parse(&label).expect("labels validated at construction");
    let library_model = CascadeModel::library_model_for(format);
    let config = implied(format, Library::LibA, None, mean);
    emit(CascadeDecision {
        stage: CascadeStage::Format,
        model: CascadeModel::Format,
        format,
        library: library_model.is_none().then_some(Library::LibA),
        lane_width: None,
        config,
        is_terminal: library_model.is_none(),
        scores,
        elapsed,
    });
    let Some(library_model) = library_model else {
        return Ok(config);
    };

    if cancel.is_cancelled() {
        return Err(Cancelled);
    }
    let (scores, label, elapsed) = run(library_model);
    let library = Library::parse(&label).expect("labels validated at construction");
    let wants_lane = format == FormatTag::Csr && library == Library::LibA;
    let config = implied(format, library, None, mean);
    emit(CascadeDecision {
        stage: CascadeStage::Library,
        model: library_model,
        format,
        library: Some(library),
        lane_width: None,
        config,
        is_terminal: !wants_lane,
        scores,
        elapsed,
    });
    if !wants_lane {
        return Ok(config);
    }

    if cancel.is_cancelled() {
        return Err(Cancelled);
    }
    let (scores, label, elapsed) = run(CascadeModel::CsrTpv);
    let lane = label
        .parse()
        .ok()
        .and_then(LaneWidth::from_value)
        .expect("labels validated at construction");
    let config = implied(format, library, Some(lane), mean);
    emit(CascadeDecision {
        stage: CascadeStage::LaneWidth,
        model: CascadeModel::CsrTpv,
        format,
        library: Some(library),
        lane_width: Some(lane),
        config,
        is_terminal: true,
        scores,
        elapsed,
    });
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_COUNT;
    use crate::kernels::enumerate_configs;
    use std::cell::Cell;

    struct Counting<'a> {
        inner: TreeEnsembleModel,
        calls: &'a Cell<usize>,
    }

    impl Classifier for Counting<'_> {
        fn classes(&self) -> &[String] {
            self.inner.classes()
        }
        fn predict(&self, f: &FeatureVector) -> Prediction {
            self.calls.set(self.calls.get() + 1);
            self.inner.predict(f)
        }
    }

    fn features() -> FeatureVector {
        let mut a = [1.0; FEATURE_COUNT];
        a[4] = 5.0;
        FeatureVector::from_array(a)
    }

    fn run(config: &str) -> (Vec<CascadeDecision>, SpmvConfig) {
        let models = CascadeModelSet::forced(config.parse().unwrap());
        let mut seen = Vec::new();
        let last = cascade_predict(&models, &features(), |d| seen.push(d));
        (seen, last)
    }

    #[test]
    fn dia_is_terminal_after_format() {
        let (seen, last) = run("DIA/LibA");
        assert_eq!(seen.len(), 1);
        assert!(seen[0].is_terminal);
        assert_eq!(last, "DIA/LibA".parse().unwrap());
    }

    #[test]
    fn csr_liba_runs_all_three_models() {
        let (seen, last) = run("CSR/LibA/32");
        let stages: Vec<_> = seen.iter().map(|d| d.stage).collect();
        assert_eq!(stages, [CascadeStage::Format, CascadeStage::Library, CascadeStage::LaneWidth]);
        assert_eq!(last, "CSR/LibA/32".parse().unwrap());
        // mean row length 5 implies lane 8 until the lane model answers
        assert_eq!(seen[0].config, "CSR/LibA/8".parse().unwrap());
    }

    #[test]
    fn csr_libb_skips_lane_model() {
        let forced = CascadeModelSet::forced("CSR/LibB".parse().unwrap());
        let calls: Vec<Cell<usize>> = (0..5).map(|_| Cell::new(0)).collect();
        let wrap = |which: CascadeModel, i: usize| Counting {
            inner: forced.get(which).clone(),
            calls: &calls[i],
        };
        let models = CascadeModelSet::new(
            wrap(CascadeModel::Format, 0),
            wrap(CascadeModel::CooLib, 1),
            wrap(CascadeModel::CsrLib, 2),
            wrap(CascadeModel::EllLib, 3),
            wrap(CascadeModel::CsrTpv, 4),
        )
        .unwrap();
        let mut n = 0;
        let last = cascade_predict(&models, &features(), |_| n += 1);
        assert_eq!(n, 2);
        assert_eq!(last, "CSR/LibB".parse().unwrap());
        let counts: Vec<usize> = calls.iter().map(Cell::get).collect();
        assert_eq!(counts, [1, 0, 1, 0, 0]);
    }

    #[test]
    fn every_forced_config_is_reproduced() {
        for &cfg in enumerate_configs() {
            let models = CascadeModelSet::forced(cfg);
            let last = cascade_predict(&models, &features(), |_| {});
            assert_eq!(last, cfg);
        }
    }

    #[test]
    fn rejects_out_of_table_labels() {
        let bad = TreeEnsembleModel::constant("COO-LIB", &["LibA", "LibC"], 0).unwrap();
        let f = CascadeModelSet::forced(SpmvConfig::DEFAULT);
        let err = CascadeModelSet::new(
            f.get(CascadeModel::Format).clone(),
            bad,
            f.get(CascadeModel::CsrLib).clone(),
            f.get(CascadeModel::EllLib).clone(),
            f.get(CascadeModel::CsrTpv).clone(),
        )
        .unwrap_err();
        assert!(matches!(err, CascadeError::Label { model: CascadeModel::CooLib, .. }));
    }

    #[test]
    fn cancellation_between_stages() {
        let token = CancelToken::new();
        let models = CascadeModelSet::forced("CSR/LibA/4".parse().unwrap());
        let mut n = 0;
        let r = cascade_predict_cancellable(&models, &features(), &token, |_| {
            n += 1;
            token.cancel();
        });
        assert_eq!(r, Err(Cancelled));
        assert_eq!(n, 1);
    }
}
