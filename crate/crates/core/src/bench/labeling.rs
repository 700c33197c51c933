//! Turning a timing table into cascade labels.
//!
//! The format label compares LibA's best time per format. The library label
//! compares each library's best time within the chosen format. The lane
//! label compares the CSR/LibA lane widths. Every comparison breaks exact
//! ties toward the lower configuration index.

use super::timing::TimingRecord;
use crate::features::FeatureVector;
use crate::inference::CascadeModel;
use crate::kernels::{enumerate_configs, LaneWidth, Library, SpmvConfig};
use crate::matrix::FormatTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Labels {
    pub format: FormatTag,
    /// Present for formats with a library model.
    pub library: Option<Library>,
    /// Present when the format is CSR and the library is LibA.
    pub lane_width: Option<LaneWidth>,
}

impl Labels {
    /// `(dataset, label)` pairs this row contributes.
    pub fn routed(&self) -> Vec<(CascadeModel, String)> {
        let mut out = vec![(CascadeModel::Format, self.format.as_str().to_string())];
        if let (Some(model), Some(lib)) = (CascadeModel::library_model_for(self.format), self.library) {
            out.push((model, lib.as_str().to_string()));
        }
        if let Some(lane) = self.lane_width {
            out.push((CascadeModel::CsrTpv, lane.to_string()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub matrix: String,
    pub features: FeatureVector,
    pub labels: Labels,
}

/// Lowest `(time, index)` among `configs`.
fn fastest(record: &TimingRecord, configs: impl Iterator<Item = SpmvConfig>) -> Option<(f64, SpmvConfig)> {
    configs
        .filter_map(|c| record.time_of(c).map(|t| (t, c)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.index().cmp(&b.1.index())))
}

/// Labels for one matrix, or `None` when no LibA configuration has a time.
pub fn label_timings(record: &TimingRecord) -> Option<Labels> {
    let configs = enumerate_configs();
    let (_, best_format) = fastest(record, configs.iter().copied().filter(|c| c.library() == Library::LibA))?;
    let format = best_format.format();
    let library = CascadeModel::library_model_for(format)
        .and_then(|_| fastest(record, configs.iter().copied().filter(|c| c.format() == format)))
        .map(|(_, c)| c.library());
    let lane_width = if format == FormatTag::Csr && library == Some(Library::LibA) {
        fastest(
            record,
            configs
                .iter()
                .copied()
                .filter(|c| c.format() == FormatTag::Csr && c.library() == Library::LibA),
        )
        .and_then(|(_, c)| c.lane_width())
    } else {
        None
    };
    Some(Labels {
        format,
        library,
        lane_width,
    })
}
