//! Offline stage: configuration timing, dataset labeling and solver
//! comparisons.

mod compare;
mod dataset;
mod labeling;
mod timing;

pub use compare::{
    compare_solvers, load_reports, render_summary, summarize, timeline_text, write_summary_csv,
    ComparisonReport, SpeedupRow, SummaryError,
};
pub use dataset::{
    build_dataset, dataset_path, label_records, matrix_files, read_dataset, write_datasets,
    DatasetCounts, DatasetError, DatasetSummary,
};
pub use labeling::{label_timings, LabeledRow, Labels};
pub use timing::{
    time_all_configs, time_config, time_prepared, ConfigTime, Fingerprint, TimingCacheError,
    TimingOptions, TimingRecord, MIN_REPORTED_SECONDS,
};
