//! Agreement statistics over paired (true, observed) skill values.

mod bootstrap;
mod pairs;
mod report;
pub mod stats;
mod sweep;
mod tables;

pub use bootstrap::{bootstrap_ci, BootstrapSpec, Interval, ResampleUnit, Statistic};
pub use pairs::{canonical_sort, extract_pairs, split, PairedObservation};
pub use report::{
    analyze, compare_runs, record_level_r, write_json, write_report, write_sweep, Benchmark, BootstrapInfo, GeaReport,
    ModelComparison, RunMetadata, RunSide, TerminalDistribution, REPORT_SCHEMA,
};
pub use stats::{benjamini_hochberg, correlation_p_value, fisher_z, pearson, signed_bias};
pub use sweep::{threshold_sweep, SweepRow, SweepTable};
pub use tables::{
    calibration_curve, confusion_matrix, fmt_na, per_skill_table, proficiency_accuracy, Accuracy, CalibrationBand,
    ConfusionMatrix, PerSkillStats, Tier,
};
