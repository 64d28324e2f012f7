//! Cost accounting, gradient verification, and the sweep/ablation harness.

pub mod cost;
pub mod gradcheck;
pub mod sweep;

pub use cost::{count_costs, ConvComparison, CostReport, LayerCost};
pub use gradcheck::{
    grad_check, grad_check_tampered, relative_error, BlockCheck, GradCheckConfig, GradCheckReport,
};
pub use sweep::{
    ablate, mean_std, run_once, sweep, write_records_csv, write_records_jsonl, CellSummary,
    ResultRecord, RunResult, RunSettings, SweepAxis, ABLATION_MODES,
};
