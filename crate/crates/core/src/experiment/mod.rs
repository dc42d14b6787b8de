//! Desk-scale experiments: planted-topic data, evaluation runs, and the
//! sweep that picks T by validation recall.

mod eval;
mod sweep;
mod synthetic;

pub use eval::{retrieve_queries, run_eval, score_rankings};
pub use sweep::{
    choose_t, evaluate_t, sweep_t, MeanStd, RowSummary, RunSummary, SweepConfig, SweepData,
    SweepResult, SweepRow,
};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec, PAGE_SIZE};
