//! End-to-end experiment driver and its output files.

mod experiment;
mod histogram;
mod report;

pub use experiment::{
    assign_splits, best_single_loss_protocol, detail, draw_membership, extract_records, fit_attacks, run_experiment,
    score_attacks, split_of, sweep_k, train_target, AttackResult, Confusion, ExperimentOutcome, FittedAttack,
};
pub use histogram::{emit_histograms, histogram, write_histogram_csv, Histogram};
pub use report::{manifest_text, write_manifest, write_outputs, write_results_csv, MANIFEST, RESULTS, SUMMARY};
