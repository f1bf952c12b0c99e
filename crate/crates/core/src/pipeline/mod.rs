//! End-to-end reduction driver and the reference corpus.
//!
//! Stages: performance level, minimal-trace gramians, balancing, diagonal
//! re-solve with a common floor, truncation at the floor, error bounds and
//! simulation. Every stage writes its artifacts into the output directory.

mod reference;
mod run;

pub use reference::{generate_reference, reference_graph, REFERENCE_EDGES, REFERENCE_PERIOD, REFERENCE_VERTICES};
pub use run::{
    analyze, balanced_stage, gramians, load_system, run_pipeline, sigma_table, standard_forms, BalanceSummary,
    GramianSummary, PerformanceSummary, PipelineConfig, RunReport, SimulationSummary, StageSummary, SystemSource,
    SystemSummary, Threshold, Timings, TruncationSummary, FLOOR_SLACK, RECONSTRUCTION_NOTE,
};
