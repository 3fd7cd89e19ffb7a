//! Batch front end: trajectories, run configuration, file formats, and the
//! run / analyze / discretize pipelines behind the command-line tool.

pub mod analyze;
pub mod config;
pub mod format;
pub mod run;
pub mod trajectory;

pub use analyze::{
    analyze, sample_snapshots, Analysis, AnalysisReport, AnalyzeOptions, SamplingOptions,
};
pub use config::{RunConfig, ScenarioRef};
pub use run::{run, simulate, write_outputs, RunOptions, RunOutput, RunSummary};
pub use trajectory::{build_trajectory, Leg, LegKind, TrackPoint, TrajectorySpec};
