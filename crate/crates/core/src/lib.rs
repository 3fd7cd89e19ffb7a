//! Channel simulator and parameter-estimation toolkit for low-altitude
//! UAV-to-ground links in urban areas.
//!
//! * [`channel`]: rays, snapshots, scenario registry, band-limited sampling.
//! * [`pathloss`]: log-distance path loss and correlated shadowing.
//! * [`generator`]: single-cluster Saleh-Valenzuela snapshot generator.
//! * [`metrics`]: K-factor, delay spread and distribution fitting.
//! * [`estimator`]: multipath extraction and parameter fits.
//! * [`sim`]: trajectories, run configuration, file formats, batch runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod estimator;
pub mod generator;
pub mod metrics;
pub mod pathloss;
pub mod seed;
pub mod sim;
pub mod stats;

pub use channel::{
    discretize, scenario_params, CirSnapshot, PathLossParams, Point3, Ray, RayKind, SampledCir,
    ScenarioParams, ScenarioRegistry,
};
pub use error::{Error, Result};
pub use estimator::{extract_mpcs, fit_pathloss, fit_sv_params, PathLossSample, SvFitReport};
pub use generator::{generate_arrivals, generate_snapshot, CountModel, GeneratorConfig};
pub use metrics::{k_factor, mean_delay, rms_delay_spread, DispersionStats};
pub use pathloss::{mean_path_loss, shadowing_sequence, ShadowSeries};
