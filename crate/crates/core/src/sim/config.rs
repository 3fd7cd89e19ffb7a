//! Run configuration document (TOML).
//!
//! ```toml
//! seed = 2024
//! scenario = "grass-lawn"          # or an inline [scenario] table
//! snapshots_per_position = 50
//!
//! [pathloss]
//! ple = 1.75
//! pl0_db = 40.0
//! sigma_db = 3.0
//! d_corr_m = 4.5
//!
//! [generator]
//! count_model = { type = "poisson-mean" }
//! amplitude_jitter_db = 0.0
//!
//! [trajectory]
//! rx_position = [0.0, 0.0, 1.0]
//! [[trajectory.legs]]
//! start = [10.0, 0.0, 5.0]
//! end = [10.0, 0.0, 80.0]
//! step_m = 1.0
//! kind = "vertical"
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{PathLossParams, ScenarioParams, ScenarioRegistry};
use crate::error::{Error, Result};
use crate::generator::{CountModel, GeneratorConfig};
use crate::sim::trajectory::TrajectorySpec;

pub const DEFAULT_SNAPSHOTS_PER_POSITION: usize = 50;

/// A scenario given by registry name or inline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Named(String),
    Inline(ScenarioParams),
}

impl ScenarioRef {
    pub fn resolve(&self, registry: &ScenarioRegistry) -> Result<ScenarioParams> {
        match self {
            ScenarioRef::Named(name) => registry.get(name),
            ScenarioRef::Inline(p) => {
                p.validate()?;
                let mut p = p.clone();
                if p.name.is_empty() {
                    p.name = "inline".into();
                }
                Ok(p)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorOptions {
    #[serde(default)]
    pub count_model: CountModel,
    #[serde(default)]
    pub amplitude_jitter_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_snapshots")]
    pub snapshots: String,
    #[serde(default = "default_pathloss")]
    pub pathloss: String,
    #[serde(default = "default_k_cdf")]
    pub k_factor_cdf: String,
    #[serde(default = "default_ds_cdf")]
    pub rms_ds_cdf: String,
    #[serde(default = "default_autocorr")]
    pub shadow_autocorr: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_snapshots() -> String {
    "snapshots.jsonl".into()
}
fn default_pathloss() -> String {
    "pathloss.csv".into()
}
fn default_k_cdf() -> String {
    "k_factor_cdf.csv".into()
}
fn default_ds_cdf() -> String {
    "rms_ds_cdf.csv".into()
}
fn default_autocorr() -> String {
    "shadow_autocorr.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: default_dir(),
            snapshots: default_snapshots(),
            pathloss: default_pathloss(),
            k_factor_cdf: default_k_cdf(),
            rms_ds_cdf: default_ds_cdf(),
            shadow_autocorr: default_autocorr(),
            summary: default_summary(),
        }
    }
}

impl OutputPaths {
    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }
}

fn default_snapshots_per_position() -> usize {
    DEFAULT_SNAPSHOTS_PER_POSITION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: ScenarioRef,
    pub pathloss: PathLossParams,
    pub trajectory: TrajectorySpec,
    #[serde(default = "default_snapshots_per_position")]
    pub snapshots_per_position: usize,
    #[serde(default)]
    pub generator: GeneratorOptions,
    #[serde(default)]
    pub output: OutputPaths,
    /// Extra scenario document merged into the built-in registry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios_file: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(doc: &str) -> Result<Self> {
        toml::from_str(doc).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. A relative `scenarios_file` resolves against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&doc)?;
        if let Some(f) = &cfg.scenarios_file {
            if f.is_relative() {
                if let Some(parent) = path.parent() {
                    cfg.scenarios_file = Some(parent.join(f));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn registry(&self) -> Result<ScenarioRegistry> {
        let mut reg = ScenarioRegistry::builtin();
        if let Some(path) = &self.scenarios_file {
            let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            reg.merge_toml(&doc)?;
        }
        Ok(reg)
    }

    /// Checks every field and returns the resolved generator configuration.
    pub fn generator_config(&self) -> Result<GeneratorConfig> {
        if self.snapshots_per_position == 0 {
            return Err(Error::invalid(
                "snapshots_per_position",
                "must be at least 1",
            ));
        }
        let scenario = self.scenario.resolve(&self.registry()?)?;
        self.pathloss.validate()?;
        self.trajectory.validate()?;
        let cfg = GeneratorConfig::new(scenario, self.pathloss)
            .with_count_model(self.generator.count_model)
            .with_jitter_db(self.generator.amplitude_jitter_db);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
seed = 11
scenario = "grass-lawn"

[pathloss]
ple = 1.75
pl0_db = 40.0
sigma_db = 3.0
d_corr_m = 4.5

[trajectory]
[[trajectory.legs]]
start = [10.0, 0.0, 5.0]
end = [10.0, 0.0, 80.0]
step_m = 1.0
kind = "vertical"
"#;

    #[test]
    fn parses_minimal_document() {
        let cfg = RunConfig::from_toml(DOC).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.snapshots_per_position, 50);
        assert_eq!(cfg.scenario, ScenarioRef::Named("grass-lawn".into()));
        assert_eq!(cfg.trajectory.rx_position.z, 1.0);
        assert_eq!(cfg.pathloss.d_ref_m, 1.0);
        assert_eq!(cfg.generator.count_model, CountModel::PoissonMean);
        let g = cfg.generator_config().unwrap();
        assert_eq!(g.scenario.n_b_mean, 5.4);
    }

    #[test]
    fn seed_is_mandatory() {
        let doc = DOC.replace("seed = 11", "");
        let err = RunConfig::from_toml(&doc).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn inline_scenario_and_fixed_counts() {
        let doc = DOC.replace(
            "scenario = \"grass-lawn\"",
            "[scenario]\nk_f_db = 3.0\ngamma_f_ns = 100.0\nlambda_f_per_ns = 0.01\nn_f_mean = 1.0\n\
             k_b_db = 2.0\ngamma_b_ns = 200.0\nlambda_b_per_ns = 0.01\nn_b_mean = 2.0\n\n\
             [generator]\ncount_model = { type = \"fixed\", pre = 0, post = 0 }\n",
        );
        let cfg = RunConfig::from_toml(&doc).unwrap();
        assert!(matches!(cfg.scenario, ScenarioRef::Inline(_)));
        assert_eq!(
            cfg.generator.count_model,
            CountModel::Fixed { pre: 0, post: 0 }
        );
        let g = cfg.generator_config().unwrap();
        assert_eq!(g.scenario.offset_ns, 50.0);
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig::from_toml(DOC).unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_scenario_is_validation_error() {
        let doc = DOC.replace("grass-lawn", "atlantis");
        let cfg = RunConfig::from_toml(&doc).unwrap();
        let err = cfg.generator_config().unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
