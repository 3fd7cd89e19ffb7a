//! Shared domain types, the scenario registry and band-limited sampling of
//! ray lists.
//!
//! Delays are kept in nanoseconds as real numbers. A snapshot's strongest
//! ray sits at delay 0 and is the only [`RayKind::Central`] ray; rays that
//! arrive before it are pre-cursors (negative delay), after it post-cursors.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample period of the 20 MHz sounder bandwidth, ns.
pub const DEFAULT_SAMPLE_PERIOD_NS: f64 = 50.0;

/// Minimum |delay| of any cursor ray in the built-in scenarios, ns.
pub const DEFAULT_OFFSET_NS: f64 = 50.0;

/// Cartesian position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Point a fraction `t` of the way from `self` to `other`.
    pub fn lerp(&self, other: &Point3, t: f64) -> Point3 {
        Point3::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
            self.z + (other.z - self.z) * t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayKind {
    Central,
    PreCursor,
    PostCursor,
}

impl RayKind {
    /// Kind implied by the sign of a delay relative to the strongest ray.
    pub fn from_delay(delay_ns: f64) -> Self {
        if delay_ns < 0.0 {
            RayKind::PreCursor
        } else if delay_ns > 0.0 {
            RayKind::PostCursor
        } else {
            RayKind::Central
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RayKind::Central => "central",
            RayKind::PreCursor => "pre-cursor",
            RayKind::PostCursor => "post-cursor",
        }
    }
}

impl fmt::Display for RayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(RayKind::Central),
            "pre-cursor" => Ok(RayKind::PreCursor),
            "post-cursor" => Ok(RayKind::PostCursor),
            other => Err(Error::invalid(
                "kind",
                format!("unknown ray kind `{other}`"),
            )),
        }
    }
}

/// One multipath component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Delay relative to the strongest ray, ns.
    pub delay_ns: f64,
    /// Linear voltage gain.
    pub amplitude: f64,
    /// Radians in `[0, 2π)`.
    pub phase: f64,
    pub kind: RayKind,
}

impl Ray {
    /// Builds a ray whose kind follows from the sign of `delay_ns`. The phase
    /// is wrapped into `[0, 2π)`.
    pub fn new(delay_ns: f64, amplitude: f64, phase: f64) -> Self {
        Ray {
            delay_ns,
            amplitude,
            phase: wrap_phase(phase),
            kind: RayKind::from_delay(delay_ns),
        }
    }

    pub fn central(amplitude: f64, phase: f64) -> Self {
        Ray::new(0.0, amplitude, phase)
    }

    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// Complex gain `amplitude·e^{jφ}`.
    pub fn gain(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

pub(crate) fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Band-limited sampled form of a channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCir {
    pub sample_period_ns: f64,
    /// Time of sample 0, ns.
    pub t0_ns: f64,
    pub samples: Vec<Complex64>,
}

/// One channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSnapshot {
    tx: Point3,
    rx: Point3,
    link_distance_m: f64,
    rays: Vec<Ray>,
    shadow_db: Option<f64>,
    sampled: Option<SampledCir>,
}

impl CirSnapshot {
    /// Validates and sorts `rays`. Exactly one central ray at delay 0 is
    /// required, every amplitude must be positive and no two rays may share
    /// a delay.
    pub fn new(tx: Point3, rx: Point3, mut rays: Vec<Ray>) -> Result<Self> {
        if !tx.is_finite() || !rx.is_finite() {
            return Err(Error::InvalidSnapshot("non-finite position".into()));
        }
        if rays.is_empty() {
            return Err(Error::EmptyRays);
        }
        for (i, r) in rays.iter().enumerate() {
            if !(r.amplitude > 0.0) || !r.amplitude.is_finite() {
                return Err(Error::InvalidSnapshot(format!(
                    "ray {i} has non-positive amplitude {}",
                    r.amplitude
                )));
            }
            if !r.delay_ns.is_finite() || !r.phase.is_finite() {
                return Err(Error::InvalidSnapshot(format!("ray {i} is not finite")));
            }
            if r.kind != RayKind::from_delay(r.delay_ns) {
                return Err(Error::InvalidSnapshot(format!(
                    "ray {i} at {} ns is labelled {}",
                    r.delay_ns, r.kind
                )));
            }
        }
        let centrals = rays.iter().filter(|r| r.kind == RayKind::Central).count();
        if centrals != 1 {
            return Err(Error::InvalidSnapshot(format!(
                "expected exactly one central ray, found {centrals}"
            )));
        }
        rays.sort_by(|a, b| a.delay_ns.total_cmp(&b.delay_ns));
        if rays.windows(2).any(|w| w[0].delay_ns == w[1].delay_ns) {
            return Err(Error::InvalidSnapshot("duplicate ray delay".into()));
        }
        for r in &mut rays {
            r.phase = wrap_phase(r.phase);
        }
        Ok(CirSnapshot {
            tx,
            rx,
            link_distance_m: tx.distance(&rx),
            rays,
            shadow_db: None,
            sampled: None,
        })
    }

    pub fn with_shadow_db(mut self, shadow_db: f64) -> Self {
        self.shadow_db = Some(shadow_db);
        self
    }

    pub fn with_samples(mut self, sampled: SampledCir) -> Result<Self> {
        if !(sampled.sample_period_ns > 0.0) {
            return Err(Error::NonPositivePeriod(sampled.sample_period_ns));
        }
        self.sampled = Some(sampled);
        Ok(self)
    }

    pub fn tx(&self) -> Point3 {
        self.tx
    }

    pub fn rx(&self) -> Point3 {
        self.rx
    }

    pub fn link_distance_m(&self) -> f64 {
        self.link_distance_m
    }

    /// Rays in ascending delay order.
    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn shadow_db(&self) -> Option<f64> {
        self.shadow_db
    }

    pub fn sampled(&self) -> Option<&SampledCir> {
        self.sampled.as_ref()
    }

    pub fn central(&self) -> &Ray {
        self.rays
            .iter()
            .find(|r| r.kind == RayKind::Central)
            .expect("snapshot invariant: one central ray")
    }

    pub fn pre_cursors(&self) -> impl Iterator<Item = &Ray> {
        self.rays.iter().filter(|r| r.kind == RayKind::PreCursor)
    }

    pub fn post_cursors(&self) -> impl Iterator<Item = &Ray> {
        self.rays.iter().filter(|r| r.kind == RayKind::PostCursor)
    }
}

impl AsRef<[Ray]> for CirSnapshot {
    fn as_ref(&self) -> &[Ray] {
        &self.rays
    }
}

/// Parameters of the single-cluster model for one scenario. Field names
/// follow the scenario document keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Pre-cursor K-factor, dB.
    pub k_f_db: f64,
    /// Pre-cursor decay time, ns.
    pub gamma_f_ns: f64,
    /// Pre-cursor arrival rate, 1/ns.
    pub lambda_f_per_ns: f64,
    /// Mean number of pre-cursor rays.
    pub n_f_mean: f64,
    pub k_b_db: f64,
    pub gamma_b_ns: f64,
    pub lambda_b_per_ns: f64,
    pub n_b_mean: f64,
    /// Minimum |delay| of any cursor ray, ns.
    #[serde(default = "default_offset")]
    pub offset_ns: f64,
}

fn default_offset() -> f64 {
    DEFAULT_OFFSET_NS
}

impl ScenarioParams {
    /// Scenario 1: office buildings.
    pub fn office_buildings() -> Self {
        ScenarioParams {
            name: "office-buildings".into(),
            k_f_db: 8.1,
            gamma_f_ns: 240.0,
            lambda_f_per_ns: 0.0092,
            n_f_mean: 2.2,
            k_b_db: 2.8,
            gamma_b_ns: 448.0,
            lambda_b_per_ns: 0.0073,
            n_b_mean: 4.8,
            offset_ns: DEFAULT_OFFSET_NS,
        }
    }

    /// Scenario 2: grass lawn.
    pub fn grass_lawn() -> Self {
        ScenarioParams {
            name: "grass-lawn".into(),
            k_f_db: 11.4,
            gamma_f_ns: 316.0,
            lambda_f_per_ns: 0.0075,
            n_f_mean: 1.6,
            k_b_db: 5.1,
            gamma_b_ns: 662.0,
            lambda_b_per_ns: 0.0057,
            n_b_mean: 5.4,
            offset_ns: DEFAULT_OFFSET_NS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_f_ns", self.gamma_f_ns),
            ("lambda_f_per_ns", self.lambda_f_per_ns),
            ("n_f_mean", self.n_f_mean),
            ("gamma_b_ns", self.gamma_b_ns),
            ("lambda_b_per_ns", self.lambda_b_per_ns),
            ("n_b_mean", self.n_b_mean),
            ("offset_ns", self.offset_ns),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    field,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        for (field, v) in [("k_f_db", self.k_f_db), ("k_b_db", self.k_b_db)] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Log-distance path loss with correlated lognormal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Path loss exponent.
    pub ple: f64,
    /// Path loss at `d_ref_m`, dB.
    pub pl0_db: f64,
    #[serde(default = "default_d_ref")]
    pub d_ref_m: f64,
    /// Shadow fading standard deviation, dB.
    pub sigma_db: f64,
    /// Distance at which the shadowing autocorrelation halves, m.
    pub d_corr_m: f64,
}

fn default_d_ref() -> f64 {
    1.0
}

impl PathLossParams {
    /// `pl0_db` has no default; it must come from the caller.
    pub fn new(ple: f64, pl0_db: f64, sigma_db: f64, d_corr_m: f64) -> Result<Self> {
        let p = PathLossParams {
            ple,
            pl0_db,
            d_ref_m: 1.0,
            sigma_db,
            d_corr_m,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ple > 0.0 && self.ple.is_finite()) {
            return Err(Error::invalid(
                "ple",
                format!("must be positive, got {}", self.ple),
            ));
        }
        if !self.pl0_db.is_finite() {
            return Err(Error::invalid("pl0_db", "must be finite"));
        }
        if !(self.sigma_db >= 0.0 && self.sigma_db.is_finite()) {
            return Err(Error::invalid(
                "sigma_db",
                format!("must be >= 0, got {}", self.sigma_db),
            ));
        }
        if !(self.d_ref_m > 0.0 && self.d_ref_m.is_finite()) {
            return Err(Error::invalid(
                "d_ref_m",
                format!("must be positive, got {}", self.d_ref_m),
            ));
        }
        if !(self.d_corr_m > 0.0 && self.d_corr_m.is_finite()) {
            return Err(Error::invalid(
                "d_corr_m",
                format!("must be positive, got {}", self.d_corr_m),
            ));
        }
        Ok(())
    }
}

/// Named scenarios. Starts with the two built-ins; more can be registered
/// or loaded from a TOML document with one table per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRegistry {
    scenarios: BTreeMap<String, ScenarioParams>,
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ScenarioRegistry {
    pub fn builtin() -> Self {
        let mut scenarios = BTreeMap::new();
        for s in [
            ScenarioParams::office_buildings(),
            ScenarioParams::grass_lawn(),
        ] {
            scenarios.insert(s.name.clone(), s);
        }
        ScenarioRegistry { scenarios }
    }

    pub fn register(&mut self, name: impl Into<String>, mut params: ScenarioParams) -> Result<()> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("name", "scenario name must not be empty"));
        }
        params.validate()?;
        params.name = name.clone();
        self.scenarios.insert(name, params);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<ScenarioParams> {
        self.scenarios
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownScenario {
                name: name.to_string(),
                available: self.names(),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.scenarios.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScenarioParams> {
        self.scenarios.values()
    }

    /// Registers every table of a scenario document, overriding existing
    /// entries with the same name.
    pub fn merge_toml(&mut self, doc: &str) -> Result<()> {
        let tables: BTreeMap<String, ScenarioParams> =
            toml::from_str(doc).map_err(|e| Error::Config(e.to_string()))?;
        for (name, params) in tables {
            self.register(name, params)?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let tables: BTreeMap<&str, ScenarioParams> = self
            .scenarios
            .iter()
            .map(|(k, v)| {
                let mut v = v.clone();
                v.name.clear();
                (k.as_str(), v)
            })
            .collect();
        toml::to_string(&tables).expect("scenario tables serialize")
    }
}

/// Built-in scenario lookup: `"office-buildings"` or `"grass-lawn"`.
pub fn scenario_params(name: &str) -> Result<ScenarioParams> {
    ScenarioRegistry::builtin().get(name)
}

/// Normalized sinc, `sin(πx)/(πx)`. Exact at integer arguments.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Samples the ray sum through an ideal brick-wall filter of bandwidth
/// `1/sample_period_ns`. Sample `k` sits at time `t0_ns + k·T`.
pub fn discretize(
    rays: &[Ray],
    sample_period_ns: f64,
    n_samples: usize,
    t0_ns: f64,
) -> Result<Vec<Complex64>> {
    if rays.is_empty() {
        return Err(Error::EmptyRays);
    }
    if !(sample_period_ns > 0.0) || !sample_period_ns.is_finite() {
        return Err(Error::NonPositivePeriod(sample_period_ns));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n_samples];
    for ray in rays {
        let g = ray.gain();
        for (k, s) in out.iter_mut().enumerate() {
            let t = t0_ns + k as f64 * sample_period_ns;
            *s += g * sinc((t - ray.delay_ns) / sample_period_ns);
        }
    }
    Ok(out)
}
