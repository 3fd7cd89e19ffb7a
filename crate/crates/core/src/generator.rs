//! Single-cluster Saleh-Valenzuela snapshot generator.
//!
//! A snapshot is a central ray at delay 0 whose amplitude follows from the
//! path loss, plus pre-cursor rays (negative delays) and post-cursor rays
//! (positive delays). Cursor delays start at the scenario offset and grow by
//! exponential interarrivals; their mean amplitudes decay exponentially in
//! |τ| from a base set by the K-factor of each side.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{CirSnapshot, PathLossParams, Point3, Ray, ScenarioParams};
use crate::error::{Error, Result};
use crate::pathloss::mean_path_loss;
use crate::seed::stream_rng;

/// Attempts at redrawing a jittered cursor amplitude that would outrank the
/// central ray before it is clamped.
const MAX_JITTER_REDRAWS: usize = 100;

/// How many cursor rays a snapshot gets on each side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CountModel {
    /// Counts are Poisson with the scenario's mean ray numbers.
    #[default]
    PoissonMean,
    /// Exact counts, ignoring the scenario means.
    Fixed { pre: usize, post: usize },
}

impl CountModel {
    /// Fixed counts at the scenario means rounded to the nearest integer.
    pub fn rounded(s: &ScenarioParams) -> Self {
        CountModel::Fixed {
            pre: s.n_f_mean.round() as usize,
            post: s.n_b_mean.round() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub scenario: ScenarioParams,
    pub pathloss: PathLossParams,
    pub count_model: CountModel,
    /// Standard deviation of the per-ray lognormal amplitude jitter, dB.
    pub amplitude_jitter_db: f64,
}

impl GeneratorConfig {
    pub fn new(scenario: ScenarioParams, pathloss: PathLossParams) -> Self {
        GeneratorConfig {
            scenario,
            pathloss,
            count_model: CountModel::PoissonMean,
            amplitude_jitter_db: 0.0,
        }
    }

    pub fn with_count_model(mut self, count_model: CountModel) -> Self {
        self.count_model = count_model;
        self
    }

    pub fn with_jitter_db(mut self, jitter_db: f64) -> Self {
        self.amplitude_jitter_db = jitter_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.pathloss.validate()?;
        if !(self.amplitude_jitter_db >= 0.0) || !self.amplitude_jitter_db.is_finite() {
            return Err(Error::invalid(
                "amplitude_jitter_db",
                format!("must be >= 0, got {}", self.amplitude_jitter_db),
            ));
        }
        Ok(())
    }
}

/// Mean amplitude of a cursor ray at delay `tau_ns` given central amplitude
/// `a0`: `a0·10^(−K/20)·exp(−|τ|/γ)` with the pre-cursor parameters for
/// negative delays and the post-cursor ones for positive delays.
pub fn mean_cursor_amplitude(tau_ns: f64, a0: f64, s: &ScenarioParams) -> Result<f64> {
    if tau_ns == 0.0 {
        return Err(Error::ZeroDelay);
    }
    if !(a0 > 0.0) {
        return Err(Error::invalid("a0", format!("must be positive, got {a0}")));
    }
    let (k_db, gamma) = if tau_ns < 0.0 {
        (s.k_f_db, s.gamma_f_ns)
    } else {
        (s.k_b_db, s.gamma_b_ns)
    };
    let base = a0 * 10f64.powf(-k_db / 20.0);
    Ok(base * (-tau_ns.abs() / gamma).exp())
}

/// `n_rays` arrival delays: the first is `offset + Exp(rate)`, each later one
/// adds another `Exp(rate)` interarrival. Strictly increasing, all above the
/// offset.
pub fn generate_arrivals<R: Rng + ?Sized>(
    rate_per_ns: f64,
    n_rays: usize,
    offset_ns: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let exp = Exp::new(rate_per_ns)
        .ok()
        .filter(|_| rate_per_ns > 0.0 && rate_per_ns.is_finite())
        .ok_or_else(|| {
            Error::invalid(
                "rate_per_ns",
                format!("must be positive, got {rate_per_ns}"),
            )
        })?;
    let mut t = offset_ns;
    let mut out = Vec::with_capacity(n_rays);
    for _ in 0..n_rays {
        let mut dt = exp.sample(rng);
        while dt <= 0.0 {
            dt = exp.sample(rng);
        }
        t += dt;
        out.push(t);
    }
    Ok(out)
}

fn draw_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    // Poisson::new rejects a zero mean
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng) as usize,
        Err(_) => 0,
    }
}

/// One snapshot with an independent shadowing draw `N(0, σ²)`.
pub fn generate_snapshot<R: Rng + ?Sized>(
    tx: Point3,
    rx: Point3,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<CirSnapshot> {
    cfg.validate()?;
    let shadow = if cfg.pathloss.sigma_db > 0.0 {
        Normal::new(0.0, cfg.pathloss.sigma_db)
            .map_err(|e| Error::invalid("sigma_db", e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    generate_snapshot_with_shadow(tx, rx, cfg, shadow, rng)
}

/// One snapshot using a given shadowing value, dB. Used when shadowing comes
/// from a correlated sequence along a trajectory.
pub fn generate_snapshot_with_shadow<R: Rng + ?Sized>(
    tx: Point3,
    rx: Point3,
    cfg: &GeneratorConfig,
    shadow_db: f64,
    rng: &mut R,
) -> Result<CirSnapshot> {
    cfg.validate()?;
    let d = tx.distance(&rx);
    if d == 0.0 {
        return Err(Error::CoincidentEndpoints);
    }
    let s = &cfg.scenario;
    let pl = mean_path_loss(d, &cfg.pathloss)? + shadow_db;
    let a0 = 10f64.powf(-pl / 20.0);
    if !(a0 > 0.0) || !a0.is_finite() {
        return Err(Error::FitFailed(format!(
            "path loss {pl} dB gives unusable amplitude"
        )));
    }

    let (n_pre, n_post) = match cfg.count_model {
        CountModel::PoissonMean => (draw_count(s.n_f_mean, rng), draw_count(s.n_b_mean, rng)),
        CountModel::Fixed { pre, post } => (pre, post),
    };
    let pre = generate_arrivals(s.lambda_f_per_ns, n_pre, s.offset_ns, rng)?;
    let post = generate_arrivals(s.lambda_b_per_ns, n_post, s.offset_ns, rng)?;

    let mut rays = Vec::with_capacity(1 + n_pre + n_post);
    rays.push(Ray::central(a0, rng.random_range(0.0..TAU)));
    for tau in pre.into_iter().map(|t| -t).chain(post) {
        let mean = mean_cursor_amplitude(tau, a0, s)?;
        let amplitude = jittered(mean, a0, cfg.amplitude_jitter_db, rng);
        rays.push(Ray::new(tau, amplitude, rng.random_range(0.0..TAU)));
    }
    Ok(CirSnapshot::new(tx, rx, rays)?.with_shadow_db(shadow_db))
}

/// Applies lognormal jitter, keeping the result strictly below `a0`.
fn jittered<R: Rng + ?Sized>(mean: f64, a0: f64, jitter_db: f64, rng: &mut R) -> f64 {
    let cap = a0 * (1.0 - 1e-6);
    if jitter_db == 0.0 {
        return if mean < a0 { mean } else { cap };
    }
    for _ in 0..MAX_JITTER_REDRAWS {
        let z: f64 = rng.sample(StandardNormal);
        let a = mean * 10f64.powf(jitter_db * z / 20.0);
        if a < a0 {
            return a;
        }
    }
    cap
}

/// `count` snapshots over one link. Snapshot `i` uses stream `i` of `seed`,
/// so the result is identical whatever the thread count.
pub fn generate_ensemble(
    tx: Point3,
    rx: Point3,
    cfg: &GeneratorConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<CirSnapshot>> {
    cfg.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate_snapshot(tx, rx, cfg, &mut stream_rng(seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{scenario_params, RayKind};
    use crate::seed::stream_rng;

    fn pl() -> PathLossParams {
        PathLossParams::new(1.75, 40.0, 3.0, 4.5).unwrap()
    }

    fn link() -> (Point3, Point3) {
        (Point3::new(30.0, 0.0, 40.0), Point3::new(0.0, 0.0, 1.0))
    }

    #[test]
    fn cursor_amplitude_values() {
        let s1 = scenario_params("office-buildings").unwrap();
        let near = mean_cursor_amplitude(-1e-9, 1.0, &s1).unwrap();
        assert!((near - 10f64.powf(-8.1 / 20.0)).abs() < 1e-9);
        assert!((near - 0.3936).abs() < 1e-4);

        let s2 = scenario_params("grass-lawn").unwrap();
        let a = mean_cursor_amplitude(662.0, 1.0, &s2).unwrap();
        assert!((a - 10f64.powf(-5.1 / 20.0) / std::f64::consts::E).abs() < 1e-12);
        assert!((a - 0.2045).abs() < 1e-4);

        let mut unit = s1.clone();
        unit.k_f_db = 0.0;
        assert!((mean_cursor_amplitude(-1e-12, 2.5, &unit).unwrap() - 2.5).abs() < 1e-9);

        assert!(matches!(
            mean_cursor_amplitude(0.0, 1.0, &s1),
            Err(Error::ZeroDelay)
        ));
    }

    #[test]
    fn arrivals_basic() {
        let mut rng = stream_rng(3, 0);
        assert!(generate_arrivals(0.0073, 0, 50.0, &mut rng)
            .unwrap()
            .is_empty());
        let a = generate_arrivals(0.0073, 1000, 50.0, &mut rng).unwrap();
        assert!(a.iter().all(|&t| t > 50.0));
        assert!(a.windows(2).all(|w| w[1] > w[0]));
        assert!(generate_arrivals(0.0, 3, 50.0, &mut rng).is_err());
        assert!(generate_arrivals(-1.0, 3, 50.0, &mut rng).is_err());
    }

    #[test]
    fn arrivals_mean_interarrival() {
        let mut rng = stream_rng(11, 0);
        let a = generate_arrivals(0.0073, 1_000_000, 50.0, &mut rng).unwrap();
        let mean = (a.last().unwrap() - 50.0) / a.len() as f64;
        let expected = 1.0 / 0.0073;
        assert!((mean - expected).abs() / expected < 0.01, "{mean}");
    }

    #[test]
    fn zero_counts_give_only_central_ray() {
        let (tx, rx) = link();
        let cfg = GeneratorConfig::new(scenario_params("office-buildings").unwrap(), pl())
            .with_count_model(CountModel::Fixed { pre: 0, post: 0 });
        let snap = generate_snapshot(tx, rx, &cfg, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(snap.rays().len(), 1);
        assert_eq!(snap.rays()[0].kind, RayKind::Central);
    }

    #[test]
    fn rounded_counts_and_delay_support() {
        let (tx, rx) = link();
        let s2 = scenario_params("grass-lawn").unwrap();
        let model = CountModel::rounded(&s2);
        assert_eq!(model, CountModel::Fixed { pre: 2, post: 5 });
        let cfg = GeneratorConfig::new(s2, pl()).with_count_model(model);
        for i in 0..200 {
            let snap = generate_snapshot(tx, rx, &cfg, &mut stream_rng(5, i)).unwrap();
            assert_eq!(snap.rays().len(), 8);
            assert_eq!(snap.pre_cursors().count(), 2);
            assert_eq!(snap.post_cursors().count(), 5);
            for r in snap.rays() {
                assert!(r.delay_ns == 0.0 || r.delay_ns.abs() >= 50.0);
            }
        }
    }

    #[test]
    fn central_amplitude_from_path_loss() {
        let (tx, rx) = link();
        let cfg = GeneratorConfig::new(scenario_params("office-buildings").unwrap(), pl());
        let snap = generate_snapshot_with_shadow(tx, rx, &cfg, 2.0, &mut stream_rng(1, 0)).unwrap();
        let expected_pl = mean_path_loss(tx.distance(&rx), &cfg.pathloss).unwrap() + 2.0;
        let a0 = snap.central().amplitude;
        assert!((-20.0 * a0.log10() - expected_pl).abs() < 1e-9);
        assert_eq!(snap.shadow_db(), Some(2.0));
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let cfg = GeneratorConfig::new(scenario_params("grass-lawn").unwrap(), pl());
        let err = generate_snapshot(p, p, &cfg, &mut stream_rng(1, 0)).unwrap_err();
        assert!(matches!(err, Error::CoincidentEndpoints));
    }

    #[test]
    fn central_stays_strongest_with_heavy_jitter() {
        let (tx, rx) = link();
        let mut s = scenario_params("office-buildings").unwrap();
        s.k_b_db = -3.0;
        let cfg = GeneratorConfig::new(s, pl()).with_jitter_db(12.0);
        for i in 0..500 {
            let snap = generate_snapshot(tx, rx, &cfg, &mut stream_rng(9, i)).unwrap();
            let a0 = snap.central().amplitude;
            assert!(snap
                .rays()
                .iter()
                .filter(|r| r.kind != RayKind::Central)
                .all(|r| r.amplitude < a0));
        }
    }

    #[test]
    fn same_seed_same_snapshot() {
        let (tx, rx) = link();
        let cfg =
            GeneratorConfig::new(scenario_params("grass-lawn").unwrap(), pl()).with_jitter_db(2.0);
        let a = generate_snapshot(tx, rx, &cfg, &mut stream_rng(42, 7)).unwrap();
        let b = generate_snapshot(tx, rx, &cfg, &mut stream_rng(42, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ensemble_is_thread_count_independent() {
        let (tx, rx) = link();
        let cfg = GeneratorConfig::new(scenario_params("grass-lawn").unwrap(), pl());
        let par = generate_ensemble(tx, rx, &cfg, 64, 99).unwrap();
        let serial: Vec<_> = (0..64)
            .map(|i| generate_snapshot(tx, rx, &cfg, &mut stream_rng(99, i)).unwrap())
            .collect();
        assert_eq!(par, serial);
    }
}
