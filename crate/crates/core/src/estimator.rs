//! Parameter estimation: multipath extraction from sampled CIRs and the
//! regressions that recover path-loss and SV parameters from data.
//!
//! The extractor is serial interference cancellation. Each pass takes the
//! strongest residual sample, refines its delay (parabolic interpolation of
//! |·|² around the peak, then a golden-section search of the matched-filter
//! output within half a sample), projects the residual onto the sinc pulse
//! at that delay, records the ray and subtracts it.

use std::f64::consts::LN_10;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{sinc, CirSnapshot, Ray, RayKind, ScenarioParams};
use crate::error::{Error, Result};
use crate::stats::{empirical_cdf, ks_statistic, linear_fit};

/// Dynamic range below the first peak at which extraction stops, dB.
pub const DEFAULT_STOP_THRESHOLD_DB: f64 = 25.0;

/// Fewest pooled rays on one side for that side's parameters to be fit.
pub const MIN_POOLED_RAYS: usize = 10;

const GOLDEN_ITERATIONS: usize = 36;
const MAX_REFINE_SWEEPS: usize = 20;
const SEARCH_HALF_WINDOW: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub sample_period_ns: f64,
    /// Time of sample 0, ns.
    pub t0_ns: f64,
    pub max_rays: usize,
    pub stop_threshold_db: f64,
}

impl ExtractOptions {
    pub fn new(sample_period_ns: f64) -> Self {
        ExtractOptions {
            sample_period_ns,
            t0_ns: 0.0,
            max_rays: 32,
            stop_threshold_db: DEFAULT_STOP_THRESHOLD_DB,
        }
    }
}

/// Result of [`extract_mpcs_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct MpcExtraction {
    /// Rays relative to the strongest one, ascending delay.
    pub rays: Vec<Ray>,
    /// Absolute delay of the strongest ray on the sample time axis, ns.
    pub reference_delay_ns: f64,
    pub input_energy: f64,
    pub residual_energy: f64,
    /// Energy of the fitted pulses within the sample window.
    pub extracted_energy: f64,
}

/// Extracts up to `max_rays` rays from `samples` (sample `k` at `k·T`).
/// Delays are returned relative to the strongest ray, which sits at 0.
pub fn extract_mpcs(
    samples: &[Complex64],
    sample_period_ns: f64,
    max_rays: usize,
    stop_threshold_db: f64,
) -> Result<Vec<Ray>> {
    let opts = ExtractOptions {
        max_rays,
        stop_threshold_db,
        ..ExtractOptions::new(sample_period_ns)
    };
    Ok(extract_mpcs_detailed(samples, &opts)?.rays)
}

struct Found {
    delay_ns: f64,
    gain: Complex64,
}

pub fn extract_mpcs_detailed(
    samples: &[Complex64],
    opts: &ExtractOptions,
) -> Result<MpcExtraction> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "sample vector is empty"));
    }
    let t = opts.sample_period_ns;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositivePeriod(t));
    }
    if opts.max_rays == 0 {
        return Err(Error::invalid("max_rays", "must be at least 1"));
    }
    if !(opts.stop_threshold_db > 0.0) {
        return Err(Error::invalid("stop_threshold_db", "must be positive"));
    }
    let input_energy: f64 = samples.iter().map(|c| c.norm_sqr()).sum();
    if input_energy == 0.0 {
        return Err(Error::AllZeroInput);
    }

    let mut residual = samples.to_vec();
    let mut found: Vec<Found> = Vec::new();
    let mut first_peak = 0.0;
    let stop_ratio = 10f64.powf(-opts.stop_threshold_db / 10.0);

    while found.len() < opts.max_rays {
        let (k, peak) = residual
            .iter()
            .map(|c| c.norm_sqr())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if found.is_empty() {
            first_peak = peak;
        } else if peak < first_peak * stop_ratio || peak <= input_energy * 1e-24 {
            break;
        }
        let delay_ns = refine_delay(&residual, k, opts);
        let pulse = pulse(residual.len(), delay_ns, opts);
        let norm: f64 = pulse.iter().map(|p| p * p).sum();
        if !(norm > 0.0) {
            break;
        }
        let gain = residual
            .iter()
            .zip(&pulse)
            .map(|(r, p)| r * p)
            .sum::<Complex64>()
            / norm;
        if gain.norm_sqr() == 0.0 {
            break;
        }
        for (r, p) in residual.iter_mut().zip(&pulse) {
            *r -= gain * p;
        }
        match found
            .iter_mut()
            .find(|f| (f.delay_ns - delay_ns).abs() < 1e-6 * t)
        {
            Some(f) => f.gain += gain,
            None => found.push(Found { delay_ns, gain }),
        }
        refine_jointly(&mut residual, &mut found, opts);
    }

    let extracted_energy = found
        .iter()
        .map(|f| f.gain.norm_sqr() * pulse_norm(residual.len(), f.delay_ns, opts))
        .sum::<f64>();

    let strongest = found
        .iter()
        .max_by(|a, b| a.gain.norm_sqr().total_cmp(&b.gain.norm_sqr()))
        .expect("at least one ray");
    let reference_delay_ns = strongest.delay_ns;
    let mut rays: Vec<Ray> = found
        .iter()
        .filter(|f| f.gain.norm() > 0.0)
        .map(|f| {
            let rel = f.delay_ns - reference_delay_ns;
            let (amp, phase) = f.gain.to_polar();
            Ray::new(rel, amp, phase)
        })
        .collect();
    rays.sort_by(|a, b| a.delay_ns.total_cmp(&b.delay_ns));
    debug_assert_eq!(
        rays.iter().filter(|r| r.kind == RayKind::Central).count(),
        1
    );

    Ok(MpcExtraction {
        rays,
        reference_delay_ns,
        input_energy,
        residual_energy: residual.iter().map(|c| c.norm_sqr()).sum(),
        extracted_energy,
    })
}

/// Cyclic re-estimation: each ray in turn is added back to the residual,
/// its delay and gain re-fit against what the other rays leave, then removed
/// again. Repeats until no delay moves by more than a micro-sample.
fn refine_jointly(residual: &mut [Complex64], found: &mut [Found], opts: &ExtractOptions) {
    if found.len() < 2 {
        return;
    }
    for _ in 0..MAX_REFINE_SWEEPS {
        let mut max_shift: f64 = 0.0;
        for f in found.iter_mut() {
            let old = pulse(residual.len(), f.delay_ns, opts);
            for (r, p) in residual.iter_mut().zip(&old) {
                *r += f.gain * p;
            }
            let delay_ns = golden_refine(residual, f.delay_ns, 0.5 * opts.sample_period_ns, opts);
            let new = pulse(residual.len(), delay_ns, opts);
            let norm: f64 = new.iter().map(|p| p * p).sum();
            let gain = if norm > 0.0 {
                residual
                    .iter()
                    .zip(&new)
                    .map(|(r, p)| r * p)
                    .sum::<Complex64>()
                    / norm
            } else {
                Complex64::new(0.0, 0.0)
            };
            for (r, p) in residual.iter_mut().zip(&new) {
                *r -= gain * p;
            }
            max_shift = max_shift.max((delay_ns - f.delay_ns).abs());
            f.delay_ns = delay_ns;
            f.gain = gain;
        }
        if max_shift < 1e-5 * opts.sample_period_ns {
            break;
        }
    }
}

fn pulse_norm(n: usize, delay_ns: f64, opts: &ExtractOptions) -> f64 {
    pulse(n, delay_ns, opts).iter().map(|p| p * p).sum()
}

fn pulse(n: usize, delay_ns: f64, opts: &ExtractOptions) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let tk = opts.t0_ns + k as f64 * opts.sample_period_ns;
            sinc((tk - delay_ns) / opts.sample_period_ns)
        })
        .collect()
}

/// Normalized matched-filter output `|⟨r, s_τ⟩|² / ‖s_τ‖²`, evaluated over
/// `SEARCH_HALF_WINDOW` samples either side of the delay.
fn matched_output(residual: &[Complex64], delay_ns: f64, opts: &ExtractOptions) -> f64 {
    let t = opts.sample_period_ns;
    let center = ((delay_ns - opts.t0_ns) / t).round();
    let lo = (center - SEARCH_HALF_WINDOW as f64).max(0.0) as usize;
    let hi =
        ((center + SEARCH_HALF_WINDOW as f64).max(-1.0) + 1.0).min(residual.len() as f64) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut norm = 0.0;
    for (k, r) in residual.iter().enumerate().take(hi).skip(lo) {
        let tk = opts.t0_ns + k as f64 * t;
        let p = sinc((tk - delay_ns) / t);
        acc += r * p;
        norm += p * p;
    }
    if norm > 0.0 {
        acc.norm_sqr() / norm
    } else {
        0.0
    }
}

fn refine_delay(residual: &[Complex64], k: usize, opts: &ExtractOptions) -> f64 {
    let t = opts.sample_period_ns;
    let y0 = residual[k].norm_sqr();
    let offset = if k > 0 && k + 1 < residual.len() {
        let ym = residual[k - 1].norm_sqr();
        let yp = residual[k + 1].norm_sqr();
        let denom = ym - 2.0 * y0 + yp;
        if denom < 0.0 {
            (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let coarse = opts.t0_ns + (k as f64 + offset) * t;
    golden_refine(residual, coarse, 0.5 * t, opts)
}

/// Golden-section search of the matched-filter output within `half_width`
/// of `start`. Returns `start` unless the search finds a strictly larger
/// output.
fn golden_refine(
    residual: &[Complex64],
    start: f64,
    half_width: f64,
    opts: &ExtractOptions,
) -> f64 {
    let start_val = matched_output(residual, start, opts);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (start - half_width, start + half_width);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = matched_output(residual, c, opts);
    let mut fd = matched_output(residual, d, opts);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = matched_output(residual, c, opts);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = matched_output(residual, d, opts);
        }
    }
    let refined = 0.5 * (a + b);
    if matched_output(residual, refined, opts) > start_val {
        refined
    } else {
        start
    }
}

/// A measured (distance, path loss) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub distance_m: f64,
    pub path_loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossFit {
    pub ple: f64,
    pub pl0_db: f64,
    /// RMS regression residual, dB.
    pub sigma_db: f64,
    pub n_samples: usize,
}

/// Least squares of path loss on `10·log10(d/d_ref)`; the slope is the PLE
/// and the RMS residual the shadowing deviation.
pub fn fit_pathloss(samples: &[PathLossSample], d_ref_m: f64) -> Result<PathLossFit> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 path-loss samples, got {}",
            samples.len()
        )));
    }
    if !(d_ref_m > 0.0) {
        return Err(Error::invalid("d_ref_m", "must be positive"));
    }
    if let Some(s) = samples.iter().find(|s| !(s.distance_m > 0.0)) {
        return Err(Error::NonPositiveDistance(s.distance_m));
    }
    let xs: Vec<f64> = samples
        .iter()
        .map(|s| 10.0 * (s.distance_m / d_ref_m).log10())
        .collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.path_loss_db).collect();
    let line = linear_fit(&xs, &ys).ok_or(Error::ZeroDistanceSpread)?;
    Ok(PathLossFit {
        ple: line.slope,
        pl0_db: line.intercept,
        sigma_db: line.rms_residual,
        n_samples: samples.len(),
    })
}

/// Fitted parameters of one side (pre- or post-cursor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideFit {
    pub k_db: f64,
    pub gamma_ns: f64,
    pub lambda_per_ns: f64,
    pub n_mean: f64,
    /// RMS residual of the log-amplitude decay fit, dB.
    pub decay_rms_db: f64,
    /// RMS gap between the empirical interarrival CDF and the fitted
    /// exponential CDF.
    pub arrival_cdf_rms: f64,
    /// Kolmogorov-Smirnov statistic of the interarrivals against the fit.
    pub arrival_ks: f64,
    pub pooled_rays: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SideOutcome {
    Fit(SideFit),
    Unfit {
        pooled_rays: usize,
        n_mean: f64,
        reason: String,
    },
}

impl SideOutcome {
    pub fn fit(&self) -> Option<&SideFit> {
        match self {
            SideOutcome::Fit(f) => Some(f),
            SideOutcome::Unfit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvFitReport {
    pub snapshots: usize,
    pub offset_ns: f64,
    pub pre: SideOutcome,
    pub post: SideOutcome,
    /// Smallest |delay| among all cursor rays, to sanity-check the offset.
    pub min_abs_delay_ns: Option<f64>,
}

impl SvFitReport {
    /// Scenario parameters when both sides were fit.
    pub fn to_scenario(&self, name: &str) -> Option<ScenarioParams> {
        let (f, b) = (self.pre.fit()?, self.post.fit()?);
        Some(ScenarioParams {
            name: name.to_string(),
            k_f_db: f.k_db,
            gamma_f_ns: f.gamma_ns,
            lambda_f_per_ns: f.lambda_per_ns,
            n_f_mean: f.n_mean,
            k_b_db: b.k_db,
            gamma_b_ns: b.gamma_ns,
            lambda_b_per_ns: b.lambda_per_ns,
            n_b_mean: b.n_mean,
            offset_ns: self.offset_ns,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Pre,
    Post,
}

impl Side {
    fn kind(self) -> RayKind {
        match self {
            Side::Pre => RayKind::PreCursor,
            Side::Post => RayKind::PostCursor,
        }
    }
}

/// Pooled normalized rays of one side: `(|τ|, a/a0)` points and the
/// interarrival times.
pub struct PooledSide {
    pub points: Vec<(f64, f64)>,
    pub interarrivals: Vec<f64>,
}

pub fn pool_side(snapshots: &[CirSnapshot], side: Side, offset_ns: f64) -> PooledSide {
    let mut points = Vec::new();
    let mut interarrivals = Vec::new();
    for snap in snapshots {
        let a0 = snap.central().amplitude;
        let mut side_rays: Vec<(f64, f64)> = snap
            .rays()
            .iter()
            .filter(|r| r.kind == side.kind())
            .map(|r| (r.delay_ns.abs(), r.amplitude / a0))
            .collect();
        side_rays.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prev = offset_ns;
        for &(tau, rel) in &side_rays {
            interarrivals.push((tau - prev).max(0.0));
            prev = tau;
            points.push((tau, rel));
        }
    }
    PooledSide {
        points,
        interarrivals,
    }
}

/// Empirical CDF of the pooled interarrivals next to the fitted exponential
/// CDF: `(interval_ns, empirical, model)`.
pub fn interarrival_cdf(interarrivals: &[f64], lambda_per_ns: f64) -> Vec<(f64, f64, f64)> {
    empirical_cdf(interarrivals)
        .into_iter()
        .map(|(x, f)| (x, f, 1.0 - (-lambda_per_ns * x).exp()))
        .collect()
}

fn fit_side(snapshots: &[CirSnapshot], side: Side, offset_ns: f64) -> SideOutcome {
    let pooled = pool_side(snapshots, side, offset_ns);
    let n = pooled.points.len();
    let n_mean = if snapshots.is_empty() {
        0.0
    } else {
        n as f64 / snapshots.len() as f64
    };
    let unfit = |reason: String| SideOutcome::Unfit {
        pooled_rays: n,
        n_mean,
        reason,
    };
    if n < MIN_POOLED_RAYS {
        return unfit(format!("{n} pooled rays, need at least {MIN_POOLED_RAYS}"));
    }
    let xs: Vec<f64> = pooled.points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pooled.points.iter().map(|p| p.1.ln()).collect();
    let Some(line) = linear_fit(&xs, &ys) else {
        return unfit("all rays share one delay".into());
    };
    if !(line.slope < 0.0) {
        return unfit(format!("amplitudes do not decay (slope {})", line.slope));
    }
    let total: f64 = pooled.interarrivals.iter().sum();
    if !(total > 0.0) {
        return unfit("interarrival times sum to zero".into());
    }
    let lambda = pooled.interarrivals.len() as f64 / total;
    let cdf = interarrival_cdf(&pooled.interarrivals, lambda);
    let arrival_cdf_rms =
        (cdf.iter().map(|(_, e, m)| (e - m).powi(2)).sum::<f64>() / cdf.len() as f64).sqrt();
    let arrival_ks = ks_statistic(&pooled.interarrivals, |x| 1.0 - (-lambda * x).exp());
    SideOutcome::Fit(SideFit {
        // ln(a(0)/a0) = −K·ln10/20
        k_db: -20.0 * line.intercept / LN_10,
        gamma_ns: -1.0 / line.slope,
        lambda_per_ns: lambda,
        n_mean,
        decay_rms_db: 20.0 * line.rms_residual / LN_10,
        arrival_cdf_rms,
        arrival_ks,
        pooled_rays: n,
    })
}

/// Fits both sides of the single-cluster model from an ensemble whose
/// snapshots are referenced to their strongest ray. The offset is taken as
/// known.
pub fn fit_sv_params(snapshots: &[CirSnapshot], offset_ns: f64) -> Result<SvFitReport> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    if !(offset_ns >= 0.0) {
        return Err(Error::invalid("offset_ns", "must be non-negative"));
    }
    let min_abs_delay_ns = snapshots
        .iter()
        .flat_map(|s| s.rays())
        .filter(|r| r.kind != RayKind::Central)
        .map(|r| r.delay_ns.abs())
        .min_by(f64::total_cmp);
    Ok(SvFitReport {
        snapshots: snapshots.len(),
        offset_ns,
        pre: fit_side(snapshots, Side::Pre, offset_ns),
        post: fit_side(snapshots, Side::Post, offset_ns),
        min_abs_delay_ns,
    })
}
