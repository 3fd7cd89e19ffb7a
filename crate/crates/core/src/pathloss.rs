//! Log-distance path loss and spatially correlated lognormal shadowing.
//!
//! Shadowing `S(d)` is zero-mean Gaussian in dB with covariance
//! `σ²·exp(−ln2·Δd/d_corr)`. It is realized with a first-order Gauss-Markov
//! recursion, which reproduces that covariance exactly on arbitrary spacings.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::PathLossParams;
use crate::error::{Error, Result};
use crate::stats::{linear_fit, median};

/// Mean path loss at distance `d_m`, dB. Shadowing is not included.
pub fn mean_path_loss(d_m: f64, p: &PathLossParams) -> Result<f64> {
    if !(d_m > 0.0) || !d_m.is_finite() {
        return Err(Error::NonPositiveDistance(d_m));
    }
    Ok(p.pl0_db + 10.0 * p.ple * (d_m / p.d_ref_m).log10())
}

/// Shadow fading values along a track.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowSeries {
    distances: Vec<f64>,
    values: Vec<f64>,
}

impl ShadowSeries {
    pub fn new(distances: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if distances.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("{} values for {} distances", values.len(), distances.len()),
            ));
        }
        check_increasing(&distances)?;
        Ok(ShadowSeries { distances, values })
    }

    /// Track positions, m.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Shadow fading, dB.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_increasing(distances: &[f64]) -> Result<()> {
    for (i, d) in distances.iter().enumerate() {
        if !d.is_finite() {
            return Err(Error::NonMonotoneDistances { index: i });
        }
    }
    if let Some(i) = distances.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneDistances { index: i + 1 });
    }
    Ok(())
}

/// Correlated shadowing along `distances` (strictly increasing, m).
///
/// `S₀ ~ N(0, σ²)`, then `S_{k+1} = ρ_k·S_k + √(1−ρ_k²)·σ·w_k` with
/// `ρ_k = exp(−ln2·Δd_k/d_corr)`.
pub fn shadowing_sequence<R: Rng + ?Sized>(
    distances: &[f64],
    sigma_db: f64,
    d_corr_m: f64,
    rng: &mut R,
) -> Result<ShadowSeries> {
    check_increasing(distances)?;
    if !(sigma_db >= 0.0) || !sigma_db.is_finite() {
        return Err(Error::invalid(
            "sigma_db",
            format!("must be >= 0, got {sigma_db}"),
        ));
    }
    if !(d_corr_m > 0.0) || !d_corr_m.is_finite() {
        return Err(Error::invalid(
            "d_corr_m",
            format!("must be positive, got {d_corr_m}"),
        ));
    }
    let mut values = Vec::with_capacity(distances.len());
    let mut prev: Option<(f64, f64)> = None;
    for &d in distances {
        let w: f64 = rng.sample(StandardNormal);
        let s = match prev {
            None => sigma_db * w,
            Some((pd, ps)) => {
                let rho = (-LN_2 * (d - pd) / d_corr_m).exp();
                rho * ps + (1.0 - rho * rho).sqrt() * sigma_db * w
            }
        };
        values.push(s);
        prev = Some((d, s));
    }
    Ok(ShadowSeries {
        distances: distances.to_vec(),
        values,
    })
}

/// One lag bin of the empirical autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEstimate {
    pub lag_m: f64,
    /// Mean of `S(d)·S(d+Δd)` over the bin, `None` when no pair falls in it.
    pub value: Option<f64>,
    pub pairs: usize,
}

/// Empirical autocorrelation `E[S(d)·S(d+Δd)]`.
///
/// Each bin is centered on the requested lag with half-width equal to half
/// the median spacing of the series; both edges are inclusive. No mean is
/// subtracted.
pub fn autocorrelation(series: &ShadowSeries, lag_bins: &[f64]) -> Result<Vec<LagEstimate>> {
    if series.len() < 2 {
        return Err(Error::EmptySeries(format!(
            "need at least 2 points, got {}",
            series.len()
        )));
    }
    if let Some(&bad) = lag_bins.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::invalid(
            "lag_bins",
            format!("lags must be positive, got {bad}"),
        ));
    }
    let d = &series.distances;
    let s = &series.values;
    let spacings: Vec<f64> = d.windows(2).map(|w| w[1] - w[0]).collect();
    let half_width = 0.5 * median(&spacings);
    // slack so that separations landing exactly on an edge are not lost to rounding
    let slack = 1e-9 * half_width;

    let estimates = lag_bins
        .iter()
        .map(|&lag| {
            let lo = lag - half_width - slack;
            let hi = lag + half_width + slack;
            let mut sum = 0.0;
            let mut pairs = 0usize;
            // both window edges only move forward as i grows
            let (mut start, mut end) = (0, 0);
            for i in 0..d.len() {
                while start < d.len() && d[start] < d[i] + lo {
                    start += 1;
                }
                end = end.max(start);
                while end < d.len() && d[end] <= d[i] + hi {
                    end += 1;
                }
                for j in start.max(i + 1)..end {
                    sum += s[i] * s[j];
                    pairs += 1;
                }
            }
            LagEstimate {
                lag_m: lag,
                value: (pairs > 0).then(|| sum / pairs as f64),
                pairs,
            }
        })
        .collect();
    Ok(estimates)
}

/// Fitted exponential autocorrelation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecorrelationFit {
    /// Shadowing variance, dB².
    pub sigma_sq: f64,
    pub d_corr_m: f64,
}

/// Least-squares fit of `ln r = ln σ² − (ln2/d_corr)·Δd` over the positive
/// estimates. Needs at least three positive points spanning an octave of lag.
pub fn fit_decorrelation(estimates: &[(f64, f64)]) -> Result<DecorrelationFit> {
    if estimates.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 lag estimates, got {}",
            estimates.len()
        )));
    }
    let usable: Vec<(f64, f64)> = estimates
        .iter()
        .copied()
        .filter(|&(lag, r)| r > 0.0 && r.is_finite() && lag > 0.0)
        .collect();
    if usable.is_empty() {
        return Err(Error::AllNonPositive);
    }
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} positive lag estimates",
            usable.len()
        )));
    }
    let min_lag = usable.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_lag = usable.iter().map(|p| p.0).fold(0.0, f64::max);
    if max_lag < 2.0 * min_lag {
        return Err(Error::InsufficientData(format!(
            "lags {min_lag}..{max_lag} m span less than an octave"
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let line = linear_fit(&xs, &ys).ok_or(Error::ZeroDistanceSpread)?;
    if !(line.slope < 0.0) {
        return Err(Error::FitFailed(format!(
            "autocorrelation does not decay (slope {})",
            line.slope
        )));
    }
    Ok(DecorrelationFit {
        sigma_sq: line.intercept.exp(),
        d_corr_m: -LN_2 / line.slope,
    })
}
