//! Small-scale dispersion statistics: K-factor, power-weighted mean delay and
//! RMS delay spread, plus normal/lognormal maximum-likelihood fits compared by
//! log-likelihood.
//!
//! The metric functions accept any ray slice (a [`CirSnapshot`] derefs via
//! `AsRef<[Ray]>`), so they also work on shifted or rescaled ray sets.
//!
//! [`CirSnapshot`]: crate::channel::CirSnapshot

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::Ray;
use crate::error::{Error, Result};

/// `10·log10(P_strongest / Σ P_other)` in dB. The strongest ray plays the
/// role of the line-of-sight path; in a valid snapshot it is the central ray.
pub fn k_factor(rays: impl AsRef<[Ray]>) -> Result<f64> {
    let rays = rays.as_ref();
    if rays.is_empty() {
        return Err(Error::EmptyRays);
    }
    if rays.len() < 2 {
        return Err(Error::InfiniteKFactor);
    }
    let (idx, _) = rays
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.power().total_cmp(&b.1.power()))
        .expect("non-empty");
    let p_los = rays[idx].power();
    let p_rest: f64 = rays
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, r)| r.power())
        .sum();
    if p_rest == 0.0 {
        return Err(Error::InfiniteKFactor);
    }
    Ok(10.0 * (p_los / p_rest).log10())
}

/// Power-weighted mean of the signed delays, ns.
pub fn mean_delay(rays: impl AsRef<[Ray]>) -> Result<f64> {
    let rays = rays.as_ref();
    if rays.is_empty() {
        return Err(Error::EmptyRays);
    }
    let total: f64 = rays.iter().map(Ray::power).sum();
    Ok(rays.iter().map(|r| r.power() * r.delay_ns).sum::<f64>() / total)
}

/// Power-weighted standard deviation of the delays about [`mean_delay`], ns.
pub fn rms_delay_spread(rays: impl AsRef<[Ray]>) -> Result<f64> {
    let rays = rays.as_ref();
    let mean = mean_delay(rays)?;
    let total: f64 = rays.iter().map(Ray::power).sum();
    let var = rays
        .iter()
        .map(|r| r.power() * (r.delay_ns - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    /// MLE standard deviation (divisor n).
    pub sigma: f64,
    pub loglik: f64,
}

fn gaussian_mle(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples", "non-finite sample"));
    }
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok((mu, sigma))
}

fn gaussian_loglik_at_mle(n: f64, sigma: f64) -> f64 {
    -0.5 * n * ((2.0 * PI * sigma * sigma).ln() + 1.0)
}

/// Maximum-likelihood normal fit.
pub fn fit_normal(samples: &[f64]) -> Result<GaussianFit> {
    let (mu, sigma) = gaussian_mle(samples)?;
    Ok(GaussianFit {
        mu,
        sigma,
        loglik: gaussian_loglik_at_mle(samples.len() as f64, sigma),
    })
}

/// Maximum-likelihood lognormal fit. `mu` and `sigma` are in the log
/// domain; `loglik` is the density of the original samples, so it includes
/// the `−Σ ln x` Jacobian term.
pub fn fit_lognormal(samples: &[f64]) -> Result<GaussianFit> {
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveSample { index, value });
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    let (mu, sigma) = gaussian_mle(&logs)?;
    let jacobian: f64 = logs.iter().sum();
    Ok(GaussianFit {
        mu,
        sigma,
        loglik: gaussian_loglik_at_mle(samples.len() as f64, sigma) - jacobian,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    KFactorDb,
    RmsDsNs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    Normal,
    Lognormal,
}

/// Fitted distribution summary for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionStats {
    pub metric: Metric,
    /// Normal-fit mean (dB or ns).
    pub mu: f64,
    /// Normal-fit standard deviation (dB or ns).
    pub sigma: f64,
    pub n_samples: usize,
    pub loglik_normal: Option<f64>,
    pub loglik_lognormal: Option<f64>,
    /// Log-domain lognormal parameters, when that fit was feasible.
    pub lognormal: Option<(f64, f64)>,
    pub preferred: Distribution,
    /// Set when only one of the two fits was feasible and won by default.
    pub fallback: Option<String>,
}

/// Runs both fits and prefers the one with the larger log-likelihood. If
/// exactly one fit is feasible it wins and the other's error is recorded in
/// `fallback`.
pub fn compare_fits(metric: Metric, samples: &[f64]) -> Result<DispersionStats> {
    let normal = fit_normal(samples);
    let lognormal = fit_lognormal(samples);
    let (preferred, fallback) = match (&normal, &lognormal) {
        (Ok(n), Ok(l)) => {
            let p = if n.loglik >= l.loglik {
                Distribution::Normal
            } else {
                Distribution::Lognormal
            };
            (p, None)
        }
        (Ok(_), Err(e)) => (
            Distribution::Normal,
            Some(format!("lognormal fit infeasible: {e}")),
        ),
        (Err(e), Ok(_)) => (
            Distribution::Lognormal,
            Some(format!("normal fit infeasible: {e}")),
        ),
        (Err(_), Err(_)) => return Err(normal.unwrap_err()),
    };
    let (mu, sigma) = match (&normal, &lognormal) {
        (Ok(n), _) => (n.mu, n.sigma),
        // normal MLE failed but the data were still summarizable
        (Err(_), _) => {
            let n = samples.len() as f64;
            let mu = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
            (mu, var.sqrt())
        }
    };
    Ok(DispersionStats {
        metric,
        mu,
        sigma,
        n_samples: samples.len(),
        loglik_normal: normal.as_ref().ok().map(|f| f.loglik),
        loglik_lognormal: lognormal.as_ref().ok().map(|f| f.loglik),
        lognormal: lognormal.as_ref().ok().map(|f| (f.mu, f.sigma)),
        preferred,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution as _, LogNormal, Normal};

    fn rays(spec: &[(f64, f64)]) -> Vec<Ray> {
        spec.iter().map(|&(d, a)| Ray::new(d, a, 0.0)).collect()
    }

    #[test]
    fn k_factor_cases() {
        let k = k_factor(rays(&[(0.0, 2f64.sqrt()), (80.0, 1.0)])).unwrap();
        assert!((k - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!((k - 3.0103).abs() < 1e-4);
        let k = k_factor(rays(&[(-60.0, 0.6), (0.0, 1.0), (90.0, 0.8)])).unwrap();
        assert!(k.abs() < 1e-12);
        assert!(matches!(
            k_factor(rays(&[(0.0, 1.0)])),
            Err(Error::InfiniteKFactor)
        ));
        assert!(matches!(k_factor(Vec::<Ray>::new()), Err(Error::EmptyRays)));
    }

    #[test]
    fn delay_cases() {
        assert_eq!(mean_delay(rays(&[(0.0, 1.0)])).unwrap(), 0.0);
        assert_eq!(rms_delay_spread(rays(&[(0.0, 1.0)])).unwrap(), 0.0);
        let eq = rays(&[(0.0, 1.0), (100.0, 1.0)]);
        assert!((mean_delay(&eq).unwrap() - 50.0).abs() < 1e-12);
        assert!((rms_delay_spread(&eq).unwrap() - 50.0).abs() < 1e-12);
        // powers 3:1 → direct evaluation: mean = 100/4, var = (3·25² + 75²)/4
        let uneq = rays(&[(0.0, 3f64.sqrt()), (100.0, 1.0)]);
        let mean = mean_delay(&uneq).unwrap();
        assert!((mean - 25.0).abs() < 1e-12);
        let oracle = ((3.0 * 25f64.powi(2) + 75f64.powi(2)) / 4.0).sqrt();
        assert!((oracle - 1875f64.sqrt()).abs() < 1e-12);
        let ds = rms_delay_spread(&uneq).unwrap();
        assert!((ds - oracle).abs() < 1e-9);
        assert!((ds - 43.301).abs() < 1e-3);
        assert!(matches!(
            mean_delay(Vec::<Ray>::new()),
            Err(Error::EmptyRays)
        ));
    }

    #[test]
    fn normal_two_point() {
        let f = fit_normal(&[-1.0, 1.0]).unwrap();
        assert_eq!((f.mu, f.sigma), (0.0, 1.0));
        let expected = -(2.0 * PI).ln() - 1.0;
        assert!((f.loglik - expected).abs() < 1e-12);
        assert!(matches!(
            fit_normal(&[2.0, 2.0, 2.0]),
            Err(Error::DegenerateSample)
        ));
        assert!(fit_normal(&[2.0]).is_err());
    }

    #[test]
    fn normal_loglik_matches_density_sum() {
        let xs = [1.3, -0.2, 4.0, 2.2, 0.7];
        let f = fit_normal(&xs).unwrap();
        let direct: f64 = xs
            .iter()
            .map(|x| {
                -0.5 * (2.0 * PI * f.sigma * f.sigma).ln()
                    - (x - f.mu).powi(2) / (2.0 * f.sigma * f.sigma)
            })
            .sum();
        assert!((f.loglik - direct).abs() < 1e-10);
    }

    #[test]
    fn lognormal_cases() {
        let e = std::f64::consts::E;
        let f = fit_lognormal(&[1.0 / e, e]).unwrap();
        assert!(f.mu.abs() < 1e-15);
        assert!((f.sigma - 1.0).abs() < 1e-15);
        // Jacobian sum ln x = 0 here, so loglik equals the log-domain normal loglik
        assert!((f.loglik - (-(2.0 * PI).ln() - 1.0)).abs() < 1e-12);
        assert!(matches!(
            fit_lognormal(&[1.0, 0.0, 3.0]),
            Err(Error::NonPositiveSample { index: 1, .. })
        ));
        assert!(matches!(
            fit_lognormal(&[-2.0, 1.0]),
            Err(Error::NonPositiveSample { .. })
        ));
    }

    #[test]
    fn lognormal_loglik_matches_density_sum() {
        let xs = [1.3, 0.2, 4.0, 2.2, 0.7];
        let f = fit_lognormal(&xs).unwrap();
        let direct: f64 = xs
            .iter()
            .map(|&x: &f64| {
                -x.ln()
                    - 0.5 * (2.0 * PI * f.sigma * f.sigma).ln()
                    - (x.ln() - f.mu).powi(2) / (2.0 * f.sigma * f.sigma)
            })
            .sum();
        assert!((f.loglik - direct).abs() < 1e-10);
    }

    #[test]
    fn normal_recovery_monte_carlo() {
        let mut rng = stream_rng(21, 0);
        let dist = Normal::new(6.15, 4.36).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        let f = fit_normal(&xs).unwrap();
        assert!((f.mu - 6.15).abs() < 0.02, "{}", f.mu);
        assert!((f.sigma - 4.36).abs() < 0.02, "{}", f.sigma);
    }

    #[test]
    fn lognormal_recovery_monte_carlo() {
        let mut rng = stream_rng(22, 0);
        let dist = LogNormal::new(5.0, 0.3).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        let f = fit_lognormal(&xs).unwrap();
        assert!((f.mu - 5.0).abs() / 5.0 < 0.01);
        assert!((f.sigma - 0.3).abs() / 0.3 < 0.01);
    }

    #[test]
    fn compare_prefers_generating_family() {
        let mut rng = stream_rng(23, 0);
        let g = Normal::new(100.0, 5.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        let st = compare_fits(Metric::RmsDsNs, &xs).unwrap();
        assert_eq!(st.preferred, Distribution::Normal);
        assert!(st.loglik_normal.unwrap() > st.loglik_lognormal.unwrap());

        let l = LogNormal::new(0.0, 1.2).unwrap();
        let ys: Vec<f64> = (0..100_000).map(|_| l.sample(&mut rng)).collect();
        let st = compare_fits(Metric::RmsDsNs, &ys).unwrap();
        assert_eq!(st.preferred, Distribution::Lognormal);
    }

    #[test]
    fn compare_two_samples_consistent() {
        let st = compare_fits(Metric::RmsDsNs, &[1.0, 2.0]).unwrap();
        let (n, l) = (st.loglik_normal.unwrap(), st.loglik_lognormal.unwrap());
        let expected = if n >= l {
            Distribution::Normal
        } else {
            Distribution::Lognormal
        };
        assert_eq!(st.preferred, expected);
        assert!(st.fallback.is_none());
    }

    #[test]
    fn compare_falls_back_when_lognormal_infeasible() {
        let st = compare_fits(Metric::KFactorDb, &[-1.0, 2.0, 3.5]).unwrap();
        assert_eq!(st.preferred, Distribution::Normal);
        assert!(st.loglik_lognormal.is_none());
        assert!(st.fallback.is_some());
        assert!(compare_fits(Metric::RmsDsNs, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn invariance_under_scale_and_shift() {
        let mut rng = stream_rng(24, 0);
        for _ in 0..200 {
            let n = rng.random_range(2..10);
            let mut rs: Vec<Ray> = (0..n)
                .map(|i| Ray::new(i as f64 * 37.0 - 100.0, rng.random_range(0.05..1.0), 0.0))
                .collect();
            rs[0].amplitude = 2.0;
            let c = rng.random_range(0.01..100.0);
            let shift = rng.random_range(-500.0..500.0);
            let scaled: Vec<Ray> = rs
                .iter()
                .map(|r| Ray {
                    amplitude: r.amplitude * c,
                    ..*r
                })
                .collect();
            let shifted: Vec<Ray> = rs
                .iter()
                .map(|r| Ray {
                    delay_ns: r.delay_ns + shift,
                    ..*r
                })
                .collect();
            let k = k_factor(&rs).unwrap();
            assert!((k_factor(&scaled).unwrap() - k).abs() < 1e-9);
            let md = mean_delay(&rs).unwrap();
            assert!((mean_delay(&scaled).unwrap() - md).abs() < 1e-9);
            assert!((mean_delay(&shifted).unwrap() - md - shift).abs() < 1e-9);
            let ds = rms_delay_spread(&rs).unwrap();
            assert!((rms_delay_spread(&scaled).unwrap() - ds).abs() < 1e-9);
            assert!((rms_delay_spread(&shifted).unwrap() - ds).abs() < 1e-7);
        }
    }
}
