//! Fitting model parameters back from snapshot or sampled-CIR files, and
//! conversion of snapshot files into sampled CIRs.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{discretize, CirSnapshot, Point3, DEFAULT_OFFSET_NS};
use crate::error::{Error, Result};
use crate::estimator::{
    extract_mpcs_detailed, fit_pathloss, fit_sv_params, interarrival_cdf, pool_side,
    ExtractOptions, PathLossFit, PathLossSample, Side, SideOutcome, SvFitReport,
    DEFAULT_STOP_THRESHOLD_DB,
};
use crate::sim::format::{
    write_csv, ChannelFile, CirHeader, CirRecord, FORMAT_VERSION, REPORT_FORMAT,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    /// Overrides the offset recorded in the input header.
    pub offset_ns: Option<f64>,
    pub max_rays: usize,
    pub stop_threshold_db: f64,
    pub d_ref_m: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            offset_ns: None,
            max_rays: 32,
            stop_threshold_db: DEFAULT_STOP_THRESHOLD_DB,
            d_ref_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub rays_total: usize,
    pub mean_rays_per_record: f64,
    /// Mean residual energy over input energy.
    pub mean_residual_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format: String,
    pub version: u32,
    pub input_kind: String,
    pub records: usize,
    pub sv_fit: SvFitReport,
    pub pathloss_fit: Option<PathLossFit>,
    pub pathloss_fit_error: Option<String>,
    pub extraction: Option<ExtractionSummary>,
}

/// Report plus the snapshots it was fit from.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub snapshots: Vec<CirSnapshot>,
}

fn best_path_loss(snap: &CirSnapshot) -> f64 {
    -20.0 * snap.central().amplitude.log10()
}

pub fn analyze(file: &ChannelFile, opts: &AnalyzeOptions) -> Result<Analysis> {
    let (kind, offset, snapshots, distances, extraction) = match file {
        ChannelFile::Snapshots { header, records } => {
            let snaps: Vec<CirSnapshot> = records
                .iter()
                .map(|r| {
                    r.to_snapshot()
                        .map_err(|e| Error::InvalidSnapshot(format!("record {}: {e}", r.index)))
                })
                .collect::<Result<_>>()?;
            let distances = records
                .iter()
                .map(|r| Some(r.distance_m))
                .collect::<Vec<_>>();
            ("snapshots", Some(header.offset_ns), snaps, distances, None)
        }
        ChannelFile::Sampled { header, records } => {
            let extracted: Vec<(CirSnapshot, f64)> = records
                .par_iter()
                .map(|r| {
                    let xopts = ExtractOptions {
                        sample_period_ns: header.sample_period_ns,
                        t0_ns: r.t0_ns,
                        max_rays: opts.max_rays,
                        stop_threshold_db: opts.stop_threshold_db,
                    };
                    let ex = extract_mpcs_detailed(&r.samples(), &xopts)
                        .map_err(|e| Error::InvalidSnapshot(format!("record {}: {e}", r.index)))?;
                    let tx: Point3 = r.tx.unwrap_or_default().into();
                    let rx: Point3 = r.rx.unwrap_or_default().into();
                    let snap = CirSnapshot::new(tx, rx, ex.rays)?;
                    Ok((snap, ex.residual_energy / ex.input_energy))
                })
                .collect::<Result<_>>()?;
            let rays_total: usize = extracted.iter().map(|(s, _)| s.rays().len()).sum();
            let n = extracted.len().max(1) as f64;
            let summary = ExtractionSummary {
                rays_total,
                mean_rays_per_record: rays_total as f64 / n,
                mean_residual_fraction: extracted.iter().map(|(_, f)| f).sum::<f64>() / n,
            };
            let distances = records.iter().map(|r| r.distance_m).collect::<Vec<_>>();
            let snaps = extracted.into_iter().map(|(s, _)| s).collect();
            ("sampled", header.offset_ns, snaps, distances, Some(summary))
        }
    };
    let offset_ns = opts.offset_ns.or(offset).unwrap_or(DEFAULT_OFFSET_NS);
    let sv_fit = fit_sv_params(&snapshots, offset_ns)?;

    let pl_samples: Vec<PathLossSample> = snapshots
        .iter()
        .zip(&distances)
        .filter_map(|(s, d)| {
            d.filter(|d| *d > 0.0).map(|distance_m| PathLossSample {
                distance_m,
                path_loss_db: best_path_loss(s),
            })
        })
        .collect();
    let (pathloss_fit, pathloss_fit_error) = if pl_samples.is_empty() {
        (None, Some("no distances in input".to_string()))
    } else {
        match fit_pathloss(&pl_samples, opts.d_ref_m) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    Ok(Analysis {
        report: AnalysisReport {
            format: REPORT_FORMAT.into(),
            version: FORMAT_VERSION,
            input_kind: kind.into(),
            records: snapshots.len(),
            sv_fit,
            pathloss_fit,
            pathloss_fit_error,
            extraction,
        },
        snapshots,
    })
}

pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Writes plot data next to a report: the pooled normalized ray powers with
/// their decay fit lines, and the interarrival CDFs against the fitted
/// exponentials.
pub fn write_diagnostics(analysis: &Analysis, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let fit = &analysis.report.sv_fit;
    let mut power_rows = Vec::new();
    for (side, sign, outcome, tag) in [
        (Side::Pre, -1.0, &fit.pre, "pre"),
        (Side::Post, 1.0, &fit.post, "post"),
    ] {
        let pooled = pool_side(&analysis.snapshots, side, fit.offset_ns);
        for &(tau, rel) in &pooled.points {
            let model = outcome.fit().map_or(f64::NAN, |f| {
                -f.k_db - 20.0 * tau / (f.gamma_ns * std::f64::consts::LN_10)
            });
            power_rows.push(vec![sign * tau, 20.0 * rel.log10(), model]);
        }
        if let Some(f) = outcome.fit() {
            let rows: Vec<Vec<f64>> = interarrival_cdf(&pooled.interarrivals, f.lambda_per_ns)
                .into_iter()
                .map(|(x, e, m)| vec![x, e, m])
                .collect();
            let p = dir.join(format!("interarrival_cdf_{tag}.csv"));
            let w = std::fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
            write_csv(
                std::io::BufWriter::new(w),
                &["interval_ns", "empirical_cdf", "exp_fit_cdf"],
                &rows,
            )
            .map_err(|e| Error::io(&p, e))?;
        }
    }
    let p = dir.join("normalized_power.csv");
    let w = std::fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
    write_csv(
        std::io::BufWriter::new(w),
        &["delay_ns", "normalized_power_db", "decay_fit_db"],
        &power_rows,
    )
    .map_err(|e| Error::io(&p, e))
}

/// How snapshot rays are turned into sampled CIRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub sample_period_ns: f64,
    /// Samples kept on each side of the outermost rays.
    pub margin_samples: usize,
    /// Added to every ray delay before sampling, ns.
    pub delay_shift_ns: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            sample_period_ns: crate::channel::DEFAULT_SAMPLE_PERIOD_NS,
            margin_samples: 32,
            delay_shift_ns: 0.0,
        }
    }
}

/// Band-limited sampling of every snapshot in a snapshot file.
pub fn sample_snapshots(
    file: &ChannelFile,
    opts: &SamplingOptions,
) -> Result<(CirHeader, Vec<CirRecord>)> {
    let ChannelFile::Snapshots { header, records } = file else {
        return Err(Error::invalid("input", "expected a snapshot file"));
    };
    let t = opts.sample_period_ns;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositivePeriod(t));
    }
    let out = records
        .iter()
        .map(|r| {
            let snap = r.to_snapshot()?;
            let mut rays = snap.rays().to_vec();
            for ray in &mut rays {
                ray.delay_ns += opts.delay_shift_ns;
            }
            let lo = rays.first().map_or(0.0, |r| r.delay_ns);
            let hi = rays.last().map_or(0.0, |r| r.delay_ns);
            let m = opts.margin_samples as f64;
            let first = (lo / t).floor() - m;
            let n = ((hi / t).ceil() + m - first) as usize + 1;
            let t0_ns = first * t;
            let samples = discretize(&rays, t, n, t0_ns)?;
            Ok(CirRecord {
                index: r.index,
                position: Some(r.position),
                track_m: Some(r.track_m),
                tx: Some(r.tx),
                rx: Some(r.rx),
                distance_m: Some(r.distance_m),
                t0_ns,
                samples: samples.iter().map(|c| (c.re, c.im)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((CirHeader::new(t, Some(header.offset_ns)), out))
}

/// Short human-readable digest of a report.
pub fn describe(report: &AnalysisReport) -> String {
    let mut s = format!("{} records ({})\n", report.records, report.input_kind);
    for (tag, side) in [("pre", &report.sv_fit.pre), ("post", &report.sv_fit.post)] {
        match side {
            SideOutcome::Fit(f) => s.push_str(&format!(
                "{tag}: K={:.3} dB gamma={:.2} ns lambda={:.6} /ns N={:.4} ({} rays)\n",
                f.k_db, f.gamma_ns, f.lambda_per_ns, f.n_mean, f.pooled_rays
            )),
            SideOutcome::Unfit { reason, .. } => {
                s.push_str(&format!("{tag}: not fitted ({reason})\n"))
            }
        }
    }
    match &report.pathloss_fit {
        Some(f) => s.push_str(&format!(
            "path loss: n={:.4} PL0={:.3} dB sigma={:.3} dB\n",
            f.ple, f.pl0_db, f.sigma_db
        )),
        None => s.push_str("path loss: not fitted\n"),
    }
    s
}
