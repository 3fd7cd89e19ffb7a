//! Batch simulation along a trajectory.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{CirSnapshot, ScenarioParams};
use crate::error::{Error, Result};
use crate::generator::generate_snapshot_with_shadow;
use crate::metrics::{compare_fits, k_factor, rms_delay_spread, DispersionStats, Metric};
use crate::pathloss::{
    autocorrelation, fit_decorrelation, mean_path_loss, shadowing_sequence, ShadowSeries,
};
use crate::seed::{stream_rng, SHADOW_STREAM};
use crate::sim::config::{OutputPaths, RunConfig};
use crate::sim::format::{
    write_csv, write_snapshot_file, ChannelFile, SnapshotHeader, SnapshotRecord, FORMAT_VERSION,
};
use crate::sim::trajectory::{build_trajectory, TrackPoint};
use crate::stats::{empirical_cdf, median};

/// Lags (in multiples of the median track spacing) used for the shadowing
/// autocorrelation export.
const AUTOCORR_LAGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Generate snapshots on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { parallel: true }
    }
}

/// Per-position path-loss row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionSummary {
    pub position: usize,
    pub point: TrackPoint,
    pub distance_m: f64,
    pub mean_path_loss_db: f64,
    pub shadow_db: f64,
    /// Loss of the strongest ray, dB.
    pub best_path_loss_db: f64,
    /// Loss of the summed ray power averaged over the position's snapshots, dB.
    pub all_paths_loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowFitSummary {
    pub sigma_sq_db2: f64,
    pub d_corr_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub version: u32,
    pub scenario: ScenarioParams,
    pub seed: u64,
    pub positions: usize,
    pub snapshots: usize,
    pub infinite_k_snapshots: usize,
    pub infinite_k_fraction: f64,
    pub mean_k_factor_db: Option<f64>,
    pub mean_rms_ds_ns: f64,
    pub k_factor: Option<DispersionStats>,
    pub k_factor_fit_error: Option<String>,
    pub rms_ds: Option<DispersionStats>,
    pub rms_ds_fit_error: Option<String>,
    pub shadow_fit: Option<ShadowFitSummary>,
    pub shadow_fit_error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub points: Vec<TrackPoint>,
    pub shadow: ShadowSeries,
    /// Row-major: position `p`, snapshot `j` at index `p·S + j`.
    pub snapshots: Vec<CirSnapshot>,
    /// `None` for single-ray snapshots.
    pub k_factors_db: Vec<Option<f64>>,
    pub rms_ds_ns: Vec<f64>,
    pub positions: Vec<PositionSummary>,
    /// `(lag_m, estimate_db2)` pairs of the shadowing autocorrelation.
    pub shadow_autocorr: Vec<(f64, Option<f64>)>,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn position_of(&self, index: usize) -> usize {
        index / self.config.snapshots_per_position
    }

    pub fn records(&self) -> Vec<SnapshotRecord> {
        self.snapshots
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let p = self.position_of(i);
                SnapshotRecord::from_snapshot(i as u64, p, self.points[p].track_m, s)
            })
            .collect()
    }

    /// Header for the snapshot file of this run.
    pub fn header(&self) -> SnapshotHeader {
        SnapshotHeader::new(
            &self.summary.scenario.name,
            Some(self.config.seed),
            self.summary.scenario.offset_ns,
            Some(self.config.snapshots_per_position),
        )
    }

    /// The run's snapshots as an in-memory channel file.
    pub fn channel_file(&self) -> ChannelFile {
        ChannelFile::Snapshots {
            header: self.header(),
            records: self.records(),
        }
    }
}

/// Generates everything in memory. A pure function of `config`.
pub fn simulate(config: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let gen = config.generator_config()?;
    let points = build_trajectory(&config.trajectory)?;
    let rx = config.trajectory.rx_position;
    if let Some(i) = points.iter().position(|p| p.tx.distance(&rx) == 0.0) {
        return Err(Error::invalid(
            "trajectory",
            format!("track point {i} coincides with the receiver"),
        ));
    }
    let track: Vec<f64> = points.iter().map(|p| p.track_m).collect();
    let shadow = shadowing_sequence(
        &track,
        config.pathloss.sigma_db,
        config.pathloss.d_corr_m,
        &mut stream_rng(config.seed, SHADOW_STREAM),
    )?;

    let per = config.snapshots_per_position;
    let total = points.len() * per;
    let make = |i: usize| {
        let p = i / per;
        let mut rng = stream_rng(config.seed, i as u64);
        generate_snapshot_with_shadow(points[p].tx, rx, &gen, shadow.values()[p], &mut rng)
    };
    let snapshots: Vec<CirSnapshot> = if opts.parallel {
        (0..total)
            .into_par_iter()
            .map(make)
            .collect::<Result<_>>()?
    } else {
        (0..total).map(make).collect::<Result<_>>()?
    };

    let k_factors_db: Vec<Option<f64>> = snapshots.iter().map(|s| k_factor(s).ok()).collect();
    let rms_ds_ns: Vec<f64> = snapshots
        .iter()
        .map(rms_delay_spread)
        .collect::<Result<_>>()?;

    let mut positions = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let distance_m = point.tx.distance(&rx);
        let group = &snapshots[p * per..(p + 1) * per];
        let best = group
            .iter()
            .map(|s| -20.0 * s.central().amplitude.log10())
            .sum::<f64>()
            / per as f64;
        let all = group
            .iter()
            .map(|s| -10.0 * s.rays().iter().map(|r| r.power()).sum::<f64>().log10())
            .sum::<f64>()
            / per as f64;
        positions.push(PositionSummary {
            position: p,
            point: *point,
            distance_m,
            mean_path_loss_db: mean_path_loss(distance_m, &config.pathloss)?,
            shadow_db: shadow.values()[p],
            best_path_loss_db: best,
            all_paths_loss_db: all,
        });
    }

    let (shadow_autocorr, shadow_fit) = shadow_statistics(&shadow);

    let finite_k: Vec<f64> = k_factors_db.iter().flatten().copied().collect();
    let infinite = total - finite_k.len();
    let (k_stats, k_err) = split(compare_fits(Metric::KFactorDb, &finite_k));
    let (ds_stats, ds_err) = split(compare_fits(Metric::RmsDsNs, &rms_ds_ns));
    let (shadow_fit, shadow_fit_error) = split(shadow_fit);

    let summary = RunSummary {
        format: "uavchan-summary".into(),
        version: FORMAT_VERSION,
        scenario: gen.scenario.clone(),
        seed: config.seed,
        positions: points.len(),
        snapshots: total,
        infinite_k_snapshots: infinite,
        infinite_k_fraction: infinite as f64 / total as f64,
        mean_k_factor_db: (!finite_k.is_empty())
            .then(|| finite_k.iter().sum::<f64>() / finite_k.len() as f64),
        mean_rms_ds_ns: rms_ds_ns.iter().sum::<f64>() / total as f64,
        k_factor: k_stats,
        k_factor_fit_error: k_err,
        rms_ds: ds_stats,
        rms_ds_fit_error: ds_err,
        shadow_fit,
        shadow_fit_error,
    };

    Ok(RunOutput {
        config: config.clone(),
        points,
        shadow,
        snapshots,
        k_factors_db,
        rms_ds_ns,
        positions,
        shadow_autocorr,
        summary,
    })
}

fn split<T>(r: Result<T>) -> (Option<T>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn shadow_statistics(shadow: &ShadowSeries) -> (Vec<(f64, Option<f64>)>, Result<ShadowFitSummary>) {
    if shadow.len() < 2 {
        return (
            Vec::new(),
            Err(Error::InsufficientData("fewer than 2 track points".into())),
        );
    }
    let spacings: Vec<f64> = shadow.distances().windows(2).map(|w| w[1] - w[0]).collect();
    let step = median(&spacings);
    let lags: Vec<f64> = (1..=AUTOCORR_LAGS).map(|k| k as f64 * step).collect();
    let estimates = match autocorrelation(shadow, &lags) {
        Ok(e) => e,
        Err(e) => return (Vec::new(), Err(e)),
    };
    let table: Vec<(f64, Option<f64>)> = estimates.iter().map(|e| (e.lag_m, e.value)).collect();
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter_map(|&(l, v)| v.map(|v| (l, v)))
        .collect();
    let fit = fit_decorrelation(&pts).map(|f| ShadowFitSummary {
        sigma_sq_db2: f.sigma_sq,
        d_corr_m: f.d_corr_m,
    });
    (table, fit)
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes every artifact into `paths.dir` and returns the written paths.
pub fn write_outputs(out: &RunOutput, paths: &OutputPaths) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&paths.dir).map_err(|e| Error::io(&paths.dir, e))?;
    let mut written = Vec::new();

    let p = paths.path(&paths.snapshots);
    write_snapshot_file(create(&p)?, &out.header(), &out.records())
        .map_err(|e| Error::io(&p, e))?;
    written.push(p);

    let p = paths.path(&paths.pathloss);
    let rows: Vec<Vec<f64>> = out
        .positions
        .iter()
        .map(|r| {
            vec![
                r.position as f64,
                r.point.track_m,
                r.point.tx.x,
                r.point.tx.y,
                r.point.tx.z,
                r.distance_m,
                r.mean_path_loss_db,
                r.shadow_db,
                r.best_path_loss_db,
                r.all_paths_loss_db,
            ]
        })
        .collect();
    write_csv(
        create(&p)?,
        &[
            "position",
            "track_m",
            "tx_x_m",
            "tx_y_m",
            "tx_z_m",
            "distance_m",
            "mean_path_loss_db",
            "shadow_db",
            "best_path_loss_db",
            "all_paths_loss_db",
        ],
        &rows,
    )
    .map_err(|e| Error::io(&p, e))?;
    written.push(p);

    let finite_k: Vec<f64> = out.k_factors_db.iter().flatten().copied().collect();
    for (file, column, values) in [
        (&paths.k_factor_cdf, "k_factor_db", &finite_k),
        (&paths.rms_ds_cdf, "rms_ds_ns", &out.rms_ds_ns),
    ] {
        let p = paths.path(file);
        let rows: Vec<Vec<f64>> = empirical_cdf(values)
            .into_iter()
            .map(|(x, f)| vec![x, f])
            .collect();
        write_csv(create(&p)?, &[column, "cdf"], &rows).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }

    let p = paths.path(&paths.shadow_autocorr);
    let fit = out.summary.shadow_fit;
    let rows: Vec<Vec<f64>> = out
        .shadow_autocorr
        .iter()
        .filter_map(|&(lag, v)| v.map(|v| (lag, v)))
        .map(|(lag, v)| {
            let model = fit.map_or(f64::NAN, |f| {
                f.sigma_sq_db2 * (-std::f64::consts::LN_2 * lag / f.d_corr_m).exp()
            });
            vec![lag, v, model]
        })
        .collect();
    write_csv(
        create(&p)?,
        &["lag_m", "autocorr_db2", "exp_fit_db2"],
        &rows,
    )
    .map_err(|e| Error::io(&p, e))?;
    written.push(p);

    let p = paths.path(&paths.summary);
    let mut json = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    json.push('\n');
    std::fs::write(&p, json).map_err(|e| Error::io(&p, e))?;
    written.push(p);

    Ok(written)
}

/// [`simulate`] followed by [`write_outputs`] into the configured directory.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let out = simulate(config, opts)?;
    write_outputs(&out, &config.output)?;
    Ok(out)
}
