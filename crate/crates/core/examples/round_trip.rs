//! Simulates a measurement flight from a config file, then estimates the
//! channel parameters back from the generated snapshots.
//!
//! ```text
//! cargo run --release --example round_trip -- crates/core/examples/configs/office_buildings_vertical.toml
//! ```

use std::path::PathBuf;

use uavchan::sim::analyze::{analyze, describe, AnalyzeOptions};
use uavchan::sim::config::RunConfig;
use uavchan::sim::run::{simulate, RunOptions};
use uavchan::Result;

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("examples/configs/office_buildings_vertical.toml")
        });
    let config = RunConfig::load(&path)?;
    let out = simulate(&config, &RunOptions::default())?;
    let s = &out.summary;
    println!(
        "{}: {} positions, {} snapshots, mean K {:.2} dB, mean RMS DS {:.1} ns",
        s.scenario.name,
        s.positions,
        s.snapshots,
        s.mean_k_factor_db.unwrap_or(f64::NAN),
        s.mean_rms_ds_ns
    );

    let analysis = analyze(&out.channel_file(), &AnalyzeOptions::default())?;
    println!("\nrecovered:\n{}", describe(&analysis.report));
    Ok(())
}
