//! Draws a few single-cluster snapshots for a drone hovering above a lawn.

use uavchan::seed::stream_rng;
use uavchan::{
    generate_snapshot, k_factor, rms_delay_spread, scenario_params, GeneratorConfig,
    PathLossParams, Point3, Result,
};

fn main() -> Result<()> {
    let cfg = GeneratorConfig::new(
        scenario_params("grass-lawn")?,
        PathLossParams::new(1.75, 40.0, 3.0, 4.5)?,
    );
    let tx = Point3::new(10.0, 0.0, 40.0);
    let rx = Point3::new(0.0, 0.0, 1.0);

    for i in 0..3 {
        let snap = generate_snapshot(tx, rx, &cfg, &mut stream_rng(11, i))?;
        println!(
            "snapshot {i}: {} rays, shadow {:+.2} dB, K = {:.2} dB, RMS DS = {:.1} ns",
            snap.rays().len(),
            snap.shadow_db().unwrap_or(0.0),
            k_factor(&snap)?,
            rms_delay_spread(&snap)?
        );
        for ray in snap.rays() {
            println!(
                "    {:>9.2} ns  {:.3e}  {:+.3} rad  {}",
                ray.delay_ns, ray.amplitude, ray.phase, ray.kind
            );
        }
    }
    Ok(())
}
