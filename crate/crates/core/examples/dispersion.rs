//! K-factor and RMS delay-spread statistics over an ensemble, with the
//! normal/lognormal model comparison.

use uavchan::generator::generate_ensemble;
use uavchan::metrics::{compare_fits, Metric};
use uavchan::{
    k_factor, rms_delay_spread, scenario_params, GeneratorConfig, PathLossParams, Point3, Result,
};

fn main() -> Result<()> {
    let tx = Point3::new(10.0, 0.0, 40.0);
    let rx = Point3::new(0.0, 0.0, 1.0);
    let pathloss = PathLossParams::new(1.75, 40.0, 3.0, 4.5)?;

    for name in ["office-buildings", "grass-lawn"] {
        let cfg = GeneratorConfig::new(scenario_params(name)?, pathloss);
        let snaps = generate_ensemble(tx, rx, &cfg, 5000, 2024)?;

        // single-ray snapshots have no finite K-factor
        let ks: Vec<f64> = snaps.iter().filter_map(|s| k_factor(s).ok()).collect();
        let ds: Vec<f64> = snaps.iter().map(rms_delay_spread).collect::<Result<_>>()?;

        println!(
            "{name} ({} of {} snapshots with finite K)",
            ks.len(),
            snaps.len()
        );
        for (metric, xs) in [(Metric::KFactorDb, &ks), (Metric::RmsDsNs, &ds)] {
            let st = compare_fits(metric, xs)?;
            println!(
                "  {:?}: mu = {:.2}, sigma = {:.2}, preferred {:?}{}",
                st.metric,
                st.mu,
                st.sigma,
                st.preferred,
                st.fallback.map(|f| format!(" ({f})")).unwrap_or_default()
            );
        }
    }
    Ok(())
}
