//! Path loss along a straight track with correlated shadowing, then the
//! decorrelation distance recovered from the simulated series.

use uavchan::pathloss::{autocorrelation, fit_decorrelation};
use uavchan::seed::stream_rng;
use uavchan::{mean_path_loss, shadowing_sequence, PathLossParams, Result};

fn main() -> Result<()> {
    let params = PathLossParams::new(1.75, 40.0, 3.0, 4.5)?;
    for d in [10.0, 20.0, 50.0, 100.0, 200.0] {
        println!("PL({d:>5.0} m) = {:.2} dB", mean_path_loss(d, &params)?);
    }

    let distances: Vec<f64> = (0..200_000).map(|i| i as f64).collect();
    let mut rng = stream_rng(7, 0);
    let series = shadowing_sequence(&distances, params.sigma_db, params.d_corr_m, &mut rng)?;

    let lags: Vec<f64> = (1..=12).map(|i| i as f64).collect();
    let acf = autocorrelation(&series, &lags)?;
    println!("\nlag (m)   E[S(d)S(d+lag)] (dB^2)");
    for e in &acf {
        if let Some(v) = e.value {
            println!("{:>7.1}   {v:>8.3}", e.lag_m);
        }
    }

    let points: Vec<(f64, f64)> = acf
        .iter()
        .filter_map(|e| e.value.map(|v| (e.lag_m, v)))
        .collect();
    let fit = fit_decorrelation(&points)?;
    println!(
        "\nfit: sigma = {:.3} dB, d_corr = {:.3} m (true 3.0 dB, 4.5 m)",
        fit.sigma_sq.sqrt(),
        fit.d_corr_m
    );
    Ok(())
}
