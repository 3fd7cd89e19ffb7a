//! Samples a known ray set through a 20 MHz brick-wall filter and recovers
//! the rays from the samples.

use uavchan::estimator::{extract_mpcs_detailed, ExtractOptions};
use uavchan::{discretize, Ray, Result};

fn main() -> Result<()> {
    let period = 50.0;
    let truth = vec![
        Ray::new(-180.0, 0.25, 1.1),
        Ray::central(1.0, 0.3),
        Ray::new(237.0, 0.45, -2.0),
        Ray::new(612.5, 0.2, 0.7),
    ];
    let t0 = -2000.0;
    let samples = discretize(&truth, period, 128, t0)?;

    let opts = ExtractOptions {
        t0_ns: t0,
        ..ExtractOptions::new(period)
    };
    let ex = extract_mpcs_detailed(&samples, &opts)?;

    println!("true rays:");
    for r in &truth {
        println!(
            "  {:>8.2} ns  amp {:.4}  phase {:+.4}",
            r.delay_ns, r.amplitude, r.phase
        );
    }
    println!(
        "extracted (relative to the strongest, found at {:.2} ns):",
        ex.reference_delay_ns
    );
    for r in &ex.rays {
        println!(
            "  {:>8.2} ns  amp {:.4}  phase {:+.4}",
            r.delay_ns, r.amplitude, r.phase
        );
    }
    println!(
        "residual energy {:.2e} of {:.4}",
        ex.residual_energy, ex.input_energy
    );
    Ok(())
}
