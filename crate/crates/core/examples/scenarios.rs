//! Lists the built-in scenarios and registers a custom one from TOML.

use uavchan::{Result, ScenarioRegistry};

const CUSTOM: &str = r#"
[parking-lot]
k_f_db = 9.5
gamma_f_ns = 280.0
lambda_f_per_ns = 0.008
n_f_mean = 1.9
k_b_db = 4.0
gamma_b_ns = 550.0
lambda_b_per_ns = 0.0065
n_b_mean = 5.0
offset_ns = 50.0
"#;

fn main() -> Result<()> {
    let mut registry = ScenarioRegistry::builtin();
    registry.merge_toml(CUSTOM)?;

    for name in registry.names() {
        let s = registry.get(&name)?;
        println!(
            "{name:<18} pre: K={:>4.1} dB gamma={:>3.0} ns N={:.1}   post: K={:>4.1} dB gamma={:>3.0} ns N={:.1}",
            s.k_f_db, s.gamma_f_ns, s.n_f_mean, s.k_b_db, s.gamma_b_ns, s.n_b_mean
        );
    }

    match registry.get("forest") {
        Ok(_) => unreachable!(),
        Err(e) => println!("\nlookup of an unknown name: {e}"),
    }
    Ok(())
}
