//! Spectral gap and regime across background densities.
//!
//! `cargo run --example stability_map`

use hughes_spectral::diagnostics::{direction_samples, stability_map};
use hughes_spectral::model::ModelParams;

fn main() -> hughes_spectral::Result<()> {
    let template = ModelParams::new(1.0, 0.25, 0.0, 10.0)?;
    let rhos: Vec<f64> = (1..20).map(|i| 0.05 * i as f64).collect();
    let rows = stability_map(&rhos, &direction_samples(180), &template)?;
    println!("{:>8} {:>10} {:>15} {:>12}", "rho_bar", "gap", "regime", "threshold");
    for r in rows {
        let threshold = r.wave_threshold.map_or("-".to_string(), |t| format!("{t:.4}"));
        println!("{:>8.2} {:>10.5} {:>15} {:>12}", r.rho_bar, r.gap, format!("{:?}", r.regime), threshold);
    }
    Ok(())
}
