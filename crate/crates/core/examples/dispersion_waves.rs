//! Planar-wave dispersion relations and their verification on a grid.
//!
//! `cargo run --example dispersion_waves`

use hughes_spectral::dispersion::{dispersion_beta0, dispersion_beta2, verify_wave, wave_threshold};
use hughes_spectral::grid::GridSpec;
use hughes_spectral::model::ModelParams;
use hughes_spectral::nonlinear::time_grid;

fn main() -> hughes_spectral::Result<()> {
    let grid = GridSpec::new(16, 2.0 * std::f64::consts::PI)?;
    let times = time_grid(10.0, 21);

    for rho_bar in [0.25, 0.75] {
        let params = ModelParams::new(1.0, rho_bar, 0.0, 10.0)?;
        let waves = dispersion_beta2(1.0, 0.0, &params)?;
        println!("beta = 2, rho_bar = {rho_bar}: threshold (b/a)^2 = {:?}", wave_threshold(&params));
        if waves.is_empty() {
            println!("  no planar waves");
        }
        for w in &waves {
            let chk = verify_wave(w, &params, &grid, &times)?;
            println!(
                "  c = {:+.7}, A/B = {:+.4}, residual {:.1e}, norm variation {:.1e}",
                w.c,
                w.amp_a / w.amp_b,
                chk.residual,
                chk.norm_variation
            );
        }
    }

    let params = ModelParams::new(1.0, 0.5, 0.0, 10.0)?;
    for (a, b) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let cs: Vec<f64> = dispersion_beta0(a, b, &params)?.iter().map(|w| w.c).collect();
        println!("beta = 0, rho_bar = 0.5, (a, b) = ({a}, {b}): c = {cs:?}");
    }
    Ok(())
}
