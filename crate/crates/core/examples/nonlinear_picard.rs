//! Full perturbation system by Picard iteration on the Duhamel formulation.
//!
//! `cargo run --release --example nonlinear_picard`

use hughes_spectral::data::{gaussian, seeded_center};
use hughes_spectral::grid::GridSpec;
use hughes_spectral::model::ModelParams;
use hughes_spectral::nonlinear::{pde_residual, picard_solve, PicardConfig};
use hughes_spectral::Error;

fn main() -> hughes_spectral::Result<()> {
    let grid = GridSpec::new(32, 64.0)?;
    let params = ModelParams::new(1.0, 0.25, 0.0, 10.0)?;
    let config = PicardConfig {
        time_nodes: 161,
        ..PicardConfig::for_params(&params)
    };

    for amplitude in [1e-3, 1e-1, 1.0] {
        let psi0 = gaussian(&grid, amplitude, 4.0, seeded_center(&grid, 0), false)?;
        let phi_t = gaussian(&grid, amplitude, 4.0, seeded_center(&grid, 1), false)?;
        match picard_solve(&psi0, &phi_t, &grid, &config, &params) {
            Ok(traj) => {
                let res = pde_residual(&traj, &grid, &params, config.form)?;
                let worst = res.iter().cloned().fold(0.0, f64::max);
                println!("amplitude {amplitude:e}: converged in {} sweeps", traj.iterations());
                for (k, d) in traj.iteration_report.iter().enumerate() {
                    println!("  sweep {:>2}: distance {d:.3e}", k + 1);
                }
                println!("  max interior PDE residual {worst:.2e}");
            }
            Err(e @ Error::NoContraction { .. }) => println!("amplitude {amplitude:e}: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
