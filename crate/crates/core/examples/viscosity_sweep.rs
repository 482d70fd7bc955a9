//! Convergence of viscous solutions to the inviscid one as sigma decreases.
//!
//! `cargo run --release --example viscosity_sweep`

use hughes_spectral::data::{gaussian, seeded_center};
use hughes_spectral::diagnostics::{viscosity_sweep, SweepSolver};
use hughes_spectral::grid::GridSpec;
use hughes_spectral::model::ModelParams;
use hughes_spectral::nonlinear::PicardConfig;

fn main() -> hughes_spectral::Result<()> {
    let grid = GridSpec::new(32, 64.0)?;
    let params = ModelParams::new(1.0, 0.25, 0.0, 10.0)?;
    let psi0 = gaussian(&grid, 1e-3, 8.0, seeded_center(&grid, 3), false)?;
    let phi_t = gaussian(&grid, 1e-3, 8.0, seeded_center(&grid, 4), false)?;
    let config = PicardConfig {
        time_nodes: 128,
        ..PicardConfig::for_params(&params)
    };
    let sigmas = [0.2, 0.1, 0.05];

    for solver in [SweepSolver::Linear, SweepSolver::Nonlinear] {
        let report = viscosity_sweep(&psi0, &phi_t, &sigmas, &grid, &params, &config, solver)?;
        println!("{solver:?}");
        for p in &report.points {
            println!("  sigma = {:<5} difference {:.4e}", p.sigma, p.difference);
        }
        println!(
            "  ratios {:?}, monotone {}, intercept {:.2e}",
            report.ratios, report.monotone, report.intercept
        );
    }
    Ok(())
}
