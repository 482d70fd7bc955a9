//! Linearised forward-backward problem solved mode by mode.
//!
//! `cargo run --example linear_solve`

use hughes_spectral::data::gaussian;
use hughes_spectral::diagnostics::norm_series;
use hughes_spectral::grid::{GridSpec, SpectralField};
use hughes_spectral::linear::linear_solve;
use hughes_spectral::model::ModelParams;
use hughes_spectral::nonlinear::time_grid;

fn main() -> hughes_spectral::Result<()> {
    let grid = GridSpec::new(64, 64.0)?;
    let params = ModelParams::new(1.0, 0.25, 0.0, 10.0)?;
    let psi0 = gaussian(&grid, 1e-3, 2.0, [32.0, 32.0], false)?;
    let phi_t = SpectralField::zeros(&grid);

    let times = time_grid(params.horizon, 11);
    let traj = linear_solve(&psi0, &phi_t, &times, &grid, &params)?;
    let norms = norm_series(&traj, &grid, &params)?;

    println!("{:>6} {:>12} {:>12} {:>12}", "t", "|psi|_2", "|grad phi|_2", "|psi|_inf");
    for i in 0..norms.len() {
        println!(
            "{:>6.1} {:>12.4e} {:>12.4e} {:>12.4e}",
            norms.times[i], norms.l2_psi[i], norms.l2_grad_phi[i], norms.linf_psi[i]
        );
    }
    let mean0 = traj.psi_hat[0].zero_mode();
    let mean_t = traj.psi_hat.last().unwrap().zero_mode();
    println!("mean density mode: {mean0:.6e} -> {mean_t:.6e}");
    Ok(())
}
