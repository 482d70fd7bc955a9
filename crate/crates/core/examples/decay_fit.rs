//! Algebraic decay of the linear solution and a log-log fit of its rate.
//!
//! Uses a 512 x 512 grid with `L = 512` and `T = 200`; the norms are sampled
//! one time at a time.
//!
//! `cargo run --release --example decay_fit`

use hughes_spectral::data::gaussian;
use hughes_spectral::diagnostics::{default_window, fit_decay, sample_norms, DecayLaw};
use hughes_spectral::grid::{GridSpec, SpectralField, SpectralTransform};
use hughes_spectral::linear::LinearSolution;
use hughes_spectral::model::ModelParams;
use hughes_spectral::nonlinear::time_grid;

fn main() -> hughes_spectral::Result<()> {
    let grid = GridSpec::new(512, 512.0)?;
    let params = ModelParams::new(1.0, 0.25, 0.0, 200.0)?;
    let psi0 = gaussian(&grid, 1e-3, 1.0, [256.0, 256.0], false)?;
    let phi_t = SpectralField::zeros(&grid);

    let solution = LinearSolution::new(&psi0, &phi_t, &grid, &params)?;
    let transform = SpectralTransform::new(&grid);
    let times = time_grid(params.horizon, 101);
    let (mut l2, mut linf) = (Vec::new(), Vec::new());
    for &t in &times {
        let [psi, phi, _, _] = solution.sample(t);
        let n = sample_norms(&psi, &phi, &transform, params.sigma)?;
        l2.push(n[0] + n[1]);
        linf.push(n[2] + n[3]);
    }

    let window = default_window(params.horizon);
    let fit_l2 = fit_decay(&times, &l2, DecayLaw::Inverse, window, params.horizon)?;
    let fit_linf = fit_decay(&times, &linf, DecayLaw::InverseSquare, window, params.horizon)?;
    println!("window {window:?}, {} samples", fit_l2.samples);
    println!("L2   slope {:+.3} (target -1)", fit_l2.slope);
    println!("Linf slope {:+.3} (target -2)", fit_linf.slope);
    Ok(())
}
