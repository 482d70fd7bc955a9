//! Per-mode matrix, spectral gap and eigen-decomposition.
//!
//! `cargo run --example eigen_structure`

use hughes_spectral::linear::{assemble_a, eigensystem};
use hughes_spectral::model::ModelParams;

fn main() -> hughes_spectral::Result<()> {
    for (rho_bar, sigma) in [(0.25, 0.0), (0.25, 0.1), (0.75, 0.0)] {
        let params = ModelParams::new(1.0, rho_bar, sigma, 10.0)?;
        println!("rho_bar = {rho_bar}, sigma = {sigma}");
        for xi in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
            let a = assemble_a(xi, &params);
            let e = eigensystem(xi, &params)?;
            let b = e.reconstruct();
            let err = [a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22]
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            println!(
                "  xi = {xi:?}: theta = {:.6}, lambda1 = {:.6}, lambda2 = {:.6}, |A - P L P^-1| = {err:.1e}",
                e.theta, e.lambda1, e.lambda2
            );
        }
    }
    Ok(())
}
