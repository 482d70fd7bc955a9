#![allow(dead_code)]

use hughes_spectral::grid::{GridSpec, RealField, SpectralField, SpectralTransform};
use hughes_spectral::model::ModelParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn params(rho_bar: f64, sigma: f64, horizon: f64) -> ModelParams {
    ModelParams::new(1.0, rho_bar, sigma, horizon).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real field with independent uniform samples in [-1, 1].
pub fn random_real(grid: &GridSpec, seed: u64) -> RealField {
    let mut r = rng(seed);
    let values = (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
    RealField::from_values(grid, values).unwrap()
}

/// Transform of a random real field with the Nyquist lines removed.
pub fn random_spectral(grid: &GridSpec, seed: u64) -> SpectralField {
    SpectralTransform::new(grid)
        .forward(&random_real(grid, seed))
        .unwrap()
        .without_nyquist(grid)
}

/// Single cosine `amp·cos(2π(kx·x + ky·y)/L)` as a spectral field.
pub fn cosine_mode(grid: &GridSpec, kx: i64, ky: i64, amp: f64) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    f.coeffs[grid.index_of(kx, ky).unwrap()] += c(0.5 * amp, 0.0);
    f.coeffs[grid.index_of(-kx, -ky).unwrap()] += c(0.5 * amp, 0.0);
    f
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `max_ξ |a − b| / max_ξ |b|` over two coefficient arrays.
pub fn field_rel_err(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    d / b.max_abs().max(f64::MIN_POSITIVE)
}

/// Fixed-seed sample of a subcritical density in (0.02, 0.48).
pub fn subcritical_rho(r: &mut ChaCha8Rng) -> f64 {
    r.gen_range(0.02..0.48)
}

/// Nonzero frequency with components in [-3, 3].
pub fn random_xi(r: &mut ChaCha8Rng) -> [f64; 2] {
    loop {
        let xi: [f64; 2] = [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)];
        if xi[0].hypot(xi[1]) > 1e-3 {
            return xi;
        }
    }
}

/// Largest ratio `(|ψ̂| + |ξ||φ̂|) / (e^{−c|ξ|t}|ψ̂₀| + e^{−c|ξ|(T−t)}|ξ||φ̂_T|)`
/// over every stored mode and time. Terms with a vanishing denominator must
/// have a vanishing numerator, else the result is infinite.
pub fn decay_bound_ratio(
    traj: &hughes_spectral::linear::LinearTrajectory,
    psi0: &SpectralField,
    phi_t: &SpectralField,
    grid: &GridSpec,
    c: f64,
    horizon: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, &t) in traj.times.iter().enumerate() {
        for idx in 0..grid.len() {
            let xi = grid.xi(idx);
            let k = xi[0].hypot(xi[1]);
            let num = traj.psi_hat[j].coeffs[idx].norm() + k * traj.phi_hat[j].coeffs[idx].norm();
            let den = (-c * k * t).exp() * psi0.coeffs[idx].norm()
                + (-c * k * (horizon - t)).exp() * k * phi_t.coeffs[idx].norm();
            let r = if den > 0.0 {
                num / den
            } else if num <= 1e-300 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Calibrate the decay-bound constant from two unit-data runs: `ψ̂₀ = 1` on
/// every mode, then `|ξ|φ̂_T = 1` on every nonzero mode. By linearity and
/// the triangle inequality the larger of the two ratios bounds every data set
/// on the same grid, parameters and times.
pub fn calibrate_decay_constant(
    grid: &GridSpec,
    params: &ModelParams,
    times: &[f64],
) -> f64 {
    use hughes_spectral::linear::linear_solve;
    let c = params.decay_constant();
    let mut unit_psi = SpectralField::zeros(grid);
    let mut unit_phi = SpectralField::zeros(grid);
    for idx in 0..grid.len() {
        if grid.mode_is_nyquist(idx) {
            continue;
        }
        unit_psi.coeffs[idx] = Complex64::new(1.0, 0.0);
        let xi = grid.xi(idx);
        if idx != 0 {
            unit_phi.coeffs[idx] = Complex64::new(1.0 / xi[0].hypot(xi[1]), 0.0);
        }
    }
    let zero = SpectralField::zeros(grid);
    let a = linear_solve(&unit_psi, &zero, times, grid, params).unwrap();
    let b = linear_solve(&zero, &unit_phi, times, grid, params).unwrap();
    decay_bound_ratio(&a, &unit_psi, &zero, grid, c, params.horizon)
        .max(decay_bound_ratio(&b, &zero, &unit_phi, grid, c, params.horizon))
}

/// Setup of the decay-rate experiment: `L = n = 512`, `T = 200`, a unit-width
/// Gaussian density bump in the middle of the domain and zero terminal
/// potential.
pub fn decay_setup(amplitude: f64) -> (GridSpec, ModelParams, SpectralField, SpectralField) {
    let grid = GridSpec::new(512, 512.0).unwrap();
    let p = params(0.25, 0.0, 200.0);
    let mid = 0.5 * grid.length();
    let psi0 = hughes_spectral::data::gaussian(&grid, amplitude, 1.0, [mid, mid], false).unwrap();
    (grid, p, psi0, SpectralField::zeros(&grid))
}

/// Norm series of the linear solution, sampled one time at a time so that
/// large grids do not hold the whole trajectory in memory.
pub fn linear_norm_series(
    psi0: &SpectralField,
    phi_t: &SpectralField,
    grid: &GridSpec,
    params: &ModelParams,
    times: &[f64],
) -> hughes_spectral::diagnostics::NormSeries {
    use hughes_spectral::diagnostics::{sample_norms, NormSeries};
    use hughes_spectral::linear::LinearSolution;
    let sol = LinearSolution::new(psi0, phi_t, grid, params).unwrap();
    let tr = SpectralTransform::new(grid);
    let mut s = NormSeries {
        times: times.to_vec(),
        ..Default::default()
    };
    for &t in times {
        let [psi, phi, _, _] = sol.sample(t);
        let r = sample_norms(&psi, &phi, &tr, params.sigma).unwrap();
        s.l2_psi.push(r[0]);
        s.l2_grad_phi.push(r[1]);
        s.linf_psi.push(r[2]);
        s.linf_grad_phi.push(r[3]);
        s.sigma_l2_hess_phi.push(r[4]);
    }
    s
}
