mod common;

use approx::assert_relative_eq;
use common::{c, calibrate_decay_constant, cosine_mode, decay_bound_ratio, params, random_xi, rng, subcritical_rho};
use hughes_spectral::data::random_smooth;
use hughes_spectral::grid::{GridSpec, SpectralField, SpectralTransform};
use hughes_spectral::linear::{
    assemble_a, compatibility_solve, eigensystem, linear_solve, theta, zero_mode_solution, EigenSystem,
    LinearSolution, ModeMatrix,
};
use hughes_spectral::model::ModelParams;
use hughes_spectral::nonlinear::time_grid;
use hughes_spectral::Error;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn to_na(m: &ModeMatrix) -> Matrix2<Complex64> {
    Matrix2::new(m.a11, m.a12, m.a21, m.a22)
}

fn diff_norm(a: &ModeMatrix, b: &ModeMatrix) -> f64 {
    ((a.a11 - b.a11).norm_sqr() + (a.a12 - b.a12).norm_sqr() + (a.a21 - b.a21).norm_sqr() + (a.a22 - b.a22).norm_sqr())
        .sqrt()
}

/// Eigenvalues from a dense complex Schur decomposition.
fn oracle_eigenvalues(m: &ModeMatrix) -> [Complex64; 2] {
    let ev = to_na(m).eigenvalues().expect("2x2 Schur converges");
    [ev[0], ev[1]]
}

/// `max_i |λ_i − μ_{π(i)}|` minimised over the two pairings.
fn eigen_mismatch(eig: &EigenSystem, oracle: [Complex64; 2]) -> f64 {
    let direct = (eig.lambda1 - oracle[0]).norm().max((eig.lambda2 - oracle[1]).norm());
    let swapped = (eig.lambda1 - oracle[1]).norm().max((eig.lambda2 - oracle[0]).norm());
    direct.min(swapped)
}

const P25: fn() -> ModelParams = || params(0.25, 0.0, 10.0);

#[test]
fn assemble_at_zero_frequency() {
    for p in [P25(), params(0.6, 0.3, 1.0)] {
        let m = assemble_a([0.0, 0.0], &p);
        assert_eq!(m.a11, c(0.0, 0.0));
        assert_eq!(m.a12, c(0.0, 0.0));
        assert_eq!(m.a21, c(-1.0 / p.f_bar(), 0.0));
        assert_eq!(m.a22, c(0.0, 0.0));
    }
}

#[test]
fn assemble_inviscid_example() {
    let m = assemble_a([1.0, 0.0], &P25());
    assert_relative_eq!(m.a11.im, 0.25, epsilon = 1e-15);
    assert_eq!(m.a11.re, 0.0);
    assert_relative_eq!(m.a12.re, -0.140625, epsilon = 1e-15);
    assert_relative_eq!(m.a21.re, -4.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(m.a22.im, 0.75, epsilon = 1e-15);
}

#[test]
fn assemble_viscous_example() {
    let inv = assemble_a([1.0, 0.0], &P25());
    let m = assemble_a([1.0, 0.0], &params(0.25, 0.1, 10.0));
    assert!((m.a11 - c(-0.1, 0.25)).norm() < 1e-15);
    assert!((m.a22 - c(0.1, 0.75)).norm() < 1e-15);
    assert_eq!((m.a12, m.a21), (inv.a12, inv.a21));
}

#[test]
fn theta_examples() {
    let p = P25();
    assert_relative_eq!(theta([1.0, 0.0], &p).re, 2.0 * 0.125f64.sqrt(), epsilon = 1e-14);
    assert_relative_eq!(theta([1.0, 0.0], &p).re, 0.70710678, epsilon = 1e-8);
    assert_relative_eq!(theta([0.0, 1.0], &p).re, 2.0 * 0.1875f64.sqrt(), epsilon = 1e-14);
    assert_relative_eq!(theta([0.0, 1.0], &p).re, 0.86602540, epsilon = 1e-8);
    assert_eq!(theta([0.0, 0.0], &p), c(0.0, 0.0));
    // cross-check against the dense eigensolver: λ₂ − λ₁ = θ
    for xi in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.7]] {
        let ev = oracle_eigenvalues(&assemble_a(xi, &p));
        let gap = (ev[0] - ev[1]).norm();
        assert_relative_eq!(gap, theta(xi, &p).norm(), max_relative = 1e-12);
    }
}

#[test]
fn eigensystem_example() {
    let eig = eigensystem([1.0, 0.0], &P25()).unwrap();
    assert!((eig.lambda1 - c(-0.35355339, 0.5)).norm() < 1e-8);
    assert!((eig.lambda2 - c(0.35355339, 0.5)).norm() < 1e-8);
    let oracle = oracle_eigenvalues(&assemble_a([1.0, 0.0], &P25()));
    assert!(eigen_mismatch(&eig, oracle) < 1e-12);
}

#[test]
fn first_column_is_eigenvector_of_lambda1() {
    let p = P25();
    let eig = eigensystem([1.0, 0.0], &p).unwrap();
    let m = assemble_a([1.0, 0.0], &p);
    let v = [eig.p[0][0], eig.p[1][0]];
    let av = m.apply(v);
    for i in 0..2 {
        assert!((av[i] - eig.lambda1 * v[i]).norm() < 1e-12);
    }
    let w = [eig.p[0][1], eig.p[1][1]];
    let aw = m.apply(w);
    for i in 0..2 {
        assert!((aw[i] - eig.lambda2 * w[i]).norm() < 1e-12);
    }
}

#[test]
fn supercritical_branch_is_oscillatory() {
    let p = params(0.75, 0.0, 10.0);
    let th = theta([1.0, 1.0], &p);
    assert_eq!(th.re, 0.0);
    assert_relative_eq!(th.im * th.im, 4.0 * (0.375 - 0.1875), max_relative = 1e-14);
    let eig = eigensystem([1.0, 1.0], &p).unwrap();
    assert_eq!(eig.lambda1.re, 0.0);
    assert_eq!(eig.lambda2.re, 0.0);
    assert!(eig.lambda1.im < eig.lambda2.im);
    let oracle = oracle_eigenvalues(&assemble_a([1.0, 1.0], &p));
    assert!(eigen_mismatch(&eig, oracle) < 1e-12);
}

#[test]
fn degenerate_modes_are_rejected() {
    assert!(matches!(eigensystem([0.0, 0.0], &P25()), Err(Error::DegenerateMode { .. })));
    // ρ̄ = ρ_max/2 makes θ vanish along ξ₂ = 0
    assert!(matches!(
        eigensystem([1.0, 0.0], &params(0.5, 0.0, 10.0)),
        Err(Error::DegenerateMode { .. })
    ));
}

#[test]
fn homogeneous_boundary_data_gives_zero() {
    let d = compatibility_solve(c(0.0, 0.0), c(0.0, 0.0), [1.0, 0.0], &P25()).unwrap();
    assert_eq!((d.u0, d.v_t), (c(0.0, 0.0), c(0.0, 0.0)));
    assert!(d.det_d.norm() > 0.0);
}

/// Dense solve of the boundary system with θ and λ written out from their
/// closed forms, compared with the library, then the boundary values are
/// rebuilt from `P` and checked.
#[test]
fn compatibility_matches_dense_solver() {
    let p = P25();
    let xi = [1.0, 0.0];
    let (f, rb, t) = (p.f_bar(), p.rho_bar, p.horizon);
    let th = 2.0 * (rb * (f - rb)).sqrt();
    let l1 = c(-0.5 * th, (f - rb) * xi[0]);
    let l2 = c(0.5 * th, (f - rb) * xi[0]);
    let p11 = c(0.5 * f * th, f * rb * xi[0]);
    let p12 = c(-0.5 * f * th, f * rb * xi[0]);
    let m = Matrix2::new(p11, p12 * (-l2 * t).exp(), (l1 * t).exp(), c(1.0, 0.0));
    let sol = m.lu().solve(&Vector2::new(c(1.0, 0.0), c(0.0, 0.0))).unwrap();
    let d = compatibility_solve(c(1.0, 0.0), c(0.0, 0.0), xi, &p).unwrap();
    assert!((d.u0 - sol[0]).norm() < 1e-12 * sol[0].norm());
    assert!((d.v_t - sol[1]).norm() < 1e-12 * sol[0].norm());

    let eig = eigensystem(xi, &p).unwrap();
    let at0 = eig.to_physical(d.u0, (-eig.lambda2 * t).exp() * d.v_t);
    let at_t = eig.to_physical((eig.lambda1 * t).exp() * d.u0, d.v_t);
    assert!((at0[0] - c(1.0, 0.0)).norm() < 1e-12);
    assert!(at_t[1].norm() < 1e-12);
}

/// The first boundary row written with the corrected denominator
/// `θ² + 4ρ̄²ξ₁²` holds for the library's solution.
#[test]
fn corrected_closed_form_first_row() {
    let p = P25();
    let mut r = rng(11);
    for _ in 0..50 {
        let xi = random_xi(&mut r);
        let psi0 = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let phit = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let d = compatibility_solve(psi0, phit, xi, &p).unwrap();
        let eig = eigensystem(xi, &p).unwrap();
        let (f, rb) = (p.f_bar(), p.rho_bar);
        let th = eig.theta;
        let a = c(0.0, 2.0 * rb * xi[0]);
        let lhs = d.u0 / (th - a) - (-eig.lambda2 * p.horizon).exp() * d.v_t / (th + a);
        let rhs = 2.0 * psi0 / (f * (th * th + 4.0 * rb * rb * xi[0] * xi[0]));
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(lhs.norm()).max(1e-300));
        let row2 = (eig.lambda1 * p.horizon).exp() * d.u0 + d.v_t;
        assert!((row2 - phit).norm() <= 1e-12 * phit.norm());
    }
}

#[test]
fn long_horizon_matches_infinite_limit() {
    let xi = [1.0, 0.0];
    let a = compatibility_solve(c(1.0, 0.0), c(0.0, 0.0), xi, &params(0.25, 0.0, 200.0)).unwrap();
    let b = compatibility_solve(c(1.0, 0.0), c(0.0, 0.0), xi, &params(0.25, 0.0, 400.0)).unwrap();
    assert!((a.u0 - b.u0).norm() <= 1e-10 * b.u0.norm());
    // with T = ∞ only the decaying direction is excited: û₀ = ψ̂₀ / P₁₁
    let eig = eigensystem(xi, &P25()).unwrap();
    assert!((b.u0 - 1.0 / eig.p[0][0]).norm() <= 1e-10 * b.u0.norm());
}

#[test]
fn zero_mode_examples() {
    let p = P25();
    let (psi, phi) = zero_mode_solution(c(0.0, 0.0), c(0.7, 0.0), 3.0, &p);
    assert_eq!((psi, phi), (c(0.0, 0.0), c(0.7, 0.0)));
    let (psi, phi) = zero_mode_solution(c(1.0, 0.0), c(0.0, 0.0), 0.0, &p);
    assert_eq!(psi, c(1.0, 0.0));
    assert_relative_eq!(phi.re, 40.0 / 3.0, max_relative = 1e-15);
    let (_, phi) = zero_mode_solution(c(1.0, 0.0), c(0.3, -0.2), p.horizon, &p);
    assert_eq!(phi, c(0.3, -0.2));
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let grid = GridSpec::new(16, 32.0).unwrap();
    let z = SpectralField::zeros(&grid);
    let traj = linear_solve(&z, &z, &time_grid(10.0, 11), &grid, &P25()).unwrap();
    assert!(traj.psi_hat.iter().chain(&traj.phi_hat).all(|f| f.max_abs() == 0.0));
}

#[test]
fn samples_outside_horizon_are_rejected() {
    let grid = GridSpec::new(8, 8.0).unwrap();
    let z = SpectralField::zeros(&grid);
    assert!(matches!(
        linear_solve(&z, &z, &[0.0, 11.0], &grid, &P25()),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn single_mode_ode_residual() {
    let grid = GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap();
    for p in [P25(), params(0.25, 0.05, 10.0)] {
        let psi0 = cosine_mode(&grid, 1, 0, 1.0);
        let phit = SpectralField::zeros(&grid);
        let h = 1e-3;
        let t0 = 4.0;
        let times: Vec<f64> = (-2..=2).map(|k| t0 + k as f64 * h).collect();
        let traj = linear_solve(&psi0, &phit, &times, &grid, &p).unwrap();
        let idx = grid.index_of(1, 0).unwrap();
        let m = assemble_a(grid.xi(idx), &p);
        let s = |j: usize| traj.psi_hat[j].coeffs[idx];
        let dpsi = (-s(4) + 8.0 * s(3) - 8.0 * s(1) + s(0)) / (12.0 * h);
        let rhs = m.apply([traj.psi_hat[2].coeffs[idx], traj.phi_hat[2].coeffs[idx]])[0];
        assert!((dpsi - rhs).norm() < 1e-8, "sigma {}: {:e}", p.sigma, (dpsi - rhs).norm());
    }
}

#[test]
fn decay_bound_with_calibrated_constant() {
    let grid = GridSpec::new(32, 64.0).unwrap();
    let p = P25();
    let times = time_grid(p.horizon, 41);
    let k = calibrate_decay_constant(&grid, &p, &times);
    assert!(k.is_finite() && k >= 1.0, "calibrated K = {k}");
    for seed in 0..20u64 {
        let psi0 = random_smooth(&grid, 1.0, 8, 1000 + 2 * seed);
        let phit = random_smooth(&grid, 1.0, 8, 1001 + 2 * seed);
        let traj = linear_solve(&psi0, &phit, &times, &grid, &p).unwrap();
        let r = decay_bound_ratio(&traj, &psi0, &phit, &grid, p.decay_constant(), p.horizon);
        assert!(r <= k * (1.0 + 1e-12), "seed {seed}: ratio {r} exceeds K = {k}");
    }
}

#[test]
fn no_overflow_for_long_horizons() {
    let grid = GridSpec::new(16, 16.0).unwrap();
    let p = params(0.25, 0.0, 5000.0);
    let psi0 = random_smooth(&grid, 1.0, 6, 1);
    let phit = random_smooth(&grid, 1.0, 6, 2);
    let traj = linear_solve(&psi0, &phit, &[0.0, 2500.0, 5000.0], &grid, &p).unwrap();
    assert!(traj
        .psi_hat
        .iter()
        .chain(&traj.phi_hat)
        .all(|f| f.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())));
}

#[test]
fn non_hermitian_data_is_rejected() {
    let grid = GridSpec::new(8, 8.0).unwrap();
    let mut psi0 = SpectralField::zeros(&grid);
    psi0.coeffs[grid.index_of(1, 0).unwrap()] = c(1.0, 0.0);
    let z = SpectralField::zeros(&grid);
    assert!(matches!(LinearSolution::new(&psi0, &z, &grid, &P25()), Err(Error::Data(_))));
}

fn sigma_choice() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.05), Just(0.3)]
}

fn xi_strategy() -> impl Strategy<Value = [f64; 2]> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_filter("nonzero", |(a, b)| a.hypot(*b) > 1e-3).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn eigen_identity(xi in xi_strategy(), rb in 0.02f64..0.48, sigma in sigma_choice()) {
        let p = params(rb, sigma, 10.0);
        let a = assemble_a(xi, &p);
        let eig = eigensystem(xi, &p).unwrap();
        prop_assert!(diff_norm(&eig.reconstruct(), &a) <= 1e-12 * a.norm());
        prop_assert!(eigen_mismatch(&eig, oracle_eigenvalues(&a)) <= 1e-12 * a.norm());
    }

    #[test]
    fn trace_and_determinant(xi in xi_strategy(), rb in 0.02f64..0.48, sigma in sigma_choice()) {
        let p = params(rb, sigma, 10.0);
        let a = assemble_a(xi, &p);
        let eig = eigensystem(xi, &p).unwrap();
        let tr = eig.lambda1 + eig.lambda2;
        let det = eig.lambda1 * eig.lambda2;
        prop_assert!((tr - a.trace()).norm() <= 1e-12 * a.norm());
        prop_assert!((det - a.det()).norm() <= 1e-12 * a.norm() * a.norm());
    }

    #[test]
    fn inviscid_real_part_bounds(xi in xi_strategy(), rb in 0.02f64..0.48) {
        let p = params(rb, 0.0, 10.0);
        let eig = eigensystem(xi, &p).unwrap();
        let k = xi[0].hypot(xi[1]);
        let gap = p.decay_constant() * k;
        prop_assert_eq!(eig.theta.im, 0.0);
        prop_assert!(eig.lambda1.re <= -gap * (1.0 - 1e-12));
        prop_assert!(eig.lambda2.re >= gap * (1.0 - 1e-12));
        prop_assert!(eig.theta.re <= 2.0 * (rb * p.f_bar()).sqrt() * k * (1.0 + 1e-12));
    }

    #[test]
    fn boundary_determinant_nonzero(xi in xi_strategy(), rb in 0.02f64..0.48, sigma in sigma_choice()) {
        let d = compatibility_solve(c(1.0, 0.0), c(1.0, 0.0), xi, &params(rb, sigma, 10.0)).unwrap();
        prop_assert!(d.det_d.norm() > 0.0);
    }

    #[test]
    fn linear_boundary_reproduction(seed in any::<u64>(), rb in 0.05f64..0.45, sigma in sigma_choice()) {
        let grid = GridSpec::new(16, 20.0).unwrap();
        let p = params(rb, sigma, 10.0);
        let psi0 = random_smooth(&grid, 1.0, 7, seed);
        let phit = random_smooth(&grid, 1.0, 7, seed ^ 0x5555);
        let traj = linear_solve(&psi0, &phit, &[0.0, 5.0, 10.0], &grid, &p).unwrap();
        prop_assert!(common::field_rel_err(&traj.psi_hat[0], &psi0) <= 1e-10);
        prop_assert!(common::field_rel_err(&traj.phi_hat[2], &phit) <= 1e-10);
        // mean density is carried unchanged
        prop_assert_eq!(traj.psi_hat[1].coeffs[0], psi0.coeffs[0]);
    }

    #[test]
    fn trajectories_are_real(seed in any::<u64>()) {
        let grid = GridSpec::new(16, 20.0).unwrap();
        let p = params(0.25, 0.05, 10.0);
        let psi0 = random_smooth(&grid, 1.0, 7, seed);
        let phit = random_smooth(&grid, 1.0, 7, seed.wrapping_add(1));
        let traj = linear_solve(&psi0, &phit, &[1.3, 7.1], &grid, &p).unwrap();
        let tr = SpectralTransform::new(&grid);
        for f in traj.psi_hat.iter().chain(&traj.phi_hat) {
            let z = tr.inverse_complex(f).unwrap();
            let im = z.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            let re = z.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
            prop_assert!(im <= 1e-12 * re.max(1e-300));
        }
    }
}

/// `Re θ_σ ≥ c(|ξ| + σ|ξ|²)`: the smallest ratio over a frequency grid is
/// positive and does not shrink when the grid is widened tenfold.
#[test]
fn viscous_lower_bound() {
    let mut r = rng(5);
    for _ in 0..10 {
        let rb = subcritical_rho(&mut r);
        for sigma in [0.05, 0.3, 1.0] {
            let p = params(rb, sigma, 10.0);
            let min_ratio = |kmax: f64| {
                let mut m = f64::INFINITY;
                for i in 0..=200 {
                    for a in 0..36 {
                        let k = kmax * (i as f64 + 0.5) / 200.5;
                        let ang = a as f64 * std::f64::consts::PI / 36.0;
                        let xi = [k * ang.cos(), k * ang.sin()];
                        let th = theta(xi, &p);
                        m = m.min(th.re / (k + sigma * k * k));
                    }
                }
                m
            };
            let near = min_ratio(10.0);
            let far = min_ratio(100.0);
            assert!(near > 0.0 && far > 0.0, "rho {rb} sigma {sigma}: {near} {far}");
            assert!(far >= 0.5 * near, "rho {rb} sigma {sigma}: {near} vs {far}");
        }
    }
}
