//! Per-mode linear algebra and the exact linear forward-backward solver.
//!
//! In Fourier variables the linearised system is `∂ₜ(ψ̂, φ̂) = A(ξ)(ψ̂, φ̂)`
//! with
//!
//! ```text
//! A(ξ) = [ i(f−2ρ̄)ξ₁ − σ|ξ|²    −ρ̄f²|ξ|²        ]
//!        [ −1/f                  i f ξ₁ + σ|ξ|²  ]
//! ```
//!
//! Writing `(ψ̂, φ̂) = P (û, v̂)` diagonalises the flow; `û` is integrated
//! forward from `t = 0` and `v̂` backward from `t = T`. The initial value of
//! `û` and the terminal value of `v̂` are fixed by a 2×2 boundary system so
//! that `ψ̂(0) = ψ̂₀` and `φ̂(T) = φ̂_T`.
//!
//! Only decaying exponentials (`e^{λ₁t}`, `e^{−λ₂(T−t)}`) are ever formed in
//! the subcritical regime.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SpectralField};
use crate::model::ModelParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Threshold on `|θ|` below which `A(ξ)` is treated as non-diagonalisable.
pub const DEGENERATE_THETA: f64 = 1e-14;
/// Relative threshold on the boundary-system determinant.
pub const RESONANCE_REL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatrix {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

impl ModeMatrix {
    pub fn trace(&self) -> Complex64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn apply(&self, x: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a11 * x[0] + self.a12 * x[1],
            self.a21 * x[0] + self.a22 * x[1],
        ]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a11.norm_sqr() + self.a12.norm_sqr() + self.a21.norm_sqr() + self.a22.norm_sqr()).sqrt()
    }
}

#[inline]
fn xi_sq(xi: [f64; 2]) -> f64 {
    xi[0] * xi[0] + xi[1] * xi[1]
}

pub fn assemble_a(xi: [f64; 2], params: &ModelParams) -> ModeMatrix {
    let f = params.f_bar();
    let rb = params.rho_bar;
    let k2 = xi_sq(xi);
    let visc = params.sigma * k2;
    ModeMatrix {
        a11: Complex64::new(-visc, (f - 2.0 * rb) * xi[0]),
        a12: Complex64::new(-rb * f * f * k2, 0.0),
        a21: Complex64::new(-1.0 / f, 0.0),
        a22: Complex64::new(visc, f * xi[0]),
    }
}

/// `θ(ξ)` (σ = 0) or `θ_σ(ξ)` (σ > 0), on the branch with `Re θ ≥ 0` and,
/// when `Re θ = 0`, `Im θ ≥ 0`.
pub fn theta(xi: [f64; 2], params: &ModelParams) -> Complex64 {
    let f = params.f_bar();
    let rb = params.rho_bar;
    let th = if params.sigma == 0.0 {
        let r = rb * (f - rb) * xi[0] * xi[0] + rb * f * xi[1] * xi[1];
        if r >= 0.0 {
            Complex64::new(2.0 * r.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 2.0 * (-r).sqrt())
        }
    } else {
        let k2 = xi_sq(xi);
        let w = Complex64::new(rb * xi[0], -params.sigma * k2);
        (2.0 * (f * rb * k2 - w * w).sqrt()).into()
    };
    if th.re < 0.0 || (th.re == 0.0 && th.im < 0.0) {
        -th
    } else {
        th
    }
}

/// Diagonalisation `A = P diag(λ₁, λ₂) P⁻¹` of one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub theta: Complex64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub p: [[Complex64; 2]; 2],
    pub p_inv: [[Complex64; 2]; 2],
}

impl EigenSystem {
    /// `(ψ̂, φ̂) = P (û, v̂)`.
    #[inline]
    pub fn to_physical(&self, u: Complex64, v: Complex64) -> [Complex64; 2] {
        [self.p[0][0] * u + self.p[0][1] * v, u + v]
    }

    /// `(û, v̂) = P⁻¹ (ψ̂, φ̂)`.
    #[inline]
    pub fn to_diagonal(&self, psi: Complex64, phi: Complex64) -> [Complex64; 2] {
        [
            self.p_inv[0][0] * psi + self.p_inv[0][1] * phi,
            self.p_inv[1][0] * psi + self.p_inv[1][1] * phi,
        ]
    }

    /// Reassemble `P Λ P⁻¹`.
    pub fn reconstruct(&self) -> ModeMatrix {
        let p = &self.p;
        let q = &self.p_inv;
        let l = [self.lambda1, self.lambda2];
        let entry = |r: usize, c: usize| p[r][0] * l[0] * q[0][c] + p[r][1] * l[1] * q[1][c];
        ModeMatrix {
            a11: entry(0, 0),
            a12: entry(0, 1),
            a21: entry(1, 0),
            a22: entry(1, 1),
        }
    }
}

pub fn eigensystem(xi: [f64; 2], params: &ModelParams) -> Result<EigenSystem> {
    if xi == [0.0, 0.0] {
        return Err(Error::DegenerateMode { xi, theta_abs: 0.0 });
    }
    let th = theta(xi, params);
    if th.norm() < DEGENERATE_THETA {
        return Err(Error::DegenerateMode {
            xi,
            theta_abs: th.norm(),
        });
    }
    let f = params.f_bar();
    let rb = params.rho_bar;
    let visc = params.sigma * xi_sq(xi);
    let drift = I * ((f - rb) * xi[0]);
    let lambda1 = drift - 0.5 * th;
    let lambda2 = drift + 0.5 * th;
    // eigenvector (p, 1) of λ: second row gives p = f(i f ξ₁ + σ|ξ|² − λ)
    let shift = Complex64::new(visc, rb * xi[0]);
    let p11 = f * (0.5 * th + shift);
    let p12 = f * (-0.5 * th + shift);
    let inv_det = 1.0 / (f * th);
    let p = [[p11, p12], [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]];
    let p_inv = [[inv_det, -p12 * inv_det], [-inv_det, p11 * inv_det]];
    Ok(EigenSystem {
        theta: th,
        lambda1,
        lambda2,
        p,
        p_inv,
    })
}

/// Solution of the per-mode boundary system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityData {
    /// `û(ξ, 0)`
    pub u0: Complex64,
    /// `v̂(ξ, T)`
    pub v_t: Complex64,
    /// Determinant of the boundary system
    /// `[[P₁₁, P₁₂ e^{−λ₂T}], [e^{λ₁T}, 1]]`.
    pub det_d: Complex64,
}

/// Solve
///
/// ```text
/// P₁₁ û₀ + P₁₂ e^{−λ₂T} v̂_T = rhs_psi
/// e^{λ₁T} û₀ + v̂_T          = rhs_phi
/// ```
///
/// by Cramer's rule. Every matrix entry is bounded, so there is nothing to
/// pivot.
pub(crate) fn boundary_solve(
    eig: &EigenSystem,
    xi: [f64; 2],
    horizon: f64,
    rhs_psi: Complex64,
    rhs_phi: Complex64,
) -> Result<CompatibilityData> {
    let m11 = eig.p[0][0];
    let m12 = eig.p[0][1] * (-eig.lambda2 * horizon).exp();
    let m21 = (eig.lambda1 * horizon).exp();
    let det = m11 - m12 * m21;
    let scale = eig.theta.norm() + xi_sq(xi).sqrt();
    if !(det.norm() >= RESONANCE_REL * scale) {
        return Err(Error::ResonantMode {
            xi,
            det_abs: det.norm(),
        });
    }
    Ok(CompatibilityData {
        u0: (rhs_psi - m12 * rhs_phi) / det,
        v_t: (m11 * rhs_phi - m21 * rhs_psi) / det,
        det_d: det,
    })
}

pub fn compatibility_solve(
    psi0_hat: Complex64,
    phi_t_hat: Complex64,
    xi: [f64; 2],
    params: &ModelParams,
) -> Result<CompatibilityData> {
    let eig = eigensystem(xi, params)?;
    boundary_solve(&eig, xi, params.horizon, psi0_hat, phi_t_hat)
}

/// Exact solution at `ξ = 0`, where the system decouples:
/// `ψ̂` is constant and `∂ₜφ̂ = −ψ̂/f`.
pub fn zero_mode_solution(
    psi0_at_0: Complex64,
    phi_t_at_0: Complex64,
    t: f64,
    params: &ModelParams,
) -> (Complex64, Complex64) {
    let phi = phi_t_at_0 + psi0_at_0 * ((params.horizon - t) / params.f_bar());
    (psi0_at_0, phi)
}

/// Per-mode eigen-data for a whole grid. Zero and Nyquist modes carry `None`.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub modes: Vec<Option<EigenSystem>>,
}

impl ModeTable {
    pub fn new(grid: &GridSpec, params: &ModelParams) -> Result<Self> {
        let modes = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                if idx == 0 || grid.mode_is_nyquist(idx) {
                    Ok(None)
                } else {
                    eigensystem(grid.xi(idx), params).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: *grid,
            params: *params,
            modes,
        })
    }
}

pub(crate) fn check_hermitian(field: &SpectralField, grid: &GridSpec, what: &str) -> Result<()> {
    field.check_grid(grid)?;
    let defect = field.hermitian_defect(grid);
    if defect > 1e-10 * field.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Data(format!(
            "{what} is not Hermitian-symmetric (defect {defect:e})"
        )));
    }
    Ok(())
}

/// Sampled solution of the linear problem.
///
/// At `ξ = 0` the diagonal coordinates are undefined; `u_hat`/`v_hat` carry the
/// raw `(ψ̂, φ̂)` there.
#[derive(Debug, Clone)]
pub struct LinearTrajectory {
    pub times: Vec<f64>,
    pub psi_hat: Vec<SpectralField>,
    pub phi_hat: Vec<SpectralField>,
    pub u_hat: Vec<SpectralField>,
    pub v_hat: Vec<SpectralField>,
}

/// Boundary data resolved on every mode of the grid.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub table: ModeTable,
    pub psi0: SpectralField,
    pub phi_t: SpectralField,
    pub u0: Vec<Complex64>,
    pub v_t: Vec<Complex64>,
}

impl LinearSolution {
    /// Nyquist modes of the data are discarded: they have no `−ξ` partner on
    /// the grid and cannot evolve as a real field.
    pub fn new(psi0: &SpectralField, phi_t: &SpectralField, grid: &GridSpec, params: &ModelParams) -> Result<Self> {
        check_hermitian(psi0, grid, "psi0")?;
        check_hermitian(phi_t, grid, "phiT")?;
        let table = ModeTable::new(grid, params)?;
        Self::with_table(table, psi0, phi_t)
    }

    pub fn with_table(table: ModeTable, psi0: &SpectralField, phi_t: &SpectralField) -> Result<Self> {
        let grid = table.grid;
        let psi0 = psi0.without_nyquist(&grid);
        let phi_t = phi_t.without_nyquist(&grid);
        let horizon = table.params.horizon;
        let pairs = (0..grid.len())
            .into_par_iter()
            .map(|idx| match &table.modes[idx] {
                Some(eig) => boundary_solve(eig, grid.xi(idx), horizon, psi0.coeffs[idx], phi_t.coeffs[idx])
                    .map(|c| (c.u0, c.v_t)),
                None => Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))),
            })
            .collect::<Result<Vec<_>>>()?;
        let (u0, v_t) = pairs.into_iter().unzip();
        Ok(Self {
            table,
            psi0,
            phi_t,
            u0,
            v_t,
        })
    }

    /// `(ψ̂, φ̂, û, v̂)` at time `t`.
    pub fn sample(&self, t: f64) -> [SpectralField; 4] {
        let grid = &self.table.grid;
        let horizon = self.table.params.horizon;
        let mut psi = SpectralField::zeros(grid);
        let mut phi = SpectralField::zeros(grid);
        let mut u = SpectralField::zeros(grid);
        let mut v = SpectralField::zeros(grid);
        for idx in 0..grid.len() {
            if let Some(eig) = &self.table.modes[idx] {
                let uu = (eig.lambda1 * t).exp() * self.u0[idx];
                let vv = (-eig.lambda2 * (horizon - t)).exp() * self.v_t[idx];
                let [a, b] = eig.to_physical(uu, vv);
                psi.coeffs[idx] = a;
                phi.coeffs[idx] = b;
                u.coeffs[idx] = uu;
                v.coeffs[idx] = vv;
            }
        }
        let (p0, f0) = zero_mode_solution(self.psi0.coeffs[0], self.phi_t.coeffs[0], t, &self.table.params);
        psi.coeffs[0] = p0;
        phi.coeffs[0] = f0;
        u.coeffs[0] = p0;
        v.coeffs[0] = f0;
        [psi, phi, u, v]
    }
}

pub fn linear_solve(
    psi0: &SpectralField,
    phi_t: &SpectralField,
    times: &[f64],
    grid: &GridSpec,
    params: &ModelParams,
) -> Result<LinearTrajectory> {
    if let Some(t) = times.iter().find(|&&t| !(0.0..=params.horizon).contains(&t)) {
        return Err(Error::InvalidParams(format!(
            "sample time {t} outside [0, {}]",
            params.horizon
        )));
    }
    let sol = LinearSolution::new(psi0, phi_t, grid, params)?;
    let samples: Vec<[SpectralField; 4]> = times.par_iter().map(|&t| sol.sample(t)).collect();
    let mut traj = LinearTrajectory {
        times: times.to_vec(),
        psi_hat: Vec::with_capacity(times.len()),
        phi_hat: Vec::with_capacity(times.len()),
        u_hat: Vec::with_capacity(times.len()),
        v_hat: Vec::with_capacity(times.len()),
    };
    for [psi, phi, u, v] in samples {
        traj.psi_hat.push(psi);
        traj.phi_hat.push(phi);
        traj.u_hat.push(u);
        traj.v_hat.push(v);
    }
    Ok(traj)
}
