//! Nonlinear forward-backward solver.
//!
//! The perturbation system is written as `∂ₜ(ψ̂, φ̂) = A(ξ)(ψ̂, φ̂) + (N̂L₁, N̂L₂)`.
//! In the eigenbasis of `A(ξ)` this becomes two scalar equations per mode,
//!
//! ```text
//! û(t) = e^{λ₁t} û₀ + ∫₀ᵗ e^{λ₁(t−s)} g₁(s) ds
//! v̂(t) = e^{−λ₂(T−t)} v̂_T − ∫ₜᵀ e^{λ₂(t−s)} g₂(s) ds
//! ```
//!
//! with `g = P⁻¹ (N̂L₁, N̂L₂)`. A Picard sweep evaluates the nonlinear terms on
//! the current iterate, integrates both Duhamel integrals with an exponential
//! trapezoid rule, re-solves the per-mode boundary system and rebuilds the
//! state. Sweeps work in place so that memory stays at four spectral fields
//! per time node.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, SpectralField, SpectralTransform};
use crate::linear::{assemble_a, boundary_solve, check_hermitian, EigenSystem, LinearSolution, ModeTable};
use crate::model::ModelParams;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Coefficient of the `ψ²` term in the potential equation.
///
/// `Published` keeps `1/(2f)` as printed with the perturbation system;
/// `Expanded` uses `1/(2f²)`, which is what substituting `ρ = ρ̄ + ψ`,
/// `Φ = x/f + φ` into the Hamilton-Jacobi equation produces. All other terms
/// agree between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearForm {
    #[default]
    Published,
    Expanded,
}

/// How the boundary data enter each sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Re-solve the boundary system with the nonlinear integrals included,
    /// so `ψ(0) = ψ₀` and `φ(T) = φ_T` hold for every iterate.
    #[default]
    Exact,
    /// Keep `û₀`, `v̂_T` from the linear problem and only add the integrals.
    Paper,
}

#[derive(Debug, Clone, Copy)]
struct Coefficients {
    f: f64,
    inv_f: f64,
    alpha: f64,
    a: f64,
    b: f64,
    kappa: f64,
}

impl Coefficients {
    fn new(params: &ModelParams, form: NonlinearForm) -> Self {
        let f = params.f_bar();
        let rb = params.rho_bar;
        Self {
            f,
            inv_f: 1.0 / f,
            alpha: rb / f - 2.0,
            a: f * f - 2.0 * f * rb,
            b: rb - 2.0 * f,
            kappa: match form {
                NonlinearForm::Published => 0.5 / f,
                NonlinearForm::Expanded => 0.5 / (f * f),
            },
        }
    }
}

/// Pseudo-spectral evaluator of `(N̂L₁, N̂L₂)`.
///
/// With `s = ψ²`, `p = ψ∇φ`, `g = |∇φ|²` and `Q = aψ + bψ² + ψ³`:
///
/// ```text
/// NL₁ = ∂ₓ(α s + ψ³/f + Q φₓ) + ∂ᵧ(Q φᵧ)
/// NL₂ = ½f² g + ½ s g − f ψ g + κ s + s φₓ/f − 2 pₓ
/// ```
///
/// Quadratic products are formed first and truncated; every higher power is
/// then a single product of two truncated fields, so each stage is alias-free
/// under the 3/2 rule.
#[derive(Debug, Clone)]
pub struct NonlinearEvaluator {
    transform: SpectralTransform,
    coef: Coefficients,
}

impl NonlinearEvaluator {
    pub fn new(grid: &GridSpec, params: &ModelParams, form: NonlinearForm) -> Self {
        Self {
            transform: SpectralTransform::new(grid),
            coef: Coefficients::new(params, form),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.transform.grid()
    }

    /// Nonlinear terms from spectral `ψ̂`, `φ̂`.
    pub fn evaluate(&self, psi: &SpectralField, phi: &SpectralField) -> (SpectralField, SpectralField) {
        let grid = *self.grid();
        let gx = phi.map_modes(&grid, |xi| I * xi[0]);
        let gy = phi.map_modes(&grid, |xi| I * xi[1]);
        self.evaluate_gradient(psi, &gx, &gy)
    }

    /// Nonlinear terms from spectral `ψ̂` and the two components of `∇̂φ`.
    pub fn evaluate_gradient(
        &self,
        psi: &SpectralField,
        gx: &SpectralField,
        gy: &SpectralField,
    ) -> (SpectralField, SpectralField) {
        let tr = &self.transform;
        let c = self.coef;
        let zero = SpectralField::zeros(tr.grid());

        let (psi_p, gx_p) = tr.synthesize_padded_pair(psi, gx);
        let (gy_p, _) = tr.synthesize_padded_pair(gy, &zero);

        let len = psi_p.len();
        let mut w1 = vec![0.0; len];
        let mut w2 = vec![0.0; len];
        for k in 0..len {
            w1[k] = psi_p[k] * psi_p[k];
            w2[k] = gx_p[k] * gx_p[k] + gy_p[k] * gy_p[k];
        }
        let (s_hat, g_hat) = tr.analyze_padded_pair(&w1, &w2);
        for k in 0..len {
            w1[k] = psi_p[k] * gx_p[k];
            w2[k] = psi_p[k] * gy_p[k];
        }
        let (px_hat, py_hat) = tr.analyze_padded_pair(&w1, &w2);

        let (s, g) = tr.synthesize_padded_pair(&s_hat, &g_hat);
        let (px, py) = tr.synthesize_padded_pair(&px_hat, &py_hat);

        let mut w3 = vec![0.0; len];
        for k in 0..len {
            let (ps, gxk, gyk) = (psi_p[k], gx_p[k], gy_p[k]);
            w1[k] = c.alpha * s[k] + c.inv_f * s[k] * ps + c.a * px[k] + c.b * s[k] * gxk + s[k] * px[k];
            w2[k] = c.a * py[k] + c.b * s[k] * gyk + s[k] * py[k];
            w3[k] = 0.5 * c.f * c.f * g[k] + 0.5 * s[k] * g[k] - c.f * ps * g[k] + c.kappa * s[k]
                + c.inv_f * s[k] * gxk
                - 2.0 * px[k];
        }
        let (fx_hat, fy_hat) = tr.analyze_padded_pair(&w1, &w2);
        let (nl2, _) = tr.analyze_padded_pair(&w3, &vec![0.0; len]);

        let grid = *tr.grid();
        let mut nl1 = SpectralField::zeros(&grid);
        for idx in 1..grid.len() {
            let xi = grid.xi(idx);
            nl1.coeffs[idx] = I * (xi[0] * fx_hat.coeffs[idx] + xi[1] * fy_hat.coeffs[idx]);
        }
        (nl1, nl2)
    }
}

fn physical_inputs(
    psi: &RealField,
    grad_phi: [&RealField; 2],
    grid: &GridSpec,
) -> Result<(SpectralTransform, [SpectralField; 3])> {
    let tr = SpectralTransform::new(grid);
    let p = tr.forward(psi)?;
    let gx = tr.forward(grad_phi[0])?;
    let gy = tr.forward(grad_phi[1])?;
    Ok((tr, [p, gx, gy]))
}

/// `N̂L₁` from physical `ψ` and `∇φ`.
pub fn nl1(
    psi: &RealField,
    grad_phi: [&RealField; 2],
    grid: &GridSpec,
    params: &ModelParams,
) -> Result<SpectralField> {
    let (_, [p, gx, gy]) = physical_inputs(psi, grad_phi, grid)?;
    let ev = NonlinearEvaluator::new(grid, params, NonlinearForm::Published);
    Ok(ev.evaluate_gradient(&p, &gx, &gy).0)
}

/// `N̂L₂` from physical `ψ` and `∇φ`.
pub fn nl2(
    psi: &RealField,
    grad_phi: [&RealField; 2],
    grid: &GridSpec,
    params: &ModelParams,
    form: NonlinearForm,
) -> Result<SpectralField> {
    let (_, [p, gx, gy]) = physical_inputs(psi, grad_phi, grid)?;
    let ev = NonlinearEvaluator::new(grid, params, form);
    Ok(ev.evaluate_gradient(&p, &gx, &gy).1)
}

/// Nonlinear terms sampled along a trajectory.
#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    pub nl1_hat: Vec<SpectralField>,
    pub nl2_hat: Vec<SpectralField>,
}

pub fn nonlinear_terms(traj: &StateTrajectory, evaluator: &NonlinearEvaluator) -> NonlinearTerms {
    let (nl1_hat, nl2_hat) = traj
        .psi_hat
        .par_iter()
        .zip(&traj.phi_hat)
        .map(|(p, f)| evaluator.evaluate(p, f))
        .unzip();
    NonlinearTerms { nl1_hat, nl2_hat }
}

// ---------------------------------------------------------------------------
// Exponential trapezoid quadrature

/// `φ₁(z) = (eᶻ − 1)/z`, `φ₂(z) = (eᶻ − 1 − z)/z²`.
pub fn phi_functions(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 1.0 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut p1 = ZERO;
        let mut p2 = ZERO;
        // term = z^k / k!
        for k in 0..28 {
            let kk = k as f64;
            p1 += term / (kk + 1.0);
            p2 += term / ((kk + 1.0) * (kk + 2.0));
            term *= z / (kk + 1.0);
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

/// One step of `y' = λy + g` over a step `h` with `g` linear in between:
/// `y_new = decay·y_old + w_far·g_far + w_near·g_near`, where "near" is the
/// endpoint being computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpStep {
    pub decay: Complex64,
    pub w_far: Complex64,
    pub w_near: Complex64,
}

impl ExpStep {
    /// `rate` must have non-positive real part for the recursion to be stable.
    pub fn new(rate: Complex64, h: f64) -> Self {
        let z = rate * h;
        let (p1, p2) = phi_functions(z);
        Self {
            decay: z.exp(),
            w_far: h * (p1 - p2),
            w_near: h * p2,
        }
    }
}

/// `I(t_j) = ∫₀^{t_j} e^{λ(t_j−s)} g(s) ds` on a uniform grid of step `h`.
pub fn forward_duhamel(lambda: Complex64, h: f64, g: &[Complex64]) -> Vec<Complex64> {
    let st = ExpStep::new(lambda, h);
    let mut out = vec![ZERO; g.len()];
    for j in 1..g.len() {
        out[j] = st.decay * out[j - 1] + st.w_far * g[j - 1] + st.w_near * g[j];
    }
    out
}

/// `J(t_j) = ∫_{t_j}^T e^{λ(t_j−s)} g(s) ds` on a uniform grid ending at `T`.
pub fn backward_duhamel(lambda: Complex64, h: f64, g: &[Complex64]) -> Vec<Complex64> {
    let st = ExpStep::new(-lambda, h);
    let m = g.len();
    let mut out = vec![ZERO; m];
    for j in (0..m.saturating_sub(1)).rev() {
        out[j] = st.decay * out[j + 1] + st.w_far * g[j + 1] + st.w_near * g[j];
    }
    out
}

// ---------------------------------------------------------------------------
// Configuration and results

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardConfig {
    pub time_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub norm_order: f64,
    pub norm_c: f64,
    pub boundary_mode: BoundaryMode,
    pub form: NonlinearForm,
}

impl PicardConfig {
    /// Defaults: `M = max(128, ⌈16T⌉)`, `tol = 1e−10`, 50 sweeps, `k = 3`,
    /// `c = ½√(ρ̄(f−ρ̄))`.
    pub fn for_params(params: &ModelParams) -> Self {
        Self {
            time_nodes: default_time_nodes(params.horizon),
            tol: 1e-10,
            max_iter: 50,
            norm_order: 3.0,
            norm_c: params.default_norm_c(),
            boundary_mode: BoundaryMode::Exact,
            form: NonlinearForm::Published,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_nodes < 16 {
            return Err(Error::InvalidParams(format!(
                "time_nodes must be at least 16, got {}",
                self.time_nodes
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        if !(self.norm_order > 2.0) {
            return Err(Error::InvalidParams(format!(
                "norm order k must exceed 2, got {}",
                self.norm_order
            )));
        }
        if !(self.norm_c > 0.0 && self.norm_c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "norm constant c must be positive, got {}",
                self.norm_c
            )));
        }
        Ok(())
    }
}

pub fn default_time_nodes(horizon: f64) -> usize {
    ((16.0 * horizon).ceil() as usize).max(128)
}

/// Uniform nodes `t_j = jT/(M−1)`.
pub fn time_grid(horizon: f64, nodes: usize) -> Vec<f64> {
    let last = (nodes - 1) as f64;
    (0..nodes)
        .map(|j| if j + 1 == nodes { horizon } else { horizon * j as f64 / last })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub psi_hat: Vec<SpectralField>,
    pub phi_hat: Vec<SpectralField>,
    /// Weighted distance between successive iterates, one entry per sweep.
    pub iteration_report: Vec<f64>,
}

impl StateTrajectory {
    pub fn iterations(&self) -> usize {
        self.iteration_report.len()
    }

    /// Diagonal coordinates `(û, v̂)` at node `j`; raw `(ψ̂, φ̂)` at `ξ = 0`.
    pub fn diagonal_at(&self, j: usize, table: &ModeTable) -> (SpectralField, SpectralField) {
        let grid = &table.grid;
        let mut u = SpectralField::zeros(grid);
        let mut v = SpectralField::zeros(grid);
        for idx in 0..grid.len() {
            let (p, f) = (self.psi_hat[j].coeffs[idx], self.phi_hat[j].coeffs[idx]);
            match &table.modes[idx] {
                Some(e) => {
                    let [a, b] = e.to_diagonal(p, f);
                    u.coeffs[idx] = a;
                    v.coeffs[idx] = b;
                }
                None if idx == 0 => {
                    u.coeffs[0] = p;
                    v.coeffs[0] = f;
                }
                None => {}
            }
        }
        (u, v)
    }
}

// ---------------------------------------------------------------------------
// Weighted norms

#[inline]
fn norm_weight(kabs: f64, t: f64, k: f64, c: f64, horizon: f64) -> f64 {
    (1.0 + kabs).powf(k) / ((-c * kabs * t).exp() + (-c * kabs * (horizon - t)).exp())
}

/// `max_{t, ξ} (1+|ξ|)^k |f̂(ξ,t)| / (e^{−c|ξ|t} + e^{−c|ξ|(T−t)})`.
pub fn weighted_norm(
    field: &[SpectralField],
    times: &[f64],
    grid: &GridSpec,
    k: f64,
    c: f64,
    horizon: f64,
) -> f64 {
    field
        .par_iter()
        .zip(times)
        .map(|(f, &t)| {
            f.coeffs
                .iter()
                .enumerate()
                .map(|(idx, z)| {
                    let xi = grid.xi(idx);
                    norm_weight(xi[0].hypot(xi[1]), t, k, c, horizon) * z.norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Weighted size of the data: `‖(1+|ξ|)^k ψ̂₀‖_∞ + ‖(1+|ξ|)^k |ξ| φ̂_T‖_∞`.
pub fn data_weight_norm(psi0: &SpectralField, phi_t: &SpectralField, grid: &GridSpec, k: f64) -> f64 {
    let mut a: f64 = 0.0;
    let mut b: f64 = 0.0;
    for idx in 0..grid.len() {
        let xi = grid.xi(idx);
        let kabs = xi[0].hypot(xi[1]);
        let w = (1.0 + kabs).powf(k);
        a = a.max(w * psi0.coeffs[idx].norm());
        b = b.max(w * kabs * phi_t.coeffs[idx].norm());
    }
    a + b
}

// ---------------------------------------------------------------------------
// Picard solver

#[derive(Debug, Clone, Copy)]
struct ModeSteps {
    fwd: ExpStep,
    bwd: ExpStep,
}

/// Everything a sweep needs that does not change between sweeps.
#[derive(Debug)]
pub struct PicardSolver {
    grid: GridSpec,
    params: ModelParams,
    config: PicardConfig,
    table: ModeTable,
    steps: Vec<ModeSteps>,
    evaluator: NonlinearEvaluator,
    psi0: SpectralField,
    phi_t: SpectralField,
    linear: LinearSolution,
    times: Vec<f64>,
    h: f64,
}

impl PicardSolver {
    pub fn new(
        psi0: &SpectralField,
        phi_t: &SpectralField,
        grid: &GridSpec,
        params: &ModelParams,
        config: &PicardConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_hermitian(psi0, grid, "psi0")?;
        check_hermitian(phi_t, grid, "phiT")?;
        let table = ModeTable::new(grid, params)?;
        let linear = LinearSolution::with_table(table.clone(), psi0, phi_t)?;
        let times = time_grid(params.horizon, config.time_nodes);
        let h = params.horizon / (config.time_nodes - 1) as f64;
        let zero_step = ModeSteps {
            fwd: ExpStep::new(ZERO, h),
            bwd: ExpStep::new(ZERO, h),
        };
        let steps = table
            .modes
            .par_iter()
            .map(|m| match m {
                Some(e) => ModeSteps {
                    fwd: ExpStep::new(e.lambda1, h),
                    bwd: ExpStep::new(-e.lambda2, h),
                },
                None => zero_step,
            })
            .collect();
        Ok(Self {
            grid: *grid,
            params: *params,
            config: *config,
            table,
            steps,
            evaluator: NonlinearEvaluator::new(grid, params, config.form),
            psi0: linear.psi0.clone(),
            phi_t: linear.phi_t.clone(),
            linear,
            times,
            h,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    pub fn evaluator(&self) -> &NonlinearEvaluator {
        &self.evaluator
    }

    /// Linear solution sampled on the time nodes: the first Picard iterate.
    pub fn linear_trajectory(&self) -> StateTrajectory {
        let (psi_hat, phi_hat) = self
            .times
            .par_iter()
            .map(|&t| {
                let [p, f, _, _] = self.linear.sample(t);
                (p, f)
            })
            .unzip();
        StateTrajectory {
            times: self.times.clone(),
            psi_hat,
            phi_hat,
            iteration_report: Vec::new(),
        }
    }

    fn distance_weight(&self, idx: usize, t: f64) -> f64 {
        let xi = self.grid.xi(idx);
        norm_weight(
            xi[0].hypot(xi[1]),
            t,
            self.config.norm_order,
            self.config.norm_c,
            self.params.horizon,
        )
    }

    /// One Duhamel sweep applied in place to `(psi, phi)`. `g1`, `g2` are
    /// scratch storage of the same shape. Returns the weighted distance
    /// between the old and new iterate, relative to the new one.
    pub fn sweep(
        &self,
        psi: &mut [SpectralField],
        phi: &mut [SpectralField],
        g1: &mut [SpectralField],
        g2: &mut [SpectralField],
    ) -> Result<f64> {
        let m = self.times.len();
        let len = self.grid.len();
        let inv_f = 1.0 / self.params.f_bar();

        // sources in diagonal coordinates
        psi.par_iter()
            .zip(phi.par_iter())
            .zip(g1.par_iter_mut().zip(g2.par_iter_mut()))
            .for_each(|((p, f), (a, b))| {
                let (n1, n2) = self.evaluator.evaluate(p, f);
                for idx in 0..len {
                    match &self.table.modes[idx] {
                        Some(e) => {
                            let [x, y] = e.to_diagonal(n1.coeffs[idx], n2.coeffs[idx]);
                            a.coeffs[idx] = x;
                            b.coeffs[idx] = y;
                        }
                        None => {
                            a.coeffs[idx] = ZERO;
                            b.coeffs[idx] = ZERO;
                        }
                    }
                }
                // ξ = 0: ∂ₜψ̂ = N̂L₁(0) = 0, ∂ₜφ̂ = −ψ̂/f + N̂L₂(0)
                a.coeffs[0] = n1.coeffs[0];
                b.coeffs[0] = n2.coeffs[0] - p.coeffs[0] * inv_f;
            });

        // forward integrals overwrite g1 with I(t_j)
        let mut prev: Vec<Complex64> = g1[0].coeffs.clone();
        g1[0].coeffs.iter_mut().for_each(|z| *z = ZERO);
        for j in 1..m {
            let (done, rest) = g1.split_at_mut(j);
            let last = &done[j - 1].coeffs;
            rest[0]
                .coeffs
                .par_iter_mut()
                .zip(prev.par_iter_mut())
                .zip(last.par_iter())
                .zip(self.steps.par_iter())
                .for_each(|(((cur, old_g), &acc), st)| {
                    let g_new = *cur;
                    *cur = st.fwd.decay * acc + st.fwd.w_far * *old_g + st.fwd.w_near * g_new;
                    *old_g = g_new;
                });
        }

        // backward integrals overwrite g2 with J(t_j)
        let mut prev: Vec<Complex64> = g2[m - 1].coeffs.clone();
        g2[m - 1].coeffs.iter_mut().for_each(|z| *z = ZERO);
        for j in (0..m - 1).rev() {
            let (head, tail) = g2.split_at_mut(j + 1);
            let next = &tail[0].coeffs;
            head[j]
                .coeffs
                .par_iter_mut()
                .zip(prev.par_iter_mut())
                .zip(next.par_iter())
                .zip(self.steps.par_iter())
                .for_each(|(((cur, old_g), &acc), st)| {
                    let g_new = *cur;
                    *cur = st.bwd.decay * acc + st.bwd.w_far * *old_g + st.bwd.w_near * g_new;
                    *old_g = g_new;
                });
        }

        // boundary values of the diagonal coordinates
        let horizon = self.params.horizon;
        let bounds: Vec<(Complex64, Complex64)> = (0..len)
            .into_par_iter()
            .map(|idx| match &self.table.modes[idx] {
                Some(e) => match self.config.boundary_mode {
                    BoundaryMode::Exact => {
                        let rhs_psi = self.psi0.coeffs[idx] + e.p[0][1] * g2[0].coeffs[idx];
                        let rhs_phi = self.phi_t.coeffs[idx] - g1[m - 1].coeffs[idx];
                        boundary_solve(e, self.grid.xi(idx), horizon, rhs_psi, rhs_phi).map(|d| (d.u0, d.v_t))
                    }
                    BoundaryMode::Paper => Ok((self.linear.u0[idx], self.linear.v_t[idx])),
                },
                None if idx == 0 => Ok((self.psi0.coeffs[0], self.phi_t.coeffs[0])),
                None => Ok((ZERO, ZERO)),
            })
            .collect::<Result<_>>()?;

        // rebuild the state and measure the change
        let stats: Vec<(f64, f64)> = psi
            .par_iter_mut()
            .zip(phi.par_iter_mut())
            .zip(g1.par_iter().zip(g2.par_iter()))
            .zip(self.times.par_iter())
            .map(|(((p, f), (ii, jj)), &t)| {
                let mut diff: f64 = 0.0;
                let mut size: f64 = 0.0;
                for idx in 0..len {
                    let (u0, vt) = bounds[idx];
                    let (np, nf) = match &self.table.modes[idx] {
                        Some(e) => {
                            let u = (e.lambda1 * t).exp() * u0 + ii.coeffs[idx];
                            let v = (-e.lambda2 * (horizon - t)).exp() * vt - jj.coeffs[idx];
                            let [a, b] = e.to_physical(u, v);
                            (a, b)
                        }
                        None if idx == 0 => (u0 + ii.coeffs[0], vt - jj.coeffs[0]),
                        None => (ZERO, ZERO),
                    };
                    let xi = self.grid.xi(idx);
                    let kabs = xi[0].hypot(xi[1]);
                    let w = self.distance_weight(idx, t);
                    diff = diff.max(w * ((np - p.coeffs[idx]).norm() + kabs * (nf - f.coeffs[idx]).norm()));
                    size = size.max(w * (np.norm() + kabs * nf.norm()));
                    p.coeffs[idx] = np;
                    f.coeffs[idx] = nf;
                }
                (diff, size)
            })
            .collect();
        let (diff, size) = stats
            .into_iter()
            .fold((0.0_f64, 0.0_f64), |(a, b), (c, d)| (a.max(c), b.max(d)));
        Ok(if size > 0.0 { diff / size } else { diff })
    }

    /// Picard iteration from the linear solution.
    pub fn solve(&self) -> Result<StateTrajectory> {
        let mut traj = self.linear_trajectory();
        let mut g1 = vec![SpectralField::zeros(&self.grid); self.times.len()];
        let mut g2 = g1.clone();
        let mut growth_streak = 0;
        loop {
            let d = self.sweep(&mut traj.psi_hat, &mut traj.phi_hat, &mut g1, &mut g2)?;
            let last = traj.iteration_report.last().copied();
            traj.iteration_report.push(d);
            log::debug!("picard sweep {}: distance {d:e}", traj.iteration_report.len());
            if !d.is_finite() {
                return Err(Error::NoContraction {
                    iterations: traj.iterations(),
                    last_distance: d,
                });
            }
            if d < self.config.tol {
                return Ok(traj);
            }
            growth_streak = match last {
                Some(prev) if d >= prev => growth_streak + 1,
                _ => 0,
            };
            if growth_streak >= 3 || traj.iterations() >= self.config.max_iter {
                return Err(Error::NoContraction {
                    iterations: traj.iterations(),
                    last_distance: d,
                });
            }
        }
    }

    /// Step size of the time grid.
    pub fn step(&self) -> f64 {
        self.h
    }
}

/// One sweep applied to `current`, returning a new trajectory.
pub fn duhamel_step(
    current: &StateTrajectory,
    psi0: &SpectralField,
    phi_t: &SpectralField,
    grid: &GridSpec,
    config: &PicardConfig,
    params: &ModelParams,
) -> Result<StateTrajectory> {
    let solver = PicardSolver::new(psi0, phi_t, grid, params, config)?;
    if current.times.len() != solver.times.len() {
        return Err(Error::InvalidParams(format!(
            "trajectory has {} nodes, config expects {}",
            current.times.len(),
            solver.times.len()
        )));
    }
    let mut next = current.clone();
    let mut g1 = vec![SpectralField::zeros(grid); next.times.len()];
    let mut g2 = g1.clone();
    let d = solver.sweep(&mut next.psi_hat, &mut next.phi_hat, &mut g1, &mut g2)?;
    next.iteration_report.push(d);
    Ok(next)
}

pub fn picard_solve(
    psi0: &SpectralField,
    phi_t: &SpectralField,
    grid: &GridSpec,
    config: &PicardConfig,
    params: &ModelParams,
) -> Result<StateTrajectory> {
    PicardSolver::new(psi0, phi_t, grid, params, config)?.solve()
}

/// Solve on `M` and `2M − 1` nodes and compare on the shared nodes. Fails
/// with `QuadratureUnderResolved` if the relative change exceeds `tol`.
pub fn quadrature_check(
    psi0: &SpectralField,
    phi_t: &SpectralField,
    grid: &GridSpec,
    config: &PicardConfig,
    params: &ModelParams,
    tol: f64,
) -> Result<f64> {
    let coarse = picard_solve(psi0, phi_t, grid, config, params)?;
    let fine_cfg = PicardConfig {
        time_nodes: 2 * config.time_nodes - 1,
        ..*config
    };
    let fine = picard_solve(psi0, phi_t, grid, &fine_cfg, params)?;
    let mut diff: f64 = 0.0;
    let mut size: f64 = 0.0;
    for (j, (p, f)) in coarse.psi_hat.iter().zip(&coarse.phi_hat).enumerate() {
        let (q, g) = (&fine.psi_hat[2 * j], &fine.phi_hat[2 * j]);
        for idx in 0..grid.len() {
            let xi = grid.xi(idx);
            let kabs = xi[0].hypot(xi[1]);
            diff = diff.max((p.coeffs[idx] - q.coeffs[idx]).norm() + kabs * (f.coeffs[idx] - g.coeffs[idx]).norm());
            size = size.max(q.coeffs[idx].norm() + kabs * g.coeffs[idx].norm());
        }
    }
    let change = if size > 0.0 { diff / size } else { diff };
    if change > tol {
        return Err(Error::QuadratureUnderResolved { change, tol });
    }
    Ok(change)
}

/// Relative residual of the perturbation system at each interior node
/// `j = 2 .. M−3`, with the time derivative from fourth-order central
/// differences. For each node the ℓ² norm over modes of the residual is
/// divided by the ℓ² norm of the time derivative, separately for both
/// equations, and the larger ratio is reported.
pub fn pde_residual(
    traj: &StateTrajectory,
    grid: &GridSpec,
    params: &ModelParams,
    form: NonlinearForm,
) -> Result<Vec<f64>> {
    let m = traj.times.len();
    if m < 5 {
        return Err(Error::InvalidParams("residual needs at least 5 time nodes".into()));
    }
    let h = traj.times[1] - traj.times[0];
    let ev = NonlinearEvaluator::new(grid, params, form);
    let mats: Vec<_> = (0..grid.len()).map(|idx| assemble_a(grid.xi(idx), params)).collect();
    Ok((2..m - 2)
        .into_par_iter()
        .map(|j| {
            let (n1, n2) = ev.evaluate(&traj.psi_hat[j], &traj.phi_hat[j]);
            let d = |s: &[SpectralField], idx: usize| {
                (-s[j + 2].coeffs[idx] + 8.0 * s[j + 1].coeffs[idx] - 8.0 * s[j - 1].coeffs[idx]
                    + s[j - 2].coeffs[idx])
                    / (12.0 * h)
            };
            let mut acc = [0.0; 4];
            for idx in 0..grid.len() {
                if grid.mode_is_nyquist(idx) {
                    continue;
                }
                let state = [traj.psi_hat[j].coeffs[idx], traj.phi_hat[j].coeffs[idx]];
                let lin = mats[idx].apply(state);
                let dp = d(&traj.psi_hat, idx);
                let df = d(&traj.phi_hat, idx);
                acc[0] += (dp - lin[0] - n1.coeffs[idx]).norm_sqr();
                acc[1] += dp.norm_sqr();
                acc[2] += (df - lin[1] - n2.coeffs[idx]).norm_sqr();
                acc[3] += df.norm_sqr();
            }
            let ratio = |r: f64, s: f64| if s > 0.0 { (r / s).sqrt() } else { r.sqrt() };
            ratio(acc[0], acc[1]).max(ratio(acc[2], acc[3]))
        })
        .collect())
}

/// Eigen-data for a single mode, used by tests of the sweep.
pub fn mode_eigensystem(table: &ModeTable, idx: usize) -> Option<&EigenSystem> {
    table.modes[idx].as_ref()
}
