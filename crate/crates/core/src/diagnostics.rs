//! Norm time series, decay-law fits, stability maps and viscosity sweeps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::wave_threshold;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, SpectralField, SpectralTransform};
use crate::linear::{theta, LinearSolution, LinearTrajectory};
use crate::model::ModelParams;
use crate::nonlinear::{picard_solve, time_grid, PicardConfig, StateTrajectory};

/// Anything that carries `(ψ̂, φ̂)` samples at increasing times.
pub trait Trajectory {
    fn times(&self) -> &[f64];
    fn psi_hat(&self) -> &[SpectralField];
    fn phi_hat(&self) -> &[SpectralField];
}

impl Trajectory for LinearTrajectory {
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn psi_hat(&self) -> &[SpectralField] {
        &self.psi_hat
    }
    fn phi_hat(&self) -> &[SpectralField] {
        &self.phi_hat
    }
}

impl Trajectory for StateTrajectory {
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn psi_hat(&self) -> &[SpectralField] {
        &self.psi_hat
    }
    fn phi_hat(&self) -> &[SpectralField] {
        &self.phi_hat
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub l2_psi: Vec<f64>,
    pub l2_grad_phi: Vec<f64>,
    pub linf_psi: Vec<f64>,
    pub linf_grad_phi: Vec<f64>,
    pub sigma_l2_hess_phi: Vec<f64>,
}

impl NormSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `‖ψ‖₂ + ‖∇φ‖₂` per sample.
    pub fn l2_total(&self) -> Vec<f64> {
        self.l2_psi.iter().zip(&self.l2_grad_phi).map(|(a, b)| a + b).collect()
    }

    /// `‖ψ‖∞ + ‖∇φ‖∞` per sample.
    pub fn linf_total(&self) -> Vec<f64> {
        self.linf_psi.iter().zip(&self.linf_grad_phi).map(|(a, b)| a + b).collect()
    }
}

/// The five norms of one sample.
///
/// L² norms use Parseval (`∫|u|² = L² Σ|û|²` for Fourier-series
/// coefficients); L∞ norms use the inverse transform, with `|∇φ|` the
/// Euclidean length of the gradient at each grid point.
pub fn sample_norms(
    psi: &SpectralField,
    phi: &SpectralField,
    tr: &SpectralTransform,
    sigma: f64,
) -> Result<[f64; 5]> {
    let grid = *tr.grid();
    let l = grid.length();
    let mut grad2 = 0.0;
    let mut hess2 = 0.0;
    for (idx, z) in phi.coeffs.iter().enumerate() {
        let xi = grid.xi(idx);
        let k2 = xi[0] * xi[0] + xi[1] * xi[1];
        grad2 += k2 * z.norm_sqr();
        hess2 += k2 * k2 * z.norm_sqr();
    }
    let l2_psi = l * psi.sum_sq().sqrt();
    let linf_psi = tr.inverse(psi)?.max_abs();
    let gx = phi.map_modes(&grid, |xi| Complex64::new(0.0, xi[0]));
    let gy = phi.map_modes(&grid, |xi| Complex64::new(0.0, xi[1]));
    let (px, py) = (tr.inverse(&gx)?, tr.inverse(&gy)?);
    let linf_grad = px
        .values
        .iter()
        .zip(&py.values)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    Ok([l2_psi, l * grad2.sqrt(), linf_psi, linf_grad, sigma * l * hess2.sqrt()])
}

pub fn norm_series<T: Trajectory + ?Sized>(traj: &T, grid: &GridSpec, params: &ModelParams) -> Result<NormSeries> {
    let tr = SpectralTransform::new(grid);
    let rows = traj
        .psi_hat()
        .par_iter()
        .zip(traj.phi_hat().par_iter())
        .map(|(p, f)| sample_norms(p, f, &tr, params.sigma))
        .collect::<Result<Vec<_>>>()?;
    let mut s = NormSeries {
        times: traj.times().to_vec(),
        ..Default::default()
    };
    for r in rows {
        s.l2_psi.push(r[0]);
        s.l2_grad_phi.push(r[1]);
        s.linf_psi.push(r[2]);
        s.linf_grad_phi.push(r[3]);
        s.sigma_l2_hess_phi.push(r[4]);
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Decay fits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayLaw {
    /// `K/(1+t)`
    Inverse,
    /// `K/(1+t)²`
    InverseSquare,
}

impl DecayLaw {
    pub fn exponent(self) -> f64 {
        match self {
            DecayLaw::Inverse => -1.0,
            DecayLaw::InverseSquare => -2.0,
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub law: DecayLaw,
    pub samples: usize,
    pub slope: f64,
    /// `slope − target exponent`
    pub exponent_error: f64,
    pub prefactor: f64,
    /// Largest `|value / (K(1+t)^slope) − 1|` over the window.
    pub max_relative_deviation: f64,
}

/// Default window `(2, min(50, T/2))`.
pub fn default_window(horizon: f64) -> (f64, f64) {
    (2.0, 50.0_f64.min(0.5 * horizon))
}

/// Least-squares fit of `log value` against `log(1+t)` over `window`.
pub fn fit_decay(times: &[f64], values: &[f64], law: DecayLaw, window: (f64, f64), horizon: f64) -> Result<DecayFit> {
    let (lo, hi) = window;
    if times.len() != values.len() {
        return Err(Error::ShapeMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if !(lo >= 1.0 && hi <= 0.5 * horizon && lo < hi) {
        return Err(Error::InvalidParams(format!(
            "fit window ({lo}, {hi}) must satisfy 1 <= t_lo < t_hi <= T/2 = {}",
            0.5 * horizon
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooNarrow {
            samples: pts.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Data(format!("series value {v} at t = {t} is not positive")));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let prefactor = intercept.exp();
    let max_relative_deviation = pts
        .iter()
        .map(|(t, v)| (v / (prefactor * (1.0 + t).powf(slope)) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        window,
        law,
        samples: pts.len(),
        slope,
        exponent_error: slope - law.exponent(),
        prefactor,
        max_relative_deviation,
    })
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

// ---------------------------------------------------------------------------
// Stability map

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `ρ̄ < ρ_max/2`: every nonzero mode decays.
    Subcritical,
    /// `ρ̄ = ρ_max/2`: `Re θ` vanishes along `ξ₂ = 0`.
    Marginal,
    /// `ρ̄ > ρ_max/2`: some modes oscillate without decay.
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRow {
    pub rho_bar: f64,
    /// `min Re θ(ξ)/|ξ|` over the sampled frequencies.
    pub gap: f64,
    pub regime: Regime,
    /// Largest `(b/a)²` admitting β = 2 planar waves, if any exist.
    pub wave_threshold: Option<f64>,
}

/// Unit vectors at `count` evenly spaced angles in `[0, π)`, starting on the
/// `ξ₁` axis. The gap ratio is even in `ξ` and (for σ = 0) homogeneous, so
/// a half circle of directions is enough.
pub fn direction_samples(count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|j| {
            let a = std::f64::consts::PI * j as f64 / count as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

pub fn classify(params: &ModelParams) -> Regime {
    let margin = params.f_bar() - params.rho_bar;
    if margin.abs() <= 1e-12 * params.rho_max {
        Regime::Marginal
    } else if margin > 0.0 {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

pub fn stability_map(rho_grid: &[f64], xi_samples: &[[f64; 2]], template: &ModelParams) -> Result<Vec<StabilityRow>> {
    rho_grid
        .par_iter()
        .map(|&rb| {
            let p = template.with_rho_bar(rb)?;
            let gap = xi_samples
                .iter()
                .filter(|xi| xi[0] != 0.0 || xi[1] != 0.0)
                .map(|&xi| theta(xi, &p).re / xi[0].hypot(xi[1]))
                .fold(f64::INFINITY, f64::min);
            Ok(StabilityRow {
                rho_bar: rb,
                gap,
                regime: classify(&p),
                wave_threshold: wave_threshold(&p),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Viscosity sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepSolver {
    Linear,
    #[default]
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    /// `sup_t (‖Δψ‖₂ + ‖Δψ‖∞ + ‖Δ∇φ‖₂ + ‖Δ∇φ‖∞)` over the stored nodes.
    pub difference: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// `d(σ_i) / d(σ_{i+1})` for consecutive list entries.
    pub ratios: Vec<f64>,
    /// Differences never increase as σ decreases.
    pub monotone: bool,
    /// Intercept at σ = 0 of the least-squares line through the positive-σ
    /// points (0 when fewer than two).
    pub intercept: f64,
    /// Weighted size of the data, `sup (1+|ξ|)⁷|ψ̂₀| + sup (1+|ξ|)⁷|φ̂_T|`.
    pub data_weight: f64,
}

fn solve_for_sweep(
    psi0: &SpectralField,
    phi_t: &SpectralField,
    grid: &GridSpec,
    params: &ModelParams,
    config: &PicardConfig,
    kind: SweepSolver,
) -> Result<(Vec<SpectralField>, Vec<SpectralField>, usize)> {
    match kind {
        SweepSolver::Nonlinear => {
            let t = picard_solve(psi0, phi_t, grid, config, params)?;
            let it = t.iterations();
            Ok((t.psi_hat, t.phi_hat, it))
        }
        SweepSolver::Linear => {
            let sol = LinearSolution::new(psi0, phi_t, grid, params)?;
            let times = time_grid(params.horizon, config.time_nodes);
            let (p, f) = times
                .par_iter()
                .map(|&t| {
                    let [p, f, _, _] = sol.sample(t);
                    (p, f)
                })
                .unzip();
            Ok((p, f, 0))
        }
    }
}

/// Combined `L² + L∞` difference norm at one node.
pub fn difference_norm(
    a: (&SpectralField, &SpectralField),
    b: (&SpectralField, &SpectralField),
    tr: &SpectralTransform,
) -> Result<f64> {
    let dp = SpectralField::from_coeffs(
        tr.grid(),
        a.0.coeffs.iter().zip(&b.0.coeffs).map(|(x, y)| x - y).collect(),
    )?;
    let df = SpectralField::from_coeffs(
        tr.grid(),
        a.1.coeffs.iter().zip(&b.1.coeffs).map(|(x, y)| x - y).collect(),
    )?;
    let n = sample_norms(&dp, &df, tr, 0.0)?;
    Ok(n[0] + n[1] + n[2] + n[3])
}

/// Solve at σ = 0 and at each listed σ with the same data, and report the
/// sup-in-time difference. Sweeps run one σ at a time to bound memory; the
/// solvers parallelise internally.
pub fn viscosity_sweep(
    psi0: &SpectralField,
    phi_t: &SpectralField,
    sigmas: &[f64],
    grid: &GridSpec,
    params: &ModelParams,
    config: &PicardConfig,
    kind: SweepSolver,
) -> Result<SweepReport> {
    if sigmas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams("viscosities must be listed in descending order".into()));
    }
    let mut data_weight_psi: f64 = 0.0;
    let mut data_weight_phi: f64 = 0.0;
    for idx in 0..grid.len() {
        let xi = grid.xi(idx);
        let w = (1.0 + xi[0].hypot(xi[1])).powi(7);
        data_weight_psi = data_weight_psi.max(w * psi0.coeffs[idx].norm());
        data_weight_phi = data_weight_phi.max(w * phi_t.coeffs[idx].norm());
    }
    let data_weight = data_weight_psi + data_weight_phi;
    if !data_weight.is_finite() {
        return Err(Error::Data("data weight norm is not finite".into()));
    }

    let base = params.with_sigma(0.0)?;
    let (rp, rf, _) = solve_for_sweep(psi0, phi_t, grid, &base, config, kind)?;
    let tr = SpectralTransform::new(grid);
    let mut points = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let p = params.with_sigma(sigma)?;
        let (difference, iterations) = if sigma == 0.0 {
            (0.0, 0)
        } else {
            let (sp, sf, it) = solve_for_sweep(psi0, phi_t, grid, &p, config, kind)?;
            let d = (0..sp.len())
                .into_par_iter()
                .map(|j| difference_norm((&sp[j], &sf[j]), (&rp[j], &rf[j]), &tr))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            (d, it)
        };
        log::info!("viscosity sweep: sigma = {sigma}, difference = {difference:e}");
        points.push(SweepPoint {
            sigma,
            difference,
            iterations,
        });
    }
    Ok(summarize_sweep(points, data_weight))
}

pub fn summarize_sweep(points: Vec<SweepPoint>, data_weight: f64) -> SweepReport {
    let ratios = points
        .windows(2)
        .filter(|w| w[1].difference > 0.0)
        .map(|w| w[0].difference / w[1].difference)
        .collect();
    let monotone = points.windows(2).all(|w| w[1].difference <= w[0].difference);
    let pos: Vec<&SweepPoint> = points.iter().filter(|p| p.sigma > 0.0).collect();
    let intercept = if pos.len() >= 2 {
        let xs: Vec<f64> = pos.iter().map(|p| p.sigma).collect();
        let ys: Vec<f64> = pos.iter().map(|p| p.difference).collect();
        least_squares(&xs, &ys).1
    } else {
        0.0
    };
    SweepReport {
        points,
        ratios,
        monotone,
        intercept,
        data_weight,
    }
}
