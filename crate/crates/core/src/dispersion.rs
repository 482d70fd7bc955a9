//! Planar waves `ψ = A cos(ax + by + ct)`, `φ = B sin(ax + by + ct)` of the
//! linearised systems.
//!
//! For β = 2 the frequencies solve
//! `c² − 2a(f−ρ̄)c + a²f(f−ρ̄) + b²ρ̄f = 0`, which has real roots only when
//! `ρ̄ > ρ_max/2` and `(b/a)²` is below a threshold. For β = 0 the linearised
//! system is
//!
//! ```text
//! ∂ₜψ = f ∂ₓψ + ρ̄ Δφ
//! ∂ₜφ = f ∂ₓφ + f ψ
//! ```
//!
//! (background gradient `f(ρ̄)` in that model), whose frequencies
//! `c = fa ± √(ρ̄f(a²+b²))` are always real.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, SpectralField, SpectralTransform};
use crate::linear::assemble_a;
use crate::model::ModelParams;

/// Relative tolerance on the discriminant below which two roots merge.
pub const DOUBLE_ROOT_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarWave {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub amp_a: f64,
    #[serde(rename = "B")]
    pub amp_b: f64,
    pub beta: u8,
    /// 2 for a double root, else 1.
    pub multiplicity: u8,
}

impl PlanarWave {
    pub fn with_frequency(&self, c: f64) -> Self {
        Self { c, ..*self }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            amp_a: self.amp_a * s,
            amp_b: self.amp_b * s,
            ..*self
        }
    }
}

/// Real roots of `c² + p c + q = 0`, descending, with a merge tolerance.
fn real_quadratic_roots(p: f64, q: f64) -> Vec<(f64, u8)> {
    let disc = p * p - 4.0 * q;
    let scale = p * p + 4.0 * q.abs();
    if disc.abs() <= DOUBLE_ROOT_REL * scale {
        return vec![(-0.5 * p, 2)];
    }
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    let big = -0.5 * (p + p.signum() * s);
    let (r1, r2) = if big == 0.0 {
        (0.5 * s, -0.5 * s)
    } else {
        (big, q / big)
    };
    vec![(r1.max(r2), 1), (r1.min(r2), 1)]
}

pub fn dispersion_beta2(a: f64, b: f64, params: &ModelParams) -> Result<Vec<PlanarWave>> {
    if a == 0.0 {
        return Err(Error::InvalidParams("beta = 2 dispersion needs a != 0".into()));
    }
    let f = params.f_bar();
    let rb = params.rho_bar;
    let p = -2.0 * a * (f - rb);
    let q = a * a * f * (f - rb) + b * b * rb * f;
    Ok(real_quadratic_roots(p, q)
        .into_iter()
        .map(|(c, multiplicity)| PlanarWave {
            a,
            b,
            c,
            // second equation of the identification system: A = f(fa − c)B
            amp_a: f * (f * a - c),
            amp_b: 1.0,
            beta: 2,
            multiplicity,
        })
        .collect())
}

pub fn dispersion_beta0(a: f64, b: f64, params: &ModelParams) -> Result<Vec<PlanarWave>> {
    if a == 0.0 && b == 0.0 {
        return Err(Error::InvalidParams("beta = 0 dispersion needs (a, b) != (0, 0)".into()));
    }
    let f = params.f_bar();
    let s = (params.rho_bar * f * (a * a + b * b)).sqrt();
    Ok([f * a + s, f * a - s]
        .into_iter()
        .map(|c| PlanarWave {
            a,
            b,
            c,
            amp_a: (c - f * a) / f,
            amp_b: 1.0,
            beta: 0,
            multiplicity: 1,
        })
        .collect())
}

/// Largest `(b/a)²` with real β = 2 frequencies, `None` when
/// `ρ̄ < ρ_max/2` (no waves at all).
pub fn wave_threshold(params: &ModelParams) -> Option<f64> {
    let f = params.f_bar();
    let rb = params.rho_bar;
    if f - rb > 0.0 {
        None
    } else {
        Some((((f - rb) * (f - rb) - f * (f - rb)) / (rb * f)).max(0.0))
    }
}

/// For each ratio `r = b/a`, whether β = 2 waves with `a = 1, b = r` exist.
pub fn wave_existence_region(params: &ModelParams, ratio_grid: &[f64]) -> Vec<(f64, bool)> {
    ratio_grid
        .iter()
        .map(|&r| {
            let exists = dispersion_beta2(1.0, r, params).map(|w| !w.is_empty()).unwrap_or(false);
            (r, exists)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveCheck {
    /// Largest relative linear-PDE residual over the sampled times.
    pub residual: f64,
    /// Largest `|‖ψ(t)‖₂/‖ψ(0)‖₂ − 1|` over the sampled times.
    pub norm_variation: f64,
}

fn grid_wavenumber(k: f64, grid: &GridSpec) -> Option<i64> {
    let m = k * grid.length() / (2.0 * std::f64::consts::PI);
    let r = m.round();
    let half = (grid.n() / 2) as i64;
    ((m - r).abs() <= 1e-9 * r.abs().max(1.0) && (r as i64).abs() < half).then_some(r as i64)
}

/// Sample the wave on the grid at `times` and evaluate the linear system
/// spectrally, with exact time derivatives of the wave formula.
pub fn verify_wave(wave: &PlanarWave, params: &ModelParams, grid: &GridSpec, times: &[f64]) -> Result<WaveCheck> {
    if grid_wavenumber(wave.a, grid).is_none() || grid_wavenumber(wave.b, grid).is_none() {
        return Err(Error::IncommensurateWave { a: wave.a, b: wave.b });
    }
    let tr = SpectralTransform::new(grid);
    let f = params.f_bar();
    let rb = params.rho_bar;
    let mut residual: f64 = 0.0;
    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        let phase = |x: f64, y: f64| wave.a * x + wave.b * y + wave.c * t;
        let psi = tr.forward(&RealField::from_fn(grid, |x, y| wave.amp_a * phase(x, y).cos()))?;
        let phi = tr.forward(&RealField::from_fn(grid, |x, y| wave.amp_b * phase(x, y).sin()))?;
        let dpsi = tr.forward(&RealField::from_fn(grid, |x, y| -wave.c * wave.amp_a * phase(x, y).sin()))?;
        let dphi = tr.forward(&RealField::from_fn(grid, |x, y| wave.c * wave.amp_b * phase(x, y).cos()))?;
        let mut num = 0.0;
        let mut den = 0.0;
        for idx in 0..grid.len() {
            let xi = grid.xi(idx);
            let (p, q) = (psi.coeffs[idx], phi.coeffs[idx]);
            // right-hand side and the sizes of its individual terms
            let (rhs, scale) = if wave.beta == 2 {
                let m = assemble_a(xi, params);
                (
                    m.apply([p, q]),
                    [
                        m.a11.norm() * p.norm() + m.a12.norm() * q.norm(),
                        m.a21.norm() * p.norm() + m.a22.norm() * q.norm(),
                    ],
                )
            } else {
                let k2 = xi[0] * xi[0] + xi[1] * xi[1];
                let dx = Complex64::new(0.0, xi[0]);
                (
                    [f * dx * p - rb * k2 * q, f * dx * q + f * p],
                    [
                        f * xi[0].abs() * p.norm() + rb * k2 * q.norm(),
                        f * xi[0].abs() * q.norm() + f * p.norm(),
                    ],
                )
            };
            num += (dpsi.coeffs[idx] - rhs[0]).norm_sqr() + (dphi.coeffs[idx] - rhs[1]).norm_sqr();
            den += dpsi.coeffs[idx].norm_sqr() + dphi.coeffs[idx].norm_sqr() + scale[0] * scale[0] + scale[1] * scale[1];
        }
        if den > 0.0 {
            residual = residual.max((num / den).sqrt());
        }
        norms.push(psi_l2(&psi));
    }
    let norm_variation = match norms.first() {
        Some(&n0) if n0 > 0.0 => norms.iter().map(|n| (n / n0 - 1.0).abs()).fold(0.0, f64::max),
        _ => 0.0,
    };
    Ok(WaveCheck {
        residual,
        norm_variation,
    })
}

fn psi_l2(f: &SpectralField) -> f64 {
    f.sum_sq().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(rb: f64) -> ModelParams {
        ModelParams::new(1.0, rb, 0.0, 10.0).unwrap()
    }

    #[test]
    fn beta2_examples() {
        assert!(dispersion_beta2(1.0, 0.0, &p(0.25)).unwrap().is_empty());
        let w = dispersion_beta2(1.0, 0.0, &p(0.75)).unwrap();
        assert_eq!(w.len(), 2);
        let r = (1.5f64).sqrt() / 2.0;
        assert!((w[0].c - (-0.5 + r)).abs() < 1e-15);
        assert!((w[1].c - (-0.5 - r)).abs() < 1e-15);
        assert!((w[0].c - 0.1123724).abs() < 1e-7);
        assert!((w[1].c + 1.1123724).abs() < 1e-7);
        let d = dispersion_beta2(1.0, 2f64.sqrt(), &p(0.75)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].multiplicity, 2);
        assert!(dispersion_beta2(1.0, 1.5, &p(0.75)).unwrap().is_empty());
        assert!(matches!(dispersion_beta2(0.0, 1.0, &p(0.75)), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn beta2_amplitudes_solve_both_equations() {
        let params = p(0.75);
        let (f, rb) = (params.f_bar(), params.rho_bar);
        for w in dispersion_beta2(1.3, 0.4, &params).unwrap() {
            let k2 = w.a * w.a + w.b * w.b;
            let e1 = w.amp_a * (w.c - w.a * (f - 2.0 * rb)) - w.amp_b * k2 * rb * f * f;
            let e2 = w.c * w.amp_b + w.amp_a / f - f * w.a * w.amp_b;
            assert!(e1.abs() < 1e-12 && e2.abs() < 1e-12, "{e1} {e2}");
        }
    }

    #[test]
    fn beta0_examples() {
        let w = dispersion_beta0(1.0, 0.0, &p(0.5)).unwrap();
        assert_eq!(w.len(), 2);
        assert!((w[0].c - 1.0).abs() < 1e-15 && w[1].c.abs() < 1e-15);
        let w = dispersion_beta0(0.0, 1.0, &p(0.5)).unwrap();
        assert!((w[0].c - 0.5).abs() < 1e-15 && (w[1].c + 0.5).abs() < 1e-15);
        let params = p(0.3);
        let f = params.f_bar();
        let w = dispersion_beta0(0.7, -1.1, &params).unwrap();
        let vieta = w[0].c * w[1].c - (f * f * 0.49 - 0.3 * f * (0.49 + 1.21));
        assert!(vieta.abs() < 1e-12);
    }

    #[test]
    fn existence_region() {
        assert!((wave_threshold(&p(0.75)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(wave_threshold(&p(0.25)), None);
        let near = wave_threshold(&p(0.5 + 1e-9)).unwrap();
        assert!(near < 1e-7);
        let region = wave_existence_region(&p(0.75), &[0.0, 1.0, 2f64.sqrt(), 1.5]);
        assert_eq!(
            region.iter().map(|r| r.1).collect::<Vec<_>>(),
            [true, true, true, false]
        );
        assert!(wave_existence_region(&p(0.25), &[0.0, 0.5, 3.0]).iter().all(|r| !r.1));
    }

    #[test]
    fn waves_on_the_grid() {
        let params = p(0.75);
        let grid = GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap();
        let times = [0.0, 2.5, 5.0, 7.5, 10.0];
        for w in dispersion_beta2(1.0, 0.0, &params).unwrap() {
            let chk = verify_wave(&w, &params, &grid, &times).unwrap();
            assert!(chk.residual < 1e-10 && chk.norm_variation < 1e-10, "{chk:?}");
            let off = verify_wave(&w.with_frequency(w.c + 0.01), &params, &grid, &times).unwrap();
            assert!(off.residual > 1e-3, "{off:?}");
            assert_eq!(verify_wave(&w.scaled(0.0), &params, &grid, &times).unwrap().residual, 0.0);
        }
        let w0 = dispersion_beta0(1.0, 0.0, &p(0.5)).unwrap();
        for w in w0 {
            assert!(verify_wave(&w, &p(0.5), &grid, &times).unwrap().residual < 1e-10);
        }
        let bad = PlanarWave {
            a: 1.3,
            ..dispersion_beta2(1.0, 0.0, &params).unwrap()[0]
        };
        assert!(matches!(
            verify_wave(&bad, &params, &grid, &times),
            Err(Error::IncommensurateWave { .. })
        ));
    }
}
