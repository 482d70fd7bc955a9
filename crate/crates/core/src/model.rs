//! Model constants, the Hamiltonian and the constant-flow stationary state.
//!
//! The saturation function is `f(ρ) = ρ_max − ρ`. The background state
//! `ρ = ρ̄`, `φ = x / f(ρ̄)` is an exact solution of the β = 2 system for any
//! viscosity; perturbations `ψ = ρ − ρ̄`, `φ − x/f(ρ̄)` are what the solvers
//! evolve.

use serde::Serialize;

use crate::error::{Error, Result};

/// Physical constants of a run, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub rho_max: f64,
    pub rho_bar: f64,
    pub sigma: f64,
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(rho_max: f64, rho_bar: f64, sigma: f64, horizon: f64) -> Result<Self> {
        validate_params(rho_max, rho_bar, sigma, horizon)
    }

    /// Saturation `f(ρ) = ρ_max − ρ`.
    #[inline]
    pub fn saturation(&self, rho: f64) -> f64 {
        self.rho_max - rho
    }

    /// `f(ρ̄)`.
    #[inline]
    pub fn f_bar(&self) -> f64 {
        self.rho_max - self.rho_bar
    }

    /// `ρ̄ < ρ_max / 2`, equivalently `f(ρ̄) − ρ̄ > 0`.
    pub fn is_subcritical(&self) -> bool {
        self.f_bar() - self.rho_bar > 0.0
    }

    /// Spectral-gap constant `√(ρ̄ (f − ρ̄))`: `Re λ₁ ≤ −gap·|ξ|` in the
    /// inviscid subcritical regime. Zero outside it.
    pub fn decay_constant(&self) -> f64 {
        let s = self.rho_bar * (self.f_bar() - self.rho_bar);
        if s > 0.0 {
            s.sqrt()
        } else {
            0.0
        }
    }

    /// Default weight constant for the fixed-point norm: half the gap.
    pub fn default_norm_c(&self) -> f64 {
        0.5 * self.decay_constant()
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.rho_max, self.rho_bar, sigma, self.horizon)
    }

    pub fn with_rho_bar(&self, rho_bar: f64) -> Result<Self> {
        Self::new(self.rho_max, rho_bar, self.sigma, self.horizon)
    }
}

pub fn validate_params(rho_max: f64, rho_bar: f64, sigma: f64, horizon: f64) -> Result<ModelParams> {
    for (name, v) in [
        ("rho_max", rho_max),
        ("rho_bar", rho_bar),
        ("sigma", sigma),
        ("horizon", horizon),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
        }
    }
    if rho_max <= 0.0 {
        return Err(Error::InvalidParams(format!("rho_max must be positive, got {rho_max}")));
    }
    if !(rho_bar > 0.0 && rho_bar < rho_max) {
        return Err(Error::InvalidParams(format!(
            "rho_bar must lie in (0, rho_max) = (0, {rho_max}), got {rho_bar}"
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParams(format!("sigma must be non-negative, got {sigma}")));
    }
    if horizon <= 0.0 {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
    }
    Ok(ModelParams {
        rho_max,
        rho_bar,
        sigma,
        horizon,
    })
}

fn check_beta_rho(rho: f64, beta: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParams(format!("beta must lie in [0, 2], got {beta}")));
    }
    let f = params.saturation(rho);
    if f <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "density {rho} at or above rho_max {}",
            params.rho_max
        )));
    }
    Ok(f)
}

/// `H(ρ, p) = ½ f^β(ρ) |p|² − ½ f^{2−β}(ρ)`.
pub fn hamiltonian(rho: f64, p: [f64; 2], beta: f64, params: &ModelParams) -> Result<f64> {
    let f = check_beta_rho(rho, beta, params)?;
    let p2 = p[0] * p[0] + p[1] * p[1];
    Ok(0.5 * f.powf(beta) * p2 - 0.5 * f.powf(2.0 - beta))
}

/// `∂H/∂p = f^β(ρ) p`.
pub fn hamiltonian_dp(rho: f64, p: [f64; 2], beta: f64, params: &ModelParams) -> Result<[f64; 2]> {
    let f = check_beta_rho(rho, beta, params)?;
    let w = f.powf(beta);
    Ok([w * p[0], w * p[1]])
}

/// Background density and potential gradient `(ρ̄, (1/f(ρ̄), 0))`.
pub fn stationary_solution(params: &ModelParams) -> (f64, [f64; 2]) {
    (params.rho_bar, [1.0 / params.f_bar(), 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(rho_bar: f64) -> ModelParams {
        ModelParams::new(1.0, rho_bar, 0.0, 10.0).unwrap()
    }

    #[test]
    fn validate_examples() {
        let a = validate_params(1.0, 0.25, 0.0, 10.0).unwrap();
        assert!(a.is_subcritical());
        assert_eq!(a.f_bar(), 0.75);
        let b = validate_params(1.0, 0.75, 0.0, 10.0).unwrap();
        assert!(!b.is_subcritical());
        assert_eq!(b.f_bar(), 0.25);
        assert!(matches!(
            validate_params(1.0, 1.5, 0.0, 10.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn validate_rejects_bad_ranges() {
        assert!(validate_params(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(validate_params(1.0, 0.2, -0.1, 1.0).is_err());
        assert!(validate_params(1.0, 0.2, 0.0, 0.0).is_err());
        assert!(validate_params(1.0, f64::NAN, 0.0, 1.0).is_err());
        assert!(validate_params(-1.0, 0.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn subcritical_flag_matches_half_packing() {
        assert!(p(0.49).is_subcritical());
        assert!(!p(0.5).is_subcritical());
        assert!(!p(0.51).is_subcritical());
    }

    #[test]
    fn hamiltonian_examples() {
        let params = p(0.25);
        assert_eq!(hamiltonian(0.0, [1.0, 0.0], 2.0, &params).unwrap(), 0.0);
        let h0 = hamiltonian(0.25, [0.0, 0.0], 0.0, &params).unwrap();
        assert!((h0 + 0.28125).abs() < 1e-15);
        let h2 = hamiltonian(0.25, [2.0, 0.0], 2.0, &params).unwrap();
        assert!((h2 - 0.625).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_rejects_saturated_density() {
        let params = p(0.25);
        assert!(hamiltonian(1.0, [1.0, 0.0], 1.0, &params).is_err());
        assert!(hamiltonian_dp(1.2, [1.0, 0.0], 2.0, &params).is_err());
        assert!(hamiltonian(0.2, [1.0, 0.0], 2.5, &params).is_err());
    }

    #[test]
    fn stationary_examples() {
        let (rho, g) = stationary_solution(&p(0.25));
        assert_eq!(rho, 0.25);
        assert!((g[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
        let (_, g) = stationary_solution(&p(0.5));
        assert_eq!(g, [2.0, 0.0]);
        let viscous = ModelParams::new(1.0, 0.5, 0.7, 10.0).unwrap();
        assert_eq!(stationary_solution(&viscous).1, [2.0, 0.0]);
    }

    #[test]
    fn hamiltonian_dp_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let params = p(0.25);
        let h = 1e-6;
        for _ in 0..50 {
            let rho = rng.gen_range(0.0..0.9);
            let beta = rng.gen_range(0.0..=2.0);
            let q = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let grad = hamiltonian_dp(rho, q, beta, &params).unwrap();
            for axis in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[axis] += h;
                qm[axis] -= h;
                let fd = (hamiltonian(rho, qp, beta, &params).unwrap()
                    - hamiltonian(rho, qm, beta, &params).unwrap())
                    / (2.0 * h);
                assert!((fd - grad[axis]).abs() < 1e-8, "{fd} vs {}", grad[axis]);
            }
        }
    }
}
