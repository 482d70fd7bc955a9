//! Initial/terminal data generators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, SpectralField, SpectralTransform};

/// Periodised Gaussian `ε exp(−|x − x₀|²/(2w²))`, distances taken to the
/// nearest periodic image. Returned in spectral form with Nyquist modes
/// removed; `remove_mean` also zeroes the `ξ = 0` coefficient.
pub fn gaussian(grid: &GridSpec, amplitude: f64, width: f64, center: [f64; 2], remove_mean: bool) -> Result<SpectralField> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Data(format!("gaussian width must be positive, got {width}")));
    }
    let l = grid.length();
    let wrap = |d: f64| d - l * (d / l).round();
    let field = RealField::from_fn(grid, |x, y| {
        let dx = wrap(x - center[0]);
        let dy = wrap(y - center[1]);
        amplitude * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
    });
    let mut hat = SpectralTransform::new(grid).forward(&field)?.without_nyquist(grid);
    if remove_mean {
        hat.coeffs[0] = Complex64::new(0.0, 0.0);
    }
    Ok(hat)
}

/// Domain centre shifted by a seeded offset of up to a quarter period per axis.
pub fn seeded_center(grid: &GridSpec, seed: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.length();
    [
        0.5 * l + rng.gen_range(-0.25..0.25) * l,
        0.5 * l + rng.gen_range(-0.25..0.25) * l,
    ]
}

/// One prescribed Fourier coefficient, by integer wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub kx: i64,
    pub ky: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Field from an explicit coefficient list. The list must already be
/// Hermitian: every `(kx, ky)` entry needs a matching `(−kx, −ky)` entry with
/// the conjugate value.
pub fn from_modes(grid: &GridSpec, modes: &[ModeSpec]) -> Result<SpectralField> {
    let mut out = SpectralField::zeros(grid);
    for m in modes {
        let idx = grid
            .index_of(m.kx, m.ky)
            .ok_or_else(|| Error::Data(format!("mode ({}, {}) does not fit on a {} grid", m.kx, m.ky, grid.n())))?;
        if grid.mode_is_nyquist(idx) {
            return Err(Error::Data(format!("mode ({}, {}) lies on the Nyquist line", m.kx, m.ky)));
        }
        out.coeffs[idx] += Complex64::new(m.re, m.im);
    }
    let defect = out.hermitian_defect(grid);
    if defect > 1e-12 * out.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Data(format!(
            "mode list is not Hermitian-symmetric (defect {defect:e})"
        )));
    }
    Ok(out)
}

/// Smooth random band-limited field: independent Gaussian coefficients on
/// `0 < |k| ≤ kmax`, damped by `(1+|k|)^{-2}` and symmetrised.
pub fn random_smooth(grid: &GridSpec, amplitude: f64, kmax: i64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SpectralField::zeros(grid);
    let kmax = kmax.min(grid.n() as i64 / 2 - 1);
    for ky in -kmax..=kmax {
        for kx in -kmax..=kmax {
            // visit each ± pair once
            if (ky, kx) <= (0, 0) {
                continue;
            }
            let idx = grid.index_of(kx, ky).expect("within band");
            let damp = 1.0 / (1.0 + ((kx * kx + ky * ky) as f64).sqrt()).powi(2);
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (amplitude * damp);
            out.coeffs[idx] = z;
            out.coeffs[grid.partner(idx)] = z.conj();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_zero() {
        let g = GridSpec::new(16, 32.0).unwrap();
        assert_eq!(gaussian(&g, 0.0, 2.0, [16.0, 16.0], false).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn seeded_data_is_reproducible() {
        let g = GridSpec::new(32, 64.0).unwrap();
        let a = gaussian(&g, 1e-3, 4.0, seeded_center(&g, 9), false).unwrap();
        let b = gaussian(&g, 1e-3, 4.0, seeded_center(&g, 9), false).unwrap();
        assert_eq!(a, b);
        assert_ne!(seeded_center(&g, 9), seeded_center(&g, 10));
        assert_eq!(random_smooth(&g, 1.0, 4, 3), random_smooth(&g, 1.0, 4, 3));
    }

    #[test]
    fn gaussian_is_hermitian_without_nyquist() {
        let g = GridSpec::new(32, 64.0).unwrap();
        let a = gaussian(&g, 1.0, 3.0, [10.0, 50.0], true).unwrap();
        assert!(a.hermitian_defect(&g) < 1e-16);
        assert!(!a.has_nyquist_content(&g));
        assert_eq!(a.coeffs[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mode_lists() {
        let g = GridSpec::new(16, 10.0).unwrap();
        let ok = [
            ModeSpec { kx: 1, ky: 2, re: 0.5, im: 0.25 },
            ModeSpec { kx: -1, ky: -2, re: 0.5, im: -0.25 },
        ];
        let f = from_modes(&g, &ok).unwrap();
        assert_eq!(f.coeffs[g.index_of(1, 2).unwrap()], Complex64::new(0.5, 0.25));
        assert!(matches!(from_modes(&g, &ok[..1]), Err(Error::Data(_))));
        let nyq = [ModeSpec { kx: 8, ky: 0, re: 1.0, im: 0.0 }];
        assert!(matches!(from_modes(&g, &nyq), Err(Error::Data(_))));
    }
}
