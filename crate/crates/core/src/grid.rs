//! Periodic grid, real/spectral field containers and the FFT pair.
//!
//! Coefficients are Fourier-series coefficients: the forward transform
//! divides by `n²` and the inverse applies no scaling, so
//! `u(x) = Σ_k û_k e^{i ξ_k · x}` and `mean |u|² = Σ |û_k|²`. The L² norm on
//! the `[0, L)²` torus is therefore `‖u‖² = L² Σ |û_k|²`.
//!
//! Storage is row-major with the row index running along `y` and the column
//! index along `x`; spectral indices use FFT ordering (`0..=n/2`, then the
//! negative wavenumbers).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "grid size must be even and at least 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParams(format!("domain length must be positive, got {length}")));
        }
        Ok(Self { n, length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Integer wavenumber of a spectral index, in `−n/2+1 ..= n/2`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn frequency(&self, i: usize) -> f64 {
        2.0 * PI * self.wavenumber(i) as f64 / self.length
    }

    /// Per-index angular frequencies `2πk/L`.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.frequency(i)).collect()
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// `ξ = (ξ₁, ξ₂)` of flat mode index `idx`.
    #[inline]
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        let (row, col) = (idx / self.n, idx % self.n);
        [self.frequency(col), self.frequency(row)]
    }

    #[inline]
    pub fn mode_is_nyquist(&self, idx: usize) -> bool {
        let (row, col) = (idx / self.n, idx % self.n);
        self.is_nyquist(row) || self.is_nyquist(col)
    }

    /// Flat index of the mode `−ξ`.
    #[inline]
    pub fn partner(&self, idx: usize) -> usize {
        let (row, col) = (idx / self.n, idx % self.n);
        ((self.n - row) % self.n) * self.n + (self.n - col) % self.n
    }

    /// Flat index for integer wavenumbers `(kx, ky)`, if they fit on the grid.
    pub fn index_of(&self, kx: i64, ky: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let map = |k: i64| -> Option<usize> {
            if k > half || k <= -half {
                None
            } else if k >= 0 {
                Some(k as usize)
            } else {
                Some((k + self.n as i64) as usize)
            }
        };
        Some(map(ky)? * self.n + map(kx)?)
    }

    /// Physical coordinates of flat sample index `idx`.
    #[inline]
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx % self.n) as f64 * h, (idx / self.n) as f64 * h)
    }

    /// Padded size used by the 3/2 dealiasing rule.
    pub fn padded_n(&self) -> usize {
        let m = 3 * self.n / 2;
        m + (m % 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    n: usize,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            n: grid.n(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.n(),
                found: (values.len() as f64).sqrt() as usize,
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample {v}")));
        }
        Ok(Self { n: grid.n(), values })
    }

    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.coords(idx);
                f(x, y)
            })
            .collect();
        Self { n: grid.n(), values }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n: usize,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            n: grid.n(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.n(),
                found: (coeffs.len() as f64).sqrt() as usize,
            });
        }
        Ok(Self { n: grid.n(), coeffs })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.n != grid.n() {
            return Err(Error::ShapeMismatch {
                expected: grid.n(),
                found: self.n,
            });
        }
        Ok(())
    }

    /// Largest `|c(−ξ) − conj c(ξ)|` over all modes.
    pub fn hermitian_defect(&self, grid: &GridSpec) -> f64 {
        (0..self.coeffs.len())
            .map(|idx| (self.coeffs[grid.partner(idx)] - self.coeffs[idx].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Copy with every mode on a Nyquist row or column set to zero.
    pub fn without_nyquist(&self, grid: &GridSpec) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            if grid.mode_is_nyquist(idx) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn has_nyquist_content(&self, grid: &GridSpec) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .any(|(idx, c)| grid.mode_is_nyquist(idx) && c.norm() > 0.0)
    }

    /// Multiply mode-wise by `m(ξ)`.
    pub fn map_modes(&self, grid: &GridSpec, m: impl Fn([f64; 2]) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| c * m(grid.xi(idx)))
            .collect();
        Self { n: self.n, coeffs }
    }

    pub fn sum_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2(buf: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>, scratch: &mut Vec<Complex64>) {
    scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
    plan.process_with_scratch(buf, scratch);
    transpose_square(buf, n);
    plan.process_with_scratch(buf, scratch);
    transpose_square(buf, n);
}

/// FFT plans for the base grid and the 3/2-padded grid.
///
/// Plans are shared immutable data; every call allocates its own scratch, so a
/// single `SpectralTransform` can serve many threads at once.
#[derive(Clone)]
pub struct SpectralTransform {
    grid: GridSpec,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform")
            .field("grid", &self.grid)
            .field("padded_n", &self.m)
            .finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let m = grid.padded_n();
        Self {
            grid: *grid,
            m,
            fwd: planner.plan_fft_forward(grid.n()),
            inv: planner.plan_fft_inverse(grid.n()),
            fwd_pad: planner.plan_fft_forward(m),
            inv_pad: planner.plan_fft_inverse(m),
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn padded_n(&self) -> usize {
        self.m
    }

    pub fn forward(&self, field: &RealField) -> Result<SpectralField> {
        if field.n() != self.grid.n() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.n(),
                found: field.n(),
            });
        }
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = Vec::new();
        fft2(&mut buf, n, &self.fwd, &mut scratch);
        let norm = 1.0 / (n * n) as f64;
        for c in &mut buf {
            *c *= norm;
        }
        Ok(SpectralField { n, coeffs: buf })
    }

    /// Complex synthesis `Σ ĉ_k e^{iξ·x}` without discarding the imaginary part.
    pub fn inverse_complex(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        field.check_grid(&self.grid)?;
        let mut buf = field.coeffs.clone();
        let mut scratch = Vec::new();
        fft2(&mut buf, self.grid.n(), &self.inv, &mut scratch);
        Ok(buf)
    }

    /// Real part of the synthesis; for Hermitian input the imaginary part is
    /// rounding noise.
    pub fn inverse(&self, field: &SpectralField) -> Result<RealField> {
        let buf = self.inverse_complex(field)?;
        Ok(RealField {
            n: self.grid.n(),
            values: buf.into_iter().map(|c| c.re).collect(),
        })
    }

    /// Zero-pad `a + i b` onto the `m × m` grid and synthesise; the real and
    /// imaginary parts of the result are the padded samples of `a` and `b`
    /// (both must be Hermitian). Nyquist modes are dropped.
    pub fn synthesize_padded_pair(&self, a: &SpectralField, b: &SpectralField) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n();
        let m = self.m;
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        for row in 0..n {
            if self.grid.is_nyquist(row) {
                continue;
            }
            let prow = pad_index(row, n, m);
            for col in 0..n {
                if self.grid.is_nyquist(col) {
                    continue;
                }
                let idx = row * n + col;
                buf[prow * m + pad_index(col, n, m)] = a.coeffs[idx] + Complex64::i() * b.coeffs[idx];
            }
        }
        let mut scratch = Vec::new();
        fft2(&mut buf, m, &self.inv_pad, &mut scratch);
        let re = buf.iter().map(|c| c.re).collect();
        let im = buf.iter().map(|c| c.im).collect();
        (re, im)
    }

    /// Analyse two real padded fields with one complex FFT and truncate both
    /// back to the base grid (Nyquist modes zeroed).
    pub fn analyze_padded_pair(&self, p: &[f64], q: &[f64]) -> (SpectralField, SpectralField) {
        let n = self.grid.n();
        let m = self.m;
        let mut buf: Vec<Complex64> = p.iter().zip(q).map(|(&x, &y)| Complex64::new(x, y)).collect();
        let mut scratch = Vec::new();
        fft2(&mut buf, m, &self.fwd_pad, &mut scratch);
        let norm = 1.0 / (m * m) as f64;
        let mut out_p = SpectralField::zeros(&self.grid);
        let mut out_q = SpectralField::zeros(&self.grid);
        for row in 0..n {
            if self.grid.is_nyquist(row) {
                continue;
            }
            let prow = pad_index(row, n, m);
            let nrow = (m - prow) % m;
            for col in 0..n {
                if self.grid.is_nyquist(col) {
                    continue;
                }
                let pcol = pad_index(col, n, m);
                let ncol = (m - pcol) % m;
                let z = buf[prow * m + pcol];
                let zc = buf[nrow * m + ncol].conj();
                let idx = row * n + col;
                out_p.coeffs[idx] = 0.5 * (z + zc) * norm;
                out_q.coeffs[idx] = Complex64::new(0.0, -0.5) * (z - zc) * norm;
            }
        }
        (out_p, out_q)
    }

    /// Alias-free spectral coefficients of the pointwise product `a·b`,
    /// truncated to the base grid.
    pub fn dealiased_product(&self, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
        a.check_grid(&self.grid)?;
        b.check_grid(&self.grid)?;
        let (pa, pb) = self.synthesize_padded_pair(a, b);
        let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let zeros = vec![0.0; prod.len()];
        Ok(self.analyze_padded_pair(&prod, &zeros).0)
    }
}

#[inline]
fn pad_index(i: usize, n: usize, m: usize) -> usize {
    if i < n / 2 {
        i
    } else {
        i + (m - n)
    }
}

const DUMP_MAGIC: &[u8; 4] = b"GHFD";

/// Write a real field as `GHFD | u32 n | u32 0 | u32 0 | n² little-endian f64`
/// (16-byte header, row-major samples).
pub fn write_field_dump(path: &Path, field: &RealField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(field.n() as u32).to_le_bytes())?;
    w.write_all(&[0u8; 8])?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_dump(path: &Path) -> Result<RealField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Data(format!("{}: bad field dump magic", path.display())));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * n * 8 {
        return Err(Error::Data(format!(
            "{}: expected {} samples, found {} bytes",
            path.display(),
            n * n,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect::<Vec<_>>();
    let grid = GridSpec::new(n, 1.0)?;
    RealField::from_values(&grid, values)
}
