//! JSON run configuration.
//!
//! Every section is optional except `model.rho_bar`. Unknown keys are
//! rejected. Example:
//!
//! ```json
//! {
//!   "model": { "rho_bar": 0.25, "horizon": 10 },
//!   "grid": { "n": 128, "length": 256 },
//!   "data": { "kind": "gaussian", "amplitude": 1e-3, "width": 8, "seed": 1 },
//!   "picard": { "tol": 1e-10, "boundary_mode": "exact" },
//!   "norm": { "k": 3, "c": "auto" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{self, ModeSpec};
use crate::diagnostics::SweepSolver;
use crate::error::{Error, Result};
use crate::grid::{read_field_dump, GridSpec, SpectralField, SpectralTransform};
use crate::model::ModelParams;
use crate::nonlinear::{data_weight_norm, default_time_nodes, BoundaryMode, NonlinearForm, PicardConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub norm: NormSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "one")]
    pub rho_max: f64,
    pub rho_bar: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "ten")]
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: default_n(),
            length: default_length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    #[default]
    Gaussian,
    Modes,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub kind: DataKind,
    /// Amplitude of `ψ₀` (gaussian kind).
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Amplitude of `φ_T`; defaults to `amplitude`.
    #[serde(default)]
    pub phi_amplitude: Option<f64>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub remove_mean: bool,
    /// Coefficients of `ψ̂₀` (modes kind).
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
    /// Coefficients of `φ̂_T` (modes kind).
    #[serde(default)]
    pub phi_modes: Vec<ModeSpec>,
    /// Field dumps (file kind); a missing `phi_file` means `φ_T = 0`.
    #[serde(default)]
    pub psi_file: Option<PathBuf>,
    #[serde(default)]
    pub phi_file: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            kind: DataKind::Gaussian,
            amplitude: default_amplitude(),
            phi_amplitude: None,
            width: default_width(),
            seed: 0,
            remove_mean: false,
            modes: Vec::new(),
            phi_modes: Vec::new(),
            psi_file: None,
            phi_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    /// Defaults to `max(128, ⌈16T⌉)`.
    #[serde(default)]
    pub time_nodes: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default)]
    pub form: NonlinearForm,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            time_nodes: None,
            tol: default_tol(),
            max_iter: default_max_iter(),
            boundary_mode: BoundaryMode::Exact,
            form: NonlinearForm::Published,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// `"auto"` or an explicit positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormConstant {
    Auto(AutoKeyword),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "auto")]
    pub c: NormConstant,
}

impl Default for NormSection {
    fn default() -> Self {
        Self {
            k: default_k(),
            c: auto(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

/// Per-subcommand knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Number of evenly spaced output samples for `linear` / `decay-fit`
    /// with the linear solver.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Decay-fit window; defaults to `(2, min(50, T/2))`.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// Solver for `decay-fit` (default linear) and `viscosity-sweep`
    /// (default nonlinear).
    #[serde(default)]
    pub solver: Option<SweepSolver>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// Densities for `stability-map`; defaults to `0.05ρ_max, 0.10ρ_max, …, 0.95ρ_max`.
    #[serde(default)]
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Planar-wave numbers for `dispersion`.
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "default_beta")]
    pub beta: u8,
    /// Ratios `b/a` scanned for the wave existence region.
    #[serde(default)]
    pub ratio_grid: Vec<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            window: None,
            solver: None,
            sigmas: default_sigmas(),
            rho_grid: Vec::new(),
            directions: default_directions(),
            a: 1.0,
            b: 0.0,
            beta: default_beta(),
            ratio_grid: Vec::new(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn default_n() -> usize {
    256
}
fn default_length() -> f64 {
    256.0
}
fn default_amplitude() -> f64 {
    1e-3
}
fn default_width() -> f64 {
    8.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    50
}
fn default_k() -> f64 {
    3.0
}
fn auto() -> NormConstant {
    NormConstant::Auto(AutoKeyword::Auto)
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}
fn default_samples() -> usize {
    101
}
fn default_sigmas() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn default_directions() -> usize {
    180
}
fn default_beta() -> u8 {
    2
}

/// Parse and validate a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn keyed(key: &str, e: Error) -> Error {
    match e {
        Error::InvalidParams(m) | Error::Config(m) => Error::Config(format!("{key}: {m}")),
        other => other,
    }
}

impl RunConfig {
    /// Minimal configuration with every default filled in.
    pub fn with_rho_bar(rho_bar: f64) -> Self {
        Self {
            model: ModelSection {
                rho_max: 1.0,
                rho_bar,
                sigma: 0.0,
                horizon: 10.0,
            },
            grid: GridSection::default(),
            data: DataSection::default(),
            picard: PicardSection::default(),
            norm: NormSection::default(),
            output: OutputSection::default(),
            experiment: ExperimentSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        self.grid()?;
        // "auto" resolves to 0 without a spectral gap; that only matters to
        // the subcommands that build a Picard configuration
        let mut picard = self.build_picard(&params);
        if matches!(self.norm.c, NormConstant::Auto(_)) && picard.norm_c == 0.0 {
            picard.norm_c = 1.0;
        }
        picard.validate().map_err(|e| keyed("picard/norm", e))?;
        if !(self.data.width > 0.0) {
            return Err(Error::Config(format!("data.width must be positive, got {}", self.data.width)));
        }
        if !self.data.amplitude.is_finite() {
            return Err(Error::Config("data.amplitude must be finite".into()));
        }
        if self.experiment.beta != 0 && self.experiment.beta != 2 {
            return Err(Error::Config(format!(
                "experiment.beta must be 0 or 2, got {}",
                self.experiment.beta
            )));
        }
        if self.experiment.samples < 2 {
            return Err(Error::Config("experiment.samples must be at least 2".into()));
        }
        if self.experiment.sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("experiment.sigmas must be non-negative".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.rho_max, m.rho_bar, m.sigma, m.horizon).map_err(|e| keyed("model", e))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.length).map_err(|e| keyed("grid", e))
    }

    /// `norm.c` with `"auto"` resolved to `½√(ρ̄(f−ρ̄))`.
    pub fn norm_c(&self, params: &ModelParams) -> f64 {
        match self.norm.c {
            NormConstant::Auto(_) => params.default_norm_c(),
            NormConstant::Value(v) => v,
        }
    }

    pub fn picard_config(&self, params: &ModelParams) -> Result<PicardConfig> {
        let cfg = self.build_picard(params);
        cfg.validate().map_err(|e| keyed("picard/norm", e))?;
        Ok(cfg)
    }

    fn build_picard(&self, params: &ModelParams) -> PicardConfig {
        PicardConfig {
            time_nodes: self.picard.time_nodes.unwrap_or_else(|| default_time_nodes(params.horizon)),
            tol: self.picard.tol,
            max_iter: self.picard.max_iter,
            norm_order: self.norm.k,
            norm_c: self.norm_c(params),
            boundary_mode: self.picard.boundary_mode,
            form: self.picard.form,
        }
    }
}

/// Initial and terminal data in spectral form.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub psi0: SpectralField,
    pub phi_t: SpectralField,
    /// `‖(1+|ξ|)^k ψ̂₀‖_∞ + ‖(1+|ξ|)^k |ξ| φ̂_T‖_∞`
    pub weight_norm: f64,
}

pub fn make_initial_data(config: &RunConfig, grid: &GridSpec) -> Result<InitialData> {
    let d = &config.data;
    let (psi0, phi_t) = match d.kind {
        DataKind::Gaussian => {
            let pa = d.phi_amplitude.unwrap_or(d.amplitude);
            (
                data::gaussian(grid, d.amplitude, d.width, data::seeded_center(grid, d.seed), d.remove_mean)?,
                data::gaussian(
                    grid,
                    pa,
                    d.width,
                    data::seeded_center(grid, d.seed.wrapping_add(1)),
                    d.remove_mean,
                )?,
            )
        }
        DataKind::Modes => (data::from_modes(grid, &d.modes)?, data::from_modes(grid, &d.phi_modes)?),
        DataKind::File => {
            let tr = SpectralTransform::new(grid);
            let load = |p: &Path| -> Result<SpectralField> {
                let f = read_field_dump(p)?;
                if f.n() != grid.n() {
                    return Err(Error::Data(format!(
                        "{}: dump has n = {}, grid has n = {}",
                        p.display(),
                        f.n(),
                        grid.n()
                    )));
                }
                Ok(tr.forward(&f)?.without_nyquist(grid))
            };
            let psi_path = d
                .psi_file
                .as_deref()
                .ok_or_else(|| Error::Config("data.psi_file is required for kind \"file\"".into()))?;
            let phi = match d.phi_file.as_deref() {
                Some(p) => load(p)?,
                None => SpectralField::zeros(grid),
            };
            (load(psi_path)?, phi)
        }
    };
    let weight_norm = data_weight_norm(&psi0, &phi_t, grid, config.norm.k);
    Ok(InitialData {
        psi0,
        phi_t,
        weight_norm,
    })
}
