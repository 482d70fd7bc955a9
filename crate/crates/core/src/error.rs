use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: expected {expected} modes per axis, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    /// θ vanishes, so A(ξ) has a repeated eigenvalue and no eigenbasis.
    #[error("degenerate mode at xi = ({}, {}): |theta| = {theta_abs:e}", xi[0], xi[1])]
    DegenerateMode { xi: [f64; 2], theta_abs: f64 },

    /// The per-mode boundary system is (numerically) singular.
    #[error("resonant mode at xi = ({}, {}): |det| = {det_abs:e}", xi[0], xi[1])]
    ResonantMode { xi: [f64; 2], det_abs: f64 },

    #[error("Picard iteration did not contract after {iterations} iterations (last distance {last_distance:e})")]
    NoContraction { iterations: usize, last_distance: f64 },

    #[error("quadrature under-resolved: doubling the time grid changed the result by {change:e} (tol {tol:e})")]
    QuadratureUnderResolved { change: f64, tol: f64 },

    #[error("wave ({a}, {b}) is not representable on the periodic grid")]
    IncommensurateWave { a: f64, b: f64 },

    #[error("fit window holds {samples} samples, at least {required} required")]
    WindowTooNarrow { samples: usize, required: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name, used in run manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::DegenerateMode { .. } => "DegenerateMode",
            Error::ResonantMode { .. } => "ResonantMode",
            Error::NoContraction { .. } => "NoContraction",
            Error::QuadratureUnderResolved { .. } => "QuadratureUnderResolved",
            Error::IncommensurateWave { .. } => "IncommensurateWave",
            Error::WindowTooNarrow { .. } => "WindowTooNarrow",
            Error::Data(_) => "DataError",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}
