use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error on line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("displacement undefined: pump {pump} is resonant with a lossless cavity")]
    UndefinedDisplacement { pump: usize },

    #[error("outside validity: {0}")]
    OutOfValidity(String),

    #[error("Fock space dimension {total} exceeds cap {cap}")]
    DimensionCap { total: usize, cap: usize },

    #[error("invalid Fock space: {0}")]
    InvalidSpace(String),

    #[error("time step {dt} exceeds stability bound {bound} (0.01 / f_max, f_max = {f_max})")]
    StepTooLarge { dt: f64, bound: f64, f_max: f64 },

    #[error("truncation monitor {monitor:.3e} exceeds {threshold:.1e} at t = {t}; increase dimensions")]
    Truncation { monitor: f64, threshold: f64, t: f64 },

    #[error("invariant violated at t = {t}: {what}")]
    Invariant { t: f64, what: String },

    #[error("covariance is unphysical: min eigenvalue of sigma + i*Omega/2 is {min_eig:.3e}")]
    Unphysical { min_eig: f64 },

    #[error("no stable steady state: drift spectral abscissa is {abscissa:.3e}")]
    NotHurwitz { abscissa: f64 },

    #[error("Lyapunov residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    LyapunovResidual { residual: f64, tolerance: f64 },

    #[error("residual generator terms fit no Hamiltonian or Lindblad pattern: {detail} (terms {terms:?})")]
    ResidualTerms { detail: String, terms: Vec<usize> },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
