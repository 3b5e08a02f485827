//! Error type shared by all modules.

use std::path::PathBuf;

/// Coarse classification used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters, configs or inconsistent inputs.
    Validation,
    /// A computation failed (integration, fit, rank, aliasing, steady state).
    Numerical,
    /// Reading or writing files, or malformed file contents.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("spectrum grids do not match: {0}")]
    GridMismatch(String),

    #[error(
        "integration failed at t = {t:.6e} s after {steps} accepted / {rejected} rejected steps \
         (last step {last_step:.3e} s): {reason}"
    )]
    Integration {
        t: f64,
        steps: usize,
        rejected: usize,
        last_step: f64,
        reason: String,
    },

    #[error(
        "steady state not reached: drive-tone amplitudes changed by {change:.3e} (relative) \
         between consecutive windows, tolerance {tolerance:.1e}"
    )]
    NotSteady { change: f64, tolerance: f64 },

    #[error("aliasing check failed for |a|^{power} a: doubling the grid changed the result by {change:.3e}")]
    Aliasing { power: usize, change: f64 },

    #[error("harmonic-balance matrix is rank deficient: rank {rank} of {columns}, singular values {singular_values:?}, cutoff {cutoff:.3e}")]
    RankDeficient {
        rank: usize,
        columns: usize,
        singular_values: Vec<f64>,
        cutoff: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (final cost {cost:.6e}); cost trace {trace:?}")]
    NoConvergence {
        what: String,
        iterations: usize,
        cost: f64,
        trace: Vec<f64>,
    },

    #[error("no resonance found: phase swing {swing:.3} rad around the fitted circle is below pi/2")]
    NoResonance { swing: f64 },

    #[error("non-physical result: {0}")]
    NonPhysical(String),

    #[error("sweep point {index} (axis value {axis:.6e}): {source}")]
    SweepPoint {
        index: usize,
        axis: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Invalid { .. } | Error::GridMismatch(_) | Error::Config { .. } => ErrorClass::Validation,
            Error::NonPhysical(_) => ErrorClass::Validation,
            Error::Integration { .. }
            | Error::NotSteady { .. }
            | Error::Aliasing { .. }
            | Error::RankDeficient { .. }
            | Error::NoConvergence { .. }
            | Error::NoResonance { .. } => ErrorClass::Numerical,
            Error::SweepPoint { source, .. } => source.class(),
            Error::Io { .. } | Error::Format { .. } => ErrorClass::Io,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
