use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver, controller and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("dither series did not converge at order {order} (last term {last_term:e})")]
    Truncation { order: usize, last_term: f64 },

    #[error("demodulation requires a nonzero perturbation amplitude")]
    ZeroAmplitude,

    #[error("similarity root not bracketed for Stefan number {0}")]
    Bracket(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("settle window too short: {periods:.2} dither periods (need at least 3)")]
    WindowTooShort { periods: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
