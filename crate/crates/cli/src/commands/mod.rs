use std::fmt;

use dqrm::{Eta, ModelParams};

pub mod boundary;
pub mod meanfield;
pub mod observe;
pub mod spectrum;
pub mod steady;
pub mod sweep;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(dqrm::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl From<dqrm::Error> for CliError {
    fn from(e: dqrm::Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Shared settings for one invocation.
pub struct Ctx {
    pub omega0: f64,
    pub hash: String,
}

impl Ctx {
    /// Parameter record; validation failures are usage errors.
    pub fn params(&self, kappa: f64, gamma: f64, g: f64, eta: Eta) -> Result<ModelParams, CliError> {
        ModelParams::new(self.omega0, kappa, gamma, g, eta).map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// Short status tag for a solver error, free of commas.
pub fn status_of(e: &dqrm::Error) -> String {
    let tag = match e {
        dqrm::Error::DegenerateSteadyState { .. } => "degenerate",
        dqrm::Error::NotConverged { .. } => "not-converged",
        dqrm::Error::LinearAlgebra(_) => "linear-algebra",
        _ => "error",
    };
    tag.to_string()
}
