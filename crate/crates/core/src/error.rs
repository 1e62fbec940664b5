use thiserror::Error;

use crate::liouvillian::DensityMatrix;
use crate::operators::Basis;
use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} out of {range}: got {value}")]
    InvalidParam {
        field: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis mismatch: {left} vs {right}")]
    BasisMismatch { left: Basis, right: Basis },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("eta is infinite; use the reduced (soft-mode) model for this branch instead")]
    InfiniteEta,

    /// The generator has (at least) two eigenvalues within the degeneracy
    /// tolerance of zero. Both candidate states are returned.
    #[error("degenerate steady state: second eigenvalue {second} within tolerance of 0")]
    DegenerateSteadyState {
        second: C64,
        states: Box<[DensityMatrix; 2]>,
    },

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("moment block of order {order} is unstable (spectral abscissa {abscissa:e})")]
    UnstableOrder { order: usize, abscissa: f64 },

    #[error("second-order moments diverge: g = {g} is at or beyond the k=2 boundary {boundary}")]
    Divergence { g: f64, boundary: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stability predicate is not monotone on [{lo}, {hi}] (k = {k})")]
    NonMonotone { k: usize, lo: f64, hi: f64 },
}
