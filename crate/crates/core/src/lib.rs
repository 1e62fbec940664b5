//! Numerics for the open quantum Rabi model with bosonic damping and dephasing.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameter records and unit conventions.
//! * [`operators`]: truncated Fock/qubit operators and the model Hamiltonians.
//! * [`liouvillian`]: vectorized Lindblad generators, steady states, spectral edges.
//! * [`meanfield`]: mean-field equations of motion and their steady branches.
//! * [`hierarchy`]: the non-Hermitian spin-k/2 blocks governing k-th order moments.
//! * [`moments`]: normal-ordered moment algebra and the block-triangular moment generator.
//! * [`analytics`]: closed-form second-order steady moments and the qubit magnetization.
//!
//! Dense and sparse linear algebra is delegated to [`faer`]; the shift-invert
//! eigensolver built on top of it lives in [`linalg`].

pub mod analytics;
pub mod error;
pub mod hierarchy;
pub mod linalg;
pub mod liouvillian;
pub mod meanfield;
pub mod model;
pub mod moments;
pub mod operators;

pub use error::{Error, Result};
pub use model::{Eta, ModelParams, QubitBranch};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
