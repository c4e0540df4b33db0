//! Quantum state reconstruction from informationally complete POVM data.
//!
//! The pipeline: simulate (or ingest) Pauli-4 measurement outcomes of a
//! target state, fit an autoregressive attention model to the outcome
//! distribution, invert the dual frame to recover the density matrix, and
//! score the reconstruction with classical and quantum fidelity.
//!
//! Modules mirror the pipeline stages:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition, PSD
//!   square roots.
//! - [`states`]: GHZ and faulty-qubit target states in a rank-structured
//!   form that scales to large qubit counts.
//! - [`povm`]: the Pauli-4 frame, exact probabilities, sampling, dual
//!   elements and the dataset file format.
//! - [`model`]: the autoregressive Transformer, exact likelihoods and
//!   sampling, hand-rolled gradients, Adam training, checkpoints.
//! - [`fidelity`]: classical fidelity (exact and sampled) and quantum
//!   fidelity with PSD projection.
//! - [`reconstruct`]: density matrices from models, empirical frequencies
//!   and iterative maximum likelihood.
//! - [`cli`]: the `aqt` command-line harness.

pub mod cli;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod povm;
pub mod reconstruct;
pub mod rng;
pub mod states;

pub use error::{AqtError, Result};
