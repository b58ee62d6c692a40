//! Synthesis of finite-dimensional, reduced-order, internal-model-based
//! robust output-regulation controllers for boundary-controlled PDEs, with
//! closed-loop verification by simulation.
//!
//! The pipeline: build an extension operator lifting boundary data into the
//! domain, form the bounded-input extended system, stack an internal model
//! of the reference frequencies, stabilize by two Riccati solves, reduce the
//! observer by balanced truncation, and simulate the closed loop on a finer
//! mesh than the one used for design.

pub mod error;
pub mod matrix;
pub mod extended;
pub mod extension;
pub mod internal_model;
pub mod mesh_fem;
pub mod models;
pub mod numlin;
pub mod scenario;
pub mod signals;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use numlin::ComplexSpectrum;
