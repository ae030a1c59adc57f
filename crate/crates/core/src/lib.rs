//! Compiler from dimensioned physics descriptions to Kalman filter sources.
//!
//! The pipeline is: [`frontend`] parses `.nt` text, [`dimension`] checks
//! units, [`model`] extracts a state-space model (linear or not), and
//! [`codegen`] lowers it to C99. [`autodiff`] supplies reverse-mode
//! Jacobian programs, [`sim`] holds the interpreted reference filter and
//! the simulated experiments, and [`conformance`] compiles generated
//! filters and runs them over traces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod codegen;
pub mod conformance;
pub mod corpus;
pub mod diagnostic;
pub mod dimension;
pub mod frontend;
pub mod model;
pub mod sim;

pub use diagnostic::{Diagnostic, Severity, Span};
pub use nalgebra;
