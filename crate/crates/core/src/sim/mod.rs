//! Simulation harness: ground-truth traces for the pendulum and
//! differential-drive systems, the interpreted reference filter, and scoring.

pub mod diffdrive;
pub mod experiments;
pub mod filter;
pub mod linalg;
pub mod pendulum;
pub mod rng;
pub mod score;
pub mod trace;

use thiserror::Error;

use crate::model::EvalError;

pub use experiments::{filter_start, plot_data, run_experiment, simulate, Experiment, ExperimentConfig, ExperimentError, ExperimentOutcome};
pub use diffdrive::{simulate_diff_drive, stroll_script, DiffDriveParams, DriveCommand};
pub use filter::{run_reference, FilterRun, ReferenceFilter};
pub use pendulum::{simulate_pendulum, PendulumParams, GRAVITY};
pub use linalg::{gauss_jordan_inverse, SINGULAR_PIVOT};
pub use rng::NoiseRng;
pub use score::{score, wrap_degrees, ScoreLayout, ScoreReport};
pub use trace::{estimates_to_csv, read_estimates_csv, read_trace_csv, NoiseSpec, SimulationTrace, TraceInput};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the simulator has no value for extra argument `{0}`")]
    UnknownExtra(String),
    #[error("wheel setpoints {v_right} and {v_left} are neither equal nor opposite")]
    ScriptRejected { v_right: f64, v_left: f64 },
    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch { what: String, expected: usize, found: usize },
    #[error("mode {mode} out of range (model has {count})")]
    BadMode { mode: usize, count: usize },
    #[error("trace has {} measurement and {} extra columns; the model needs {} and {}", measurements.1, extras.1, measurements.0, extras.0)]
    Arity { measurements: (usize, usize), extras: (usize, usize) },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
