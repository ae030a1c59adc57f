//! Shared fixtures for the criterion benches.

use kfsynth::corpus;
use kfsynth::frontend::{parse_source, Description};
use kfsynth::model::{build_model, BuildOptions, StateSpaceModel};
use kfsynth::nalgebra::DMatrix;
use kfsynth::sim::{filter_start, simulate, Experiment, TraceInput};

pub fn description(name: &str) -> (Description, &'static [&'static str], &'static str) {
    let c = corpus::model(name).expect("corpus entry");
    (parse_source(c.source).expect("corpus parses"), c.process, c.measure)
}

pub fn model(name: &str) -> StateSpaceModel {
    let (d, p, m) = description(name);
    build_model(&d, p, m, BuildOptions::default()).expect("corpus builds").model
}

/// Experiment model, simulated input of `steps` rows, start state and covariance.
pub fn experiment(exp: Experiment, steps: usize) -> (StateSpaceModel, TraceInput, Vec<f64>, DMatrix<f64>) {
    let mut cfg = exp.default_config();
    cfg.steps = steps;
    let m = exp.model(&cfg).expect("experiment model");
    let trace = simulate(exp, &cfg, &m, 1).expect("simulation");
    let n = m.state_dim();
    let p0 = DMatrix::identity(n, n) * cfg.p0;
    let s0 = filter_start(exp, &cfg);
    (m, (&trace).into(), s0, p0)
}
