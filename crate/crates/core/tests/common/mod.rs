#![allow(dead_code)]
pub mod exprgen;

use kfsynth::corpus;

/// Hand-labeled mutations of the pendulum description: (label, source,
/// number of dimension diagnostics the checker must report).
pub fn dimension_mutations() -> Vec<(&'static str, String, usize)> {
    let base = corpus::PENDULUM_PLAIN;
    let theta = "theta ~ theta + dtheta * dt";
    let omega = "dtheta ~ dtheta - g/L * sin(theta) * dt";
    let gyro = "gyro_z ~ dtheta";
    let m = |label, pairs: &[(&str, &str)], n| {
        let mut s = base.to_string();
        for (from, to) in pairs {
            assert!(s.contains(from), "{label}: `{from}` not in base text");
            s = s.replacen(from, to, 1);
        }
        (label, s, n)
    };
    vec![
        m("angle plus rate", &[(theta, "theta ~ theta + dtheta")], 1),
        m("angle plus time", &[(theta, "theta ~ theta + dt")], 1),
        m("missing dt in rate update", &[(omega, "dtheta ~ dtheta - g/L * sin(theta)")], 1),
        m("missing 1/L", &[(omega, "dtheta ~ dtheta - g * sin(theta) * dt")], 1),
        m("gyro measures angle", &[(gyro, "gyro_z ~ theta")], 1),
        m("sin of angle-time", &[(omega, "dtheta ~ dtheta - g/L * sin(theta * dt) * dt")], 1),
        m(
            "two bad process constraints",
            &[(theta, "theta ~ theta + dtheta"), (omega, "dtheta ~ dtheta - g * dt")],
            2,
        ),
        m("L typed as time", &[("L\t\t: distance", "L\t\t: time")], 1),
        m("dt typed as distance", &[("dt\t\t: time,\n                  L", "dt\t\t: distance,\n                  L")], 2),
        m("gyro typed as angle", &[("gyro_z\t: angularRate", "gyro_z\t: angle")], 1),
        m("unknown signal", &[("gyro_z\t: angularRate", "gyro_z\t: angularVelocity")], 1),
        m("unknown unit on constant", &[("9.80665 ajf", "9.80665 furlongs")], 1),
        m("g given as a length", &[("9.80665 ajf", "9.80665 m")], 1),
        m("exp of a rate", &[(theta, "theta ~ theta + exp(dtheta) * dt")], 1),
        m("squared rate", &[(theta, "theta ~ theta + dtheta ** 2 * dt")], 1),
        m("sqrt of g/L", &[(omega, "dtheta ~ dtheta - sqrt(g/L) * sin(theta) * dt")], 1),
        m("log of time", &[(theta, "theta ~ theta + ln(dt)")], 1),
        m("gyro scaled by dt", &[(gyro, "gyro_z ~ dtheta * dt")], 1),
        m(
            "every constraint wrong",
            &[(theta, "theta ~ dt"), (omega, "dtheta ~ g"), (gyro, "gyro_z ~ dt")],
            3,
        ),
        m("rate plus angle", &[(omega, "dtheta ~ dtheta - g/L * sin(theta) * dt + theta")], 1),
    ]
}

use kfsynth::frontend::parse_source;
use kfsynth::model::{build_model, BuildOptions, StateSpaceModel};
use kfsynth::sim::{
    simulate, simulate_diff_drive, stroll_script, DiffDriveParams, Experiment, NoiseRng, TraceInput,
};

pub fn corpus_model(name: &str) -> StateSpaceModel {
    let c = corpus::model(name).expect("corpus entry");
    let d = parse_source(c.source).unwrap();
    build_model(&d, c.process, c.measure, BuildOptions::default()).unwrap().model
}

/// A corpus model with a trace of at least `steps` rows, start state and covariance.
pub struct Case {
    pub name: &'static str,
    pub model: StateSpaceModel,
    pub input: TraceInput,
    pub s0: Vec<f64>,
    pub p0: Vec<f64>,
}

fn identity(n: usize, scale: f64) -> Vec<f64> {
    (0..n * n).map(|i| if i % (n + 1) == 0 { scale } else { 0.0 }).collect()
}

pub fn corpus_cases(steps: usize) -> Vec<Case> {
    let mut out = vec![];
    for (name, exp) in [("pendulum", Experiment::Pendulum1), ("pendulum_damped", Experiment::Damped)] {
        let mut cfg = exp.default_config();
        cfg.steps = steps;
        let model = exp.model(&cfg).unwrap();
        let trace = simulate(exp, &cfg, &model, 7).unwrap();
        out.push(Case { name, s0: vec![0.1, 0.0], p0: identity(2, 0.01), input: (&trace).into(), model });
    }

    let model = corpus_model("turtlebot");
    let p = DiffDriveParams { measure_noise_var: 0.1, seed: 3, ..Default::default() };
    let mut script = vec![];
    let mut total = 0;
    while total < steps {
        for c in stroll_script(&p) {
            total += c.steps;
            script.push(c);
        }
    }
    let trace = simulate_diff_drive(&p, &script, &model.vars.extras).unwrap();
    out.push(Case { name: "turtlebot", s0: vec![0.0; 3], p0: identity(3, 0.01), input: (&trace).into(), model });

    let model = corpus_model("constant_velocity");
    let mut rng = NoiseRng::new(11);
    let (dt, mut x, v) = (0.01, 0.0, 1.5);
    let mut input = TraceInput { times: vec![], measurements: vec![], extras: vec![], modes: vec![] };
    for k in 0..steps {
        x += v * dt;
        input.times.push((k + 1) as f64 * dt);
        input.measurements.push(vec![x + rng.gaussian(0.0, 0.01)]);
        input.extras.push(vec![dt]);
        input.modes.push(0);
    }
    out.push(Case { name: "constant_velocity", s0: vec![0.0, 0.0], p0: identity(2, 1.0), input, model });
    out
}
