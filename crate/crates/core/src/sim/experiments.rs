use std::fmt::{self, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::corpus;
use crate::frontend::{format_number, parse_source};
use crate::model::{build_model, BuildOptions, StateSpaceModel};
use crate::sim::{
    run_reference, score, simulate_diff_drive, simulate_pendulum, stroll_script, DiffDriveParams, PendulumParams,
    ScoreLayout, ScoreReport, SimError, SimulationTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Undamped pendulum, filter started at the true state.
    Pendulum1,
    /// Undamped pendulum, filter started at twice the true angle.
    Pendulum2,
    Damped,
    /// Differential-drive stroll with noisy position fixes.
    Stroll,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Pendulum1, Experiment::Pendulum2, Experiment::Damped, Experiment::Stroll];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Pendulum1 => "pendulum1",
            Experiment::Pendulum2 => "pendulum2",
            Experiment::Damped => "damped",
            Experiment::Stroll => "stroll",
        }
    }

    pub fn default_config(self) -> ExperimentConfig {
        let pendulum = ExperimentConfig {
            seeds: (0..10).collect(),
            steps: 2000,
            dt: 0.01,
            length: 0.2,
            damping: 0.0,
            mass: 1.0,
            theta0_deg: 20.0,
            filter_theta0_deg: 20.0,
            process_noise_var: 0.005,
            measure_noise_var: 0.5,
            filter_q: Some(vec![1e-6, 0.2]),
            p0: 0.01,
            wheel_base: 0.16,
        };
        match self {
            Experiment::Pendulum1 => pendulum,
            Experiment::Pendulum2 => ExperimentConfig {
                theta0_deg: 30.0,
                filter_theta0_deg: 60.0,
                measure_noise_var: 0.8,
                p0: 1.0,
                ..pendulum
            },
            Experiment::Damped => ExperimentConfig {
                length: 0.5,
                damping: 0.8,
                theta0_deg: 30.0,
                filter_theta0_deg: 30.0,
                process_noise_var: 0.0,
                measure_noise_var: 0.8,
                filter_q: None,
                ..pendulum
            },
            Experiment::Stroll => ExperimentConfig {
                steps: 0,
                dt: 0.1,
                theta0_deg: 0.0,
                filter_theta0_deg: 0.0,
                process_noise_var: 0.0,
                measure_noise_var: 0.1,
                filter_q: None,
                p0: 0.01,
                ..pendulum
            },
        }
    }

    fn model_source(self) -> (&'static str, &'static [&'static str], &'static str) {
        match self {
            Experiment::Pendulum1 | Experiment::Pendulum2 => (corpus::PENDULUM, &["pendulum_process"], "pendulum_measure"),
            Experiment::Damped => (corpus::PENDULUM_DAMPED, &["pendulum_process"], "pendulum_measure"),
            Experiment::Stroll => {
                (corpus::TURTLEBOT, &["turtlebot_straight", "turtlebot_rotate"], "turtlebot_measure")
            }
        }
    }

    /// The filter model with the experiment's noise settings applied.
    pub fn model(self, cfg: &ExperimentConfig) -> Result<StateSpaceModel, ExperimentError> {
        let (src, process, measure) = self.model_source();
        let d = parse_source(src).expect("bundled model parses");
        let m = build_model(&d, process, measure, BuildOptions::default()).expect("bundled model builds").model;
        let q: Vec<f64> = match &cfg.filter_q {
            Some(q) if q.len() != m.state_dim() => {
                return Err(ExperimentError::Config(format!("filter_q needs {} values", m.state_dim())))
            }
            Some(q) => q.clone(),
            None => m.q.diagonal().iter().copied().collect(),
        };
        let r = vec![cfg.measure_noise_var; m.measurement_dim()];
        Ok(m.with_noise(&q, &r))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            format!("unknown experiment `{s}` (expected one of: pendulum1, pendulum2, damped, stroll)")
        })
    }
}

/// Tunable experiment parameters; overridable from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Simulation steps; ignored by the stroll, whose script fixes its length.
    pub steps: usize,
    pub dt: f64,
    pub length: f64,
    pub damping: f64,
    pub mass: f64,
    pub theta0_deg: f64,
    pub filter_theta0_deg: f64,
    pub process_noise_var: f64,
    pub measure_noise_var: f64,
    /// Diagonal of the filter's Q; `None` keeps the model annotations.
    pub filter_q: Option<Vec<f64>>,
    /// Initial covariance is `p0 * I`.
    pub p0: f64,
    pub wheel_base: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ExperimentError> {
    v.parse().map_err(|_| ExperimentError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ExperimentError> {
    v.split(',').map(|x| num(key, x.trim())).collect()
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 14] = [
        "seeds",
        "seed_count",
        "steps",
        "dt",
        "length",
        "damping",
        "mass",
        "theta0_deg",
        "filter_theta0_deg",
        "process_noise",
        "measure_noise",
        "filter_q",
        "p0",
        "wheel_base",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let v = value.trim();
        match key.trim() {
            "seeds" => self.seeds = list(key, v)?,
            "seed_count" => self.seeds = (0..num::<u64>(key, v)?).collect(),
            "steps" => self.steps = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "length" => self.length = num(key, v)?,
            "damping" => self.damping = num(key, v)?,
            "mass" => self.mass = num(key, v)?,
            "theta0_deg" => self.theta0_deg = num(key, v)?,
            "filter_theta0_deg" => self.filter_theta0_deg = num(key, v)?,
            "process_noise" => self.process_noise_var = num(key, v)?,
            "measure_noise" => self.measure_noise_var = num(key, v)?,
            "filter_q" => self.filter_q = Some(list(key, v)?),
            "p0" => self.p0 = num(key, v)?,
            "wheel_base" => self.wheel_base = num(key, v)?,
            other => {
                return Err(ExperimentError::Config(format!(
                    "unknown key `{other}` (known: {})",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k, v)?;
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("at least one seed is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub trace: SimulationTrace,
    pub estimates: Vec<Vec<f64>>,
    pub report: ScoreReport,
    /// Scores over the second half of the run.
    pub second_half: ScoreReport,
    /// The same trace filtered from the true initial state (second
    /// pendulum experiment only).
    pub baseline: Option<ScoreReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub state_names: Vec<String>,
    pub seeds: Vec<SeedOutcome>,
}

fn mean_of(reports: impl Iterator<Item = ScoreReport> + Clone) -> ScoreReport {
    let n = reports.clone().count() as f64;
    let first = reports.clone().next().expect("at least one report");
    let mut mse = vec![0.0; first.mse.len()];
    let (mut euc, mut yaw) = (0.0, 0.0);
    for r in reports {
        mse.iter_mut().zip(&r.mse).for_each(|(a, b)| *a += b / n);
        euc += r.euclidean.unwrap_or(0.0) / n;
        yaw += r.yaw_deg.unwrap_or(0.0) / n;
    }
    ScoreReport { mse, euclidean: first.euclidean.map(|_| euc), yaw_deg: first.yaw_deg.map(|_| yaw) }
}

impl ExperimentOutcome {
    pub fn mean(&self) -> ScoreReport {
        mean_of(self.seeds.iter().map(|s| s.report.clone()))
    }

    pub fn mean_second_half(&self) -> ScoreReport {
        mean_of(self.seeds.iter().map(|s| s.second_half.clone()))
    }

    pub fn mean_baseline(&self) -> Option<ScoreReport> {
        self.seeds.iter().all(|s| s.baseline.is_some()).then(|| mean_of(self.seeds.iter().filter_map(|s| s.baseline.clone())))
    }

    /// Human-readable summary, one line per metric.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment {} over {} seed(s)", self.experiment, self.seeds.len());
        let line = |out: &mut String, label: &str, r: &ScoreReport| {
            for (name, v) in self.state_names.iter().zip(&r.mse) {
                let _ = writeln!(out, "{label} mse[{name}] = {v:.6}");
            }
            if let Some(e) = r.euclidean {
                let _ = writeln!(out, "{label} euclidean_error_m = {e:.6}");
            }
            if let Some(y) = r.yaw_deg {
                let _ = writeln!(out, "{label} yaw_error_deg = {y:.4}");
            }
        };
        line(&mut out, "mean", &self.mean());
        line(&mut out, "second_half", &self.mean_second_half());
        if let Some(b) = self.mean_baseline() {
            line(&mut out, "true_init", &b);
        }
        out
    }
}

fn layout(exp: Experiment) -> ScoreLayout {
    match exp {
        Experiment::Stroll => ScoreLayout { position: Some((0, 1)), yaw: Some(2) },
        _ => ScoreLayout::default(),
    }
}

/// Simulates one seed of an experiment with the model's extras.
pub fn simulate(exp: Experiment, cfg: &ExperimentConfig, model: &StateSpaceModel, seed: u64) -> Result<SimulationTrace, SimError> {
    match exp {
        Experiment::Stroll => {
            let p = DiffDriveParams {
                wheel_base: cfg.wheel_base,
                dt: cfg.dt,
                measure_noise_var: cfg.measure_noise_var,
                seed,
                start: [0.0, 0.0, cfg.theta0_deg.to_radians()],
            };
            simulate_diff_drive(&p, &stroll_script(&p), &model.vars.extras)
        }
        _ => {
            let p = PendulumParams {
                length: cfg.length,
                damping: cfg.damping,
                mass: cfg.mass,
                theta0: cfg.theta0_deg.to_radians(),
                omega0: 0.0,
                dt: cfg.dt,
                steps: cfg.steps,
                process_noise_var: cfg.process_noise_var,
                measure_noise_var: cfg.measure_noise_var,
                seed,
            };
            simulate_pendulum(&p, &model.vars.extras)
        }
    }
}

/// Filter start state for an experiment.
pub fn filter_start(exp: Experiment, cfg: &ExperimentConfig) -> Vec<f64> {
    match exp {
        Experiment::Stroll => vec![0.0, 0.0, cfg.filter_theta0_deg.to_radians()],
        _ => vec![cfg.filter_theta0_deg.to_radians(), 0.0],
    }
}

pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    if cfg.seeds.is_empty() {
        return Err(ExperimentError::Config("at least one seed is required".into()));
    }
    let model = exp.model(cfg)?;
    let n = model.state_dim();
    let p0 = DMatrix::identity(n, n) * cfg.p0;
    let s0 = filter_start(exp, cfg);
    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let trace = simulate(exp, cfg, &model, seed)?;
        if trace.len() < 2 {
            return Err(ExperimentError::Config("at least two steps are required".into()));
        }
        let input = (&trace).into();
        let run = run_reference(&model, &input, &s0, &p0)?;
        let report = score(&trace.truth, &run.estimates, layout(exp))?;
        let h = trace.len() / 2;
        let second_half = score(&trace.truth[h..], &run.estimates[h..], layout(exp))?;
        let baseline = if exp == Experiment::Pendulum2 {
            let truth0 = vec![cfg.theta0_deg.to_radians(), 0.0];
            let good = run_reference(&model, &input, &truth0, &p0)?;
            Some(score(&trace.truth, &good.estimates, layout(exp))?)
        } else {
            None
        };
        seeds.push(SeedOutcome { seed, trace, estimates: run.estimates, report, second_half, baseline });
    }
    Ok(ExperimentOutcome { experiment: exp, config: cfg.clone(), state_names: model.vars.state.clone(), seeds })
}

/// Plot CSVs for the first seed: time, truth, estimate and measurement columns.
pub fn plot_data(outcome: &ExperimentOutcome) -> Vec<(String, String)> {
    let Some(first) = outcome.seeds.first() else { return vec![] };
    let names = &outcome.state_names;
    let t = &first.trace;
    let z = t.measurements.first().map_or(0, Vec::len);
    let mut csv = String::from("t");
    for n in names {
        let _ = write!(csv, ",{n}_true,{n}_est");
    }
    for i in 0..z {
        let _ = write!(csv, ",z_{i}");
    }
    csv.push('\n');
    for k in 0..t.len() {
        csv.push_str(&format_number(t.times[k]));
        for i in 0..names.len() {
            let _ = write!(csv, ",{},{}", format_number(t.truth[k][i]), format_number(first.estimates[k][i]));
        }
        for v in &t.measurements[k] {
            let _ = write!(csv, ",{}", format_number(*v));
        }
        csv.push('\n');
    }
    vec![(format!("{}_seed{}.csv", outcome.experiment, first.seed), csv)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides() {
        let mut c = Experiment::Pendulum1.default_config();
        c.apply_text("# tuned\nsteps = 50\nseeds = 3, 4\nfilter_q = 1e-6, 0.1\n").unwrap();
        assert_eq!(c.steps, 50);
        assert_eq!(c.seeds, [3, 4]);
        assert_eq!(c.filter_q, Some(vec![1e-6, 0.1]));
        assert!(c.apply_text("nope = 1").is_err());
        assert!(c.apply_text("steps").is_err());
        assert!(c.apply_text("dt = fast").is_err());
    }

    #[test]
    fn names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("pendulum3".parse::<Experiment>().is_err());
    }

    #[test]
    fn short_run_and_plot() {
        let mut c = Experiment::Pendulum2.default_config();
        c.apply_text("steps = 20\nseed_count = 2").unwrap();
        let out = run_experiment(Experiment::Pendulum2, &c).unwrap();
        assert_eq!(out.seeds.len(), 2);
        assert!(out.mean_baseline().is_some());
        assert!(out.summary().contains("true_init mse[theta]"));
        let plots = plot_data(&out);
        assert_eq!(plots[0].0, "pendulum2_seed0.csv");
        assert!(plots[0].1.starts_with("t,theta_true,theta_est,dtheta_true,dtheta_est,z_0\n"));
        assert_eq!(plots[0].1.lines().count(), 21);
    }

    #[test]
    fn wrong_q_length() {
        let mut c = Experiment::Stroll.default_config();
        c.filter_q = Some(vec![1.0]);
        assert!(matches!(run_experiment(Experiment::Stroll, &c), Err(ExperimentError::Config(_))));
    }
}
