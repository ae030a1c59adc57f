use crate::sim::rng::NoiseRng;
use crate::sim::trace::{NoiseSpec, SimulationTrace};
use crate::sim::SimError;

/// Standard gravity, matching the `g` constant of the pendulum models.
pub const GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    /// Rod length (m).
    pub length: f64,
    /// Linear drag coefficient b (kg/s).
    pub damping: f64,
    /// Bob mass (kg).
    pub mass: f64,
    pub theta0: f64,
    pub omega0: f64,
    pub dt: f64,
    pub steps: usize,
    /// Variance of the Gaussian kick added to the angular rate each step.
    pub process_noise_var: f64,
    /// Variance of the gyro measurement noise.
    pub measure_noise_var: f64,
    pub seed: u64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            length: 1.0,
            damping: 0.0,
            mass: 1.0,
            theta0: 0.0,
            omega0: 0.0,
            dt: 0.01,
            steps: 1000,
            process_noise_var: 0.0,
            measure_noise_var: 0.0,
            seed: 0,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidParameter(what.to_string()));
        if !(self.length > 0.0) {
            return bad("pendulum length must be positive");
        }
        if !(self.mass > 0.0) {
            return bad("pendulum mass must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("time step must be positive");
        }
        if !(self.damping >= 0.0) || !(self.process_noise_var >= 0.0) || !(self.measure_noise_var >= 0.0) {
            return bad("damping and noise variances must be nonnegative");
        }
        Ok(())
    }

    /// Value of a named call-time argument of the pendulum models.
    pub fn extra(&self, name: &str) -> Option<f64> {
        match name {
            "dt" => Some(self.dt),
            "L" => Some(self.length),
            "b" => Some(self.damping),
            "m" => Some(self.mass),
            _ => None,
        }
    }

    fn accel(&self, theta: f64, omega: f64) -> f64 {
        -(self.damping / self.mass) * omega - GRAVITY / self.length * theta.sin()
    }

    /// One RK4 step of the noise-free dynamics.
    pub fn rk4(&self, theta: f64, omega: f64) -> (f64, f64) {
        let h = self.dt;
        let (k1t, k1w) = (omega, self.accel(theta, omega));
        let (k2t, k2w) = (omega + 0.5 * h * k1w, self.accel(theta + 0.5 * h * k1t, omega + 0.5 * h * k1w));
        let (k3t, k3w) = (omega + 0.5 * h * k2w, self.accel(theta + 0.5 * h * k2t, omega + 0.5 * h * k2w));
        let (k4t, k4w) = (omega + h * k3w, self.accel(theta + h * k3t, omega + h * k3w));
        (
            theta + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
            omega + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        )
    }

    /// Kinetic plus potential energy (J).
    pub fn energy(&self, theta: f64, omega: f64) -> f64 {
        0.5 * self.mass * (self.length * omega).powi(2) + self.mass * GRAVITY * self.length * (1.0 - theta.cos())
    }
}

/// Simulates the pendulum; truth is `[theta, omega]`, the measurement is a
/// noisy gyro reading of omega, and `extra_names` selects the per-step
/// extras (any of `dt`, `L`, `b`, `m`).
pub fn simulate_pendulum(p: &PendulumParams, extra_names: &[String]) -> Result<SimulationTrace, SimError> {
    p.validate()?;
    let extras: Vec<f64> = extra_names
        .iter()
        .map(|n| p.extra(n).ok_or_else(|| SimError::UnknownExtra(n.clone())))
        .collect::<Result<_, _>>()?;
    let mut rng = NoiseRng::new(p.seed);
    let (mut theta, mut omega) = (p.theta0, p.omega0);
    let mut trace = SimulationTrace {
        times: Vec::with_capacity(p.steps),
        truth: Vec::with_capacity(p.steps),
        measurements: Vec::with_capacity(p.steps),
        extras: vec![extras; p.steps],
        modes: vec![0; p.steps],
        initial: vec![p.theta0, p.omega0],
        seed: p.seed,
        noise: NoiseSpec { process: vec![0.0, p.process_noise_var], measurement: vec![p.measure_noise_var] },
    };
    for k in 0..p.steps {
        (theta, omega) = p.rk4(theta, omega);
        omega += rng.gaussian(0.0, p.process_noise_var);
        trace.times.push((k + 1) as f64 * p.dt);
        trace.truth.push(vec![theta, omega]);
        trace.measurements.push(vec![omega + rng.gaussian(0.0, p.measure_noise_var)]);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_stays_put() {
        let t = simulate_pendulum(&PendulumParams::default(), &[]).unwrap();
        assert!(t.truth.iter().chain(&t.measurements).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn small_angle_period() {
        let p = PendulumParams { theta0: 5f64.to_radians(), dt: 0.001, steps: 10_000, ..Default::default() };
        let t = simulate_pendulum(&p, &[]).unwrap();
        // Downward zero crossings of theta, linearly interpolated.
        let mut crossings = vec![];
        for k in 1..t.len() {
            let (a, b) = (t.truth[k - 1][0], t.truth[k][0]);
            if a > 0.0 && b <= 0.0 {
                crossings.push(t.times[k - 1] + p.dt * a / (a - b));
            }
        }
        let period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        let analytic = std::f64::consts::TAU * (p.length / GRAVITY).sqrt();
        assert!((period / analytic - 1.0).abs() < 0.01, "{period} vs {analytic}");
    }

    #[test]
    fn invalid_parameters() {
        for p in [
            PendulumParams { length: 0.0, ..Default::default() },
            PendulumParams { mass: -1.0, ..Default::default() },
            PendulumParams { dt: 0.0, ..Default::default() },
        ] {
            assert!(matches!(simulate_pendulum(&p, &[]), Err(SimError::InvalidParameter(_))));
        }
    }

    #[test]
    fn extras_by_name() {
        let p = PendulumParams { length: 0.5, damping: 0.8, steps: 2, ..Default::default() };
        let names: Vec<String> = ["dt", "L", "b", "m"].map(String::from).to_vec();
        assert_eq!(simulate_pendulum(&p, &names).unwrap().extras[1], [0.01, 0.5, 0.8, 1.0]);
        assert!(matches!(simulate_pendulum(&p, &["q".into()]), Err(SimError::UnknownExtra(_))));
    }
}
