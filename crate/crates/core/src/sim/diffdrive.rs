use std::f64::consts::{FRAC_PI_2, PI};

use crate::sim::rng::NoiseRng;
use crate::sim::trace::{NoiseSpec, SimulationTrace};
use crate::sim::SimError;

/// Wheel setpoints held for a number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCommand {
    pub v_right: f64,
    pub v_left: f64,
    pub steps: usize,
}

impl DriveCommand {
    /// `(mode, v)`: mode 0 drives straight, mode 1 turns on the spot.
    pub fn mode(&self) -> Result<(usize, f64), SimError> {
        if self.v_right == self.v_left {
            Ok((0, self.v_right))
        } else if self.v_right == -self.v_left {
            Ok((1, self.v_right))
        } else {
            Err(SimError::ScriptRejected { v_right: self.v_right, v_left: self.v_left })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffDriveParams {
    /// Wheel separation l (m).
    pub wheel_base: f64,
    pub dt: f64,
    /// Variance of each position measurement axis (m²).
    pub measure_noise_var: f64,
    pub seed: u64,
    pub start: [f64; 3],
}

impl Default for DiffDriveParams {
    fn default() -> Self {
        DiffDriveParams { wheel_base: 0.16, dt: 0.1, measure_noise_var: 0.0, seed: 0, start: [0.0; 3] }
    }
}

impl DiffDriveParams {
    pub fn extra(&self, name: &str, v: f64) -> Option<f64> {
        match name {
            "v" => Some(v),
            "dt" => Some(self.dt),
            "l" => Some(self.wheel_base),
            _ => None,
        }
    }
}

/// The stroll: straight to (1, 0), a half turn left, straight to (-1, 0),
/// a quarter turn left, straight to (-1, -1). Speeds are chosen so every
/// leg takes a whole number of steps.
pub fn stroll_script(p: &DiffDriveParams) -> Vec<DriveCommand> {
    let (dt, l) = (p.dt, p.wheel_base);
    let drive = |dist: f64| {
        let steps = 10 * (dist / 0.1).round() as usize;
        let v = dist / (steps as f64 * dt);
        DriveCommand { v_right: v, v_left: v, steps }
    };
    let turn = |angle: f64, steps: usize| {
        let v = angle * l / (2.0 * dt * steps as f64);
        DriveCommand { v_right: v, v_left: -v, steps }
    };
    vec![drive(1.0), turn(PI, 40), drive(2.0), turn(FRAC_PI_2, 20), drive(1.0)]
}

/// Simulates the piecewise differential-drive model: truth is
/// `[x, y, theta]`, the measurement is noisy `(x, y)`, and `extra_names`
/// selects the per-step extras (any of `v`, `dt`, `l`).
pub fn simulate_diff_drive(
    p: &DiffDriveParams,
    script: &[DriveCommand],
    extra_names: &[String],
) -> Result<SimulationTrace, SimError> {
    if !(p.wheel_base > 0.0) || !(p.dt > 0.0) || !(p.measure_noise_var >= 0.0) {
        return Err(SimError::InvalidParameter("wheel base and time step must be positive".into()));
    }
    let mut rng = NoiseRng::new(p.seed);
    let [mut x, mut y, mut theta] = p.start;
    let mut trace = SimulationTrace {
        times: vec![],
        truth: vec![],
        measurements: vec![],
        extras: vec![],
        modes: vec![],
        initial: p.start.to_vec(),
        seed: p.seed,
        noise: NoiseSpec { process: vec![0.0; 3], measurement: vec![p.measure_noise_var; 2] },
    };
    for cmd in script {
        let (mode, v) = cmd.mode()?;
        let extras: Vec<f64> = extra_names
            .iter()
            .map(|n| p.extra(n, v).ok_or_else(|| SimError::UnknownExtra(n.clone())))
            .collect::<Result<_, _>>()?;
        for _ in 0..cmd.steps {
            if mode == 0 {
                (x, y) = (x + v * theta.cos() * p.dt, y + v * theta.sin() * p.dt);
            } else {
                theta += 2.0 * v * p.dt / p.wheel_base;
            }
            let k = trace.times.len();
            trace.times.push((k + 1) as f64 * p.dt);
            trace.truth.push(vec![x, y, theta]);
            let zx = x + rng.gaussian(0.0, p.measure_noise_var);
            let zy = y + rng.gaussian(0.0, p.measure_noise_var);
            trace.measurements.push(vec![zx, zy]);
            trace.extras.push(extras.clone());
            trace.modes.push(mode);
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn straight_step() {
        let cmd = DriveCommand { v_right: 1.0, v_left: 1.0, steps: 1 };
        let t = simulate_diff_drive(&DiffDriveParams::default(), &[cmd], &names(&["v", "dt"])).unwrap();
        assert_eq!(t.truth[0], [0.1, 0.0, 0.0]);
        assert_eq!(t.extras[0], [1.0, 0.1]);
        assert_eq!(t.modes[0], 0);
    }

    #[test]
    fn rotate_step() {
        let cmd = DriveCommand { v_right: 0.2, v_left: -0.2, steps: 1 };
        let t = simulate_diff_drive(&DiffDriveParams::default(), &[cmd], &[]).unwrap();
        assert_eq!(t.truth[0][..2], [0.0, 0.0]);
        assert!((t.truth[0][2] - 2.0 * 0.2 * 0.1 / 0.16).abs() < 1e-15);
        assert_eq!(t.modes[0], 1);
    }

    #[test]
    fn unequal_setpoints_rejected() {
        let cmd = DriveCommand { v_right: 0.2, v_left: 0.1, steps: 1 };
        assert!(matches!(
            simulate_diff_drive(&DiffDriveParams::default(), &[cmd], &[]),
            Err(SimError::ScriptRejected { .. })
        ));
    }

    #[test]
    fn stroll_endpoint() {
        let p = DiffDriveParams::default();
        let t = simulate_diff_drive(&p, &stroll_script(&p), &[]).unwrap();
        let end = t.truth.last().unwrap();
        assert!((end[0] + 1.0).abs() < 1e-9 && (end[1] + 1.0).abs() < 1e-9, "{end:?}");
        assert!((end[2] - 1.5 * PI).abs() < 1e-9);
    }
}
