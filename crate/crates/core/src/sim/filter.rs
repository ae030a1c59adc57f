use nalgebra::{DMatrix, DVector};

use crate::frontend::Expr;
use crate::model::{evaluate, EvalError, Lookup, ModelKind, StateSpaceModel};
use crate::sim::linalg::gauss_jordan_inverse;
use crate::sim::trace::TraceInput;
use crate::sim::SimError;

struct Env<'a> {
    model: &'a StateSpaceModel,
    state: &'a [f64],
    extras: &'a [f64],
}

impl Lookup for Env<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        let v = &self.model.vars;
        if let Some(i) = v.state.iter().position(|n| n == name) {
            return Some(self.state[i]);
        }
        if let Some(i) = v.extras.iter().position(|n| n == name) {
            return Some(self.extras[i]);
        }
        self.model.constants.lookup(name)
    }
}

fn eval_vec(es: &[Expr], env: &Env) -> Result<DVector<f64>, EvalError> {
    Ok(DVector::from_vec(es.iter().map(|e| evaluate(e, env)).collect::<Result<_, _>>()?))
}

fn eval_mat(rows: &[Vec<Expr>], cols: usize, env: &Env) -> Result<DMatrix<f64>, EvalError> {
    let vals: Vec<f64> = rows.iter().flatten().map(|e| evaluate(e, env)).collect::<Result<_, _>>()?;
    Ok(DMatrix::from_row_slice(rows.len(), cols, &vals))
}

/// Interpreted Kalman filter: every predict/update evaluates the model's
/// expression trees directly. Used as the oracle for generated code.
#[derive(Debug, Clone)]
pub struct ReferenceFilter<'m> {
    model: &'m StateSpaceModel,
    pub s: DVector<f64>,
    pub p: DMatrix<f64>,
    /// Set when the last update hit a singular innovation covariance and was skipped.
    pub singular: bool,
    pub innovation: DVector<f64>,
    pub gain: DMatrix<f64>,
}

impl<'m> ReferenceFilter<'m> {
    pub fn new(model: &'m StateSpaceModel, s0: &[f64], p0: &DMatrix<f64>) -> Self {
        let (n, z) = (model.state_dim(), model.measurement_dim());
        assert_eq!(s0.len(), n);
        assert_eq!(p0.shape(), (n, n));
        ReferenceFilter {
            model,
            s: DVector::from_column_slice(s0),
            p: p0.clone(),
            singular: false,
            innovation: DVector::zeros(z),
            gain: DMatrix::zeros(n, z),
        }
    }

    fn check_extras(&self, extras: &[f64]) -> Result<(), SimError> {
        let want = self.model.vars.extras.len();
        if extras.len() != want {
            return Err(SimError::LengthMismatch { what: "extras".into(), expected: want, found: extras.len() });
        }
        Ok(())
    }

    pub fn predict(&mut self, extras: &[f64], mode: usize) -> Result<(), SimError> {
        self.check_extras(extras)?;
        if mode >= self.model.mode_count() {
            return Err(SimError::BadMode { mode, count: self.model.mode_count() });
        }
        let n = self.model.state_dim();
        let state = self.s.as_slice().to_vec();
        let env = Env { model: self.model, state: &state, extras };
        let (s, f) = match &self.model.kind {
            ModelKind::Linear { process, .. } => {
                let f = eval_mat(&process[mode].matrix, n, &env)?;
                (&f * &self.s + eval_vec(&process[mode].offset, &env)?, f)
            }
            ModelKind::Nonlinear { process_jacobians, .. } => {
                (eval_vec(&self.model.modes[mode].f, &env)?, eval_mat(&process_jacobians[mode], n, &env)?)
            }
        };
        self.s = s;
        self.p = &f * &self.p * f.transpose() + &self.model.q;
        Ok(())
    }

    pub fn update(&mut self, z: &[f64], extras: &[f64]) -> Result<(), SimError> {
        self.check_extras(extras)?;
        let (n, zd) = (self.model.state_dim(), self.model.measurement_dim());
        if z.len() != zd {
            return Err(SimError::LengthMismatch { what: "measurement".into(), expected: zd, found: z.len() });
        }
        let state = self.s.as_slice().to_vec();
        let env = Env { model: self.model, state: &state, extras };
        let (predicted, h) = match &self.model.kind {
            ModelKind::Linear { measure, .. } => {
                let h = eval_mat(&measure.matrix, n, &env)?;
                (&h * &self.s + eval_vec(&measure.offset, &env)?, h)
            }
            ModelKind::Nonlinear { measure_jacobian, .. } => {
                (eval_vec(&self.model.h, &env)?, eval_mat(measure_jacobian, n, &env)?)
            }
        };
        let y = DVector::from_column_slice(z) - predicted;
        let s = &h * &self.p * h.transpose() + &self.model.r;
        let Some(s_inv) = gauss_jordan_inverse(&s) else {
            self.singular = true;
            return Ok(());
        };
        self.singular = false;
        let k = &self.p * h.transpose() * s_inv;
        self.s += &k * &y;
        let p = (DMatrix::identity(n, n) - &k * &h) * &self.p;
        self.p = (&p + p.transpose()) * 0.5;
        self.innovation = y;
        self.gain = k;
        Ok(())
    }

    pub fn step(&mut self, z: &[f64], extras: &[f64], mode: usize) -> Result<(), SimError> {
        self.predict(extras, mode)?;
        self.update(z, extras)
    }
}

/// Per-step estimates from running the reference filter over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub estimates: Vec<Vec<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub singular_steps: usize,
}

pub fn run_reference(
    model: &StateSpaceModel,
    input: &TraceInput,
    s0: &[f64],
    p0: &DMatrix<f64>,
) -> Result<FilterRun, SimError> {
    let mut f = ReferenceFilter::new(model, s0, p0);
    let mut run = FilterRun { estimates: vec![], covariances: vec![], singular_steps: 0 };
    for k in 0..input.times.len() {
        f.step(&input.measurements[k], &input.extras[k], input.modes[k])?;
        run.singular_steps += usize::from(f.singular);
        run.estimates.push(f.s.as_slice().to_vec());
        run.covariances.push(f.p.clone());
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::model::{build_model, BuildOptions};

    fn scalar(h: &str, r: f64) -> StateSpaceModel {
        let src = format!(
            "p : invariant(x : distance = Gaussian(0, 0)) = {{ x ~ x }}
             q : invariant(x : distance, z : distance = Gaussian(0, {r})) = {{ z ~ {h} * x }}"
        );
        build_model(&parse_source(&src).unwrap(), &["p"], "q", BuildOptions::default()).unwrap().model
    }

    #[test]
    fn scalar_update() {
        let m = scalar("1", 1.0);
        let mut f = ReferenceFilter::new(&m, &[0.0], &DMatrix::identity(1, 1));
        f.step(&[2.0], &[], 0).unwrap();
        assert_eq!(f.s[0], 1.0);
        assert_eq!(f.p[(0, 0)], 0.5);
        assert_eq!(f.gain[(0, 0)], 0.5);
    }

    #[test]
    fn measurement_dominates_as_noise_vanishes() {
        let m = scalar("2", 1e-12);
        let mut f = ReferenceFilter::new(&m, &[0.0], &DMatrix::identity(1, 1));
        f.update(&[3.0], &[]).unwrap();
        assert!((f.s[0] - 1.5).abs() < 1e-6);
    }

    #[test]
    fn singular_update_is_skipped() {
        let m = scalar("0", 0.0);
        let mut f = ReferenceFilter::new(&m, &[4.0], &DMatrix::identity(1, 1));
        f.update(&[1.0], &[]).unwrap();
        assert!(f.singular);
        assert_eq!(f.s[0], 4.0);
    }

    #[test]
    fn pendulum_zero_dt_grows_covariance_only() {
        let d = parse_source(crate::corpus::PENDULUM).unwrap();
        let m = build_model(&d, &["pendulum_process"], "pendulum_measure", BuildOptions::default()).unwrap().model;
        let p0 = DMatrix::identity(2, 2) * 0.1;
        let mut f = ReferenceFilter::new(&m, &[0.3, -0.2], &p0);
        f.predict(&[0.0, 1.0], 0).unwrap();
        assert_eq!(f.s.as_slice(), [0.3, -0.2]);
        assert_eq!(f.p, p0 + &m.q);
    }

    #[test]
    fn arity_errors() {
        let m = scalar("1", 1.0);
        let mut f = ReferenceFilter::new(&m, &[0.0], &DMatrix::identity(1, 1));
        assert!(f.update(&[1.0, 2.0], &[]).is_err());
        assert!(f.predict(&[], 1).is_err());
    }
}
