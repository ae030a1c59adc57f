//! State-space model extraction.
//!
//! Process invariants give the state (their constraint left-hand sides),
//! the measurement invariant gives the measurement vector, and every other
//! parameter becomes an extra argument supplied at call time. Right-hand
//! sides are classified as affine or not; affine models become linear
//! filters with symbolic coefficient matrices, the rest get symbolic
//! Jacobians for an extended filter.

pub mod eval;
pub mod linearity;
mod report;
pub mod simplify;
pub mod symbolic;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::diagnostic::{Diagnostic, Span};
use crate::frontend::{Description, Expr, Invariant};

pub use eval::{evaluate, EvalError, Lookup};
pub use linearity::{analyze_linearity, decompose, AffineMap, AffineRow, Linearity};
pub use symbolic::{derivative, jacobian};

/// Process noise variance used for state entries without an annotation.
pub const DEFAULT_PROCESS_VARIANCE: f64 = 1e-6;
/// Measurement noise variance used for measurement entries without an annotation.
pub const DEFAULT_MEASUREMENT_VARIANCE: f64 = 1e-3;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invariant {name} not found; available: {}", available.join(", "))]
    InvariantNotFound { name: String, available: Vec<String> },
    #[error("`{name}` is ambiguous: {reason}")]
    RoleConflict { name: String, reason: String, span: Span },
    #[error("process invariant `{mode}` constrains [{}] but the state is [{}]", found.join(", "), expected.join(", "))]
    ModeStateMismatch { mode: String, expected: Vec<String>, found: Vec<String> },
    #[error("at least one process invariant is required")]
    NoProcess,
    #[error("non-additive noise is not supported")]
    NonAdditiveNoise,
    #[error("model is linear and has no Jacobian")]
    LinearModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelVariables {
    pub state: Vec<String>,
    pub measurement: Vec<String>,
    /// Control inputs, `dt`, and any other parameters passed per call.
    pub extras: Vec<String>,
}

/// One process invariant: the state transition `f` for one operating mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMode {
    pub name: String,
    /// `f[i]` is the next value of `state[i]`.
    pub f: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Linear {
        /// One affine map per process mode.
        process: Vec<AffineMap>,
        measure: AffineMap,
    },
    Nonlinear {
        /// One symbolic `N x N` Jacobian per process mode.
        process_jacobians: Vec<Vec<Vec<Expr>>>,
        measure_jacobian: Vec<Vec<Expr>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub vars: ModelVariables,
    pub constants: Vec<(String, f64)>,
    pub modes: Vec<ProcessMode>,
    /// `h[i]` predicts `measurement[i]`.
    pub h: Vec<Expr>,
    pub kind: ModelKind,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn state_dim(&self) -> usize {
        self.vars.state.len()
    }

    pub fn measurement_dim(&self) -> usize {
        self.vars.measurement.len()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, ModelKind::Linear { .. })
    }

    /// The same model with linearity ignored: `f`/`h` kept as expressions
    /// and Jacobians derived symbolically.
    pub fn as_nonlinear(&self) -> StateSpaceModel {
        let state = &self.vars.state;
        StateSpaceModel {
            kind: ModelKind::Nonlinear {
                process_jacobians: self.modes.iter().map(|m| jacobian(&m.f, state)).collect(),
                measure_jacobian: jacobian(&self.h, state),
            },
            ..self.clone()
        }
    }

    /// Replaces the noise covariances with diagonal matrices.
    pub fn with_noise(mut self, q_diag: &[f64], r_diag: &[f64]) -> StateSpaceModel {
        assert_eq!(q_diag.len(), self.state_dim());
        assert_eq!(r_diag.len(), self.measurement_dim());
        self.q = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(q_diag));
        self.r = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(r_diag));
        self
    }

    /// Human-readable summary for `--dump-model`.
    pub fn report(&self) -> String {
        report::render(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Must be true; only additive process and measurement noise is supported.
    pub additive_noise: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { additive_noise: true }
    }
}

/// A model plus the warnings raised while building it.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: StateSpaceModel,
    pub warnings: Vec<Diagnostic>,
}

fn find<'d>(d: &'d Description, name: &str) -> Result<&'d Invariant, ModelError> {
    d.invariant(name).ok_or_else(|| ModelError::InvariantNotFound {
        name: name.to_string(),
        available: d.invariants.iter().map(|i| i.name.clone()).collect(),
    })
}

/// Looks up the process and measurement invariants by name. Any other
/// invariants are reported as warnings.
pub fn identify_models<'d>(
    d: &'d Description,
    process: &str,
    measure: &str,
) -> Result<(&'d Invariant, &'d Invariant, Vec<Diagnostic>), ModelError> {
    let p = find(d, process)?;
    let m = find(d, measure)?;
    let warnings = unused_invariant_warnings(d, &[process, measure]);
    Ok((p, m, warnings))
}

fn unused_invariant_warnings(d: &Description, used: &[&str]) -> Vec<Diagnostic> {
    d.invariants
        .iter()
        .filter(|i| !used.contains(&i.name.as_str()))
        .map(|i| Diagnostic::warning(i.span, format!("invariant `{}` is not used by the filter", i.name)))
        .collect()
}

/// Splits parameters into state, measurement and extra variables.
/// `process` holds one invariant per mode; all modes must constrain the same
/// state variables in the same order.
pub fn classify_variables(process: &[&Invariant], measure: &Invariant) -> Result<ModelVariables, ModelError> {
    let first = process.first().ok_or(ModelError::NoProcess)?;
    let state: Vec<String> = first.constraints.iter().map(|c| c.target().to_string()).collect();
    let measurement: Vec<String> = measure.constraints.iter().map(|c| c.target().to_string()).collect();

    for (names, inv) in [(&state, *first), (&measurement, measure)] {
        let mut seen = BTreeSet::new();
        for (n, c) in names.iter().zip(&inv.constraints) {
            if !seen.insert(n) {
                return Err(ModelError::RoleConflict {
                    name: n.clone(),
                    reason: format!("constrained twice in `{}`", inv.name),
                    span: c.lhs.span,
                });
            }
            if n == "dt" {
                return Err(ModelError::RoleConflict {
                    name: n.clone(),
                    reason: "`dt` is the time step and cannot be a state or measurement".into(),
                    span: c.lhs.span,
                });
            }
        }
    }
    for mode in &process[1..] {
        let found: Vec<String> = mode.constraints.iter().map(|c| c.target().to_string()).collect();
        if found != state {
            return Err(ModelError::ModeStateMismatch { mode: mode.name.clone(), expected: state, found });
        }
    }
    for c in &measure.constraints {
        if state.contains(&c.target().to_string()) {
            return Err(ModelError::RoleConflict {
                name: c.target().to_string(),
                reason: "it is both a process and a measurement left-hand side".into(),
                span: c.lhs.span,
            });
        }
    }
    for inv in process.iter().copied().chain(std::iter::once(measure)) {
        for c in &inv.constraints {
            if let Some(m) = measurement.iter().find(|m| c.rhs.mentions(m)) {
                return Err(ModelError::RoleConflict {
                    name: m.clone(),
                    reason: format!("measurement variable used on the right of `{} ~ ...`", c.target()),
                    span: c.rhs.span,
                });
            }
        }
    }

    let mut extras: Vec<String> = Vec::new();
    for inv in process.iter().copied().chain(std::iter::once(measure)) {
        for p in &inv.params {
            if !state.contains(&p.name) && !measurement.contains(&p.name) && !extras.contains(&p.name) {
                extras.push(p.name.clone());
            }
        }
    }
    Ok(ModelVariables { state, measurement, extras })
}

/// Runs identification, classification, linearity analysis and Jacobian
/// construction. Noise covariances come from `Gaussian` annotations on the
/// state and measurement parameters.
pub fn build_model(
    d: &Description,
    process_names: &[&str],
    measure_name: &str,
    opts: BuildOptions,
) -> Result<BuiltModel, ModelError> {
    if !opts.additive_noise {
        return Err(ModelError::NonAdditiveNoise);
    }
    if process_names.is_empty() {
        return Err(ModelError::NoProcess);
    }
    let process: Vec<&Invariant> = process_names.iter().map(|n| find(d, n)).collect::<Result<_, _>>()?;
    let measure = find(d, measure_name)?;
    let mut used: Vec<&str> = process_names.to_vec();
    used.push(measure_name);
    let mut warnings = unused_invariant_warnings(d, &used);

    let vars = classify_variables(&process, measure)?;
    let modes: Vec<ProcessMode> = process
        .iter()
        .map(|inv| ProcessMode {
            name: inv.name.clone(),
            f: inv.constraints.iter().map(|c| c.rhs.without_spans()).collect(),
        })
        .collect();
    let h: Vec<Expr> = measure.constraints.iter().map(|c| c.rhs.without_spans()).collect();

    let process_lin: Vec<Linearity> = modes.iter().map(|m| analyze_linearity(&m.f, &vars.state)).collect();
    let measure_lin = analyze_linearity(&h, &vars.state);
    let kind = match (process_lin.iter().all(Linearity::is_linear), measure_lin) {
        (true, Linearity::Linear(measure)) => ModelKind::Linear {
            process: process_lin
                .into_iter()
                .map(|l| match l {
                    Linearity::Linear(m) => m,
                    Linearity::Nonlinear => unreachable!(),
                })
                .collect(),
            measure,
        },
        _ => ModelKind::Nonlinear {
            process_jacobians: modes.iter().map(|m| jacobian(&m.f, &vars.state)).collect(),
            measure_jacobian: jacobian(&h, &vars.state),
        },
    };

    let (q, r) = noise_matrices(&process, measure, &vars, &mut warnings);
    let constants = d.constants.iter().map(|c| (c.name.clone(), c.value)).collect();
    Ok(BuiltModel { model: StateSpaceModel { vars, constants, modes, h, kind, q, r }, warnings })
}

fn noise_matrices(
    process: &[&Invariant],
    measure: &Invariant,
    vars: &ModelVariables,
    warnings: &mut Vec<Diagnostic>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let lookup = |name: &str, invs: &[&Invariant]| {
        invs.iter().find_map(|inv| inv.param(name).and_then(|p| p.uncertainty.clone().map(|u| (u, p.span))))
    };
    let mut all: Vec<&Invariant> = process.to_vec();
    all.push(measure);
    let q_ann: Vec<_> = vars.state.iter().map(|s| lookup(s, &all)).collect();
    let r_ann: Vec<_> = vars.measurement.iter().map(|m| lookup(m, &[measure])).collect();
    let any = q_ann.iter().chain(&r_ann).any(Option::is_some);
    if !any {
        warnings.push(Diagnostic::warning(
            Span::default(),
            format!(
                "no noise annotations; using Q = {DEFAULT_PROCESS_VARIANCE:e}·I and R = {DEFAULT_MEASUREMENT_VARIANCE:e}·I"
            ),
        ));
    }
    let mut diag = |names: &[String], ann: &[Option<(crate::frontend::Uncertainty, Span)>], default: f64| {
        let values: Vec<f64> = names
            .iter()
            .zip(ann)
            .map(|(n, a)| match a {
                Some((u, span)) => {
                    if u.mean != 0.0 {
                        warnings.push(Diagnostic::warning(*span, format!("noise mean of `{n}` is ignored; filters assume zero-mean noise")));
                    }
                    u.variance
                }
                None => {
                    if any {
                        warnings.push(Diagnostic::warning(
                            Span::default(),
                            format!("`{n}` has no noise annotation; using variance {default:e}"),
                        ));
                    }
                    default
                }
            })
            .collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values))
    };
    let q = diag(&vars.state, &q_ann, DEFAULT_PROCESS_VARIANCE);
    let r = diag(&vars.measurement, &r_ann, DEFAULT_MEASUREMENT_VARIANCE);
    (q, r)
}
