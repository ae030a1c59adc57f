//! Dimensional type checking of descriptions.
//!
//! Every parameter takes the dimension of its signal; constants take the
//! dimension of their unit. Addition and subtraction need equal operand
//! dimensions, products add exponents, and `sin`/`cos`/`tan`/`exp`/`ln`
//! need dimensionless arguments. Angles are dimensionless. `sqrt` halves
//! exponents, which is why exponents are rational.

#![allow(clippy::result_large_err)]

mod signals;
mod vector;

use std::collections::BTreeMap;

use num_rational::Rational32;
use thiserror::Error;

use crate::diagnostic::{Diagnostic, Span};
use crate::frontend::{Description, Expr, ExprKind, Func};

pub use signals::{SignalTable, BASE_SIGNALS_FILE};
pub use vector::{DimensionVector, BASE_SYMBOLS};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DimensionError {
    #[error("dimension mismatch: `{left}` versus `{right}`")]
    DimensionMismatch { span: Span, left: DimensionVector, right: DimensionVector },
    #[error("argument of `{func}` must be dimensionless, found `{found}`")]
    NonDimensionlessArgument { span: Span, func: Func, found: DimensionVector },
    #[error("identifier `{name}` has no known dimension")]
    Unbound { span: Span, name: String },
}

impl DimensionError {
    pub fn span(&self) -> Span {
        match self {
            DimensionError::DimensionMismatch { span, .. }
            | DimensionError::NonDimensionlessArgument { span, .. }
            | DimensionError::Unbound { span, .. } => *span,
        }
    }
}

pub type DimEnv = BTreeMap<String, DimensionVector>;

/// Infers the dimension of `expr`. Identifiers and constant references are
/// both looked up in `env`.
pub fn infer_dimension(expr: &Expr, env: &DimEnv) -> Result<DimensionVector, DimensionError> {
    match &expr.kind {
        ExprKind::Ident(name) | ExprKind::Const(name) => env
            .get(name)
            .copied()
            .ok_or_else(|| DimensionError::Unbound { span: expr.span, name: name.clone() }),
        ExprKind::Number(_) => Ok(DimensionVector::dimensionless()),
        ExprKind::Neg(e) => infer_dimension(e, env),
        ExprKind::Binary(op, l, r) => {
            let (dl, dr) = (infer_dimension(l, env)?, infer_dimension(r, env)?);
            use crate::frontend::BinOp::*;
            match op {
                Add | Sub if dl != dr => Err(DimensionError::DimensionMismatch { span: expr.span, left: dl, right: dr }),
                Add | Sub => Ok(dl),
                Mul => Ok(dl + dr),
                Div => Ok(dl - dr),
            }
        }
        ExprKind::Pow(b, k) => Ok(infer_dimension(b, env)?.powi(*k)),
        ExprKind::Call(Func::Sqrt, a) => Ok(infer_dimension(a, env)?.scale(Rational32::new(1, 2))),
        ExprKind::Call(func, a) => {
            let d = infer_dimension(a, env)?;
            if d.is_dimensionless() {
                Ok(d)
            } else {
                Err(DimensionError::NonDimensionlessArgument { span: a.span, func: *func, found: d })
            }
        }
    }
}

/// Checks every constraint of every invariant. Diagnostics are collected in
/// source order rather than stopping at the first one; an empty list means
/// the description is accepted.
pub fn check_description(d: &Description, sig: &SignalTable) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut globals = DimEnv::new();
    let mut bad_constants = Vec::new();
    for c in &d.constants {
        match sig.unit_dimension(&c.unit) {
            Ok(dim) => {
                globals.insert(c.name.clone(), dim);
            }
            Err(diag) => {
                diags.push(diag);
                bad_constants.push(c.name.clone());
            }
        }
    }

    for inv in &d.invariants {
        let mut env = globals.clone();
        let mut unknown = bad_constants.clone();
        for p in &inv.params {
            match sig.get(&p.signal) {
                Some(dim) => {
                    env.insert(p.name.clone(), dim);
                }
                None => {
                    diags.push(Diagnostic::error(p.signal_span, format!("unknown signal `{}`", p.signal)));
                    env.remove(&p.name);
                    unknown.push(p.name.clone());
                }
            }
        }
        for c in &inv.constraints {
            // Constraints touching an unknown signal or unit were already reported.
            let names = c.rhs.free_names();
            if unknown.iter().any(|u| u == c.target() || names.contains(u)) {
                continue;
            }
            let result = infer_dimension(&c.lhs, &env).and_then(|left| {
                let right = infer_dimension(&c.rhs, &env)?;
                if left == right {
                    Ok(())
                } else {
                    Err(DimensionError::DimensionMismatch { span: c.span, left, right })
                }
            });
            if let Err(e) = result {
                let message = match &e {
                    DimensionError::DimensionMismatch { left, right, .. } if e.span() == c.span => format!(
                        "dimension mismatch in `{}`: left side is `{left}`, right side is `{right}`",
                        c.target()
                    ),
                    _ => e.to_string(),
                };
                diags.push(Diagnostic::error(e.span(), message));
            }
        }
    }
    diags.sort_by_key(|d| d.span.start);
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::frontend::{parse_expr, parse_source};

    fn env() -> DimEnv {
        use DimensionVector as D;
        let mut env = DimEnv::new();
        env.insert("dtheta".into(), D::base(D::TIME, -1));
        env.insert("dt".into(), D::base(D::TIME, 1));
        env.insert("theta".into(), D::dimensionless());
        env.insert("g".into(), D::base(D::LENGTH, 1) + D::base(D::TIME, -2));
        env.insert("L".into(), D::base(D::LENGTH, 1));
        env
    }

    fn infer(src: &str) -> Result<DimensionVector, DimensionError> {
        infer_dimension(&parse_expr(src).unwrap(), &env())
    }

    #[test]
    fn rate_times_time_is_dimensionless() {
        assert!(infer("dtheta * dt").unwrap().is_dimensionless());
    }

    #[test]
    fn pendulum_rate_term() {
        // brute-force exponent arithmetic: g/L -> (1-1, 0, -2-0) = s^-2; *sin(1) *dt -> s^-1
        let expected = {
            let (g, l, dt) = ([1, 0, -2], [1, 0, 0], [0, 0, 1]);
            let e: Vec<i32> = (0..3).map(|i| g[i] - l[i] + dt[i]).collect();
            DimensionVector::from_ints([e[0], e[1], e[2], 0, 0, 0, 0])
        };
        assert_eq!(infer("g/L * sin(theta) * dt").unwrap(), expected);
        assert_eq!(expected, DimensionVector::base(DimensionVector::TIME, -1));
    }

    #[test]
    fn forced_mismatch() {
        assert!(matches!(infer("theta + dt"), Err(DimensionError::DimensionMismatch { .. })));
    }

    #[test]
    fn transcendental_argument() {
        assert!(matches!(infer("exp(dt)"), Err(DimensionError::NonDimensionlessArgument { func: Func::Exp, .. })));
        assert!(infer("cos(theta)").unwrap().is_dimensionless());
        assert_eq!(infer("sqrt(g / L)").unwrap(), DimensionVector::base(DimensionVector::TIME, -1));
        assert_eq!(
            infer("sqrt(L)").unwrap(),
            DimensionVector::base(DimensionVector::LENGTH, 1).scale(Rational32::new(1, 2))
        );
    }

    #[test]
    fn unbound_identifier() {
        assert!(matches!(infer("q * dt"), Err(DimensionError::Unbound { .. })));
    }

    #[test]
    fn pendulum_accepted() {
        let d = parse_source(corpus::PENDULUM_PLAIN).unwrap();
        assert!(check_description(&d, &SignalTable::builtin()).is_empty());
        for m in corpus::MODELS {
            let d = parse_source(m.source).unwrap();
            assert_eq!(check_description(&d, &SignalTable::builtin()), vec![], "{}", m.name);
        }
    }

    #[test]
    fn bundled_base_signal_file_matches_builtin_for_used_names() {
        let base = parse_source(corpus::BASE_SIGNALS).unwrap();
        let mut table = SignalTable::builtin();
        assert!(table.extend_from(&base).is_empty());
        assert_eq!(table, SignalTable::builtin());
    }

    #[test]
    fn gyro_against_angle() {
        let src = "m : invariant(theta : angle, gyro_z : angularRate) = { gyro_z ~ theta }";
        let diags = check_description(&parse_source(src).unwrap(), &SignalTable::builtin());
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("dimension mismatch"));
    }

    #[test]
    fn diagnostics_accumulate_in_source_order() {
        let src = "p : invariant(x : distance, t : time) = { x ~ t,\n x ~ x + t }";
        let diags = check_description(&parse_source(src).unwrap(), &SignalTable::builtin());
        assert_eq!(diags.len(), 2);
        assert!(diags[0].span.start < diags[1].span.start);
        assert_eq!(diags[1].span.line, 2);
        assert!(diags[0].render("p.nt").starts_with("p.nt:1:"));
    }

    #[test]
    fn unknown_signal_reported_once() {
        let src = "p : invariant(x : widget, y : distance) = { y ~ y + x, y ~ y }";
        let diags = check_description(&parse_source(src).unwrap(), &SignalTable::builtin());
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unknown signal `widget`"));
    }

    #[test]
    fn declared_signals_extend_table() {
        let src = "jerk : signal = m / s ** 3;\np : invariant(j : jerk, a : acceleration, dt : time) = { a ~ a + j * dt }";
        let d = parse_source(src).unwrap();
        let (table, diags) = SignalTable::for_description(&d, &[]).unwrap();
        assert!(diags.is_empty());
        assert!(check_description(&d, &table).is_empty());
    }
}
