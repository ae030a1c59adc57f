//! Affine decomposition of constraint right-hand sides.
//!
//! An expression is affine in the state when each state identifier appears
//! only multiplied by state-free factors: never inside a function call,
//! a denominator, or a power other than 1, and never multiplied by another
//! state-dependent term.

use crate::frontend::{BinOp, Expr, ExprKind};
use crate::model::simplify;

/// `sum_j coefficients[j] * state[j] + offset` for one expression.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow {
    pub coefficients: Vec<Expr>,
    pub offset: Expr,
}

/// Affine map `F * s + offset` with symbolic entries free of state identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<Expr>>,
    pub offset: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Linearity {
    Linear(AffineMap),
    Nonlinear,
}

impl Linearity {
    pub fn is_linear(&self) -> bool {
        matches!(self, Linearity::Linear(_))
    }
}

/// Decides linearity of a list of right-hand sides and extracts the
/// coefficient matrix and offset vector when they are affine.
pub fn analyze_linearity(rhs: &[Expr], state: &[String]) -> Linearity {
    let rows: Option<Vec<AffineRow>> = rhs.iter().map(|e| decompose(e, state)).collect();
    match rows {
        Some(rows) => {
            let (matrix, offset) = rows.into_iter().map(|r| (r.coefficients, r.offset)).unzip();
            Linearity::Linear(AffineMap { matrix, offset })
        }
        None => Linearity::Nonlinear,
    }
}

/// Affine decomposition of a single expression, or `None` if it is not affine.
pub fn decompose(e: &Expr, state: &[String]) -> Option<AffineRow> {
    let zero = || vec![Expr::num(0.0); state.len()];
    if !e.mentions_any(state) {
        return Some(AffineRow { coefficients: zero(), offset: simplify::simplify(e) });
    }
    match &e.kind {
        ExprKind::Ident(name) => {
            let mut coefficients = zero();
            let j = state.iter().position(|s| s == name)?;
            coefficients[j] = Expr::num(1.0);
            Some(AffineRow { coefficients, offset: Expr::num(0.0) })
        }
        ExprKind::Neg(a) => {
            let r = decompose(a, state)?;
            Some(AffineRow {
                coefficients: r.coefficients.into_iter().map(simplify::neg).collect(),
                offset: simplify::neg(r.offset),
            })
        }
        ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), a, b) => {
            let (ra, rb) = (decompose(a, state)?, decompose(b, state)?);
            let combine = |x, y| simplify::binary(*op, x, y);
            Some(AffineRow {
                coefficients: ra.coefficients.into_iter().zip(rb.coefficients).map(|(x, y)| combine(x, y)).collect(),
                offset: combine(ra.offset, rb.offset),
            })
        }
        ExprKind::Binary(BinOp::Mul, a, b) => {
            let (a_state, b_state) = (a.mentions_any(state), b.mentions_any(state));
            if a_state && b_state {
                return None;
            }
            if a_state {
                let r = decompose(a, state)?;
                let factor = simplify::simplify(b);
                Some(scale(r, |x| simplify::mul(x, factor.clone())))
            } else {
                let r = decompose(b, state)?;
                let factor = simplify::simplify(a);
                Some(scale(r, |x| simplify::mul(factor.clone(), x)))
            }
        }
        ExprKind::Binary(BinOp::Div, a, b) => {
            if b.mentions_any(state) {
                return None;
            }
            let r = decompose(a, state)?;
            let den = simplify::simplify(b);
            Some(scale(r, |x| simplify::div(x, den.clone())))
        }
        ExprKind::Pow(a, 1) => decompose(a, state),
        ExprKind::Pow(..) | ExprKind::Call(..) => None,
        ExprKind::Number(_) | ExprKind::Const(_) => unreachable!("leaves without state handled above"),
    }
}

fn scale(r: AffineRow, f: impl Fn(Expr) -> Expr) -> AffineRow {
    AffineRow { coefficients: r.coefficients.into_iter().map(&f).collect(), offset: f(r.offset) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;

    fn state(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn row(src: &str, st: &[&str]) -> Option<Vec<String>> {
        decompose(&parse_expr(src).unwrap(), &state(st)).map(|r| r.coefficients.iter().map(|c| c.to_string()).collect())
    }

    #[test]
    fn constant_velocity_row() {
        assert_eq!(row("x + v*dt", &["x", "v"]).unwrap(), ["1.0", "dt"]);
    }

    #[test]
    fn measurement_row() {
        assert_eq!(row("dtheta", &["theta", "dtheta"]).unwrap(), ["0.0", "1.0"]);
    }

    #[test]
    fn transcendental_of_state_is_nonlinear() {
        let rhs = [parse_expr("theta + dtheta * dt").unwrap(), parse_expr("dtheta - g/L * sin(theta) * dt").unwrap()];
        assert_eq!(analyze_linearity(&rhs, &state(&["theta", "dtheta"])), Linearity::Nonlinear);
    }

    #[test]
    fn nonlinear_forms() {
        let st = ["x", "y"];
        assert!(row("x * y", &st).is_none());
        assert!(row("1 / x", &st).is_none());
        assert!(row("x ** 2", &st).is_none());
        assert!(row("sqrt(x)", &st).is_none());
        assert!(row("x ** 1 + 3", &st).is_some());
    }

    #[test]
    fn offsets_and_scaling() {
        let r = decompose(&parse_expr("-(2 * x - u) / m + sin(u)").unwrap(), &state(&["x"])).unwrap();
        assert_eq!(r.coefficients[0].to_string(), "-2.0 / m");
        assert_eq!(r.offset.to_string(), "u / m + sin(u)");
    }

    #[test]
    fn commuted_products_classify_alike() {
        let st = ["x", "v"];
        assert_eq!(row("x + v*dt", &st).is_some(), row("x + dt*v", &st).is_some());
        assert_eq!(row("x * sin(v)", &st).is_some(), row("sin(v) * x", &st).is_some());
    }
}
