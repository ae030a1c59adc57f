//! Local algebraic simplification.
//!
//! Only constant folding and the 0/1 identities are applied; there is no
//! reassociation, factoring or trigonometric rewriting.

use crate::frontend::{BinOp, Expr, ExprKind, Func};

pub fn neg(a: Expr) -> Expr {
    match a.kind {
        ExprKind::Number(v) => Expr::num(-v),
        ExprKind::Neg(inner) => *inner,
        _ => Expr::neg(a),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => Expr::num(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::add(a, b),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => Expr::num(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::sub(a, b),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => Expr::num(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => Expr::num(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => Expr::mul(a, b),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::num(x / y),
        (Some(0.0), _) => Expr::num(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::div(a, b),
    }
}

pub fn pow(a: Expr, k: i32) -> Expr {
    match (a.as_number(), k) {
        (_, 0) => Expr::num(1.0),
        (_, 1) => a,
        (Some(x), _) => Expr::num(x.powi(k)),
        _ => Expr::pow(a, k),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match a.as_number() {
        Some(x) => Expr::num(f.apply(x)),
        None => Expr::call(f, a),
    }
}

pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
    match op {
        BinOp::Add => add(a, b),
        BinOp::Sub => sub(a, b),
        BinOp::Mul => mul(a, b),
        BinOp::Div => div(a, b),
    }
}

/// Rebuilds `e` bottom-up through the simplifying constructors.
pub fn simplify(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Ident(_) | ExprKind::Number(_) | ExprKind::Const(_) => e.without_spans(),
        ExprKind::Neg(a) => neg(simplify(a)),
        ExprKind::Binary(op, l, r) => binary(*op, simplify(l), simplify(r)),
        ExprKind::Pow(b, k) => pow(simplify(b), *k),
        ExprKind::Call(f, a) => call(*f, simplify(a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;

    fn s(src: &str) -> String {
        simplify(&parse_expr(src).unwrap()).to_string()
    }

    #[test]
    fn identities() {
        assert_eq!(s("0 + x"), "x");
        assert_eq!(s("x * 1"), "x");
        assert_eq!(s("0 * sin(x)"), "0.0");
        assert_eq!(s("x ** 1"), "x");
        assert_eq!(s("x ** 0"), "1.0");
        assert_eq!(s("0 - x"), "-x");
        assert_eq!(s("--x"), "x");
        assert_eq!(s("0 / x"), "0.0");
        assert_eq!(s("2 * 3 + x"), "6.0 + x");
        assert_eq!(s("-1 * x"), "-x");
    }

    #[test]
    fn no_reassociation() {
        assert_eq!(s("x + y + z"), "x + y + z");
        assert_eq!(s("sin(x) ** 2 + cos(x) ** 2"), "sin(x) ** 2 + cos(x) ** 2");
    }

    #[test]
    fn division_by_literal_zero_is_kept() {
        assert_eq!(s("1 / 0"), "1.0 / 0.0");
    }
}
