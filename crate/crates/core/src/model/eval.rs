use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::frontend::{BinOp, Expr, ExprKind};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("no value bound for `{0}`")]
    Unbound(String),
}

/// Source of values for identifiers and constants during evaluation.
pub trait Lookup {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Lookup for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Lookup for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Lookup for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const K: usize> Lookup for [(&str, f64); K] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl Lookup for [(String, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl Lookup for Vec<(String, f64)> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl<L: Lookup + ?Sized> Lookup for &L {
    fn lookup(&self, name: &str) -> Option<f64> {
        (**self).lookup(name)
    }
}

/// Evaluates an expression tree, visiting operands left to right.
pub fn evaluate(e: &Expr, env: &(impl Lookup + ?Sized)) -> Result<f64, EvalError> {
    Ok(match &e.kind {
        ExprKind::Ident(n) | ExprKind::Const(n) => env.lookup(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
        ExprKind::Number(v) => *v,
        ExprKind::Neg(a) => -evaluate(a, env)?,
        ExprKind::Binary(op, l, r) => {
            let (a, b) = (evaluate(l, env)?, evaluate(r, env)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            }
        }
        ExprKind::Pow(b, k) => evaluate(b, env)?.powi(*k),
        ExprKind::Call(f, a) => f.apply(evaluate(a, env)?),
    })
}
