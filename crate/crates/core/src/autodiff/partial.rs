use std::fmt;

use crate::autodiff::ssa::{Instr, Op, Operand};
use crate::frontend::Func;
use crate::model::{EvalError, Lookup};

/// Local derivative of one instruction with respect to one of its operands,
/// expressed over primal values.
#[derive(Debug, Clone, PartialEq)]
pub enum Partial {
    One,
    MinusOne,
    /// The value of an operand, as in `d(a*b)/da = b`.
    Operand(Operand),
    /// `1 / u`.
    Recip(Operand),
    /// `-r / b` for `r = a / b`.
    Quotient { result: usize, divisor: Operand },
    /// `k * u ** (k - 1)`.
    Power { base: Operand, k: i32 },
    Cos(Operand),
    NegSin(Operand),
    /// `1 + r * r` for `r = tan u`.
    TanSquared(usize),
    /// `0.5 / r` for `r = sqrt u`.
    HalfOver(usize),
}

impl Partial {
    pub fn value(&self, temps: &[f64], env: &(impl Lookup + ?Sized)) -> Result<f64, EvalError> {
        Ok(match self {
            Partial::One => 1.0,
            Partial::MinusOne => -1.0,
            Partial::Operand(o) => o.value(temps, env)?,
            Partial::Recip(o) => 1.0 / o.value(temps, env)?,
            Partial::Quotient { result, divisor } => -temps[*result] / divisor.value(temps, env)?,
            Partial::Power { k: 0, .. } => 0.0,
            Partial::Power { base, k } => *k as f64 * base.value(temps, env)?.powi(k - 1),
            Partial::Cos(o) => o.value(temps, env)?.cos(),
            Partial::NegSin(o) => -o.value(temps, env)?.sin(),
            Partial::TanSquared(r) => 1.0 + temps[*r] * temps[*r],
            Partial::HalfOver(r) => 0.5 / temps[*r],
        })
    }
}

impl fmt::Display for Partial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partial::One => f.write_str("1"),
            Partial::MinusOne => f.write_str("-1"),
            Partial::Operand(o) => write!(f, "{o}"),
            Partial::Recip(o) => write!(f, "1 / {o}"),
            Partial::Quotient { result, divisor } => write!(f, "-r{result} / {divisor}"),
            Partial::Power { base, k } => write!(f, "{k} * {base} ** {}", k - 1),
            Partial::Cos(o) => write!(f, "cos {o}"),
            Partial::NegSin(o) => write!(f, "-sin {o}"),
            Partial::TanSquared(r) => write!(f, "1 + r{r} * r{r}"),
            Partial::HalfOver(r) => write!(f, "0.5 / r{r}"),
        }
    }
}

/// `(argument index, partial)` for every operand of `ins`.
pub fn partials(ins: &Instr) -> Vec<(usize, Partial)> {
    let a = |i: usize| ins.args[i].clone();
    let r = ins.target;
    match ins.op {
        Op::Const | Op::Load => vec![(0, Partial::One)],
        Op::Neg => vec![(0, Partial::MinusOne)],
        Op::Add => vec![(0, Partial::One), (1, Partial::One)],
        Op::Sub => vec![(0, Partial::One), (1, Partial::MinusOne)],
        Op::Mul => vec![(0, Partial::Operand(a(1))), (1, Partial::Operand(a(0)))],
        Op::Div => vec![(0, Partial::Recip(a(1))), (1, Partial::Quotient { result: r, divisor: a(1) })],
        Op::PowInt(k) => vec![(0, Partial::Power { base: a(0), k })],
        Op::Call(Func::Sin) => vec![(0, Partial::Cos(a(0)))],
        Op::Call(Func::Cos) => vec![(0, Partial::NegSin(a(0)))],
        Op::Call(Func::Tan) => vec![(0, Partial::TanSquared(r))],
        Op::Call(Func::Exp) => vec![(0, Partial::Operand(Operand::Temp(r)))],
        Op::Call(Func::Ln) => vec![(0, Partial::Recip(a(0)))],
        Op::Call(Func::Sqrt) => vec![(0, Partial::HalfOver(r))],
    }
}
