//! Pretty-printer producing source text that re-parses to the same tree.

use std::fmt::{self, Write};

use crate::frontend::ast::*;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        ExprKind::Neg(_) => PREC_NEG,
        ExprKind::Number(v) if v.is_sign_negative() => PREC_NEG,
        ExprKind::Pow(..) => 4,
        _ => PREC_ATOM,
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Ident(n) | ExprKind::Const(n) => f.write_str(n),
            ExprKind::Number(v) => f.write_str(&format_number(*v)),
            ExprKind::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, precedence(e) <= PREC_NEG)
            }
            ExprKind::Binary(op, l, r) => {
                let p = precedence(self);
                write_child(f, l, precedence(l) < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, precedence(r) <= p)
            }
            ExprKind::Pow(b, k) => {
                write_child(f, b, precedence(b) < PREC_ATOM)?;
                write!(f, " ** {k}")
            }
            ExprKind::Call(func, a) => write!(f, "{func}({a})"),
        }
    }
}

impl fmt::Display for UnitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for factor in &self.factors {
            let (sep, k) = if first {
                ("", factor.exponent)
            } else if factor.exponent < 0 {
                (" / ", -factor.exponent)
            } else {
                (" * ", factor.exponent)
            };
            f.write_str(sep)?;
            f.write_str(&factor.name)?;
            if k != 1 {
                write!(f, " ** {k}")?;
            }
            first = false;
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Renders a whole description as `.nt` source.
pub fn print_description(d: &Description) -> String {
    let mut out = String::new();
    for inc in &d.includes {
        let _ = writeln!(out, "include \"{}\";", inc.file);
    }
    for s in &d.signals {
        let _ = writeln!(out, "{} : signal = {};", s.name, s.unit);
    }
    for c in &d.constants {
        if c.unit.factors.is_empty() {
            let _ = writeln!(out, "{} : constant = {};", c.name, format_number(c.value));
        } else {
            let _ = writeln!(out, "{} : constant = {} {};", c.name, format_number(c.value), c.unit);
        }
    }
    for inv in &d.invariants {
        let _ = write!(out, "\n{} : invariant(", inv.name);
        for (i, p) in inv.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{} : {}", p.name, p.signal);
            if let Some(u) = &p.uncertainty {
                let _ = write!(out, " = Gaussian({}, {})", format_number(u.mean), format_number(u.variance));
            }
        }
        out.push_str(") =\n{\n");
        for (i, c) in inv.constraints.iter().enumerate() {
            let sep = if i + 1 < inv.constraints.len() { "," } else { "" };
            let _ = writeln!(out, "  {} ~ {}{}", c.lhs, c.rhs, sep);
        }
        out.push_str("}\n");
    }
    out
}
