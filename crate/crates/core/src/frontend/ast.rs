//! Syntax tree for physics descriptions.
//!
//! Equality on every node is structural and ignores source spans, so a
//! description re-parsed from its pretty-printed form compares equal to the
//! original.

use std::collections::BTreeSet;
use std::fmt;

use crate::diagnostic::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    /// An invariant parameter.
    Ident(String),
    Number(f64),
    /// A reference to a top-level constant.
    Const(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power; the exponent is always a literal.
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Ident(a), Ident(b)) | (Const(a), Const(b)) => a == b,
            (Number(a), Number(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Binary(o1, l1, r1), Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (Pow(b1, k1), Pow(b2, k2)) => k1 == k2 && b1 == b2,
            (Call(f1, a1), Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::Ident(name.into()), Span::default())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::Const(name.into()), Span::default())
    }

    pub fn num(value: f64) -> Self {
        Expr::new(ExprKind::Number(value), Span::default())
    }

    pub fn neg(e: Expr) -> Self {
        Expr::new(ExprKind::Neg(Box::new(e)), Span::default())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), Span::default())
    }

    pub fn add(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Add, l, r)
    }

    pub fn sub(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Sub, l, r)
    }

    pub fn mul(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Mul, l, r)
    }

    pub fn div(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Div, l, r)
    }

    pub fn pow(base: Expr, k: i32) -> Self {
        Expr::new(ExprKind::Pow(Box::new(base), k), Span::default())
    }

    pub fn call(f: Func, arg: Expr) -> Self {
        Expr::new(ExprKind::Call(f, Box::new(arg)), Span::default())
    }

    pub fn as_number(&self) -> Option<f64> {
        match self.kind {
            ExprKind::Number(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_number(&self, v: f64) -> bool {
        self.as_number() == Some(v)
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Ident(_) | ExprKind::Number(_) | ExprKind::Const(_) => vec![],
            ExprKind::Neg(e) | ExprKind::Pow(e, _) | ExprKind::Call(_, e) => vec![e],
            ExprKind::Binary(_, l, r) => vec![l, r],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, ExprKind::Ident(_) | ExprKind::Number(_) | ExprKind::Const(_))
    }

    /// Number of non-leaf nodes.
    pub fn interior_count(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            1 + self.children().into_iter().map(Expr::interior_count).sum::<usize>()
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match &self.kind {
            ExprKind::Ident(n) => n == name,
            _ => self.children().into_iter().any(|c| c.mentions(name)),
        }
    }

    pub fn mentions_any(&self, names: &[String]) -> bool {
        names.iter().any(|n| self.mentions(n))
    }

    /// Free identifiers and constant references, in first-occurrence order.
    pub fn free_names(&self) -> Vec<String> {
        fn walk(e: &Expr, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
            match &e.kind {
                ExprKind::Ident(n) | ExprKind::Const(n) => {
                    if seen.insert(n.clone()) {
                        out.push(n.clone());
                    }
                }
                _ => e.children().into_iter().for_each(|c| walk(c, seen, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Calls `f` on every node in pre-order.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Copy of the tree with every span reset.
    pub fn without_spans(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Neg(e) => ExprKind::Neg(Box::new(e.without_spans())),
            ExprKind::Binary(op, l, r) => {
                ExprKind::Binary(*op, Box::new(l.without_spans()), Box::new(r.without_spans()))
            }
            ExprKind::Pow(b, k) => ExprKind::Pow(Box::new(b.without_spans()), *k),
            ExprKind::Call(f, a) => ExprKind::Call(*f, Box::new(a.without_spans())),
            other => other.clone(),
        };
        Expr::new(kind, Span::default())
    }
}

/// Product of named units raised to integer powers; empty means dimensionless.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnitExpr {
    pub factors: Vec<UnitFactor>,
}

#[derive(Debug, Clone)]
pub struct UnitFactor {
    pub name: String,
    pub exponent: i32,
    pub span: Span,
}

impl PartialEq for UnitFactor {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.exponent == other.exponent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uncertainty {
    pub kind: Distribution,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub signal: String,
    pub uncertainty: Option<Uncertainty>,
    pub span: Span,
    pub signal_span: Span,
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.signal == other.signal && self.uncertainty == other.uncertainty
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub lhs: Expr,
    pub rhs: Expr,
    pub span: Span,
}

impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs
    }
}

impl Constraint {
    /// Name of the identifier on the left of `~`.
    pub fn target(&self) -> &str {
        match &self.lhs.kind {
            ExprKind::Ident(n) | ExprKind::Const(n) => n,
            _ => unreachable!("constraint lhs is always an identifier"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invariant {
    pub name: String,
    pub params: Vec<Param>,
    pub constraints: Vec<Constraint>,
    pub span: Span,
}

impl PartialEq for Invariant {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.constraints == other.constraints
    }
}

impl Invariant {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub unit: UnitExpr,
    pub span: Span,
}

impl PartialEq for Constant {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value && self.unit == other.unit
    }
}

/// `name : signal = unit;` declares a signal type from a unit expression.
#[derive(Debug, Clone)]
pub struct SignalDecl {
    pub name: String,
    pub unit: UnitExpr,
    pub span: Span,
}

impl PartialEq for SignalDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.unit == other.unit
    }
}

#[derive(Debug, Clone)]
pub struct Include {
    pub file: String,
    pub span: Span,
}

impl PartialEq for Include {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Description {
    pub includes: Vec<Include>,
    pub constants: Vec<Constant>,
    pub signals: Vec<SignalDecl>,
    pub invariants: Vec<Invariant>,
}

impl Description {
    pub fn invariant(&self, name: &str) -> Option<&Invariant> {
        self.invariants.iter().find(|i| i.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name == name)
    }
}
