//! Target-neutral description of a generated filter.

use crate::frontend::Func;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CType {
    Void,
    Int,
    Real,
    /// `kf_real *`
    RealPtr,
    /// `const kf_real *`
    ConstRealPtr,
    /// Pointer to the filter record.
    CtxPtr,
    /// Runtime matrix view.
    Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: CType,
    /// Declared as an array of this length (documentation only in C).
    pub array_len: Option<CExpr>,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: CType) -> Self {
        Param { name: name.into(), ty, array_len: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Ne,
    Lt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    Real(f64),
    Int(i64),
    Name(String),
    Index(Box<CExpr>, Box<CExpr>),
    /// `base->field`
    Arrow(Box<CExpr>, String),
    Neg(Box<CExpr>),
    AddrOf(Box<CExpr>),
    Binary(BinaryOp, Box<CExpr>, Box<CExpr>),
    /// Elementary function; the emitter picks the precision variant.
    Math(Func, Box<CExpr>),
    /// Integer power through the generated helper.
    Powi(Box<CExpr>, i32),
    Call(String, Vec<CExpr>),
    /// Brace initializer.
    Init(Vec<CExpr>),
}

impl CExpr {
    pub fn name(n: impl Into<String>) -> Self {
        CExpr::Name(n.into())
    }

    pub fn bin(op: BinaryOp, l: CExpr, r: CExpr) -> Self {
        CExpr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn index(self, i: CExpr) -> Self {
        CExpr::Index(Box::new(self), Box::new(i))
    }

    pub fn arrow(self, field: &str) -> Self {
        CExpr::Arrow(Box::new(self), field.to_string())
    }

    pub fn addr(self) -> Self {
        CExpr::AddrOf(Box::new(self))
    }

    /// Every name referenced, in order of appearance.
    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            CExpr::Real(_) | CExpr::Int(_) => {}
            CExpr::Name(n) => out.push(n.clone()),
            CExpr::Index(a, b) | CExpr::Binary(_, a, b) => {
                a.names(out);
                b.names(out);
            }
            CExpr::Arrow(a, _) | CExpr::Neg(a) | CExpr::AddrOf(a) | CExpr::Math(_, a) | CExpr::Powi(a, _) => a.names(out),
            CExpr::Call(_, args) | CExpr::Init(args) => args.iter().for_each(|a| a.names(out)),
        }
    }

    pub fn uses_powi(&self) -> bool {
        match self {
            CExpr::Powi(..) => true,
            CExpr::Real(_) | CExpr::Int(_) | CExpr::Name(_) => false,
            CExpr::Index(a, b) | CExpr::Binary(_, a, b) => a.uses_powi() || b.uses_powi(),
            CExpr::Arrow(a, _) | CExpr::Neg(a) | CExpr::AddrOf(a) | CExpr::Math(_, a) => a.uses_powi(),
            CExpr::Call(_, args) | CExpr::Init(args) => args.iter().any(CExpr::uses_powi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Decl { ty: CType, name: String, constant: bool, init: Option<CExpr> },
    Assign { lhs: CExpr, op: AssignOp, rhs: CExpr },
    Expr(CExpr),
    If { cond: CExpr, then: Vec<Stmt> },
    /// `for (int var = 0; var < bound; ++var)`
    For { var: String, bound: CExpr, body: Vec<Stmt> },
    Switch { on: CExpr, cases: Vec<(i64, Vec<Stmt>)>, default: Vec<Stmt> },
    Return(Option<CExpr>),
    /// `(void)name;`
    Discard(String),
    Comment(String),
}

impl Stmt {
    pub fn set(lhs: CExpr, rhs: CExpr) -> Self {
        Stmt::Assign { lhs, op: AssignOp::Set, rhs }
    }

    pub fn add_to(lhs: CExpr, rhs: CExpr) -> Self {
        Stmt::Assign { lhs, op: AssignOp::Add, rhs }
    }

    pub fn local(ty: CType, name: impl Into<String>, init: CExpr) -> Self {
        Stmt::Decl { ty, name: name.into(), constant: false, init: Some(init) }
    }

    pub fn constant(name: impl Into<String>, init: CExpr) -> Self {
        Stmt::Decl { ty: CType::Real, name: name.into(), constant: true, init: Some(init) }
    }

    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            Stmt::Decl { init, .. } => init.iter().for_each(|e| e.names(out)),
            Stmt::Assign { lhs, rhs, .. } => {
                lhs.names(out);
                rhs.names(out);
            }
            Stmt::Expr(e) | Stmt::Return(Some(e)) => e.names(out),
            Stmt::If { cond, then } => {
                cond.names(out);
                then.iter().for_each(|s| s.names(out));
            }
            Stmt::For { bound, body, .. } => {
                bound.names(out);
                body.iter().for_each(|s| s.names(out));
            }
            Stmt::Switch { on, cases, default } => {
                on.names(out);
                cases.iter().flat_map(|(_, b)| b).chain(default).for_each(|s| s.names(out));
            }
            Stmt::Return(None) | Stmt::Discard(_) | Stmt::Comment(_) => {}
        }
    }

    pub fn uses_powi(&self) -> bool {
        match self {
            Stmt::Decl { init, .. } => init.as_ref().is_some_and(CExpr::uses_powi),
            Stmt::Assign { lhs, rhs, .. } => lhs.uses_powi() || rhs.uses_powi(),
            Stmt::Expr(e) | Stmt::Return(Some(e)) => e.uses_powi(),
            Stmt::If { cond, then } => cond.uses_powi() || then.iter().any(Stmt::uses_powi),
            Stmt::For { bound, body, .. } => bound.uses_powi() || body.iter().any(Stmt::uses_powi),
            Stmt::Switch { on, cases, default } => {
                on.uses_powi() || cases.iter().flat_map(|(_, b)| b).chain(default).any(Stmt::uses_powi)
            }
            Stmt::Return(None) | Stmt::Discard(_) | Stmt::Comment(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    /// Public functions get external linkage and a header prototype.
    pub public: bool,
    pub ret: CType,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub doc: Option<String>,
}

/// `kf_real name[len]` inside the filter record.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub len: CExpr,
    pub doc: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub prefix: String,
    pub header_name: String,
    pub runtime_header: String,
    pub single_precision: bool,
    /// Enumerated integer constants (dimensions, status codes).
    pub enums: Vec<(String, i64)>,
    pub record_name: String,
    pub record: Vec<Field>,
    /// Read-only accessor macros: `(macro name, field name)`.
    pub accessors: Vec<(String, String)>,
    /// `static const kf_real name[] = {...}`.
    pub tables: Vec<(String, Vec<f64>)>,
    /// `static const kf_real name = value`.
    pub constants: Vec<(String, f64)>,
    pub powi_helper: Option<String>,
    pub helpers: Vec<FunctionDef>,
    pub functions: Vec<FunctionDef>,
    pub banner: Vec<String>,
}
