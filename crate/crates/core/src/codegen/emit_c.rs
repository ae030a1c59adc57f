use std::fmt::Write;

use crate::codegen::ir::{AssignOp, BinaryOp, CExpr, CType, FunctionDef, Param, SourceUnit, Stmt};
use crate::frontend::{format_number, Func};

struct Emitter<'a> {
    unit: &'a SourceUnit,
    out: String,
    depth: usize,
}

const PRIMARY: u8 = 100;
const UNARY: u8 = 90;

fn bin_prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Mul | BinaryOp::Div => 80,
        BinaryOp::Add | BinaryOp::Sub => 70,
        BinaryOp::Lt => 60,
        BinaryOp::Ne => 50,
    }
}

fn bin_symbol(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Add => "+",
        BinaryOp::Sub => "-",
        BinaryOp::Mul => "*",
        BinaryOp::Div => "/",
        BinaryOp::Ne => "!=",
        BinaryOp::Lt => "<",
    }
}

fn prec(e: &CExpr) -> u8 {
    match e {
        CExpr::Real(v) if v.is_sign_negative() => UNARY,
        CExpr::Int(v) if *v < 0 => UNARY,
        CExpr::Neg(_) | CExpr::AddrOf(_) => UNARY,
        CExpr::Binary(op, ..) => bin_prec(*op),
        _ => PRIMARY,
    }
}

fn comment_text(s: &str) -> String {
    s.replace("*/", "* /")
}

/// `(Q)` guard name for a header file name.
pub fn include_guard(header: &str) -> String {
    let mut g: String = header.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect();
    if g.starts_with(|c: char| c.is_ascii_digit() || c == '_') {
        g.insert_str(0, "KF_");
    }
    g
}

impl Emitter<'_> {
    fn real(&self, v: f64) -> String {
        let mut s = format_number(v);
        if self.unit.single_precision {
            s.push('f');
        }
        s
    }

    fn math(&self, f: Func) -> String {
        let base = match f {
            Func::Ln => "log",
            other => other.name(),
        };
        if self.unit.single_precision {
            format!("{base}f")
        } else {
            base.to_string()
        }
    }

    fn expr(&self, e: &CExpr) -> String {
        let wrap = |child: &CExpr, parens: bool| {
            let s = self.expr(child);
            if parens {
                format!("({s})")
            } else {
                s
            }
        };
        match e {
            CExpr::Real(v) => self.real(*v),
            CExpr::Int(v) => v.to_string(),
            CExpr::Name(n) => n.clone(),
            CExpr::Index(b, i) => format!("{}[{}]", wrap(b, prec(b) < PRIMARY), self.expr(i)),
            CExpr::Arrow(b, f) => format!("{}->{f}", wrap(b, prec(b) < PRIMARY)),
            CExpr::Neg(a) => format!("-{}", wrap(a, prec(a) <= UNARY)),
            CExpr::AddrOf(a) => format!("&{}", wrap(a, prec(a) < PRIMARY)),
            CExpr::Binary(op, l, r) => {
                let p = bin_prec(*op);
                format!("{} {} {}", wrap(l, prec(l) < p), bin_symbol(*op), wrap(r, prec(r) <= p))
            }
            CExpr::Math(f, a) => format!("{}({})", self.math(*f), self.expr(a)),
            CExpr::Powi(b, k) => format!(
                "{}({}, {k})",
                self.unit.powi_helper.as_deref().expect("powi helper requested"),
                self.expr(b)
            ),
            CExpr::Call(f, args) => {
                format!("{f}({})", args.iter().map(|a| self.expr(a)).collect::<Vec<_>>().join(", "))
            }
            CExpr::Init(items) => {
                format!("{{{}}}", items.iter().map(|a| self.expr(a)).collect::<Vec<_>>().join(", "))
            }
        }
    }

    fn ty(&self, t: CType) -> String {
        match t {
            CType::Void => "void".into(),
            CType::Int => "int".into(),
            CType::Real => "kf_real".into(),
            CType::RealPtr => "kf_real *".into(),
            CType::ConstRealPtr => "const kf_real *".into(),
            CType::CtxPtr => format!("{} *", self.unit.record_name),
            CType::Mat => "kf_mat".into(),
        }
    }

    fn declarator(&self, t: CType, name: &str) -> String {
        let ty = self.ty(t);
        if ty.ends_with('*') {
            format!("{ty}{name}")
        } else {
            format!("{ty} {name}")
        }
    }

    fn param(&self, p: &Param) -> String {
        match (&p.array_len, p.ty) {
            (Some(len), CType::ConstRealPtr) => format!("const kf_real {}[{}]", p.name, self.expr(len)),
            (Some(len), CType::RealPtr) => format!("kf_real {}[{}]", p.name, self.expr(len)),
            _ => self.declarator(p.ty, &p.name),
        }
    }

    fn signature(&self, f: &FunctionDef) -> String {
        let params: Vec<String> = f.params.iter().map(|p| self.param(p)).collect();
        let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
        let linkage = if f.public { "" } else { "static " };
        format!("{linkage}{}({params})", self.declarator(f.ret, &f.name))
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn block(&mut self, body: &[Stmt]) {
        self.depth += 1;
        for s in body {
            self.stmt(s);
        }
        self.depth -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Decl { ty, name, constant, init } => {
                let konst = if *constant { "const " } else { "" };
                let decl = self.declarator(*ty, name);
                match init {
                    Some(e) => {
                        let e = self.expr(e);
                        self.line(&format!("{konst}{decl} = {e};"))
                    }
                    None => self.line(&format!("{konst}{decl};")),
                }
            }
            Stmt::Assign { lhs, op, rhs } => {
                let op = match op {
                    AssignOp::Set => "=",
                    AssignOp::Add => "+=",
                    AssignOp::Or => "|=",
                };
                let (l, r) = (self.expr(lhs), self.expr(rhs));
                self.line(&format!("{l} {op} {r};"));
            }
            Stmt::Expr(e) => {
                let e = self.expr(e);
                self.line(&format!("{e};"))
            }
            Stmt::If { cond, then } => {
                let c = self.expr(cond);
                self.line(&format!("if ({c}) {{"));
                self.block(then);
                self.line("}");
            }
            Stmt::For { var, bound, body } => {
                let b = self.expr(bound);
                self.line(&format!("for (int {var} = 0; {var} < {b}; ++{var}) {{"));
                self.block(body);
                self.line("}");
            }
            Stmt::Switch { on, cases, default } => {
                let o = self.expr(on);
                self.line(&format!("switch ({o}) {{"));
                for (v, body) in cases {
                    self.line(&format!("case {v}:"));
                    self.block(body);
                    self.depth += 1;
                    self.line("break;");
                    self.depth -= 1;
                }
                self.line("default:");
                self.block(default);
                self.line("}");
            }
            Stmt::Return(None) => self.line("return;"),
            Stmt::Return(Some(e)) => {
                let e = self.expr(e);
                self.line(&format!("return {e};"))
            }
            Stmt::Discard(n) => self.line(&format!("(void){n};")),
            Stmt::Comment(c) => self.line(&format!("/* {} */", comment_text(c))),
        }
    }

    fn banner(&mut self) {
        self.out.push_str("/*\n");
        for b in &self.unit.banner {
            let _ = writeln!(self.out, " * {}", comment_text(b));
        }
        self.out.push_str(" */\n");
    }

    fn function(&mut self, f: &FunctionDef) {
        if let Some(d) = &f.doc {
            let _ = writeln!(self.out, "/* {} */", comment_text(d));
        }
        let sig = self.signature(f);
        let _ = writeln!(self.out, "{sig}\n{{");
        self.block(&f.body);
        self.out.push_str("}\n\n");
    }

    fn powi(&mut self, name: &str) {
        let one = self.real(1.0);
        let _ = write!(
            self.out,
            "static kf_real {name}(kf_real x, int k)
{{
    kf_real result = {one};
    int n = k;
    if (n < 0) {{
        n = -n;
    }}
    while (n > 0) {{
        if (n & 1) {{
            result *= x;
        }}
        n >>= 1;
        if (n > 0) {{
            x *= x;
        }}
    }}
    if (k < 0) {{
        return {one} / result;
    }}
    return result;
}}

"
        );
    }
}

pub fn emit_header(unit: &SourceUnit) -> String {
    let mut e = Emitter { unit, out: String::new(), depth: 0 };
    e.banner();
    let guard = include_guard(&unit.header_name);
    let _ = writeln!(e.out, "#ifndef {guard}\n#define {guard}\n");
    if unit.single_precision {
        e.out.push_str("#ifndef KF_SINGLE_PRECISION\n#define KF_SINGLE_PRECISION\n#endif\n");
    }
    let _ = writeln!(e.out, "#include \"{}\"\n", unit.runtime_header);
    e.out.push_str("enum {\n");
    for (i, (name, v)) in unit.enums.iter().enumerate() {
        let sep = if i + 1 == unit.enums.len() { "" } else { "," };
        let _ = writeln!(e.out, "    {name} = {v}{sep}");
    }
    e.out.push_str("};\n\ntypedef struct {\n");
    for f in &unit.record {
        let len = e.expr(&f.len);
        let _ = writeln!(e.out, "    kf_real {}[{len}]; /* {} */", f.name, comment_text(&f.doc));
    }
    let _ = writeln!(e.out, "    int status; /* last {}STATUS_* code */\n}} {};\n", unit.prefix, unit.record_name);
    for (mac, field) in &unit.accessors {
        let _ = writeln!(e.out, "#define {mac}(ctx) ((const kf_real *)(ctx)->{field})");
    }
    e.out.push('\n');
    for f in &unit.functions {
        if let Some(d) = &f.doc {
            let _ = writeln!(e.out, "/* {} */", comment_text(d));
        }
        let sig = e.signature(f);
        let _ = writeln!(e.out, "{sig};\n");
    }
    let _ = writeln!(e.out, "#endif");
    e.out
}

pub fn emit_source(unit: &SourceUnit) -> String {
    let mut e = Emitter { unit, out: String::new(), depth: 0 };
    e.banner();
    let _ = writeln!(e.out, "#include \"{}\"\n\n#include <math.h>\n", unit.header_name);
    for (name, vals) in &unit.tables {
        let items: Vec<String> = vals.iter().map(|v| e.real(*v)).collect();
        let _ = writeln!(e.out, "static const kf_real {name}[{}] = {{{}}};", vals.len(), items.join(", "));
    }
    for (name, v) in &unit.constants {
        let v = e.real(*v);
        let _ = writeln!(e.out, "static const kf_real {name} = {v};");
    }
    e.out.push('\n');
    if let Some(name) = &unit.powi_helper {
        e.powi(name);
    }
    for f in unit.helpers.iter().chain(&unit.functions) {
        e.function(f);
    }
    while e.out.ends_with("\n\n") {
        e.out.pop();
    }
    e.out
}
