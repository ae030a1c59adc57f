use crate::autodiff::{reverse_mode, to_ssa, AdjInstr, AdjointProgram, DiffMode, Operand, Partial, Slot};
use crate::codegen::ir::{AssignOp, BinaryOp, CExpr, CType, Field, FunctionDef, Param, SourceUnit, Stmt};
use crate::codegen::{FilterKind, GenOptions};
use crate::frontend::{BinOp, Expr, ExprKind};
use crate::model::{ModelKind, StateSpaceModel};

pub fn var(name: &str) -> String {
    format!("v_{name}")
}

pub fn constant(name: &str) -> String {
    format!("c_{name}")
}

struct Lowering<'a> {
    model: &'a StateSpaceModel,
    opts: &'a GenOptions,
    n: usize,
    z: usize,
}

fn int(v: usize) -> CExpr {
    CExpr::Int(v as i64)
}

fn ctx() -> CExpr {
    CExpr::name("ctx")
}

fn field(f: &str) -> CExpr {
    ctx().arrow(f)
}

fn at(f: &str, i: usize) -> CExpr {
    field(f).index(int(i))
}

fn loop_var(v: &str) -> CExpr {
    CExpr::name(v)
}

/// Lowers a model expression; identifiers become `v_*`, constants `c_*`.
pub fn lower_expr(e: &Expr) -> CExpr {
    match &e.kind {
        ExprKind::Ident(n) => CExpr::Name(var(n)),
        ExprKind::Const(n) => CExpr::Name(constant(n)),
        ExprKind::Number(v) => CExpr::Real(*v),
        ExprKind::Neg(a) => CExpr::Neg(Box::new(lower_expr(a))),
        ExprKind::Binary(op, l, r) => {
            let op = match op {
                BinOp::Add => BinaryOp::Add,
                BinOp::Sub => BinaryOp::Sub,
                BinOp::Mul => BinaryOp::Mul,
                BinOp::Div => BinaryOp::Div,
            };
            CExpr::bin(op, lower_expr(l), lower_expr(r))
        }
        ExprKind::Pow(b, k) => CExpr::Powi(Box::new(lower_expr(b)), *k),
        ExprKind::Call(f, a) => CExpr::Math(*f, Box::new(lower_expr(a))),
    }
}

fn operand(o: &Operand) -> CExpr {
    match o {
        Operand::Temp(k) => CExpr::Name(format!("r{k}")),
        Operand::Var(n) => CExpr::Name(var(n)),
        Operand::Const(n) => CExpr::Name(constant(n)),
        Operand::Imm(v) => CExpr::Real(*v),
    }
}

fn partial(p: &Partial) -> Option<CExpr> {
    use BinaryOp::*;
    let temp = |k: usize| CExpr::Name(format!("r{k}"));
    Some(match p {
        Partial::One => return None,
        Partial::MinusOne => CExpr::Real(-1.0),
        Partial::Operand(o) => operand(o),
        Partial::Recip(o) => CExpr::bin(Div, CExpr::Real(1.0), operand(o)),
        Partial::Quotient { result, divisor } => CExpr::bin(Div, CExpr::Neg(Box::new(temp(*result))), operand(divisor)),
        Partial::Power { k: 0, .. } => CExpr::Real(0.0),
        Partial::Power { k: 1, .. } => CExpr::Real(1.0),
        Partial::Power { base, k: 2 } => CExpr::bin(Mul, CExpr::Real(2.0), operand(base)),
        Partial::Power { base, k } => {
            CExpr::bin(Mul, CExpr::Real(*k as f64), CExpr::Powi(Box::new(operand(base)), k - 1))
        }
        Partial::Cos(o) => CExpr::Math(crate::frontend::Func::Cos, Box::new(operand(o))),
        Partial::NegSin(o) => CExpr::Neg(Box::new(CExpr::Math(crate::frontend::Func::Sin, Box::new(operand(o))))),
        Partial::TanSquared(r) => CExpr::bin(Add, CExpr::Real(1.0), CExpr::bin(Mul, temp(*r), temp(*r))),
        Partial::HalfOver(r) => CExpr::bin(Div, CExpr::Real(0.5), temp(*r)),
    })
}

/// Prepends `(void)p;` for parameters the body never mentions.
fn discard_unused(params: &[Param], body: &mut Vec<Stmt>) {
    let mut used = Vec::new();
    body.iter().for_each(|s| s.names(&mut used));
    let unused: Vec<Stmt> =
        params.iter().filter(|p| !used.contains(&p.name)).map(|p| Stmt::Discard(p.name.clone())).collect();
    body.splice(0..0, unused);
}

/// `const kf_real v_x = s[i];` for every state variable the body mentions.
fn load_state(model: &StateSpaceModel, body: &mut Vec<Stmt>, source: CExpr) {
    let mut used = Vec::new();
    body.iter().for_each(|s| s.names(&mut used));
    let loads: Vec<Stmt> = model
        .vars
        .state
        .iter()
        .enumerate()
        .filter(|(_, n)| used.contains(&var(n)))
        .map(|(i, n)| Stmt::constant(var(n), source.clone().index(int(i))))
        .collect();
    body.splice(0..0, loads);
}

/// Drops adjoint work that cannot reach a state gradient.
fn live_adjoints(adj: &AdjointProgram, state: &[String]) -> Vec<AdjInstr> {
    let mut keep: Vec<AdjInstr> = adj
        .adjoints
        .iter()
        .filter(|a| match a {
            AdjInstr::Contribute { target: Slot::Input(j), .. } => state.contains(&adj.inputs[*j]),
            _ => true,
        })
        .cloned()
        .collect();
    loop {
        let read: Vec<usize> = keep
            .iter()
            .filter_map(|a| match a {
                AdjInstr::Contribute { source, .. } => Some(*source),
                AdjInstr::Seed(_) => None,
            })
            .collect();
        let before = keep.len();
        keep.retain(|a| match a {
            AdjInstr::Contribute { target: Slot::Temp(k), .. } | AdjInstr::Seed(Slot::Temp(k)) => read.contains(k),
            _ => true,
        });
        if keep.len() == before {
            return keep;
        }
    }
}

impl<'a> Lowering<'a> {
    fn p(&self, name: &str) -> String {
        format!("{}{name}", self.opts.prefix)
    }

    fn dim(&self, which: &str) -> CExpr {
        CExpr::Name(self.p(which))
    }

    fn extras_params(&self) -> Vec<Param> {
        self.model.vars.extras.iter().map(|e| Param::new(var(e), CType::Real)).collect()
    }

    fn extras_args(&self) -> Vec<CExpr> {
        self.model.vars.extras.iter().map(|e| CExpr::Name(var(e))).collect()
    }

    fn helper_params(&self, with_grad: bool) -> Vec<Param> {
        let mut ps = vec![Param::new("s", CType::ConstRealPtr)];
        ps.extend(self.extras_params());
        if with_grad {
            ps.push(Param::new("grad", CType::RealPtr));
        }
        ps
    }

    fn helper(&self, name: String, with_grad: bool, mut body: Vec<Stmt>, doc: String) -> FunctionDef {
        let params = self.helper_params(with_grad);
        load_state(self.model, &mut body, CExpr::name("s"));
        discard_unused(&params, &mut body);
        FunctionDef { name, public: false, ret: CType::Real, params, body, doc: Some(doc) }
    }

    /// `kf_real f(s, extras...)` returning one expression.
    fn value_fn(&self, name: String, e: &Expr, doc: String) -> FunctionDef {
        self.helper(name, false, vec![Stmt::Return(Some(lower_expr(e)))], doc)
    }

    /// Primal plus reverse sweep for one row; writes d row / d state into `grad`.
    fn sweep_fn(&self, name: String, e: &Expr, doc: String) -> FunctionDef {
        let adj = reverse_mode(&to_ssa(e));
        let state = &self.model.vars.state;
        let mut body: Vec<Stmt> = (0..self.n).map(|j| Stmt::set(CExpr::name("grad").index(int(j)), CExpr::Real(0.0))).collect();
        for ins in &adj.primal.instructions {
            body.push(Stmt::constant(format!("r{}", ins.target), instr_expr(ins)));
        }
        for a in live_adjoints(&adj, state) {
            match a {
                AdjInstr::Seed(Slot::Temp(k)) => body.push(Stmt::constant(format!("a{k}"), CExpr::Real(1.0))),
                AdjInstr::Seed(Slot::Input(_)) => unreachable!("seed is always the result temp"),
                AdjInstr::Contribute { target, accumulate, partial: p, source } => {
                    let src = CExpr::Name(format!("a{source}"));
                    let value = match self::partial(&p) {
                        None => src,
                        Some(pe) => CExpr::bin(BinaryOp::Mul, pe, src),
                    };
                    match target {
                        Slot::Temp(k) if accumulate => body.push(Stmt::add_to(CExpr::Name(format!("a{k}")), value)),
                        Slot::Temp(k) => body.push(Stmt::local(CType::Real, format!("a{k}"), value)),
                        Slot::Input(j) => {
                            let col = state.iter().position(|s| *s == adj.inputs[j]).expect("live input is a state");
                            body.push(Stmt::add_to(CExpr::name("grad").index(int(col)), value));
                        }
                    }
                }
            }
        }
        body.push(Stmt::Return(Some(CExpr::Name(format!("r{}", adj.primal.result)))));
        self.helper(name, true, body, doc)
    }

    fn mode_switch(&self, cases: Vec<(i64, Vec<Stmt>)>) -> Stmt {
        Stmt::Switch {
            on: CExpr::name("mode"),
            cases,
            default: vec![
                Stmt::set(field("status"), CExpr::Name(self.p("STATUS_BAD_MODE"))),
                Stmt::Return(Some(field("status"))),
            ],
        }
    }

    fn mat(&self, name: &str, rows: &str, cols: &str, data: &str) -> Stmt {
        Stmt::Decl {
            ty: CType::Mat,
            name: name.into(),
            constant: false,
            init: Some(CExpr::Init(vec![self.dim(rows), self.dim(cols), field(data)])),
        }
    }

    fn call(&self, f: &str, args: &[&str]) -> CExpr {
        CExpr::Call(f.into(), args.iter().map(|a| CExpr::name(*a).addr()).collect())
    }

    fn status_chain(&self, calls: Vec<CExpr>) -> Vec<Stmt> {
        calls
            .into_iter()
            .enumerate()
            .map(|(i, c)| Stmt::Assign { lhs: CExpr::name("st"), op: if i == 0 { AssignOp::Set } else { AssignOp::Or }, rhs: c })
            .collect()
    }

    fn bail_on_status(&self) -> Stmt {
        Stmt::If {
            cond: CExpr::bin(BinaryOp::Ne, CExpr::name("st"), CExpr::name("KF_OK")),
            then: vec![Stmt::set(field("status"), CExpr::name("st")), Stmt::Return(Some(CExpr::name("st")))],
        }
    }

    fn for_n(&self, var: &str, bound: CExpr, body: Vec<Stmt>) -> Stmt {
        Stmt::For { var: var.into(), bound, body }
    }

    fn nn(&self) -> CExpr {
        CExpr::bin(BinaryOp::Mul, self.dim("STATE_DIM"), self.dim("STATE_DIM"))
    }

    fn flat(&self, f: &str, i: &str, j: &str, cols: &str) -> CExpr {
        field(f).index(CExpr::bin(BinaryOp::Add, CExpr::bin(BinaryOp::Mul, loop_var(i), self.dim(cols)), loop_var(j)))
    }

    fn init_fn(&self) -> FunctionDef {
        let nn = self.nn();
        let body = vec![
            self.for_n("i", self.dim("STATE_DIM"), vec![Stmt::set(field("s").index(loop_var("i")), CExpr::name("s0").index(loop_var("i")))]),
            self.for_n("i", nn, vec![Stmt::set(field("P").index(loop_var("i")), CExpr::name("P0").index(loop_var("i")))]),
            self.for_n("i", self.dim("MEASURE_DIM"), vec![
                Stmt::set(field("y").index(loop_var("i")), CExpr::Real(0.0)),
            ]),
            self.for_n(
                "i",
                CExpr::bin(BinaryOp::Mul, self.dim("STATE_DIM"), self.dim("MEASURE_DIM")),
                vec![Stmt::set(field("K").index(loop_var("i")), CExpr::Real(0.0))],
            ),
            Stmt::set(field("status"), CExpr::Name(self.p("STATUS_OK"))),
        ];
        FunctionDef {
            name: self.p("filterInit"),
            public: true,
            ret: CType::Void,
            params: vec![
                Param::new("ctx", CType::CtxPtr),
                Param { name: "s0".into(), ty: CType::ConstRealPtr, array_len: Some(self.dim("STATE_DIM")) },
                Param { name: "P0".into(), ty: CType::ConstRealPtr, array_len: Some(self.nn()) },
            ],
            body,
            doc: Some("Copies the initial state estimate and covariance into ctx.".into()),
        }
    }

    fn covariance_predict(&self) -> Vec<Stmt> {
        let mut out = vec![
            self.mat("mF", "STATE_DIM", "STATE_DIM", "F"),
            self.mat("mFt", "STATE_DIM", "STATE_DIM", "Ft"),
            self.mat("mP", "STATE_DIM", "STATE_DIM", "P"),
            self.mat("mT", "STATE_DIM", "STATE_DIM", "T"),
        ];
        out.extend(self.status_chain(vec![
            self.call("kf_mat_mul", &["mF", "mP", "mT"]),
            self.call("kf_mat_transpose", &["mF", "mFt"]),
            self.call("kf_mat_mul", &["mT", "mFt", "mP"]),
        ]));
        out.push(self.bail_on_status());
        out.push(self.for_n(
            "i",
            self.nn(),
            vec![Stmt::add_to(field("P").index(loop_var("i")), CExpr::Name(self.p("Q")).index(loop_var("i")))],
        ));
        out
    }

    fn predict_fn(&self) -> FunctionDef {
        let (n, opts) = (self.n, self.opts);
        let mut cases = Vec::new();
        let mut body = vec![Stmt::Decl { ty: CType::Int, name: "st".into(), constant: false, init: None }];
        let linear = matches!((&self.model.kind, opts.filter), (ModelKind::Linear { .. }, FilterKind::Lkf));
        if let (ModelKind::Linear { process, .. }, true) = (&self.model.kind, linear) {
            for (m, map) in process.iter().enumerate() {
                let mut stmts = vec![];
                for i in 0..n {
                    for j in 0..n {
                        stmts.push(Stmt::set(at("F", i * n + j), lower_expr(&map.matrix[i][j])));
                    }
                }
                for i in 0..n {
                    stmts.push(Stmt::set(at("u", i), lower_expr(&map.offset[i])));
                }
                cases.push((m as i64, stmts));
            }
        } else {
            for m in 0..self.model.mode_count() {
                let mut stmts = vec![];
                for i in 0..n {
                    let mut args = vec![field("s")];
                    args.extend(self.extras_args());
                    match opts.diff {
                        DiffMode::Standard => {
                            stmts.push(Stmt::set(at("sp", i), CExpr::Call(self.p(&format!("f{m}_{i}")), args.clone())));
                            for j in 0..n {
                                stmts.push(Stmt::set(
                                    at("F", i * n + j),
                                    CExpr::Call(self.p(&format!("df{m}_{i}_{j}")), args.clone()),
                                ));
                            }
                        }
                        DiffMode::Autodiff => {
                            args.push(at("F", i * n).addr());
                            stmts.push(Stmt::set(at("sp", i), CExpr::Call(self.p(&format!("f{m}_{i}_ad")), args)));
                        }
                    }
                }
                cases.push((m as i64, stmts));
            }
        }
        body.push(self.mode_switch(cases));
        body.extend(self.covariance_predict());
        let next = if linear {
            body.push(Stmt::set(
                CExpr::name("st"),
                CExpr::Call("kf_mat_vec_mul".into(), vec![CExpr::name("mF").addr(), field("s"), field("sp")]),
            ));
            body.push(self.bail_on_status());
            CExpr::bin(BinaryOp::Add, field("sp").index(loop_var("i")), field("u").index(loop_var("i")))
        } else {
            field("sp").index(loop_var("i"))
        };
        body.push(self.for_n("i", self.dim("STATE_DIM"), vec![Stmt::set(field("s").index(loop_var("i")), next)]));
        body.push(Stmt::set(field("status"), CExpr::Name(self.p("STATUS_OK"))));
        body.push(Stmt::Return(Some(field("status"))));
        self.finish_public("filterPredict", true, body)
    }

    fn finish_public(&self, name: &str, predict: bool, mut body: Vec<Stmt>) -> FunctionDef {
        let mut params = vec![Param::new("ctx", CType::CtxPtr)];
        if !predict {
            params.push(Param { name: "z".into(), ty: CType::ConstRealPtr, array_len: Some(self.dim("MEASURE_DIM")) });
        }
        params.extend(self.extras_params());
        if predict {
            params.push(Param::new("mode", CType::Int));
        }
        discard_unused(&params, &mut body);
        let doc = if predict {
            "Time update: propagates state and covariance with the selected process mode."
        } else {
            "Measurement update. A singular innovation covariance leaves the prediction in place and sets status."
        };
        FunctionDef { name: self.p(name), public: true, ret: CType::Int, params, body, doc: Some(doc.into()) }
    }

    fn update_fn(&self) -> FunctionDef {
        let (n, z) = (self.n, self.z);
        let mut body = vec![Stmt::Decl { ty: CType::Int, name: "st".into(), constant: false, init: None }];
        match (&self.model.kind, self.opts.filter) {
            (ModelKind::Linear { measure, .. }, FilterKind::Lkf) => {
                for i in 0..z {
                    for j in 0..n {
                        body.push(Stmt::set(at("H", i * n + j), lower_expr(&measure.matrix[i][j])));
                    }
                }
                body.push(self.mat("mH", "MEASURE_DIM", "STATE_DIM", "H"));
                body.push(Stmt::set(
                    CExpr::name("st"),
                    CExpr::Call("kf_mat_vec_mul".into(), vec![CExpr::name("mH").addr(), field("s"), field("zp")]),
                ));
                body.push(self.bail_on_status());
                for i in 0..z {
                    body.push(Stmt::add_to(at("zp", i), lower_expr(&measure.offset[i])));
                }
            }
            _ => {
                let mut args = vec![field("s")];
                args.extend(self.extras_args());
                for i in 0..z {
                    match self.opts.diff {
                        DiffMode::Standard => {
                            body.push(Stmt::set(at("zp", i), CExpr::Call(self.p(&format!("h_{i}")), args.clone())));
                            for j in 0..n {
                                body.push(Stmt::set(at("H", i * n + j), CExpr::Call(self.p(&format!("dh_{i}_{j}")), args.clone())));
                            }
                        }
                        DiffMode::Autodiff => {
                            let mut a = args.clone();
                            a.push(at("H", i * n).addr());
                            body.push(Stmt::set(at("zp", i), CExpr::Call(self.p(&format!("h_{i}_ad")), a)));
                        }
                    }
                }
                body.push(self.mat("mH", "MEASURE_DIM", "STATE_DIM", "H"));
            }
        }
        for (name, r, c, f) in [
            ("mHt", "STATE_DIM", "MEASURE_DIM", "Ht"),
            ("mP", "STATE_DIM", "STATE_DIM", "P"),
            ("mPHt", "STATE_DIM", "MEASURE_DIM", "PHt"),
            ("mS", "MEASURE_DIM", "MEASURE_DIM", "S"),
            ("mSw", "MEASURE_DIM", "MEASURE_DIM", "S_work"),
            ("mSi", "MEASURE_DIM", "MEASURE_DIM", "S_inv"),
            ("mK", "STATE_DIM", "MEASURE_DIM", "K"),
            ("mKH", "STATE_DIM", "STATE_DIM", "KH"),
            ("mT", "STATE_DIM", "STATE_DIM", "T"),
        ] {
            body.push(self.mat(name, r, c, f));
        }
        body.extend(self.status_chain(vec![
            self.call("kf_mat_transpose", &["mH", "mHt"]),
            self.call("kf_mat_mul", &["mP", "mHt", "mPHt"]),
            self.call("kf_mat_mul", &["mH", "mPHt", "mS"]),
        ]));
        body.push(self.bail_on_status());
        let zz = CExpr::bin(BinaryOp::Mul, self.dim("MEASURE_DIM"), self.dim("MEASURE_DIM"));
        body.push(self.for_n("i", zz, vec![Stmt::add_to(field("S").index(loop_var("i")), CExpr::Name(self.p("R")).index(loop_var("i")))]));
        body.push(Stmt::set(CExpr::name("st"), self.call("kf_mat_invert", &["mS", "mSw", "mSi"])));
        body.push(self.bail_on_status());
        body.push(self.for_n(
            "i",
            self.dim("MEASURE_DIM"),
            vec![Stmt::set(
                field("y").index(loop_var("i")),
                CExpr::bin(BinaryOp::Sub, CExpr::name("z").index(loop_var("i")), field("zp").index(loop_var("i"))),
            )],
        ));
        body.extend(self.status_chain(vec![
            self.call("kf_mat_mul", &["mPHt", "mSi", "mK"]),
            CExpr::Call("kf_mat_vec_mul".into(), vec![CExpr::name("mK").addr(), field("y"), field("sp")]),
            self.call("kf_mat_mul", &["mK", "mH", "mKH"]),
        ]));
        body.push(self.bail_on_status());
        body.push(self.for_n(
            "i",
            self.dim("STATE_DIM"),
            vec![Stmt::add_to(field("s").index(loop_var("i")), field("sp").index(loop_var("i")))],
        ));
        body.push(Stmt::Comment("KH <- I - KH".into()));
        body.push(self.for_n("i", self.nn(), vec![Stmt::set(field("KH").index(loop_var("i")), CExpr::Neg(Box::new(field("KH").index(loop_var("i")))))]));
        body.push(self.for_n(
            "i",
            self.dim("STATE_DIM"),
            vec![Stmt::add_to(
                field("KH").index(CExpr::bin(
                    BinaryOp::Mul,
                    loop_var("i"),
                    CExpr::bin(BinaryOp::Add, self.dim("STATE_DIM"), CExpr::Int(1)),
                )),
                CExpr::Real(1.0),
            )],
        ));
        body.push(Stmt::set(CExpr::name("st"), self.call("kf_mat_mul", &["mKH", "mP", "mT"])));
        body.push(self.bail_on_status());
        body.push(Stmt::Comment("P <- (T + T^T) / 2".into()));
        body.push(self.for_n(
            "i",
            self.dim("STATE_DIM"),
            vec![self.for_n(
                "j",
                self.dim("STATE_DIM"),
                vec![Stmt::set(
                    self.flat("P", "i", "j", "STATE_DIM"),
                    CExpr::bin(
                        BinaryOp::Mul,
                        CExpr::Real(0.5),
                        CExpr::bin(BinaryOp::Add, self.flat("T", "i", "j", "STATE_DIM"), self.flat("T", "j", "i", "STATE_DIM")),
                    ),
                )],
            )],
        ));
        body.push(Stmt::set(field("status"), CExpr::Name(self.p("STATUS_OK"))));
        body.push(Stmt::Return(Some(field("status"))));
        self.finish_public("filterUpdate", false, body)
    }

    fn helpers(&self) -> Vec<FunctionDef> {
        let model = self.model;
        let (state, n) = (&model.vars.state, self.n);
        let mut out = vec![];
        let linear = matches!((&model.kind, self.opts.filter), (ModelKind::Linear { .. }, FilterKind::Lkf));
        if linear {
            return out;
        }
        let (process_jac, measure_jac) = match &model.kind {
            ModelKind::Nonlinear { process_jacobians, measure_jacobian } => (process_jacobians.clone(), measure_jacobian.clone()),
            ModelKind::Linear { .. } => match model.as_nonlinear().kind {
                ModelKind::Nonlinear { process_jacobians, measure_jacobian } => (process_jacobians, measure_jacobian),
                ModelKind::Linear { .. } => unreachable!(),
            },
        };
        for (m, mode) in model.modes.iter().enumerate() {
            for (i, f) in mode.f.iter().enumerate() {
                let doc = format!("{}: {}' = {}", mode.name, state[i], f);
                match self.opts.diff {
                    DiffMode::Standard => {
                        out.push(self.value_fn(self.p(&format!("f{m}_{i}")), f, doc));
                        for j in 0..n {
                            let d = &process_jac[m][i][j];
                            out.push(self.value_fn(
                                self.p(&format!("df{m}_{i}_{j}")),
                                d,
                                format!("d {}' / d {} = {}", state[i], state[j], d),
                            ));
                        }
                    }
                    DiffMode::Autodiff => out.push(self.sweep_fn(self.p(&format!("f{m}_{i}_ad")), f, doc)),
                }
            }
        }
        for (i, h) in model.h.iter().enumerate() {
            let meas = &model.vars.measurement[i];
            let doc = format!("{meas} = {h}");
            match self.opts.diff {
                DiffMode::Standard => {
                    out.push(self.value_fn(self.p(&format!("h_{i}")), h, doc));
                    for j in 0..n {
                        let d = &measure_jac[i][j];
                        out.push(self.value_fn(self.p(&format!("dh_{i}_{j}")), d, format!("d {meas} / d {} = {d}", state[j])));
                    }
                }
                DiffMode::Autodiff => out.push(self.sweep_fn(self.p(&format!("h_{i}_ad")), h, doc)),
            }
        }
        out
    }

    fn record(&self) -> Vec<Field> {
        let d = |s: &str| self.dim(s);
        let mul = |a: &str, b: &str| CExpr::bin(BinaryOp::Mul, d(a), d(b));
        let mut f = vec![
            Field { name: "s".into(), len: d("STATE_DIM"), doc: "state estimate".into() },
            Field { name: "P".into(), len: mul("STATE_DIM", "STATE_DIM"), doc: "state covariance, row-major".into() },
            Field { name: "F".into(), len: mul("STATE_DIM", "STATE_DIM"), doc: "state transition or its Jacobian".into() },
            Field { name: "Ft".into(), len: mul("STATE_DIM", "STATE_DIM"), doc: "scratch".into() },
            Field { name: "T".into(), len: mul("STATE_DIM", "STATE_DIM"), doc: "scratch".into() },
            Field { name: "KH".into(), len: mul("STATE_DIM", "STATE_DIM"), doc: "scratch".into() },
            Field { name: "sp".into(), len: d("STATE_DIM"), doc: "scratch".into() },
            Field { name: "H".into(), len: mul("MEASURE_DIM", "STATE_DIM"), doc: "measurement matrix or its Jacobian".into() },
            Field { name: "Ht".into(), len: mul("STATE_DIM", "MEASURE_DIM"), doc: "scratch".into() },
            Field { name: "PHt".into(), len: mul("STATE_DIM", "MEASURE_DIM"), doc: "scratch".into() },
            Field { name: "S".into(), len: mul("MEASURE_DIM", "MEASURE_DIM"), doc: "innovation covariance".into() },
            Field { name: "S_work".into(), len: mul("MEASURE_DIM", "MEASURE_DIM"), doc: "scratch".into() },
            Field { name: "S_inv".into(), len: mul("MEASURE_DIM", "MEASURE_DIM"), doc: "scratch".into() },
            Field { name: "K".into(), len: mul("STATE_DIM", "MEASURE_DIM"), doc: "Kalman gain of the last update".into() },
            Field { name: "y".into(), len: d("MEASURE_DIM"), doc: "innovation of the last update".into() },
            Field { name: "zp".into(), len: d("MEASURE_DIM"), doc: "predicted measurement".into() },
        ];
        if matches!((&self.model.kind, self.opts.filter), (ModelKind::Linear { .. }, FilterKind::Lkf)) {
            f.push(Field { name: "u".into(), len: d("STATE_DIM"), doc: "affine offset of the transition".into() });
        }
        f
    }
}

/// Expression computed by one SSA instruction.
pub fn instr_expr(ins: &crate::autodiff::Instr) -> CExpr {
    use crate::autodiff::Op;
    let a = |i: usize| operand(&ins.args[i]);
    match ins.op {
        Op::Const | Op::Load => a(0),
        Op::Neg => CExpr::Neg(Box::new(a(0))),
        Op::Add => CExpr::bin(BinaryOp::Add, a(0), a(1)),
        Op::Sub => CExpr::bin(BinaryOp::Sub, a(0), a(1)),
        Op::Mul => CExpr::bin(BinaryOp::Mul, a(0), a(1)),
        Op::Div => CExpr::bin(BinaryOp::Div, a(0), a(1)),
        Op::PowInt(k) => CExpr::Powi(Box::new(a(0)), k),
        Op::Call(f) => CExpr::Math(f, Box::new(a(0))),
    }
}

pub fn lower(model: &StateSpaceModel, opts: &GenOptions) -> SourceUnit {
    let lw = Lowering { model, opts, n: model.state_dim(), z: model.measurement_dim() };
    let p = |s: &str| lw.p(s);
    let helpers = lw.helpers();
    let functions = vec![lw.init_fn(), lw.predict_fn(), lw.update_fn()];

    let mut used = Vec::new();
    helpers.iter().chain(&functions).flat_map(|f| &f.body).for_each(|s| s.names(&mut used));
    let constants: Vec<(String, f64)> =
        model.constants.iter().filter(|(n, _)| used.contains(&constant(n))).map(|(n, v)| (constant(n), *v)).collect();
    let powi = helpers.iter().chain(&functions).flat_map(|f| &f.body).any(Stmt::uses_powi);

    let kind = match (opts.filter, opts.diff) {
        (FilterKind::Lkf, _) => "linear Kalman filter".to_string(),
        (FilterKind::Ekf, DiffMode::Standard) => "extended Kalman filter, symbolic Jacobians".to_string(),
        (FilterKind::Ekf, DiffMode::Autodiff) => "extended Kalman filter, reverse-mode Jacobians".to_string(),
    };
    let mut banner = vec![format!("Generated by kfsynth: {kind}.")];
    banner.push(format!("state: {}", model.vars.state.join(", ")));
    banner.push(format!("measurement: {}", model.vars.measurement.join(", ")));
    if !model.vars.extras.is_empty() {
        banner.push(format!("extras: {}", model.vars.extras.join(", ")));
    }
    for (i, m) in model.modes.iter().enumerate() {
        banner.push(format!("mode {i}: {}", m.name));
    }

    SourceUnit {
        prefix: opts.prefix.clone(),
        header_name: format!("{}.h", opts.basename),
        runtime_header: opts.runtime_header.clone(),
        single_precision: opts.single_precision,
        enums: vec![
            (p("STATE_DIM"), model.state_dim() as i64),
            (p("MEASURE_DIM"), model.measurement_dim() as i64),
            (p("EXTRA_COUNT"), model.vars.extras.len() as i64),
            (p("MODE_COUNT"), model.mode_count() as i64),
            (p("STATUS_OK"), 0),
            (p("STATUS_SHAPE"), 1),
            (p("STATUS_SINGULAR"), 2),
            (p("STATUS_BAD_MODE"), 3),
        ],
        record_name: p("FilterCtx"),
        record: lw.record(),
        accessors: vec![(p("INNOVATION"), "y".into()), (p("GAIN"), "K".into())],
        tables: vec![(p("Q"), model.q.transpose().as_slice().to_vec()), (p("R"), model.r.transpose().as_slice().to_vec())],
        constants,
        powi_helper: powi.then(|| p("powi")),
        helpers,
        functions,
        banner,
    }
}
