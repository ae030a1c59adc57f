use std::collections::HashMap;
use std::fmt;

use crate::frontend::{format_number, BinOp, Expr, ExprKind, Func};
use crate::model::{EvalError, Lookup};

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Temp(usize),
    /// A free identifier (state, measurement or extra variable).
    Var(String),
    /// A named constant from the description.
    Const(String),
    Imm(f64),
}

impl Operand {
    pub fn value(&self, temps: &[f64], env: &(impl Lookup + ?Sized)) -> Result<f64, EvalError> {
        match self {
            Operand::Temp(k) => Ok(temps[*k]),
            Operand::Var(n) | Operand::Const(n) => env.lookup(n).ok_or_else(|| EvalError::Unbound(n.clone())),
            Operand::Imm(v) => Ok(*v),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Temp(k) => write!(f, "r{k}"),
            Operand::Var(n) | Operand::Const(n) => f.write_str(n),
            Operand::Imm(v) => f.write_str(&format_number(*v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Const,
    Load,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    PowInt(i32),
    Call(Func),
}

impl Op {
    pub fn mnemonic(self) -> &'static str {
        match self {
            Op::Const => "const",
            Op::Load => "load",
            Op::Neg => "neg",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::PowInt(_) => "pow",
            Op::Call(f) => f.name(),
        }
    }

    fn binary(op: BinOp) -> Op {
        match op {
            BinOp::Add => Op::Add,
            BinOp::Sub => Op::Sub,
            BinOp::Mul => Op::Mul,
            BinOp::Div => Op::Div,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub target: usize,
    pub op: Op,
    pub args: Vec<Operand>,
}

impl Instr {
    pub fn apply(&self, temps: &[f64], env: &(impl Lookup + ?Sized)) -> Result<f64, EvalError> {
        let a = self.args[0].value(temps, env)?;
        Ok(match self.op {
            Op::Const | Op::Load => a,
            Op::Neg => -a,
            Op::Add => a + self.args[1].value(temps, env)?,
            Op::Sub => a - self.args[1].value(temps, env)?,
            Op::Mul => a * self.args[1].value(temps, env)?,
            Op::Div => a / self.args[1].value(temps, env)?,
            Op::PowInt(k) => a.powi(k),
            Op::Call(f) => f.apply(a),
        })
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{} = {}", self.target, self.op.mnemonic())?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        if let Op::PowInt(k) = self.op {
            write!(f, " {k}")?;
        }
        Ok(())
    }
}

/// Single-assignment form of one expression. Temps are numbered densely in
/// emission order, so `instructions[k].target == k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsaProgram {
    pub instructions: Vec<Instr>,
    pub result: usize,
}

impl SsaProgram {
    pub fn evaluate(&self, env: &(impl Lookup + ?Sized)) -> Result<f64, EvalError> {
        Ok(self.run(env)?[self.result])
    }

    /// Values of every temp, in order.
    pub fn run(&self, env: &(impl Lookup + ?Sized)) -> Result<Vec<f64>, EvalError> {
        let mut temps = vec![0.0; self.instructions.len()];
        for ins in &self.instructions {
            temps[ins.target] = ins.apply(&temps, env)?;
        }
        Ok(temps)
    }

    /// Free identifiers in order of first use; named constants are excluded.
    pub fn free_identifiers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in self.instructions.iter().flat_map(|i| &i.args) {
            if let Operand::Var(n) = a {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
        out
    }

    /// Single assignment and definition before use.
    pub fn validate(&self) -> Result<(), String> {
        let mut defined = vec![false; self.instructions.len()];
        for ins in &self.instructions {
            for a in &ins.args {
                if let Operand::Temp(k) = a {
                    if !defined.get(*k).copied().unwrap_or(false) {
                        return Err(format!("r{k} used before definition in `{ins}`"));
                    }
                }
            }
            match defined.get_mut(ins.target) {
                Some(d) if !*d => *d = true,
                Some(_) => return Err(format!("r{} assigned twice", ins.target)),
                None => return Err(format!("r{} out of range", ins.target)),
            }
        }
        if defined.get(self.result) != Some(&true) {
            return Err(format!("result r{} never assigned", self.result));
        }
        Ok(())
    }
}

impl fmt::Display for SsaProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instructions {
            writeln!(f, "{ins}")?;
        }
        writeln!(f, "return r{}", self.result)
    }
}

fn leaf_operand(e: &Expr) -> Operand {
    match &e.kind {
        ExprKind::Ident(n) => Operand::Var(n.clone()),
        ExprKind::Const(n) => Operand::Const(n.clone()),
        ExprKind::Number(v) => Operand::Imm(*v),
        _ => unreachable!("interior node used as leaf"),
    }
}

/// Converts an expression tree to SSA. A pre-order pass labels every
/// interior node; a post-order pass emits one instruction per label; the
/// labels are then renumbered in emission order. Common subexpressions are
/// not merged.
pub fn to_ssa(e: &Expr) -> SsaProgram {
    let mut labels: HashMap<*const Expr, usize> = HashMap::new();
    label(e, &mut labels);
    if e.is_leaf() {
        let op = if matches!(e.kind, ExprKind::Number(_)) { Op::Const } else { Op::Load };
        return SsaProgram { instructions: vec![Instr { target: 0, op, args: vec![leaf_operand(e)] }], result: 0 };
    }
    let mut emitted = Vec::new();
    emit(e, &labels, &mut emitted);
    let order: HashMap<usize, usize> = emitted.iter().enumerate().map(|(i, ins)| (ins.target, i)).collect();
    let renumber = |o: Operand| match o {
        Operand::Temp(k) => Operand::Temp(order[&k]),
        other => other,
    };
    let instructions = emitted
        .into_iter()
        .map(|ins| Instr { target: order[&ins.target], op: ins.op, args: ins.args.into_iter().map(renumber).collect() })
        .collect::<Vec<_>>();
    let result = instructions.len() - 1;
    SsaProgram { instructions, result }
}

fn label(e: &Expr, labels: &mut HashMap<*const Expr, usize>) {
    if !e.is_leaf() {
        let next = labels.len();
        labels.insert(e as *const Expr, next);
    }
    for c in e.children() {
        label(c, labels);
    }
}

fn emit(e: &Expr, labels: &HashMap<*const Expr, usize>, out: &mut Vec<Instr>) -> Operand {
    if e.is_leaf() {
        return leaf_operand(e);
    }
    let (op, args) = match &e.kind {
        ExprKind::Neg(a) => (Op::Neg, vec![emit(a, labels, out)]),
        ExprKind::Binary(op, l, r) => {
            let a = emit(l, labels, out);
            let b = emit(r, labels, out);
            (Op::binary(*op), vec![a, b])
        }
        ExprKind::Pow(b, k) => (Op::PowInt(*k), vec![emit(b, labels, out)]),
        ExprKind::Call(f, a) => (Op::Call(*f), vec![emit(a, labels, out)]),
        _ => unreachable!(),
    };
    let target = labels[&(e as *const Expr)];
    out.push(Instr { target, op, args });
    Operand::Temp(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;
    use crate::model::evaluate;

    #[test]
    fn worked_example_shape() {
        let p = to_ssa(&parse_expr("x * y ** 2 + sin(x)").unwrap());
        assert_eq!(p.to_string(), "r0 = pow y 2\nr1 = mul x r0\nr2 = sin x\nr3 = add r1 r2\nreturn r3\n");
        assert_eq!(p.free_identifiers(), ["y", "x"]);
        p.validate().unwrap();
    }

    #[test]
    fn leaf_programs() {
        assert_eq!(to_ssa(&parse_expr("x").unwrap()).to_string(), "r0 = load x\nreturn r0\n");
        assert_eq!(to_ssa(&parse_expr("2.5").unwrap()).to_string(), "r0 = const 2.5\nreturn r0\n");
    }

    #[test]
    fn nested_calls() {
        let e = parse_expr("sin(cos(x))").unwrap();
        let p = to_ssa(&e);
        assert_eq!(p.to_string(), "r0 = cos x\nr1 = sin r0\nreturn r1\n");
        assert_eq!(p.instructions.len(), e.interior_count());
    }

    #[test]
    fn no_cse() {
        let p = to_ssa(&parse_expr("sin(x) * sin(x)").unwrap());
        assert_eq!(p.instructions.len(), 3);
    }

    #[test]
    fn evaluation_matches_tree() {
        let e = parse_expr("(x - 3) / y ** -2 + exp(-x) * tan(y)").unwrap();
        let env = [("x", 0.7), ("y", -1.3)];
        assert_eq!(to_ssa(&e).evaluate(&env).unwrap().to_bits(), evaluate(&e, &env).unwrap().to_bits());
    }

    #[test]
    fn validate_rejects_use_before_def() {
        let p = SsaProgram {
            instructions: vec![Instr { target: 0, op: Op::Neg, args: vec![Operand::Temp(0)] }],
            result: 0,
        };
        assert!(p.validate().is_err());
    }
}
