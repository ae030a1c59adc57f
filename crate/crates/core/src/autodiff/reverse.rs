use std::fmt;

use crate::autodiff::partial::{partials, Partial};
use crate::autodiff::ssa::{Operand, SsaProgram};
use crate::model::{EvalError, Lookup};

/// Adjoint storage: one slot per primal temp and one per free identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Temp(usize),
    /// Index into [`AdjointProgram::inputs`].
    Input(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdjInstr {
    /// `slot = 1`.
    Seed(Slot),
    /// `target = partial * a{source}` or, when `accumulate`, `target += ...`.
    Contribute { target: Slot, accumulate: bool, partial: Partial, source: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointProgram {
    pub primal: SsaProgram,
    pub adjoints: Vec<AdjInstr>,
    /// Free identifiers of the primal; `Slot::Input(j)` holds the gradient for `inputs[j]`.
    pub inputs: Vec<String>,
}

/// Value and gradient from one primal evaluation plus one adjoint sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub inputs: Vec<String>,
    pub partials: Vec<f64>,
}

impl Gradient {
    /// Zero for identifiers the program does not depend on.
    pub fn get(&self, name: &str) -> f64 {
        self.inputs.iter().position(|n| n == name).map_or(0.0, |j| self.partials[j])
    }
}

impl AdjointProgram {
    pub fn evaluate(&self, env: &(impl Lookup + ?Sized)) -> Result<Gradient, EvalError> {
        let temps = self.primal.run(env)?;
        let mut adj = vec![0.0; temps.len()];
        let mut grad = vec![0.0; self.inputs.len()];
        for ins in &self.adjoints {
            let (slot, v, acc) = match ins {
                AdjInstr::Seed(s) => (*s, 1.0, false),
                AdjInstr::Contribute { target, accumulate, partial, source } => {
                    (*target, partial.value(&temps, env)? * adj[*source], *accumulate)
                }
            };
            let cell = match slot {
                Slot::Temp(k) => &mut adj[k],
                Slot::Input(j) => &mut grad[j],
            };
            if acc {
                *cell += v;
            } else {
                *cell = v;
            }
        }
        Ok(Gradient { value: temps[self.primal.result], inputs: self.inputs.clone(), partials: grad })
    }

    pub fn slot_name(&self, s: Slot) -> String {
        match s {
            Slot::Temp(k) => format!("a{k}"),
            Slot::Input(j) => format!("g_{}", self.inputs[j]),
        }
    }
}

impl fmt::Display for AdjointProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.adjoints {
            match ins {
                AdjInstr::Seed(s) => writeln!(f, "{} = 1", self.slot_name(*s))?,
                AdjInstr::Contribute { target, accumulate, partial, source } => {
                    let op = if *accumulate { "+=" } else { "=" };
                    let target = self.slot_name(*target);
                    match partial {
                        Partial::One => writeln!(f, "{target} {op} a{source}")?,
                        Partial::MinusOne => writeln!(f, "{target} {op} -a{source}")?,
                        p => writeln!(f, "{target} {op} ({p}) * a{source}")?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the adjoint sweep: seed the result with 1, then walk the primal
/// backwards, pushing each instruction's adjoint into its operands. The
/// first contribution to a slot assigns, later ones accumulate.
pub fn reverse_mode(p: &SsaProgram) -> AdjointProgram {
    let inputs = p.free_identifiers();
    let mut adjoints = vec![AdjInstr::Seed(Slot::Temp(p.result))];
    let mut temp_set = vec![false; p.instructions.len()];
    temp_set[p.result] = true;
    let mut input_set = vec![false; inputs.len()];
    for ins in p.instructions.iter().rev() {
        if !temp_set[ins.target] {
            continue;
        }
        for (i, partial) in partials(ins) {
            let (target, seen) = match &ins.args[i] {
                Operand::Temp(k) => (Slot::Temp(*k), &mut temp_set[*k]),
                Operand::Var(n) => {
                    let j = inputs.iter().position(|m| m == n).expect("free identifier");
                    (Slot::Input(j), &mut input_set[j])
                }
                Operand::Const(_) | Operand::Imm(_) => continue,
            };
            adjoints.push(AdjInstr::Contribute { target, accumulate: *seen, partial, source: ins.target });
            *seen = true;
        }
    }
    AdjointProgram { primal: p.clone(), adjoints, inputs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::to_ssa;
    use crate::frontend::parse_expr;

    fn grad(text: &str, env: &[(&str, f64)]) -> Gradient {
        reverse_mode(&to_ssa(&parse_expr(text).unwrap())).evaluate(env).unwrap()
    }

    #[test]
    fn worked_example() {
        let adj = reverse_mode(&to_ssa(&parse_expr("x * y ** 2 + sin(x)").unwrap()));
        assert_eq!(
            adj.to_string(),
            "a3 = 1\na1 = a3\na2 = a3\ng_x = (cos x) * a2\ng_x += (r0) * a1\na0 = (x) * a1\ng_y = (2 * y ** 1) * a0\n"
        );
        let g = adj.evaluate(&[("x", 2.0), ("y", 3.0)]).unwrap();
        assert!((g.value - 18.90929742682568).abs() < 1e-12);
        assert!((g.get("x") - 8.583853163452858).abs() < 1e-12);
        assert_eq!(g.get("y"), 12.0);
    }

    #[test]
    fn single_load() {
        let g = grad("x", &[("x", 4.0)]);
        assert_eq!(g.get("x"), 1.0);
    }

    #[test]
    fn fan_in_accumulates() {
        let g = grad("x * x * x", &[("x", 2.0)]);
        assert_eq!(g.get("x"), 12.0);
        let g = grad("x - x / y", &[("x", 3.0), ("y", 2.0)]);
        assert_eq!(g.get("x"), 0.5);
        assert_eq!(g.get("y"), 0.75);
    }

    #[test]
    fn function_partials() {
        let g = grad("tan(x) + ln(y) + sqrt(x * y) + exp(-y)", &[("x", 0.3), ("y", 2.0)]);
        let s = (0.6f64).sqrt();
        assert!((g.get("x") - (1.0 / 0.3f64.cos().powi(2) + 0.5 * 2.0 / s)).abs() < 1e-12);
        assert!((g.get("y") - (0.5 + 0.5 * 0.3 / s - (-2.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn constants_have_no_gradient() {
        let e = crate::frontend::Expr::mul(crate::frontend::Expr::constant("g"), crate::frontend::Expr::ident("x"));
        let adj = reverse_mode(&to_ssa(&e));
        assert_eq!(adj.inputs, ["x"]);
        assert_eq!(adj.evaluate(&[("g", 9.8), ("x", 1.0)]).unwrap().get("x"), 9.8);
    }
}
