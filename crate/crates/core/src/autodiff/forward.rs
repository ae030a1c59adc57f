use std::fmt;

use crate::autodiff::partial::{partials, Partial};
use crate::autodiff::ssa::{Operand, SsaProgram};
use crate::autodiff::AutodiffError;
use crate::model::{EvalError, Lookup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentSource {
    Temp(usize),
    /// The seeded identifier, whose tangent is 1.
    Seed,
}

/// `t{target} = sum(partial * tangent)`; an empty sum is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentInstr {
    pub target: usize,
    pub terms: Vec<(Partial, TangentSource)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentProgram {
    pub primal: SsaProgram,
    pub seed: String,
    /// One tangent instruction per primal instruction, same order.
    pub tangents: Vec<TangentInstr>,
}

impl TangentProgram {
    /// `(value, d value / d seed)`.
    pub fn evaluate(&self, env: &(impl Lookup + ?Sized)) -> Result<(f64, f64), EvalError> {
        let temps = self.primal.run(env)?;
        let mut tan = vec![0.0; temps.len()];
        for t in &self.tangents {
            let mut acc = 0.0;
            for (p, src) in &t.terms {
                let d = match src {
                    TangentSource::Temp(k) => tan[*k],
                    TangentSource::Seed => 1.0,
                };
                acc += p.value(&temps, env)? * d;
            }
            tan[t.target] = acc;
        }
        Ok((temps[self.primal.result], tan[self.primal.result]))
    }
}

impl fmt::Display for TangentProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tangents {
            let terms: Vec<String> = t
                .terms
                .iter()
                .map(|(p, s)| match s {
                    TangentSource::Temp(k) => format!("({p}) * t{k}"),
                    TangentSource::Seed => format!("({p}) * d{}", self.seed),
                })
                .collect();
            let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            writeln!(f, "t{} = {rhs}", t.target)?;
        }
        Ok(())
    }
}

/// Tangent program for `d result / d seed`. The seed must be a free
/// identifier of the program; a program with no free identifiers accepts
/// any seed and has tangent 0.
pub fn forward_mode(p: &SsaProgram, seed: &str) -> Result<TangentProgram, AutodiffError> {
    let free = p.free_identifiers();
    if !free.is_empty() && !free.iter().any(|n| n == seed) {
        return Err(AutodiffError::UnknownSeed { seed: seed.to_string(), available: free });
    }
    let mut depends = vec![false; p.instructions.len()];
    let mut tangents = Vec::with_capacity(p.instructions.len());
    for ins in &p.instructions {
        let mut terms = Vec::new();
        for (i, partial) in partials(ins) {
            let src = match &ins.args[i] {
                Operand::Temp(k) if depends[*k] => TangentSource::Temp(*k),
                Operand::Var(n) if n == seed => TangentSource::Seed,
                _ => continue,
            };
            terms.push((partial, src));
        }
        depends[ins.target] = !terms.is_empty();
        tangents.push(TangentInstr { target: ins.target, terms });
    }
    Ok(TangentProgram { primal: p.clone(), seed: seed.to_string(), tangents })
}
