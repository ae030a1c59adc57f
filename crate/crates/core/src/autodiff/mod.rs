//! Single-assignment form and automatic differentiation.
//!
//! Expressions are flattened to three-address SSA; reverse mode appends an
//! adjoint sweep that yields the gradient with respect to every free
//! identifier, forward mode builds a tangent program for one seed and is
//! used to cross-check reverse mode.

mod forward;
mod partial;
mod reverse;
mod ssa;
mod work;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use forward::{forward_mode, TangentInstr, TangentProgram, TangentSource};
pub use partial::{partials, Partial};
pub use reverse::{reverse_mode, AdjInstr, AdjointProgram, Gradient, Slot};
pub use ssa::{to_ssa, Instr, Op, Operand, SsaProgram};
pub use work::{count_evaluations, JacobianWork, WorkReport};

use crate::frontend::Expr;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AutodiffError {
    #[error("seed `{seed}` is not an input of the program (inputs: {})", available.join(", "))]
    UnknownSeed { seed: String, available: Vec<String> },
    #[error("model is linear and has no Jacobian")]
    LinearModel,
}

/// How Jacobians are computed in generated EKFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffMode {
    /// One symbolic derivative function per Jacobian entry.
    Standard,
    /// One primal evaluation plus reverse sweep per Jacobian row.
    Autodiff,
}

impl fmt::Display for DiffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiffMode::Standard => "standard",
            DiffMode::Autodiff => "auto",
        })
    }
}

impl FromStr for DiffMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(DiffMode::Standard),
            "auto" | "autodiff" => Ok(DiffMode::Autodiff),
            _ => Err(format!("unknown differentiation mode `{s}` (expected standard or auto)")),
        }
    }
}

/// Primal and adjoint programs for every row, as printed by `--emit-ssa`.
pub fn dump_programs(rows: &[(String, &Expr)]) -> String {
    let mut out = String::new();
    for (name, e) in rows {
        let adj = reverse_mode(&to_ssa(e));
        out.push_str(&format!("# {name} = {e}\n{}{}", adj.primal, adj));
    }
    out
}
