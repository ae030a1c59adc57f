use std::fmt;

use crate::autodiff::{reverse_mode, to_ssa, AutodiffError, DiffMode};
use crate::frontend::Expr;
use crate::model::{ModelKind, StateSpaceModel};

/// Static cost of building one Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JacobianWork {
    /// Entry-function calls (standard) or primal+adjoint row sweeps (autodiff).
    pub evaluations: usize,
    /// Scalar arithmetic instructions executed.
    pub scalar_ops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkReport {
    pub mode: DiffMode,
    /// One entry per process mode.
    pub process: Vec<JacobianWork>,
    pub measure: JacobianWork,
}

impl WorkReport {
    /// Evaluations for one predict+update cycle using process mode 0.
    pub fn evaluations(&self) -> usize {
        self.process[0].evaluations + self.measure.evaluations
    }

    pub fn scalar_ops(&self) -> usize {
        self.process[0].scalar_ops + self.measure.scalar_ops
    }
}

impl fmt::Display for WorkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.mode {
            DiffMode::Standard => "entry evaluations",
            DiffMode::Autodiff => "row sweeps",
        };
        for (i, w) in self.process.iter().enumerate() {
            writeln!(f, "{}: F[mode {i}]: {} {unit}, {} scalar ops", self.mode, w.evaluations, w.scalar_ops)?;
        }
        writeln!(f, "{}: H: {} {unit}, {} scalar ops", self.mode, self.measure.evaluations, self.measure.scalar_ops)?;
        writeln!(f, "{}: total: {} {unit}, {} scalar ops", self.mode, self.evaluations(), self.scalar_ops())
    }
}

fn standard(jac: &[Vec<Expr>]) -> JacobianWork {
    JacobianWork {
        evaluations: jac.iter().map(Vec::len).sum(),
        scalar_ops: jac.iter().flatten().map(Expr::interior_count).sum(),
    }
}

fn autodiff(rows: &[Expr]) -> JacobianWork {
    let scalar_ops = rows
        .iter()
        .map(|f| {
            let adj = reverse_mode(&to_ssa(f));
            adj.primal.instructions.len() + adj.adjoints.len()
        })
        .sum();
    JacobianWork { evaluations: rows.len(), scalar_ops }
}

/// Counts Jacobian work for a nonlinear model.
pub fn count_evaluations(model: &StateSpaceModel, mode: DiffMode) -> Result<WorkReport, AutodiffError> {
    let ModelKind::Nonlinear { process_jacobians, measure_jacobian } = &model.kind else {
        return Err(AutodiffError::LinearModel);
    };
    Ok(match mode {
        DiffMode::Standard => WorkReport {
            mode,
            process: process_jacobians.iter().map(|j| standard(j)).collect(),
            measure: standard(measure_jacobian),
        },
        DiffMode::Autodiff => WorkReport {
            mode,
            process: model.modes.iter().map(|m| autodiff(&m.f)).collect(),
            measure: autodiff(&model.h),
        },
    })
}
