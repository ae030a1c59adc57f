use std::fmt::Write;

use crate::model::{ModelKind, StateSpaceModel};

fn matrix(out: &mut String, title: &str, m: &nalgebra::DMatrix<f64>) {
    let _ = writeln!(out, "{title}:");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
}

fn expr_matrix(out: &mut String, title: &str, rows: &[Vec<crate::frontend::Expr>]) {
    let _ = writeln!(out, "{title}:");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "  [{}]", cells.join(", "));
    }
}

pub(super) fn render(m: &StateSpaceModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "state ({}): {}", m.state_dim(), m.vars.state.join(", "));
    let _ = writeln!(out, "measurement ({}): {}", m.measurement_dim(), m.vars.measurement.join(", "));
    let _ = writeln!(out, "extras: {}", m.vars.extras.join(", "));
    for (name, v) in &m.constants {
        let _ = writeln!(out, "constant {name} = {v:?}");
    }
    let _ = writeln!(out, "kind: {}", if m.is_linear() { "linear" } else { "nonlinear" });
    for (i, mode) in m.modes.iter().enumerate() {
        let _ = writeln!(out, "mode {i} ({}):", mode.name);
        for (s, f) in m.vars.state.iter().zip(&mode.f) {
            let _ = writeln!(out, "  {s}' = {f}");
        }
    }
    let _ = writeln!(out, "measurement model:");
    for (z, h) in m.vars.measurement.iter().zip(&m.h) {
        let _ = writeln!(out, "  {z} = {h}");
    }
    match &m.kind {
        ModelKind::Linear { process, measure } => {
            for (i, map) in process.iter().enumerate() {
                expr_matrix(&mut out, &format!("F[mode {i}]"), &map.matrix);
                expr_matrix(&mut out, &format!("offset[mode {i}]"), std::slice::from_ref(&map.offset));
            }
            expr_matrix(&mut out, "H", &measure.matrix);
            expr_matrix(&mut out, "h offset", std::slice::from_ref(&measure.offset));
        }
        ModelKind::Nonlinear { process_jacobians, measure_jacobian } => {
            for (i, jac) in process_jacobians.iter().enumerate() {
                expr_matrix(&mut out, &format!("F jacobian[mode {i}]"), jac);
            }
            expr_matrix(&mut out, "H jacobian", measure_jacobian);
        }
    }
    matrix(&mut out, "Q", &m.q);
    matrix(&mut out, "R", &m.r);
    out
}
