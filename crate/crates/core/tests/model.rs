mod common;

use common::corpus_model;
use common::exprgen::{env, well_conditioned, ExprGen};
use kfsynth::frontend::{parse_source, BinOp, Expr, ExprKind};
use kfsynth::model::{build_model, decompose, derivative, evaluate, BuildOptions, ModelKind, StateSpaceModel};
use kfsynth::sim::NoiseRng;
use proptest::prelude::*;

fn lookup(m: &StateSpaceModel, s: &[f64], extras: &[f64]) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = m.vars.state.iter().cloned().zip(s.iter().copied()).collect();
    v.extend(m.vars.extras.iter().cloned().zip(extras.iter().copied()));
    v.extend(m.constants.iter().cloned());
    v
}

/// Random affine system text with `n` states, two extras and one measurement row.
fn random_linear_source(rng: &mut NoiseRng) -> (String, usize) {
    let n = 1 + (rng.uniform() * 4.0) as usize;
    let mut pick = |k: usize| ((rng.uniform() * k as f64) as usize).min(k - 1);
    let coef = |p: &mut dyn FnMut(usize) -> usize| -> Option<String> {
        match p(6) {
            0 => None,
            1 => Some(format!("{}", p(9) as f64 * 0.25 - 1.0)),
            2 => Some("e0".into()),
            3 => Some(format!("{} * e1", p(5) + 1)),
            4 => Some("(e0 - e1 / 2)".into()),
            _ => Some("e0 * e1".into()),
        }
    };
    let row = |p: &mut dyn FnMut(usize) -> usize| {
        let mut terms = vec![];
        for j in 0..n {
            if let Some(c) = coef(p) {
                terms.push(if p(2) == 0 { format!("{c} * x{j}") } else { format!("x{j} * {c}") });
            }
        }
        if p(2) == 0 {
            terms.push("e1 - 0.5".into());
        }
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    };
    let params: Vec<String> = (0..n).map(|j| format!("x{j} : distance = Gaussian(0, 0.1)")).collect();
    let rows: Vec<String> = (0..n).map(|j| format!("x{j} ~ {}", row(&mut pick))).collect();
    let meas = row(&mut pick);
    let src = format!(
        "lin : invariant({}, e0 : time, e1 : time) = {{ {} }}\nobs : invariant({}, e0 : time, e1 : time, z : distance = Gaussian(0, 1)) = {{ z ~ {} }}",
        params.join(", "),
        rows.join(", "),
        (0..n).map(|j| format!("x{j} : distance")).collect::<Vec<_>>().join(", "),
        meas
    );
    (src, n)
}

/// F[i][j] = f_i(e_j) - f_i(0) and offset = f(0), by direct evaluation.
#[test]
fn extracted_matrices_match_basis_vector_oracle() {
    let mut rng = NoiseRng::new(9);
    for _ in 0..100 {
        let (src, n) = random_linear_source(&mut rng);
        let d = parse_source(&src).unwrap_or_else(|e| panic!("{src}: {e}"));
        let m = build_model(&d, &["lin"], "obs", BuildOptions::default()).unwrap().model;
        let ModelKind::Linear { process, measure } = &m.kind else { panic!("{src} classified nonlinear") };
        let extras = [rng.uniform() * 2.0, rng.uniform() * 2.0 - 1.0];
        let ev = |e: &Expr, s: &[f64]| evaluate(e, &lookup(&m, s, &extras)).unwrap();
        let zero = vec![0.0; n];
        for (rows, matrix, offset) in [(&m.modes[0].f, &process[0].matrix, &process[0].offset), (&m.h, &measure.matrix, &measure.offset)] {
            for (i, f) in rows.iter().enumerate() {
                let f0 = ev(f, &zero);
                assert!((ev(&offset[i], &zero) - f0).abs() < 1e-12, "{src}");
                for j in 0..n {
                    let mut e = zero.clone();
                    e[j] = 1.0;
                    let want = ev(f, &e) - f0;
                    let got = ev(&matrix[i][j], &zero);
                    assert!((want - got).abs() <= 1e-12 * want.abs().max(1.0), "{src}: F[{i}][{j}] {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = NoiseRng::new(21);
    for (name, extras) in [("pendulum", vec![0.01, 0.2]), ("pendulum_damped", vec![0.01, 0.5, 0.8, 1.0]), ("turtlebot", vec![0.3, 0.1, 0.16])] {
        let m = corpus_model(name);
        assert_eq!(m.vars.extras.len(), extras.len(), "{name}: {:?}", m.vars.extras);
        let nl = m.as_nonlinear();
        let ModelKind::Nonlinear { process_jacobians, measure_jacobian } = &nl.kind else { unreachable!() };
        let n = m.state_dim();
        for _ in 0..20 {
            let s: Vec<f64> = (0..n).map(|_| rng.uniform() * 4.0 - 2.0).collect();
            let check = |rows: &[Expr], jac: &[Vec<Expr>]| {
                for (i, f) in rows.iter().enumerate() {
                    for j in 0..n {
                        let h = 1e-5;
                        let (mut a, mut b) = (s.clone(), s.clone());
                        a[j] += h;
                        b[j] -= h;
                        let fd = (evaluate(f, &lookup(&m, &a, &extras)).unwrap() - evaluate(f, &lookup(&m, &b, &extras)).unwrap()) / (2.0 * h);
                        let got = evaluate(&jac[i][j], &lookup(&m, &s, &extras)).unwrap();
                        assert!((fd - got).abs() <= 1e-6 * got.abs().max(1.0), "{name} d{i}/d{j}: {got} vs {fd}");
                    }
                }
            };
            for (mode, jac) in m.modes.iter().zip(process_jacobians) {
                check(&mode.f, jac);
            }
            check(&m.h, measure_jacobian);
        }
    }
}

fn commute(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Binary(op @ (BinOp::Add | BinOp::Mul), a, b) => Expr::binary(*op, commute(b), commute(a)),
        ExprKind::Binary(op, a, b) => Expr::binary(*op, commute(a), commute(b)),
        ExprKind::Neg(a) => Expr::neg(commute(a)),
        ExprKind::Pow(a, k) => Expr::pow(commute(a), *k),
        ExprKind::Call(f, a) => Expr::call(*f, commute(a)),
        _ => e.clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut g = ExprGen::new(seed);
        let (f, h) = (g.expr(4), g.expr(4));
        let p = g.point();
        let combo = Expr::add(Expr::mul(Expr::num(a), f.clone()), Expr::mul(Expr::num(b), h.clone()));
        prop_assume!(well_conditioned(&combo, p));
        let ev = |e: &Expr| evaluate(e, &env(p)).unwrap();
        let lhs = ev(&derivative(&combo, "x"));
        let rhs = a * ev(&derivative(&f, "x")) + b * ev(&derivative(&h, "x"));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn commuted_forms_classify_alike(seed in any::<u64>()) {
        let mut g = ExprGen::new(seed);
        let e = g.expr(5);
        let state = vec!["x".to_string(), "y".to_string()];
        prop_assert_eq!(decompose(&e, &state).is_some(), decompose(&commute(&e), &state).is_some(), "{}", e);
    }
}
