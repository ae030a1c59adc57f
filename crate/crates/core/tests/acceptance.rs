mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::exprgen::{env, fd_gradient, well_conditioned, ExprGen, VARS};
use kfsynth::autodiff::{count_evaluations, forward_mode, reverse_mode, to_ssa, DiffMode};
use kfsynth::corpus;
use kfsynth::dimension::{check_description, SignalTable};
use kfsynth::frontend::{parse_expr, parse_source, Expr};
use kfsynth::model::evaluate;
use kfsynth::nalgebra::DMatrix;
use kfsynth::sim::{run_experiment, Experiment, NoiseRng, ReferenceFilter};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn samples(count: usize, seed: u64) -> Vec<(Expr, [f64; 3])> {
    let mut g = ExprGen::new(seed);
    let mut out = vec![];
    while out.len() < count {
        let e = g.expr(6);
        if e.free_names().iter().all(|n| !VARS.contains(&n.as_str())) {
            continue;
        }
        if let Some(p) = (0..20).map(|_| g.point()).find(|p| well_conditioned(&e, *p)) {
            out.push((e, p));
        }
    }
    out
}

fn autodiff_suite() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut noisy, mut fwd) = (0, 0, 0);
    for (e, p) in samples(200, 1) {
        let ssa = to_ssa(&e);
        let grad = reverse_mode(&ssa).evaluate(&env(p)).map_err(|x| x.to_string())?;
        let value = evaluate(&e, &env(p)).map_err(|x| x.to_string())?;
        ensure(grad.value.to_bits() == value.to_bits(), || format!("{e}: primal value differs"))?;
        let free = ssa.free_identifiers();
        for (i, v) in VARS.iter().enumerate() {
            let r = if grad.inputs.iter().any(|n| n == v) { grad.get(v) } else { 0.0 };
            let (fd, err) = fd_gradient(&e, p, i);
            let tol = (1e-6 * r.abs()).max(1e-9);
            if err > tol / 4.0 {
                noisy += 1;
            } else {
                checked += 1;
                ensure((r - fd).abs() <= tol, || format!("{e} at {p:?}: d/d{v} reverse {r} vs fd {fd}"))?;
            }
            if free.iter().any(|n| n == v) {
                let (_, t) = forward_mode(&ssa, v).map_err(|x| x.to_string())?.evaluate(&env(p)).map_err(|x| x.to_string())?;
                fwd += 1;
                ensure((t - r).abs() <= 1e-12 * r.abs().max(t.abs()).max(1e-300), || format!("{e}: forward {t} vs reverse {r}"))?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(checked >= 400, || format!("only {checked} partials well-conditioned enough to difference"))?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("200 expressions, {checked} partials vs fd ({noisy} too noisy), {fwd} forward/reverse pairs, {secs:.2} s"))
}

fn worked_example() -> Outcome {
    let ssa = to_ssa(&parse_expr("x*y**2 + sin(x)").map_err(|e| e.to_string())?);
    let text = ssa.to_string();
    let want = "r0 = pow y 2\nr1 = mul x r0\nr2 = sin x\nr3 = add r1 r2\nreturn r3\n";
    ensure(text == want, || format!("ssa was\n{text}"))?;
    let g = reverse_mode(&ssa).evaluate(&[("x", 2.0), ("y", 3.0)]).map_err(|e| e.to_string())?;
    let e = parse_expr("x*y**2 + sin(x)").unwrap();
    let (fx, _) = fd_gradient(&e, [2.0, 3.0, 0.0], 0);
    let (fy, _) = fd_gradient(&e, [2.0, 3.0, 0.0], 1);
    let (gx, gy) = (g.get("x"), g.get("y"));
    ensure((gx - fx).abs() < 1e-9 && (gy - fy).abs() < 1e-9, || format!("({gx}, {gy}) vs fd ({fx}, {fy})"))?;
    ensure((gx - 8.5838531).abs() < 1e-7 && gy == 12.0, || format!("gradient ({gx}, {gy})"))?;
    Ok(format!("4 instructions, gradient ({gx:.10}, {gy})"))
}

fn experiment(exp: Experiment) -> Result<kfsynth::sim::ExperimentOutcome, String> {
    run_experiment(exp, &exp.default_config()).map_err(|e| e.to_string())
}

fn in_band(what: &str, v: f64, lo: f64, hi: f64) -> Result<(), String> {
    ensure((lo..=hi).contains(&v), || format!("{what} = {v:.6} outside [{lo}, {hi}]"))
}

fn pendulum1() -> Outcome {
    let start = Instant::now();
    let o = experiment(Experiment::Pendulum1)?;
    let secs = start.elapsed().as_secs_f64();
    let m = o.mean();
    ensure(o.seeds.len() == 10 && o.config.steps >= 2000, || "needs 10 seeds of at least 2000 steps".into())?;
    in_band("mse_theta", m.mse[0], 0.001, 0.006)?;
    in_band("mse_omega", m.mse[1], 0.1, 0.25)?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("mse_theta {:.5} rad^2, mse_omega {:.4} rad^2/s^2, {secs:.2} s", m.mse[0], m.mse[1]))
}

fn pendulum2() -> Outcome {
    let o = experiment(Experiment::Pendulum2)?;
    for s in &o.seeds {
        let good = s.baseline.as_ref().ok_or("no correctly initialized run")?;
        ensure(s.second_half.mse[0] <= 2.0 * good.mse[0], || {
            format!("seed {}: second-half mse {:.5} vs correct-start {:.5}", s.seed, s.second_half.mse[0], good.mse[0])
        })?;
    }
    let m = o.mean();
    in_band("mse_theta", m.mse[0], 0.002, 0.012)?;
    Ok(format!(
        "mse_theta {:.5} rad^2, second half {:.5} vs correct start {:.5}",
        m.mse[0],
        o.mean_second_half().mse[0],
        o.mean_baseline().unwrap().mse[0]
    ))
}

fn damped() -> Outcome {
    let m = experiment(Experiment::Damped)?.mean();
    in_band("mse_theta", m.mse[0], 0.0, 0.001)?;
    in_band("mse_omega", m.mse[1], 0.0, 0.02)?;
    Ok(format!("mse_theta {:.6} rad^2, mse_omega {:.5} rad^2/s^2", m.mse[0], m.mse[1]))
}

fn stroll() -> Outcome {
    let o = experiment(Experiment::Stroll)?;
    let m = o.mean();
    let (e, y) = (m.euclidean.unwrap(), m.yaw_deg.unwrap());
    ensure(o.seeds.len() == 10, || "needs 10 seeds".into())?;
    in_band("position error", e, 0.0, 0.06)?;
    in_band("yaw error", y, 0.0, 10.0)?;
    Ok(format!("position error {e:.4} m, yaw error {y:.3} deg"))
}

fn work_proxy() -> Outcome {
    let m = common::corpus_model("pendulum");
    let std = count_evaluations(&m, DiffMode::Standard).map_err(|e| e.to_string())?.evaluations();
    let ad = count_evaluations(&m, DiffMode::Autodiff).map_err(|e| e.to_string())?.evaluations();
    let saved = 1.0 - ad as f64 / std as f64;
    ensure(saved >= 0.4, || format!("{ad} vs {std}: only {:.1}% fewer", saved * 100.0))?;
    Ok(format!("{ad} vs {std} evaluations, {:.1}% fewer", saved * 100.0))
}

fn oracle_consistency() -> Outcome {
    let m = common::corpus_model("constant_velocity");
    ensure(m.is_linear(), || "constant velocity model not classified linear".into())?;
    let nl = m.as_nonlinear();
    let mut rng = NoiseRng::new(8);
    let mut lin = ReferenceFilter::new(&m, &[0.0, 0.0], &DMatrix::identity(2, 2));
    let mut ext = ReferenceFilter::new(&nl, &[0.0, 0.0], &DMatrix::identity(2, 2));
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let z = [0.02 * k as f64 + rng.gaussian(0.0, 0.01)];
        lin.step(&z, &[0.01], 0).map_err(|e| e.to_string())?;
        ext.step(&z, &[0.01], 0).map_err(|e| e.to_string())?;
        let ds = (&lin.s - &ext.s).abs().max();
        let dp = (&lin.p - &ext.p).abs().max();
        worst = worst.max(ds).max(dp);
        ensure(ds <= 1e-12 && dp <= 1e-12, || format!("step {k}: state diff {ds:e}, covariance diff {dp:e}"))?;
    }

    let table = SignalTable::builtin();
    let plain = parse_source(corpus::PENDULUM_PLAIN).map_err(|e| e.to_string())?;
    let diags = check_description(&plain, &table);
    ensure(diags.is_empty(), || format!("reference description rejected: {diags:?}"))?;
    let mutations = common::dimension_mutations();
    for (label, src, expected) in &mutations {
        let d = parse_source(src).map_err(|e| format!("{label}: {e}"))?;
        let n = check_description(&d, &table).len();
        ensure(n == *expected, || format!("{label}: {n} violations, labeled {expected}"))?;
    }
    Ok(format!("max lkf/ekf deviation {worst:e} over 1000 steps, {} mutations rejected as labeled", mutations.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("autodiff correctness suite", autodiff_suite),
        ("worked example fidelity", worked_example),
        ("pendulum experiment 1", pendulum1),
        ("pendulum experiment 2 convergence", pendulum2),
        ("damped pendulum", damped),
        ("differential-drive stroll", stroll),
        ("jacobian work proxy", work_proxy),
        ("oracle consistency", oracle_consistency),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
