mod common;

use common::{corpus_cases, corpus_model, Case};
use kfsynth::autodiff::DiffMode;
use kfsynth::codegen::{generate, FilterKind, GenError, GenOptions, RUNTIME_HEADER, RUNTIME_SOURCE};
use kfsynth::conformance::{self, ConformanceError, HarnessRun};
use kfsynth::frontend::parse_source;
use kfsynth::model::{build_model, BuildOptions};
use kfsynth::sim::run_reference;
use nalgebra::DMatrix;

fn opts(filter: FilterKind, diff: DiffMode) -> GenOptions {
    GenOptions { filter, diff, prefix: "kf_".into(), basename: "gen".into(), ..Default::default() }
}

fn variants(case: &Case) -> Vec<GenOptions> {
    let mut v = vec![opts(FilterKind::Ekf, DiffMode::Standard), opts(FilterKind::Ekf, DiffMode::Autodiff)];
    if case.model.is_linear() {
        v.push(opts(FilterKind::Lkf, DiffMode::Standard));
    }
    v
}

fn have_cc() -> bool {
    let ok = conformance::find_compiler().is_ok();
    if !ok {
        eprintln!("no C compiler; skipping");
    }
    ok
}

fn run_c(case: &Case, o: &GenOptions) -> HarnessRun {
    conformance::compile_and_run(&case.model, o, &case.s0, &case.p0, &case.input.to_csv()).unwrap_or_else(|e| panic!("{}: {e}", case.name))
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

#[test]
fn generation_is_deterministic() {
    for case in corpus_cases(10) {
        for o in variants(&case) {
            let a = generate(&case.model, &o).unwrap();
            let b = generate(&case.model, &o).unwrap();
            assert_eq!(a, b, "{}", case.name);
        }
    }
}

#[test]
fn prefix_is_applied_to_every_exported_name() {
    let m = corpus_model("pendulum");
    let plain = GenOptions::default();
    let pre = GenOptions { prefix: "zq_".into(), ..Default::default() };
    let (a, b) = (generate(&m, &plain).unwrap(), generate(&m, &pre).unwrap());
    assert_eq!(b.header.replace("zq_", ""), a.header);
    assert_eq!(b.source.replace("zq_", ""), a.source);
    for f in ["zq_filterInit(", "zq_filterPredict(", "zq_filterUpdate(", "} zq_FilterCtx;", "zq_STATE_DIM = 2"] {
        assert!(b.header.contains(f), "{f}");
    }
}

#[test]
fn header_declares_three_functions_and_the_record() {
    let g = generate(&corpus_model("pendulum"), &opts(FilterKind::Ekf, DiffMode::Autodiff)).unwrap();
    let protos: Vec<&str> = g.header.lines().filter(|l| l.ends_with(");")).collect();
    assert_eq!(protos.len(), 3, "{protos:?}");
    assert!(protos[0].starts_with("void kf_filterInit(kf_FilterCtx *ctx"));
    assert!(protos[1].starts_with("int kf_filterPredict(kf_FilterCtx *ctx, kf_real v_dt, kf_real v_L, int mode)"));
    assert!(protos[2].starts_with("int kf_filterUpdate(kf_FilterCtx *ctx, const kf_real z[kf_MEASURE_DIM]"));
    assert!(g.header.contains("typedef struct {"));
    assert!(g.header.contains("#include \"kf_matrix.h\""));
    assert!(g.header.contains("#define kf_INNOVATION(ctx)"));
    assert_eq!(g.header_name, "gen.h");
    assert_eq!(g.source_name, "gen.c");
}

#[test]
fn no_dynamic_allocation() {
    for case in corpus_cases(10) {
        for o in variants(&case) {
            let g = generate(&case.model, &o).unwrap();
            for text in [&g.source, &g.header] {
                for bad in ["malloc", "calloc", "realloc", "free(", "alloca"] {
                    assert!(!text.contains(bad), "{}: {bad}", case.name);
                }
            }
        }
    }
    for bad in ["malloc", "calloc", "realloc", "free(", "alloca"] {
        assert!(!RUNTIME_SOURCE.contains(bad));
        assert!(!RUNTIME_HEADER.contains(bad));
    }
}

#[test]
fn linear_filter_uses_extracted_matrix() {
    let g = generate(&corpus_model("constant_velocity"), &opts(FilterKind::Lkf, DiffMode::Standard)).unwrap();
    for line in ["ctx->F[0] = 1.0;", "ctx->F[1] = v_dt;", "ctx->F[2] = 0.0;", "ctx->F[3] = 1.0;", "ctx->H[0] = 1.0;"] {
        assert!(g.source.contains(line), "{line}\n{}", g.source);
    }
    assert!(g.source.contains("static const kf_real kf_Q[4] = {0.0001, 0.0, 0.0, 0.0001};"));
    assert!(g.source.contains("static const kf_real kf_R[1] = {0.01};"));
    assert!(g.header.contains("kf_real u[kf_STATE_DIM];"));
}

#[test]
fn diff_modes_emit_different_helpers() {
    let m = corpus_model("pendulum");
    let std = generate(&m, &opts(FilterKind::Ekf, DiffMode::Standard)).unwrap().source;
    let ad = generate(&m, &opts(FilterKind::Ekf, DiffMode::Autodiff)).unwrap().source;
    assert!(std.contains("static kf_real kf_df0_1_0(const kf_real *s, kf_real v_dt, kf_real v_L)"));
    assert!(!std.contains("_ad("));
    assert!(ad.contains("static kf_real kf_f0_1_ad(const kf_real *s, kf_real v_dt, kf_real v_L, kf_real *grad)"));
    assert!(!ad.contains("kf_df0_"));
    assert!(ad.contains("grad[0] += cos(v_theta) * a1;"));
}

#[test]
fn single_precision_spelling() {
    let o = GenOptions { single_precision: true, ..opts(FilterKind::Ekf, DiffMode::Standard) };
    let g = generate(&corpus_model("pendulum"), &o).unwrap();
    assert!(g.header.contains("#define KF_SINGLE_PRECISION"));
    assert!(g.source.contains("sinf(v_theta)"));
    assert!(g.source.contains("9.80665f"));
    assert!(!g.source.contains(" sin(v_"));
}

#[test]
fn rejections() {
    let m = corpus_model("pendulum");
    assert_eq!(generate(&m, &opts(FilterKind::Lkf, DiffMode::Standard)), Err(GenError::NonlinearForLkf));
    let bad = GenOptions { prefix: "9x".into(), ..Default::default() };
    assert!(matches!(generate(&m, &bad), Err(GenError::BadPrefix(_))));
    let bad = GenOptions { basename: "a/b".into(), ..Default::default() };
    assert!(matches!(generate(&m, &bad), Err(GenError::BadBasename(_))));
    let mut inf = m.clone();
    inf.constants[0].1 = f64::INFINITY;
    assert!(matches!(generate(&inf, &GenOptions::default()), Err(GenError::NonFinite { .. })));
}

#[test]
fn every_variant_compiles_warning_free() {
    if !have_cc() {
        return;
    }
    for case in corpus_cases(2) {
        for o in variants(&case) {
            for single in [false, true] {
                let o = GenOptions { single_precision: single, ..o.clone() };
                let dir = tempfile::tempdir().unwrap();
                if let Err(e) = conformance::build(dir.path(), &case.model, &o, &case.s0, &case.p0) {
                    panic!("{} {:?} {:?} single={single}: {e}", case.name, o.filter, o.diff);
                }
            }
        }
    }
}

#[test]
fn generated_filters_match_reference() {
    if !have_cc() {
        return;
    }
    for case in corpus_cases(1000) {
        let p0 = DMatrix::from_row_slice(case.model.state_dim(), case.model.state_dim(), &case.p0);
        let oracle = run_reference(&case.model, &case.input, &case.s0, &p0).unwrap();
        let mut runs = vec![];
        for o in variants(&case) {
            let run = run_c(&case, &o);
            assert_eq!(run.states.len(), case.input.times.len());
            assert!(run.states.len() >= 1000);
            let d = max_diff(&run.states, &oracle.estimates);
            assert!(d <= 1e-9, "{} {:?}/{:?}: max deviation {d:e}", case.name, o.filter, o.diff);
            assert!(run.statuses.iter().all(|&s| s == (0, 0)));
            runs.push(run);
        }
        let d = max_diff(&runs[0].states, &runs[1].states);
        assert!(d <= 1e-9, "{}: standard vs autodiff {d:e}", case.name);
    }
}

#[test]
fn generated_covariance_stays_symmetric() {
    if !have_cc() {
        return;
    }
    for case in corpus_cases(300) {
        let n = case.model.state_dim();
        let run = run_c(&case, &opts(FilterKind::Ekf, DiffMode::Autodiff));
        for p in &run.covariances {
            for i in 0..n {
                assert!(p[i * n + i] > 0.0);
                for j in 0..n {
                    assert_eq!(p[i * n + j], p[j * n + i], "{}", case.name);
                }
            }
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    if !have_cc() {
        return;
    }
    let case = corpus_cases(500).into_iter().next().unwrap();
    let o = opts(FilterKind::Ekf, DiffMode::Autodiff);
    let d = run_c(&case, &o);
    let s = run_c(&case, &GenOptions { single_precision: true, ..o });
    assert!(max_diff(&d.states, &s.states) < 1e-3);
}

#[test]
fn harness_rejects_wrong_arity() {
    if !have_cc() {
        return;
    }
    let case = corpus_cases(5).into_iter().next().unwrap();
    let csv = case.input.to_csv().replacen("t,z_0,", "t,z_0,z_1,", 1);
    let r = conformance::compile_and_run(&case.model, &GenOptions::default(), &case.s0, &case.p0, &csv);
    assert!(matches!(r, Err(ConformanceError::BadTrace(_))), "{r:?}");
}

#[test]
fn singular_update_and_bad_mode_report_status() {
    if !have_cc() {
        return;
    }
    let src = "p : invariant(x : distance = Gaussian(0, 0)) = { x ~ x }
               q : invariant(x : distance, z : distance = Gaussian(0, 0)) = { z ~ 0 * x }";
    let m = build_model(&parse_source(src).unwrap(), &["p"], "q", BuildOptions::default()).unwrap().model;
    let trace = "t,z_0,mode\n0.1,1.0,0\n0.2,1.0,4\n";
    for filter in [FilterKind::Lkf, FilterKind::Ekf] {
        let o = GenOptions { filter, ..Default::default() };
        let run = conformance::compile_and_run(&m, &o, &[4.0], &[1.0], trace).unwrap();
        assert_eq!(run.statuses, [(0, 2), (3, 2)]);
        assert_eq!(run.states, [[4.0], [4.0]]);
    }
}
