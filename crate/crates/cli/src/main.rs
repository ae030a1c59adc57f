//! `kfsynth`: compile `.nt` physics descriptions into Kalman filter C sources
//! and run the simulation experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kfsynth::autodiff::{count_evaluations, dump_programs, DiffMode};
use kfsynth::codegen::{generate, FilterKind, GenError, GenOptions, RUNTIME_HEADER, RUNTIME_SOURCE};
use kfsynth::conformance;
use kfsynth::dimension::{check_description, SignalTable};
use kfsynth::frontend::{parse_source, read_file, Description};
use kfsynth::model::{build_model, BuildOptions, StateSpaceModel};
use kfsynth::sim::{filter_start, plot_data, run_experiment, run_reference, simulate, Experiment, ExperimentConfig};
use kfsynth::{Diagnostic, Severity};

const SIGNAL_PATH_ENV: &str = "KFSYNTH_SIGNAL_PATH";
const COMPARE_TOLERANCE: f64 = 1e-9;

const AFTER_HELP: &str = "\
Flags by subcommand:
  generate   INPUT --process NAME [--process NAME ...] --measure NAME
             [--filter lkf|ekf] [--diff standard|auto] [-o BASENAME] [--prefix P]
             [--single-precision] [--runtime-header NAME] [--emit-runtime]
             [--dump-model] [--emit-ssa] [-I DIR ...]
  check      INPUT [--process NAME ... --measure NAME] [--dump-model] [--emit-ssa] [-I DIR ...]
  simulate   --experiment NAME [--seed N] [--steps N] [--dt SECONDS] [--config FILE] [-o FILE]
  evaluate   --experiment NAME [--seed N] [--steps N] [--dt SECONDS] [--config FILE]
             [--plot-data DIR] [--compare]
  count-ops  INPUT --process NAME ... --measure NAME [-I DIR ...]

Experiments: pendulum1, pendulum2, damped, stroll.
Included signal files are searched in -I directories, then the
directories listed in KFSYNTH_SIGNAL_PATH, then next to INPUT.

Exit status: 0 success, 1 diagnostics or failed checks, 2 usage error.";

#[derive(Parser)]
#[command(name = "kfsynth", version, about = "Compile physics descriptions into Kalman filter C sources", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a description, build its state-space model and write BASENAME.h and BASENAME.c
    Generate(GenerateArgs),
    /// Parse and dimension-check a description
    Check(CheckArgs),
    /// Simulate one experiment seed and write its trace CSV
    Simulate(ExperimentArgs),
    /// Run the reference filter over an experiment and print its scores
    Evaluate(EvaluateArgs),
    /// Report Jacobian work for symbolic and reverse-mode differentiation
    CountOps(CountOpsArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Input description (.nt)
    input: PathBuf,
    /// Extra directory searched for included files
    #[arg(short = 'I', long = "include-dir", value_name = "DIR")]
    include: Vec<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    /// Print the extracted state-space model
    #[arg(long)]
    dump_model: bool,
    /// Print primal and adjoint SSA programs for every model row
    #[arg(long)]
    emit_ssa: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Process invariant (repeat for piecewise models; order fixes the mode index)
    #[arg(long = "process", value_name = "NAME", required = true)]
    process: Vec<String>,
    /// Measurement invariant
    #[arg(long, value_name = "NAME")]
    measure: String,
    /// Filter kind
    #[arg(long, default_value = "ekf", value_parser = ["lkf", "ekf"])]
    filter: String,
    /// Jacobian computation for the EKF
    #[arg(long, default_value = "standard", value_parser = ["standard", "auto"])]
    diff: String,
    /// Output path without extension (default: input file stem)
    #[arg(short = 'o', value_name = "BASENAME")]
    output: Option<PathBuf>,
    /// Prefix for every exported C identifier
    #[arg(long, default_value = "")]
    prefix: String,
    /// Use float instead of double
    #[arg(long)]
    single_precision: bool,
    /// Name of the matrix runtime header to include
    #[arg(long, value_name = "NAME", default_value = kfsynth::codegen::DEFAULT_RUNTIME_HEADER)]
    runtime_header: String,
    /// Also write the matrix runtime (kf_matrix.h, kf_matrix.c) next to the output
    #[arg(long)]
    emit_runtime: bool,
    #[command(flatten)]
    dump: DumpArgs,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Process invariant; with --measure, also builds the model
    #[arg(long = "process", value_name = "NAME", requires = "measure")]
    process: Vec<String>,
    /// Measurement invariant
    #[arg(long, value_name = "NAME", requires = "process")]
    measure: Option<String>,
    #[command(flatten)]
    dump: DumpArgs,
}

#[derive(Args)]
struct CountOpsArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long = "process", value_name = "NAME", required = true)]
    process: Vec<String>,
    #[arg(long, value_name = "NAME")]
    measure: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment to run
    #[arg(long, value_parser = ["pendulum1", "pendulum2", "damped", "stroll"])]
    experiment: String,
    /// Noise seed (evaluate: run only this seed instead of the configured set)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated steps (pendulum experiments)
    #[arg(long)]
    steps: Option<usize>,
    /// Time step in seconds
    #[arg(long)]
    dt: Option<f64>,
    /// key = value file overriding experiment parameters
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (default: standard output)
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Write plot CSVs (time, truth, estimate, measurement) into DIR
    #[arg(long, value_name = "DIR")]
    plot_data: Option<PathBuf>,
    /// Compile the generated filter (both diff modes) and compare it with the reference filter
    #[arg(long)]
    compare: bool,
}

/// Terminates with a status code after printing `message` to stderr.
struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    fn usage(message: impl Into<String>) -> Self {
        Exit { code: 2, message: message.into() }
    }

    fn failed(message: impl Into<String>) -> Self {
        Exit { code: 1, message: message.into() }
    }
}

type Result<T> = std::result::Result<T, Exit>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Check(a) => cmd_check(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::CountOps(a) => cmd_count_ops(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("kfsynth: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}

fn search_path(src: &SourceArgs) -> Vec<PathBuf> {
    let mut dirs = src.include.clone();
    if let Some(p) = std::env::var_os(SIGNAL_PATH_ENV) {
        dirs.extend(std::env::split_paths(&p).filter(|d| !d.as_os_str().is_empty()));
    }
    match src.input.parent() {
        Some(p) if !p.as_os_str().is_empty() => dirs.push(p.to_path_buf()),
        _ => dirs.push(PathBuf::from(".")),
    }
    dirs
}

fn print_diagnostics(file: &str, diags: &[Diagnostic]) -> bool {
    for d in diags {
        eprintln!("{}", d.render(file));
    }
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Parses and dimension-checks the input; errors end the run with status 1.
fn load(src: &SourceArgs) -> Result<Description> {
    let file = src.input.display().to_string();
    if !src.input.is_file() {
        return Err(Exit::usage(format!("cannot read `{file}`: no such file")));
    }
    let text = read_file(&src.input).map_err(|e| Exit::usage(e.to_string()))?;
    let fail = |d: Diagnostic| {
        print_diagnostics(&file, &[d]);
        Exit::failed("")
    };
    let d = parse_source(&text).map_err(|e| fail(e.to_diagnostic()))?;
    let (table, mut diags) = SignalTable::for_description(&d, &search_path(src)).map_err(|e| fail(e.to_diagnostic()))?;
    diags.extend(check_description(&d, &table));
    if print_diagnostics(&file, &diags) {
        let n = diags.iter().filter(|d| d.severity == Severity::Error).count();
        return Err(Exit::failed(format!("{n} error(s) in `{file}`")));
    }
    Ok(d)
}

fn model(src: &SourceArgs, d: &Description, process: &[String], measure: &str) -> Result<StateSpaceModel> {
    let names: Vec<&str> = process.iter().map(String::as_str).collect();
    let file = src.input.display().to_string();
    let built = build_model(d, &names, measure, BuildOptions::default()).map_err(|e| Exit::failed(format!("{file}: {e}")))?;
    print_diagnostics(&file, &built.warnings);
    Ok(built.model)
}

fn dumps(m: &StateSpaceModel, dump: &DumpArgs) {
    if dump.dump_model {
        print!("{}", m.report());
    }
    if dump.emit_ssa {
        let mut rows: Vec<(String, &kfsynth::frontend::Expr)> = vec![];
        for mode in &m.modes {
            for (s, f) in m.vars.state.iter().zip(&mode.f) {
                rows.push((format!("{}: {s}'", mode.name), f));
            }
        }
        for (z, h) in m.vars.measurement.iter().zip(&m.h) {
            rows.push((z.clone(), h));
        }
        print!("{}", dump_programs(&rows));
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let filter: FilterKind = a.filter.parse().map_err(Exit::usage)?;
    let diff: DiffMode = a.diff.parse().map_err(Exit::usage)?;
    let out = a.output.clone().unwrap_or_else(|| PathBuf::from(a.source.input.file_stem().unwrap_or_default()));
    let basename = out.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let opts = GenOptions {
        filter,
        diff,
        prefix: a.prefix.clone(),
        runtime_header: a.runtime_header.clone(),
        single_precision: a.single_precision,
        basename,
    };

    let d = load(&a.source)?;
    let m = model(&a.source, &d, &a.process, &a.measure)?;
    dumps(&m, &a.dump);
    let g = generate(&m, &opts).map_err(|e| match e {
        GenError::NonlinearForLkf => Exit::usage(format!("conflicting options: {e}")),
        GenError::BadPrefix(_) | GenError::BadBasename(_) => Exit::usage(e.to_string()),
        GenError::NonFinite { .. } => Exit::failed(e.to_string()),
    })?;
    let mut files = vec![(g.header_name, g.header), (g.source_name, g.source)];
    if a.emit_runtime {
        files.push((a.runtime_header.clone(), RUNTIME_HEADER.to_string()));
        files.push(("kf_matrix.c".into(), RUNTIME_SOURCE.to_string()));
    }
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|e| Exit::failed(format!("cannot create `{}`: {e}", dir.display())))?;
    }
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Exit::failed(format!("cannot write `{}`: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<()> {
    let d = load(&a.source)?;
    if let Some(measure) = &a.measure {
        let m = model(&a.source, &d, &a.process, measure)?;
        dumps(&m, &a.dump);
    } else if a.dump.dump_model || a.dump.emit_ssa {
        return Err(Exit::usage("--dump-model and --emit-ssa need --process and --measure"));
    }
    eprintln!("{}: ok", a.source.input.display());
    Ok(())
}

fn cmd_count_ops(a: CountOpsArgs) -> Result<()> {
    let d = load(&a.source)?;
    let m = model(&a.source, &d, &a.process, &a.measure)?;
    let m = m.as_nonlinear();
    let std = count_evaluations(&m, DiffMode::Standard).map_err(|e| Exit::failed(e.to_string()))?;
    let ad = count_evaluations(&m, DiffMode::Autodiff).map_err(|e| Exit::failed(e.to_string()))?;
    print!("{std}{ad}");
    let (s, r) = (std.evaluations(), ad.evaluations());
    println!(
        "autodiff vs standard: {r} vs {s} model-function evaluations per Jacobian set ({:.1}% fewer)",
        100.0 * (s as f64 - r as f64) / s as f64
    );
    Ok(())
}

fn config(a: &ExperimentArgs) -> Result<(Experiment, ExperimentConfig)> {
    let exp: Experiment = a.experiment.parse().map_err(Exit::usage)?;
    let mut cfg = exp.default_config();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Exit::usage(format!("cannot read `{}`: {e}", path.display())))?;
        cfg.apply_text(&text).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(n) = a.steps {
        cfg.steps = n;
    }
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    if let Some(s) = a.seed {
        cfg.seeds = vec![s];
    }
    Ok((exp, cfg))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Exit::failed(format!("cannot write `{}`: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_simulate(a: ExperimentArgs) -> Result<()> {
    let (exp, cfg) = config(&a)?;
    let m = exp.model(&cfg).map_err(|e| Exit::usage(e.to_string()))?;
    let trace = simulate(exp, &cfg, &m, cfg.seeds[0]).map_err(|e| Exit::usage(e.to_string()))?;
    write_output(a.output.as_deref(), &trace.to_csv())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let (exp, cfg) = config(&a.exp)?;
    let outcome = run_experiment(exp, &cfg).map_err(|e| Exit::usage(e.to_string()))?;
    let mut report = outcome.summary();
    if let Some(dir) = &a.plot_data {
        std::fs::create_dir_all(dir).map_err(|e| Exit::failed(format!("cannot create `{}`: {e}", dir.display())))?;
        for (name, csv) in plot_data(&outcome) {
            let path = dir.join(name);
            std::fs::write(&path, csv).map_err(|e| Exit::failed(format!("cannot write `{}`: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
    }
    let mut ok = true;
    if a.compare {
        let m = exp.model(&cfg).map_err(|e| Exit::usage(e.to_string()))?;
        let first = &outcome.seeds[0];
        let input = (&first.trace).into();
        let n = m.state_dim();
        let s0 = filter_start(exp, &cfg);
        let p0: Vec<f64> = (0..n * n).map(|i| if i % (n + 1) == 0 { cfg.p0 } else { 0.0 }).collect();
        let oracle = run_reference(&m, &input, &s0, &nalgebra_identity(n, cfg.p0)).map_err(|e| Exit::failed(e.to_string()))?;
        let mut runs = vec![];
        for diff in [DiffMode::Standard, DiffMode::Autodiff] {
            let opts = GenOptions { filter: FilterKind::Ekf, diff, basename: "filter".into(), ..Default::default() };
            let run = conformance::compile_and_run(&m, &opts, &s0, &p0, &first.trace.to_csv())
                .map_err(|e| Exit::failed(format!("conformance ({diff}): {e}")))?;
            let d = max_deviation(&run.states, &oracle.estimates);
            report.push_str(&format!("generated ekf/{diff} vs reference (seed {}): max |delta| = {d:.3e}\n", first.seed));
            ok &= d <= COMPARE_TOLERANCE;
            runs.push(run);
        }
        let d = max_deviation(&runs[0].states, &runs[1].states);
        report.push_str(&format!("generated standard vs auto: max |delta| = {d:.3e}\n"));
        ok &= d <= COMPARE_TOLERANCE;
    }
    write_output(a.exp.output.as_deref(), &report)?;
    if ok {
        Ok(())
    } else {
        Err(Exit::failed(format!("generated filter deviates from the reference by more than {COMPARE_TOLERANCE:e}")))
    }
}

fn nalgebra_identity(n: usize, scale: f64) -> kfsynth::nalgebra::DMatrix<f64> {
    kfsynth::nalgebra::DMatrix::identity(n, n) * scale
}

fn max_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}
