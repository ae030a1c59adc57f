//! Compile-and-run harness for generated filters.
//!
//! The harness program reads a trace CSV (`t,z_*,extra_*[,mode]`), runs
//! predict then update per row and prints `t,s_0..` estimates. With a
//! second argument it also writes per-step statuses and covariances.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::codegen::{generate, GenError, GenOptions, RUNTIME_HEADER, RUNTIME_SOURCE};
use crate::model::StateSpaceModel;
use crate::sim::{read_estimates_csv, SimError};

pub const CFLAGS: &[&str] = &["-std=c99", "-Wall", "-Wextra", "-Werror", "-pedantic", "-O1"];

/// Harness exit codes.
pub const EXIT_BAD_TRACE: i32 = 3;
pub const EXIT_NON_FINITE: i32 = 4;

#[derive(Debug, Error)]
pub enum ConformanceError {
    #[error("no C compiler found (tried `{0}`)")]
    NoCompiler(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("compilation failed:\n{0}")]
    Compile(String),
    #[error("trace rejected by harness: {0}")]
    BadTrace(String),
    #[error("filter state became non-finite: {0}")]
    NonFinite(String),
    #[error("harness failed: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Compiler from `$CC`, falling back to `cc`, if it runs.
pub fn find_compiler() -> Result<String, ConformanceError> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let ok = Command::new(&cc)
        .arg("--version")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success());
    if ok {
        Ok(cc)
    } else {
        Err(ConformanceError::NoCompiler(cc))
    }
}

fn c_array(vals: &[f64]) -> String {
    vals.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

/// C source of the harness `main` for one generated filter.
pub fn harness_source(model: &StateSpaceModel, opts: &GenOptions, s0: &[f64], p0: &[f64]) -> String {
    let (n, z, e) = (model.state_dim(), model.measurement_dim(), model.vars.extras.len());
    assert_eq!(s0.len(), n);
    assert_eq!(p0.len(), n * n);
    let p = &opts.prefix;
    let extras: String = (0..e).map(|i| format!(", (kf_real)v[{}]", 1 + z + i)).collect();
    let mut out = String::new();
    write!(
        out,
        r#"#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <math.h>
#include "{basename}.h"

#define MAX_FIELDS 256

static int split(char *line, char **fields)
{{
    int count = 0;
    char *cur = line;
    line[strcspn(line, "\r\n")] = '\0';
    while (count < MAX_FIELDS) {{
        char *comma = strchr(cur, ',');
        while (*cur == ' ' || *cur == '\t') {{
            ++cur;
        }}
        fields[count++] = cur;
        if (!comma) {{
            break;
        }}
        *comma = '\0';
        cur = comma + 1;
    }}
    return count;
}}

int main(int argc, char **argv)
{{
    static const kf_real s0[{n}] = {{{s0}}};
    static const kf_real P0[{nn}] = {{{p0}}};
    static char line[65536];
    char *fields[MAX_FIELDS];
    {p}FilterCtx ctx;
    FILE *in = stdin;
    FILE *diag = NULL;
    int nz = 0;
    int ne = 0;
    int has_mode = 0;
    int width;
    long row = 1;
    if (argc > 1 && strcmp(argv[1], "-") != 0) {{
        in = fopen(argv[1], "r");
        if (!in) {{
            fprintf(stderr, "cannot open %s\n", argv[1]);
            return {bad};
        }}
    }}
    if (argc > 2) {{
        diag = fopen(argv[2], "w");
        if (!diag) {{
            fprintf(stderr, "cannot open %s\n", argv[2]);
            return {bad};
        }}
    }}
    if (!fgets(line, sizeof line, in)) {{
        fprintf(stderr, "empty trace\n");
        return {bad};
    }}
    width = split(line, fields);
    if (strcmp(fields[0], "t") != 0) {{
        fprintf(stderr, "first column must be t\n");
        return {bad};
    }}
    for (int i = 1; i < width; ++i) {{
        if (strncmp(fields[i], "z_", 2) == 0) {{
            ++nz;
        }} else if (strncmp(fields[i], "extra_", 6) == 0) {{
            ++ne;
        }} else if (strcmp(fields[i], "mode") == 0 && i == width - 1) {{
            has_mode = 1;
        }} else {{
            fprintf(stderr, "unexpected column %s\n", fields[i]);
            return {bad};
        }}
    }}
    if (nz != {z} || ne != {e}) {{
        fprintf(stderr, "trace has %d measurement and %d extra columns, filter needs {z} and {e}\n", nz, ne);
        return {bad};
    }}
    {p}filterInit(&ctx, s0, P0);
    printf("t");
    for (int i = 0; i < {n}; ++i) {{
        printf(",s_%d", i);
    }}
    printf("\n");
    while (fgets(line, sizeof line, in)) {{
        double v[MAX_FIELDS];
        kf_real zv[{zlen}];
        int mode = 0;
        int a;
        int b;
        ++row;
        if (line[strspn(line, " \t\r\n")] == '\0') {{
            continue;
        }}
        if (split(line, fields) != width) {{
            fprintf(stderr, "row %ld: expected %d fields\n", row, width);
            return {bad};
        }}
        for (int i = 0; i < 1 + {z} + {e}; ++i) {{
            char *end;
            v[i] = strtod(fields[i], &end);
            if (end == fields[i] || *end != '\0') {{
                fprintf(stderr, "row %ld: bad number %s\n", row, fields[i]);
                return {bad};
            }}
        }}
        if (has_mode) {{
            mode = atoi(fields[width - 1]);
        }}
        for (int i = 0; i < {z}; ++i) {{
            zv[i] = (kf_real)v[1 + i];
        }}
        a = {p}filterPredict(&ctx{extras}, mode);
        b = {p}filterUpdate(&ctx, zv{extras});
        printf("%.17g", v[0]);
        for (int i = 0; i < {n}; ++i) {{
            if (!isfinite((double)ctx.s[i])) {{
                fprintf(stderr, "row %ld: non-finite state\n", row);
                return {nonfinite};
            }}
            printf(",%.17g", (double)ctx.s[i]);
        }}
        printf("\n");
        if (diag) {{
            fprintf(diag, "%d,%d", a, b);
            for (int i = 0; i < {nn}; ++i) {{
                fprintf(diag, ",%.17g", (double)ctx.P[i]);
            }}
            fprintf(diag, "\n");
        }}
    }}
    if (diag) {{
        fclose(diag);
    }}
    return 0;
}}
"#,
        basename = opts.basename,
        nn = n * n,
        s0 = c_array(s0),
        p0 = c_array(p0),
        zlen = z.max(1),
        bad = EXIT_BAD_TRACE,
        nonfinite = EXIT_NON_FINITE,
    )
    .unwrap();
    out
}

/// Writes generated sources, the runtime and the harness into `dir` and compiles them.
pub fn build(dir: &Path, model: &StateSpaceModel, opts: &GenOptions, s0: &[f64], p0: &[f64]) -> Result<PathBuf, ConformanceError> {
    let cc = find_compiler()?;
    let g = generate(model, opts)?;
    std::fs::write(dir.join(&g.header_name), &g.header)?;
    std::fs::write(dir.join(&g.source_name), &g.source)?;
    std::fs::write(dir.join(&opts.runtime_header), RUNTIME_HEADER)?;
    std::fs::write(dir.join("kf_matrix.h"), RUNTIME_HEADER)?;
    std::fs::write(dir.join("kf_matrix.c"), RUNTIME_SOURCE)?;
    std::fs::write(dir.join("harness.c"), harness_source(model, opts, s0, p0))?;
    let exe = dir.join("harness");
    let mut cmd = Command::new(cc);
    cmd.args(CFLAGS).arg("-I").arg(dir);
    if opts.single_precision {
        cmd.arg("-DKF_SINGLE_PRECISION");
    }
    let out = cmd
        .arg(dir.join(&g.source_name))
        .arg(dir.join("kf_matrix.c"))
        .arg(dir.join("harness.c"))
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .output()?;
    if !out.status.success() {
        return Err(ConformanceError::Compile(String::from_utf8_lossy(&out.stderr).into_owned()));
    }
    Ok(exe)
}

/// Output of one harness run.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessRun {
    /// Estimate CSV exactly as printed.
    pub csv: String,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `(predict, update)` return codes per step.
    pub statuses: Vec<(i32, i32)>,
    /// Row-major covariance after each step.
    pub covariances: Vec<Vec<f64>>,
}

/// Runs a built harness on `trace` (CSV text).
pub fn run(exe: &Path, trace: &str) -> Result<HarnessRun, ConformanceError> {
    let dir = exe.parent().unwrap_or(Path::new("."));
    let trace_path = dir.join("trace.csv");
    let diag_path = dir.join("diag.csv");
    std::fs::write(&trace_path, trace)?;
    let out = Command::new(exe).arg(&trace_path).arg(&diag_path).output()?;
    let stderr = String::from_utf8_lossy(&out.stderr).trim().to_string();
    match out.status.code() {
        Some(0) => {}
        Some(EXIT_BAD_TRACE) => return Err(ConformanceError::BadTrace(stderr)),
        Some(EXIT_NON_FINITE) => return Err(ConformanceError::NonFinite(stderr)),
        _ => return Err(ConformanceError::Run(format!("{}: {stderr}", out.status))),
    }
    let csv = String::from_utf8_lossy(&out.stdout).into_owned();
    let (times, states) = read_estimates_csv(&csv)?;
    let mut statuses = vec![];
    let mut covariances = vec![];
    for line in std::fs::read_to_string(&diag_path)?.lines() {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || ConformanceError::Run(format!("malformed diagnostic line `{line}`"));
        statuses.push((f[0].parse().map_err(|_| bad())?, f.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?));
        covariances.push(f[2..].iter().map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?);
    }
    Ok(HarnessRun { csv, times, states, statuses, covariances })
}

/// Builds in a fresh temporary directory and runs once.
pub fn compile_and_run(
    model: &StateSpaceModel,
    opts: &GenOptions,
    s0: &[f64],
    p0: &[f64],
    trace: &str,
) -> Result<HarnessRun, ConformanceError> {
    let dir = tempfile::Builder::new().prefix("kfsynth-conform-").tempdir()?;
    let exe = build(dir.path(), model, opts, s0, p0)?;
    run(&exe, trace)
}
