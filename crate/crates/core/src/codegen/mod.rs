//! C99 code generation for linear and extended Kalman filters.

pub mod emit_c;
pub mod ir;
pub mod lower;
pub mod runtime;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::autodiff::DiffMode;
use crate::model::{ModelKind, StateSpaceModel};

pub use runtime::{DEFAULT_RUNTIME_HEADER, RUNTIME_HEADER, RUNTIME_SOURCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterKind {
    Lkf,
    #[default]
    Ekf,
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::Lkf => "lkf",
            FilterKind::Ekf => "ekf",
        })
    }
}

impl FromStr for FilterKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lkf" => Ok(FilterKind::Lkf),
            "ekf" => Ok(FilterKind::Ekf),
            other => Err(format!("unknown filter `{other}` (expected lkf or ekf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub filter: FilterKind,
    pub diff: DiffMode,
    /// Prepended to every exported identifier.
    pub prefix: String,
    pub runtime_header: String,
    pub single_precision: bool,
    /// File stem of the generated `.h` / `.c` pair.
    pub basename: String,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            filter: FilterKind::Ekf,
            diff: DiffMode::Standard,
            prefix: String::new(),
            runtime_header: DEFAULT_RUNTIME_HEADER.into(),
            single_precision: false,
            basename: "filter".into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("the model is nonlinear; a linear Kalman filter cannot be generated (use --filter ekf)")]
    NonlinearForLkf,
    #[error("prefix `{0}` is not a valid C identifier prefix")]
    BadPrefix(String),
    #[error("basename `{0}` is not usable as a file stem")]
    BadBasename(String),
    #[error("{what} is not finite ({value})")]
    NonFinite { what: String, value: f64 },
}

/// Header and source text of one generated filter.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSources {
    pub header_name: String,
    pub header: String,
    pub source_name: String,
    pub source: String,
}

fn valid_prefix(p: &str) -> bool {
    p.is_empty()
        || (p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !p.starts_with(|c: char| c.is_ascii_digit()))
}

fn valid_basename(b: &str) -> bool {
    !b.is_empty() && b.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn validate(model: &StateSpaceModel, opts: &GenOptions) -> Result<(), GenError> {
    if opts.filter == FilterKind::Lkf && matches!(model.kind, ModelKind::Nonlinear { .. }) {
        return Err(GenError::NonlinearForLkf);
    }
    if !valid_prefix(&opts.prefix) {
        return Err(GenError::BadPrefix(opts.prefix.clone()));
    }
    if !valid_basename(&opts.basename) {
        return Err(GenError::BadBasename(opts.basename.clone()));
    }
    let finite = |what: String, value: f64| if value.is_finite() { Ok(()) } else { Err(GenError::NonFinite { what, value }) };
    for (n, v) in &model.constants {
        finite(format!("constant {n}"), *v)?;
    }
    for v in model.q.iter() {
        finite("process noise covariance entry".into(), *v)?;
    }
    for v in model.r.iter() {
        finite("measurement noise covariance entry".into(), *v)?;
    }
    Ok(())
}

pub fn generate(model: &StateSpaceModel, opts: &GenOptions) -> Result<GeneratedSources, GenError> {
    validate(model, opts)?;
    let unit = lower::lower(model, opts);
    Ok(GeneratedSources {
        header_name: unit.header_name.clone(),
        header: emit_c::emit_header(&unit),
        source_name: format!("{}.c", opts.basename),
        source: emit_c::emit_source(&unit),
    })
}
