//! Lexing, parsing and pretty-printing of `.nt` physics descriptions.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostic::{Diagnostic, Span};

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use pretty::{format_number, print_description};

/// Maximum nesting of `include` directives.
pub const MAX_INCLUDE_DEPTH: usize = 8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FrontendError {
    #[error("{message}")]
    Lex { span: Span, message: String },
    #[error("{message}")]
    Syntax { span: Span, message: String },
    #[error("{message}")]
    Resolve { span: Span, message: String },
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

impl FrontendError {
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex { span, .. }
            | FrontendError::Syntax { span, .. }
            | FrontendError::Resolve { span, .. } => *span,
            FrontendError::Io { .. } => Span::default(),
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.span(), self.to_string())
    }
}

/// Parses a token stream into a fully resolved description.
pub fn parse_description(tokens: &[Token]) -> Result<Description, FrontendError> {
    let mut p = parser::Parser::new(tokens);
    let d = p.parse_description()?;
    p.finish()?;
    parser::resolve(d)
}

/// Tokenizes and parses source text.
pub fn parse_source(text: &str) -> Result<Description, FrontendError> {
    parse_description(&tokenize(text)?)
}

/// Parses a standalone expression. Identifiers stay unresolved.
pub fn parse_expr(text: &str) -> Result<Expr, FrontendError> {
    let tokens = tokenize(text)?;
    let mut p = parser::Parser::new(&tokens);
    let e = p.parse_expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a standalone `ident ~ expr` constraint.
pub fn parse_constraint(text: &str) -> Result<Constraint, FrontendError> {
    let tokens = tokenize(text)?;
    let mut p = parser::Parser::new(&tokens);
    let c = p.parse_constraint()?;
    p.finish()?;
    Ok(c)
}

/// An include directive together with what it resolved to.
#[derive(Debug, Clone)]
pub struct LoadedInclude {
    pub file: String,
    pub span: Span,
    /// `None` when the file was not found on the search path.
    pub description: Option<Description>,
}

/// Resolves `include` directives transitively against `search_path`.
/// Files that cannot be found are reported with `description: None`;
/// nesting deeper than [`MAX_INCLUDE_DEPTH`] is an error.
pub fn load_includes(d: &Description, search_path: &[PathBuf]) -> Result<Vec<LoadedInclude>, FrontendError> {
    let mut out = Vec::new();
    load_rec(d, search_path, 1, &mut out)?;
    Ok(out)
}

fn load_rec(
    d: &Description,
    search_path: &[PathBuf],
    depth: usize,
    out: &mut Vec<LoadedInclude>,
) -> Result<(), FrontendError> {
    for inc in &d.includes {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(FrontendError::Resolve {
                span: inc.span,
                message: format!("include nesting deeper than {MAX_INCLUDE_DEPTH}"),
            });
        }
        if out.iter().any(|l: &LoadedInclude| l.file == inc.file) {
            continue;
        }
        let found = search_path.iter().map(|dir| dir.join(&inc.file)).find(|p| p.is_file());
        let description = match found {
            Some(path) => {
                let text = read_file(&path)?;
                Some(parse_source(&text)?)
            }
            None => None,
        };
        out.push(LoadedInclude { file: inc.file.clone(), span: inc.span, description: description.clone() });
        if let Some(child) = description {
            load_rec(&child, search_path, depth + 1, out)?;
        }
    }
    Ok(())
}

pub fn read_file(path: &Path) -> Result<String, FrontendError> {
    std::fs::read_to_string(path)
        .map_err(|e| FrontendError::Io { path: path.display().to_string(), message: e.to_string() })
}
