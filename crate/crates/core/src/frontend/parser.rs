//! Recursive-descent parser over the token stream.
//!
//! Grammar (LL(1)):
//!
//! ```text
//! description = { include | constant | signal | invariant } ;
//! include     = "include" string [";"] ;
//! constant    = ident ":" "constant" "=" ["-"] number unitExpr ";" ;
//! signal      = ident ":" "signal" "=" unitExpr ";" ;
//! invariant   = ident ":" "invariant" "(" param { "," param } ")" "=" "{" constraint { "," constraint } "}" ;
//! param       = ident ":" ident [ "=" "Gaussian" "(" number "," number ")" ] ;
//! constraint  = ident "~" expr ;
//! expr        = term { ("+" | "-") term } ;
//! term        = unary { ("*" | "/") unary } ;
//! unary       = "-" unary | power ;
//! power       = atom [ "**" ["-"] integer ] ;
//! atom        = number | ident | func "(" expr ")" | "(" expr ")" ;
//! unitExpr    = unitFactor { ("*" | "/") unitFactor } ;
//! unitFactor  = ident [ "**" ["-"] integer ] | "1" ;
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostic::Span;
use crate::frontend::ast::*;
use crate::frontend::lexer::{Token, TokenKind};
use crate::frontend::FrontendError;

pub struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn current_span(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self
                .tokens
                .last()
                .map(|t| Span::new(t.span.end, t.span.end, t.span.line, t.span.col + (t.span.end - t.span.start) as u32))
                .unwrap_or_else(|| Span::new(0, 0, 1, 1)),
        }
    }

    fn prev_span(&self) -> Span {
        self.pos.checked_sub(1).map(|i| self.tokens[i].span).unwrap_or_default()
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> FrontendError {
        let found = match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".to_string(),
        };
        FrontendError::Syntax { span: self.current_span(), message: format!("expected {expected}, found {found}") }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Span> {
        if self.peek() == Some(&kind) {
            Ok(self.bump().unwrap().span)
        } else {
            Err(self.error(what))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let span = self.bump().unwrap().span;
                Ok((name.clone(), span))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Span> {
        match self.peek() {
            Some(TokenKind::Ident(name)) if name == kw => Ok(self.bump().unwrap().span),
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn finish(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    pub fn parse_description(&mut self) -> PResult<Description> {
        let mut d = Description::default();
        while !self.at_end() {
            if matches!(self.peek(), Some(TokenKind::Ident(k)) if k == "include")
                && matches!(self.peek_at(1), Some(TokenKind::Str(_)))
            {
                let start = self.bump().unwrap().span;
                let file = match self.bump().map(|t| &t.kind) {
                    Some(TokenKind::Str(s)) => s.clone(),
                    _ => unreachable!(),
                };
                let mut end = self.prev_span();
                if self.peek() == Some(&TokenKind::Semi) {
                    end = self.bump().unwrap().span;
                }
                d.includes.push(Include { file, span: start.to(end) });
                continue;
            }
            let (name, name_span) = self.expect_ident()?;
            self.expect(TokenKind::Colon, "`:`")?;
            match self.peek() {
                Some(TokenKind::Ident(k)) if k == "constant" => {
                    self.bump();
                    d.constants.push(self.parse_constant_body(name, name_span)?);
                }
                Some(TokenKind::Ident(k)) if k == "signal" => {
                    self.bump();
                    self.expect(TokenKind::Eq, "`=`")?;
                    let unit = self.parse_unit_expr()?;
                    let end = self.expect(TokenKind::Semi, "`;`")?;
                    d.signals.push(SignalDecl { name, unit, span: name_span.to(end) });
                }
                Some(TokenKind::Ident(k)) if k == "invariant" => {
                    self.bump();
                    d.invariants.push(self.parse_invariant_body(name, name_span)?);
                }
                _ => return Err(self.error("`constant`, `signal` or `invariant`")),
            }
        }
        Ok(d)
    }

    fn parse_signed_number(&mut self) -> PResult<f64> {
        let negative = self.peek() == Some(&TokenKind::Minus);
        if negative {
            self.bump();
        }
        match self.peek() {
            Some(TokenKind::Number { value, .. }) => {
                self.bump();
                Ok(if negative { -value } else { *value })
            }
            _ => Err(self.error("number")),
        }
    }

    fn parse_constant_body(&mut self, name: String, name_span: Span) -> PResult<Constant> {
        self.expect(TokenKind::Eq, "`=`")?;
        let value = self.parse_signed_number()?;
        let unit = if self.peek() == Some(&TokenKind::Semi) { UnitExpr::default() } else { self.parse_unit_expr()? };
        let end = self.expect(TokenKind::Semi, "`;`")?;
        Ok(Constant { name, value, unit, span: name_span.to(end) })
    }

    fn parse_int_exponent(&mut self) -> PResult<i32> {
        let negative = self.peek() == Some(&TokenKind::Minus);
        if negative {
            self.bump();
        }
        match self.peek() {
            Some(TokenKind::Number { value, integer: true }) if *value <= i32::MAX as f64 => {
                self.bump();
                let k = *value as i32;
                Ok(if negative { -k } else { k })
            }
            _ => Err(self.error("integer exponent")),
        }
    }

    pub fn parse_unit_expr(&mut self) -> PResult<UnitExpr> {
        let mut factors = Vec::new();
        let mut sign = 1;
        loop {
            match self.peek() {
                Some(TokenKind::Ident(name)) => {
                    let span = self.bump().unwrap().span;
                    let mut exponent = 1;
                    if self.peek() == Some(&TokenKind::StarStar) {
                        self.bump();
                        exponent = self.parse_int_exponent()?;
                    }
                    factors.push(UnitFactor { name: name.clone(), exponent: sign * exponent, span });
                }
                Some(TokenKind::Number { value, integer: true }) if *value == 1.0 => {
                    self.bump();
                }
                _ => return Err(self.error("unit name")),
            }
            match self.peek() {
                Some(TokenKind::Star) => sign = 1,
                Some(TokenKind::Slash) => sign = -1,
                _ => break,
            }
            self.bump();
        }
        Ok(UnitExpr { factors })
    }

    fn parse_invariant_body(&mut self, name: String, name_span: Span) -> PResult<Invariant> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = vec![self.parse_param()?];
        while self.peek() == Some(&TokenKind::Comma) {
            self.bump();
            params.push(self.parse_param()?);
        }
        self.expect(TokenKind::RParen, "`,` or `)`")?;
        self.expect(TokenKind::Eq, "`=`")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut constraints = vec![self.parse_constraint()?];
        while self.peek() == Some(&TokenKind::Comma) {
            self.bump();
            constraints.push(self.parse_constraint()?);
        }
        let end = self.expect(TokenKind::RBrace, "`,` or `}`")?;
        Ok(Invariant { name, params, constraints, span: name_span.to(end) })
    }

    fn parse_param(&mut self) -> PResult<Param> {
        let (name, span) = self.expect_ident()?;
        self.expect(TokenKind::Colon, "`:`")?;
        let (signal, signal_span) = self.expect_ident()?;
        let mut uncertainty = None;
        if self.peek() == Some(&TokenKind::Eq) {
            self.bump();
            self.expect_keyword("Gaussian")?;
            self.expect(TokenKind::LParen, "`(`")?;
            let mean = self.parse_signed_number()?;
            self.expect(TokenKind::Comma, "`,`")?;
            let var_span = self.current_span();
            let variance = self.parse_signed_number()?;
            self.expect(TokenKind::RParen, "`)`")?;
            if !(variance >= 0.0) {
                return Err(FrontendError::Syntax {
                    span: var_span,
                    message: format!("variance must be nonnegative, got {variance}"),
                });
            }
            uncertainty = Some(Uncertainty { kind: Distribution::Gaussian, mean, variance });
        }
        Ok(Param { name, signal, uncertainty, span: span.to(self.prev_span()), signal_span })
    }

    pub fn parse_constraint(&mut self) -> PResult<Constraint> {
        let (name, span) = self.expect_ident()?;
        self.expect(TokenKind::Tilde, "`~`")?;
        let rhs = self.parse_expr()?;
        let full = span.to(rhs.span);
        Ok(Constraint { lhs: Expr::new(ExprKind::Ident(name), span), rhs, span: full })
    }

    pub fn parse_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_term()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_unary()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if self.peek() == Some(&TokenKind::Minus) {
            let start = self.bump().unwrap().span;
            let inner = self.parse_unary()?;
            let span = start.to(inner.span);
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> PResult<Expr> {
        let base = self.parse_atom()?;
        if self.peek() == Some(&TokenKind::StarStar) {
            self.bump();
            let k = self.parse_int_exponent()?;
            let span = base.span.to(self.prev_span());
            return Ok(Expr::new(ExprKind::Pow(Box::new(base), k), span));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(TokenKind::Number { value, .. }) => {
                let span = self.bump().unwrap().span;
                Ok(Expr::new(ExprKind::Number(*value), span))
            }
            Some(TokenKind::Ident(name)) => {
                let span = self.bump().unwrap().span;
                if self.peek() == Some(&TokenKind::LParen) {
                    let func = Func::from_name(name).ok_or_else(|| FrontendError::Syntax {
                        span,
                        message: format!("unknown function `{name}`; expected one of sin, cos, tan, exp, ln, sqrt"),
                    })?;
                    self.bump();
                    let arg = self.parse_expr()?;
                    let end = self.expect(TokenKind::RParen, "`)`")?;
                    return Ok(Expr::new(ExprKind::Call(func, Box::new(arg)), span.to(end)));
                }
                Ok(Expr::new(ExprKind::Ident(name.clone()), span))
            }
            Some(TokenKind::LParen) => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("expression")),
        }
    }
}

/// Checks name uniqueness and binds constraint identifiers to parameters or
/// constants. Identifiers that are neither become errors; names that are
/// constants become [`ExprKind::Const`]. Parameters shadow constants.
pub fn resolve(mut d: Description) -> PResult<Description> {
    let mut constants = BTreeMap::new();
    for c in &d.constants {
        if constants.insert(c.name.clone(), c.span).is_some() {
            return Err(FrontendError::Resolve { span: c.span, message: format!("duplicate constant `{}`", c.name) });
        }
    }
    let mut seen_invariants = BTreeSet::new();
    for inv in &mut d.invariants {
        if !seen_invariants.insert(inv.name.clone()) {
            return Err(FrontendError::Resolve {
                span: inv.span,
                message: format!("duplicate invariant name `{}`", inv.name),
            });
        }
        let mut params = BTreeSet::new();
        for p in &inv.params {
            if !params.insert(p.name.clone()) {
                return Err(FrontendError::Resolve {
                    span: p.span,
                    message: format!("duplicate parameter `{}` in invariant `{}`", p.name, inv.name),
                });
            }
        }
        for c in &mut inv.constraints {
            let target = c.target().to_string();
            if !params.contains(&target) {
                return Err(FrontendError::Resolve {
                    span: c.lhs.span,
                    message: format!("`{target}` is not a parameter of invariant `{}`", inv.name),
                });
            }
            bind(&mut c.rhs, &params, &constants, &inv.name)?;
        }
    }
    Ok(d)
}

fn bind(
    e: &mut Expr,
    params: &BTreeSet<String>,
    constants: &BTreeMap<String, Span>,
    invariant: &str,
) -> PResult<()> {
    match &mut e.kind {
        ExprKind::Ident(name) => {
            if params.contains(name.as_str()) {
                Ok(())
            } else if constants.contains_key(name.as_str()) {
                e.kind = ExprKind::Const(std::mem::take(name));
                Ok(())
            } else {
                Err(FrontendError::Resolve {
                    span: e.span,
                    message: format!("identifier `{name}` is neither a parameter of invariant `{invariant}` nor a constant"),
                })
            }
        }
        ExprKind::Number(_) | ExprKind::Const(_) => Ok(()),
        ExprKind::Neg(a) | ExprKind::Pow(a, _) | ExprKind::Call(_, a) => bind(a, params, constants, invariant),
        ExprKind::Binary(_, l, r) => {
            bind(l, params, constants, invariant)?;
            bind(r, params, constants, invariant)
        }
    }
}
