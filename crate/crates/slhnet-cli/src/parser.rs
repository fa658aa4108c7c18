//! Recursive-descent parser for netlist documents.
//!
//! Grammar (statements are newline-terminated; `#` comments):
//!
//! ```text
//! space NAME fock N
//! space NAME dim N
//! component NAME = BUILTIN(expr, ...)
//! component NAME { S=[[expr,..],..] L=[expr,..] H=expr }
//! connect A [+ B ...] -> C [+ D ...]
//! couple M=expr N=expr
//! state vacuum | fock(SPACE, n) | coherent(SPACE, re, im)
//! run { key=value ... }       # dt, T, seed, channel, runs, tol, obs=expr
//! ```
//!
//! Expressions: complex literals (`1.5`, `2i`, `i`), `+ - *`, parentheses,
//! postfix `'` for the adjoint, and the builtins `a(SPACE)`, `adag(SPACE)`,
//! `n(SPACE)`, `id(SPACE)`, `q(SPACE)`, `sqrt(real)`.
//!
//! Errors are collected per statement with positions; parsing continues at
//! the next line so one bad statement does not hide the rest.

use crate::ast::{
    ComponentBody, Diagnostic, Expr, ExprKind, Name, NetlistDocument, Span, SpaceKind,
    StateDecl, Statement,
};
use crate::lexer::{tokenize, Token, TokenKind};

/// Parse a standalone operator expression (used for `--obs` flags).
pub fn parse_expression(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        diagnostics: Vec::new(),
    };
    parser.skip_newlines();
    let expr = parser.expr();
    parser.skip_newlines();
    if parser.peek().is_some() {
        parser.error_here("trailing input after expression");
    }
    match (expr, parser.diagnostics.is_empty()) {
        (Some(e), true) => Ok(e),
        _ => Err(parser.diagnostics),
    }
}

/// Parse a netlist source text into a document, or the list of problems.
pub fn parse_netlist(text: &str) -> Result<NetlistDocument, Vec<Diagnostic>> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        diagnostics: Vec::new(),
    };
    let doc = parser.document();
    if parser.diagnostics.is_empty() {
        Ok(doc)
    } else {
        Err(parser.diagnostics)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn last_span(&self) -> Span {
        self.tokens
            .get(self.pos.saturating_sub(1))
            .or_else(|| self.tokens.last())
            .map(|t| t.span)
            .unwrap_or(Span { line: 1, column: 1 })
    }

    fn error_here(&mut self, message: impl Into<String>) {
        let span = self
            .peek()
            .map(|t| t.span)
            .unwrap_or_else(|| self.last_span());
        self.diagnostics
            .push(Diagnostic::error(message, span.line, span.column));
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Newline)) {
            self.pos += 1;
        }
    }

    /// Skip to just past the next newline (error recovery).
    fn recover(&mut self) {
        while let Some(t) = self.peek() {
            let is_newline = matches!(t.kind, TokenKind::Newline);
            self.pos += 1;
            if is_newline {
                break;
            }
        }
    }

    fn expect_statement_end(&mut self) -> bool {
        match self.peek().map(|t| &t.kind) {
            None | Some(TokenKind::Newline) => {
                self.pos += 1;
                true
            }
            Some(other) => {
                self.error_here(format!("unexpected {} after statement", describe(other)));
                false
            }
        }
    }

    fn document(&mut self) -> NetlistDocument {
        let mut doc = NetlistDocument::default();
        loop {
            self.skip_newlines();
            if self.peek().is_none() {
                break;
            }
            match self.statement() {
                Some(stmt) => {
                    if self.expect_statement_end() {
                        doc.statements.push(stmt);
                    } else {
                        self.recover();
                    }
                }
                None => self.recover(),
            }
        }
        doc
    }

    fn statement(&mut self) -> Option<Statement> {
        let tok = self.peek()?.clone();
        let keyword = match &tok.kind {
            TokenKind::Ident(k) => k.clone(),
            other => {
                self.error_here(format!("expected a statement, found {}", describe(other)));
                return None;
            }
        };
        match keyword.as_str() {
            "space" => self.space_statement(),
            "component" => self.component_statement(),
            "connect" => self.connect_statement(),
            "couple" => self.couple_statement(),
            "state" => self.state_statement(),
            "run" => self.run_statement(),
            other => {
                self.error_here(format!(
                    "unknown statement `{other}` (expected space, component, connect, couple, state or run)"
                ));
                None
            }
        }
    }

    fn ident(&mut self, what: &str) -> Option<Name> {
        match self.peek().map(|t| (t.kind.clone(), t.span)) {
            Some((TokenKind::Ident(text), span)) => {
                self.pos += 1;
                Some(Name { text, span })
            }
            _ => {
                self.error_here(format!("expected {what}"));
                None
            }
        }
    }

    fn integer(&mut self, what: &str) -> Option<usize> {
        match self.peek().map(|t| (t.kind.clone(), t.span)) {
            Some((TokenKind::Number(v), span)) => {
                self.pos += 1;
                if v.fract() == 0.0 && v >= 0.0 && v <= usize::MAX as f64 {
                    Some(v as usize)
                } else {
                    self.diagnostics.push(Diagnostic::error(
                        format!("expected a nonnegative integer for {what}, got {v}"),
                        span.line,
                        span.column,
                    ));
                    None
                }
            }
            _ => {
                self.error_here(format!("expected {what}"));
                None
            }
        }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            self.error_here(format!("expected {what}"));
            false
        }
    }

    fn space_statement(&mut self) -> Option<Statement> {
        self.next(); // `space`
        let name = self.ident("a space name")?;
        let kind_name = self.ident("`fock` or `dim`")?;
        let kind = match kind_name.text.as_str() {
            "fock" => SpaceKind::Fock,
            "dim" => SpaceKind::Dim,
            other => {
                self.diagnostics.push(Diagnostic::error(
                    format!("expected `fock` or `dim`, got `{other}`"),
                    kind_name.span.line,
                    kind_name.span.column,
                ));
                return None;
            }
        };
        let dim = self.integer("the space dimension")?;
        Some(Statement::Space { name, kind, dim })
    }

    fn component_statement(&mut self) -> Option<Statement> {
        self.next(); // `component`
        let name = self.ident("a component name")?;
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Equals) => {
                self.pos += 1;
                let builtin = self.ident("a builtin name")?;
                if !self.expect(&TokenKind::LParen, "`(` after the builtin name") {
                    return None;
                }
                let args = self.call_args()?;
                Some(Statement::Component {
                    name,
                    body: ComponentBody::Builtin { builtin, args },
                })
            }
            Some(TokenKind::LBrace) => {
                self.pos += 1;
                let mut s = None;
                let mut l = None;
                let mut h = None;
                loop {
                    match self.peek().map(|t| (t.kind.clone(), t.span)) {
                        Some((TokenKind::RBrace, _)) => {
                            self.pos += 1;
                            break;
                        }
                        Some((TokenKind::Ident(key), span)) => {
                            self.pos += 1;
                            if !self.expect(&TokenKind::Equals, &format!("`=` after `{key}`")) {
                                return None;
                            }
                            match key.as_str() {
                                "S" => s = Some(self.matrix_literal()?),
                                "L" => l = Some(self.vector_literal()?),
                                "H" => h = Some(self.expr()?),
                                other => {
                                    self.diagnostics.push(Diagnostic::error(
                                        format!("unknown component field `{other}` (expected S, L or H)"),
                                        span.line,
                                        span.column,
                                    ));
                                    return None;
                                }
                            }
                        }
                        _ => {
                            self.error_here("expected `S`, `L`, `H` or `}` in component body");
                            return None;
                        }
                    }
                }
                Some(Statement::Component {
                    name,
                    body: ComponentBody::Literal { s, l, h },
                })
            }
            _ => {
                self.error_here("expected `=` or `{` after the component name");
                None
            }
        }
    }

    fn name_list(&mut self, what: &str) -> Option<Vec<Name>> {
        let mut names = vec![self.ident(what)?];
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Plus)) {
            self.pos += 1;
            names.push(self.ident(what)?);
        }
        Some(names)
    }

    fn connect_statement(&mut self) -> Option<Statement> {
        self.next(); // `connect`
        let sources = self.name_list("a source component name")?;
        if !self.expect(&TokenKind::Arrow, "`->` between source and target") {
            return None;
        }
        let targets = self.name_list("a target component name")?;
        Some(Statement::Connect { sources, targets })
    }

    fn couple_statement(&mut self) -> Option<Statement> {
        self.next(); // `couple`
        let m_key = self.ident("`M`")?;
        if m_key.text != "M" {
            self.diagnostics.push(Diagnostic::error(
                format!("expected `M`, got `{}`", m_key.text),
                m_key.span.line,
                m_key.span.column,
            ));
            return None;
        }
        if !self.expect(&TokenKind::Equals, "`=` after `M`") {
            return None;
        }
        let m = self.expr()?;
        let n_key = self.ident("`N`")?;
        if n_key.text != "N" {
            self.diagnostics.push(Diagnostic::error(
                format!("expected `N`, got `{}`", n_key.text),
                n_key.span.line,
                n_key.span.column,
            ));
            return None;
        }
        if !self.expect(&TokenKind::Equals, "`=` after `N`") {
            return None;
        }
        let n = self.expr()?;
        Some(Statement::Couple { m, n })
    }

    fn state_statement(&mut self) -> Option<Statement> {
        let span = self.peek().map(|t| t.span).unwrap();
        self.next(); // `state`
        let which = self.ident("`vacuum`, `fock(...)` or `coherent(...)`")?;
        let decl = match which.text.as_str() {
            "vacuum" => StateDecl::Vacuum,
            "fock" => {
                if !self.expect(&TokenKind::LParen, "`(` after `fock`") {
                    return None;
                }
                let space = self.ident("a space name")?;
                if !self.expect(&TokenKind::Comma, "`,` after the space name") {
                    return None;
                }
                let level = self.integer("the fock level")?;
                if !self.expect(&TokenKind::RParen, "`)`") {
                    return None;
                }
                StateDecl::Fock { space, level }
            }
            "coherent" => {
                if !self.expect(&TokenKind::LParen, "`(` after `coherent`") {
                    return None;
                }
                let space = self.ident("a space name")?;
                if !self.expect(&TokenKind::Comma, "`,` after the space name") {
                    return None;
                }
                let re = self.signed_number("the real part")?;
                if !self.expect(&TokenKind::Comma, "`,` between re and im") {
                    return None;
                }
                let im = self.signed_number("the imaginary part")?;
                if !self.expect(&TokenKind::RParen, "`)`") {
                    return None;
                }
                StateDecl::Coherent { space, re, im }
            }
            other => {
                self.diagnostics.push(Diagnostic::error(
                    format!("unknown state `{other}` (expected vacuum, fock or coherent)"),
                    which.span.line,
                    which.span.column,
                ));
                return None;
            }
        };
        Some(Statement::State { decl, span })
    }

    fn signed_number(&mut self, what: &str) -> Option<f64> {
        let negative = if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus)) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Number(v)) => {
                self.pos += 1;
                Some(if negative { -v } else { v })
            }
            _ => {
                self.error_here(format!("expected {what}"));
                None
            }
        }
    }

    fn run_statement(&mut self) -> Option<Statement> {
        self.next(); // `run`
        if !self.expect(&TokenKind::LBrace, "`{` after `run`") {
            return None;
        }
        let mut entries = Vec::new();
        loop {
            match self.peek().map(|t| (t.kind.clone(), t.span)) {
                Some((TokenKind::RBrace, _)) => {
                    self.pos += 1;
                    break;
                }
                Some((TokenKind::Ident(key), span)) => {
                    self.pos += 1;
                    if !self.expect(&TokenKind::Equals, &format!("`=` after `{key}`")) {
                        return None;
                    }
                    let value = self.expr()?;
                    entries.push((Name { text: key, span }, value));
                }
                _ => {
                    self.error_here("expected `key = value` or `}` in run block");
                    return None;
                }
            }
        }
        Some(Statement::Run { entries })
    }

    fn matrix_literal(&mut self) -> Option<Vec<Vec<Expr>>> {
        if !self.expect(&TokenKind::LBracket, "`[` starting a matrix") {
            return None;
        }
        let mut rows = Vec::new();
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::RBracket) => {
                    self.pos += 1;
                    break;
                }
                Some(TokenKind::LBracket) => {
                    rows.push(self.row_literal()?);
                    if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
                        self.pos += 1;
                    }
                }
                _ => {
                    self.error_here("expected `[` starting a matrix row or `]`");
                    return None;
                }
            }
        }
        Some(rows)
    }

    fn row_literal(&mut self) -> Option<Vec<Expr>> {
        if !self.expect(&TokenKind::LBracket, "`[`") {
            return None;
        }
        let mut entries = Vec::new();
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::RBracket) => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    entries.push(self.expr()?);
                    match self.peek().map(|t| &t.kind) {
                        Some(TokenKind::Comma) => {
                            self.pos += 1;
                        }
                        Some(TokenKind::RBracket) => {}
                        _ => {
                            self.error_here("expected `,` or `]` in a row");
                            return None;
                        }
                    }
                }
            }
        }
        Some(entries)
    }

    fn vector_literal(&mut self) -> Option<Vec<Expr>> {
        self.row_literal()
    }

    fn call_args(&mut self) -> Option<Vec<Expr>> {
        let mut args = Vec::new();
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::RParen) => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    args.push(self.expr()?);
                    match self.peek().map(|t| &t.kind) {
                        Some(TokenKind::Comma) => {
                            self.pos += 1;
                        }
                        Some(TokenKind::RParen) => {}
                        _ => {
                            self.error_here("expected `,` or `)` in an argument list");
                            return None;
                        }
                    }
                }
            }
        }
        Some(args)
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Option<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    let span = lhs.span;
                    lhs = Expr {
                        kind: ExprKind::Add(Box::new(lhs), Box::new(rhs)),
                        span,
                    };
                }
                Some(TokenKind::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    let span = lhs.span;
                    lhs = Expr {
                        kind: ExprKind::Sub(Box::new(lhs), Box::new(rhs)),
                        span,
                    };
                }
                _ => return Some(lhs),
            }
        }
    }

    // term := factor ('*' factor)*
    fn term(&mut self) -> Option<Expr> {
        let mut lhs = self.factor()?;
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Star)) {
            self.pos += 1;
            let rhs = self.factor()?;
            let span = lhs.span;
            lhs = Expr {
                kind: ExprKind::Mul(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Some(lhs)
    }

    // factor := ('-'|'+')* atom postfix
    fn factor(&mut self) -> Option<Expr> {
        match self.peek().map(|t| (t.kind.clone(), t.span)) {
            Some((TokenKind::Minus, span)) => {
                self.pos += 1;
                let inner = self.factor()?;
                Some(Expr {
                    kind: ExprKind::Neg(Box::new(inner)),
                    span,
                })
            }
            Some((TokenKind::Plus, _)) => {
                self.pos += 1;
                self.factor()
            }
            _ => self.atom(),
        }
    }

    // atom := NUMBER | IMAG | IDENT | IDENT '(' args ')' | '(' expr ')',
    // each optionally followed by `'` adjoints
    fn atom(&mut self) -> Option<Expr> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => {
                self.error_here("expected an expression");
                return None;
            }
        };
        let mut expr = match tok.kind {
            TokenKind::Number(v) => {
                self.pos += 1;
                Expr {
                    kind: ExprKind::Number(v),
                    span: tok.span,
                }
            }
            TokenKind::Imag(v) => {
                self.pos += 1;
                Expr {
                    kind: ExprKind::Imag(v),
                    span: tok.span,
                }
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
                    self.pos += 1;
                    let args = self.call_args()?;
                    Expr {
                        kind: ExprKind::Call { name, args },
                        span: tok.span,
                    }
                } else {
                    Expr {
                        kind: ExprKind::Ident(name),
                        span: tok.span,
                    }
                }
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.expect(&TokenKind::RParen, "`)`") {
                    return None;
                }
                inner
            }
            other => {
                self.diagnostics.push(Diagnostic::error(
                    format!("expected an expression, found {}", describe(&other)),
                    tok.span.line,
                    tok.span.column,
                ));
                return None;
            }
        };
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Quote)) {
            self.pos += 1;
            let span = expr.span;
            expr = Expr {
                kind: ExprKind::Adjoint(Box::new(expr)),
                span,
            };
        }
        Some(expr)
    }
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Ident(s) => format!("`{s}`"),
        TokenKind::Number(v) => format!("number `{v}`"),
        TokenKind::Imag(v) => format!("imaginary literal `{v}i`"),
        TokenKind::Arrow => "`->`".into(),
        TokenKind::LParen => "`(`".into(),
        TokenKind::RParen => "`)`".into(),
        TokenKind::LBracket => "`[`".into(),
        TokenKind::RBracket => "`]`".into(),
        TokenKind::LBrace => "`{`".into(),
        TokenKind::RBrace => "`}`".into(),
        TokenKind::Comma => "`,`".into(),
        TokenKind::Equals => "`=`".into(),
        TokenKind::Plus => "`+`".into(),
        TokenKind::Minus => "`-`".into(),
        TokenKind::Star => "`*`".into(),
        TokenKind::Quote => "`'`".into(),
        TokenKind::Newline => "end of line".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_an_empty_document() {
        let doc = parse_netlist("").unwrap();
        assert!(doc.statements.is_empty());
        let doc = parse_netlist("\n  \n# only comments\n").unwrap();
        assert!(doc.statements.is_empty());
    }

    #[test]
    fn beamsplitter_cavity_netlist() {
        let text = "\
space c1 fock 10
component C = cavity(c1, 0.5, 1.0)
component P = passthrough(1)
component M = beamsplitter(0.6, 0.8)
connect M -> C + P
";
        let doc = parse_netlist(text).unwrap();
        assert_eq!(doc.space_count(), 1);
        assert_eq!(doc.component_count(), 3);
        assert_eq!(doc.connection_count(), 1);
    }

    #[test]
    fn literal_component_multiline() {
        let text = "\
space c1 fock 4
component G {
  S = [[1, 0],
       [0, 1]]
  L = [sqrt(0.5)*a(c1), 0]
  H = 1.5*n(c1)
}
";
        let doc = parse_netlist(text).unwrap();
        assert_eq!(doc.component_count(), 1);
        match &doc.statements[1] {
            Statement::Component {
                body: ComponentBody::Literal { s, l, h },
                ..
            } => {
                assert_eq!(s.as_ref().unwrap().len(), 2);
                assert_eq!(l.as_ref().unwrap().len(), 2);
                assert!(h.is_some());
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }

    #[test]
    fn expressions_parse_with_precedence_and_adjoint() {
        let text = "component G { H = a(c1)'*a(c1) + 2.0*n(c1) - (1+2i)*id(c1) }";
        let doc = parse_netlist(text).unwrap();
        match &doc.statements[0] {
            Statement::Component {
                body: ComponentBody::Literal { h: Some(h), .. },
                ..
            } => {
                // top node is the subtraction
                assert!(matches!(h.kind, ExprKind::Sub(_, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn run_block_and_state() {
        let text = "\
state coherent(c1, 0.8, -0.25)
run { dt = 0.001 T = 5 seed = 7 obs = a(c1) obs = n(c1) }
";
        let doc = parse_netlist(text).unwrap();
        assert_eq!(doc.statements.len(), 2);
        match &doc.statements[1] {
            Statement::Run { entries } => {
                assert_eq!(entries.len(), 5);
                assert_eq!(entries[0].0.text, "dt");
                assert_eq!(entries[3].0.text, "obs");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_netlist("space c1 fock\n").unwrap_err();
        assert_eq!(err[0].line, 1);
        assert!(err[0].message.contains("dimension"));

        let err = parse_netlist("connect A B\n").unwrap_err();
        assert_eq!(err[0].line, 1);
        assert!(err[0].message.contains("->"));

        let err = parse_netlist("bogus stuff\n").unwrap_err();
        assert!(err[0].message.contains("unknown statement"));
    }

    #[test]
    fn recovery_reports_multiple_errors() {
        let err = parse_netlist("bogus one\nspace c1 fock 3\nbogus two\n").unwrap_err();
        assert_eq!(err.len(), 2);
        assert_eq!(err[0].line, 1);
        assert_eq!(err[1].line, 3);
    }

    #[test]
    fn couple_statement_parses() {
        let doc = parse_netlist("couple M = a(c1) N = adag(c1)\n").unwrap();
        assert!(matches!(doc.statements[0], Statement::Couple { .. }));
    }
}
