//! Tokenizer for the netlist language.
//!
//! Line-oriented: newlines terminate statements, except inside parentheses,
//! brackets or braces where they are suppressed so matrices and `run {}`
//! blocks can span lines. `#` starts a comment running to the end of the
//! line.

use crate::ast::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    /// `2.5i` — number immediately followed by `i`.
    Imag(f64),
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Equals,
    Plus,
    Minus,
    Star,
    Quote,
    Newline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut tokens = Vec::new();
    let mut diagnostics = Vec::new();
    let mut depth = 0usize;
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! push {
        ($kind:expr, $line:expr, $col:expr) => {
            tokens.push(Token {
                kind: $kind,
                span: Span {
                    line: $line,
                    column: $col,
                },
            })
        };
    }

    while let Some(&ch) = chars.peek() {
        let (tline, tcol) = (line, col);
        match ch {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                if depth == 0 {
                    push!(TokenKind::Newline, tline, tcol);
                }
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                depth += 1;
                push!(TokenKind::LParen, tline, tcol);
            }
            ')' => {
                chars.next();
                col += 1;
                depth = depth.saturating_sub(1);
                push!(TokenKind::RParen, tline, tcol);
            }
            '[' => {
                chars.next();
                col += 1;
                depth += 1;
                push!(TokenKind::LBracket, tline, tcol);
            }
            ']' => {
                chars.next();
                col += 1;
                depth = depth.saturating_sub(1);
                push!(TokenKind::RBracket, tline, tcol);
            }
            '{' => {
                chars.next();
                col += 1;
                depth += 1;
                push!(TokenKind::LBrace, tline, tcol);
            }
            '}' => {
                chars.next();
                col += 1;
                depth = depth.saturating_sub(1);
                push!(TokenKind::RBrace, tline, tcol);
            }
            ',' => {
                chars.next();
                col += 1;
                push!(TokenKind::Comma, tline, tcol);
            }
            '=' => {
                chars.next();
                col += 1;
                push!(TokenKind::Equals, tline, tcol);
            }
            '+' => {
                chars.next();
                col += 1;
                push!(TokenKind::Plus, tline, tcol);
            }
            '*' => {
                chars.next();
                col += 1;
                push!(TokenKind::Star, tline, tcol);
            }
            '\'' => {
                chars.next();
                col += 1;
                push!(TokenKind::Quote, tline, tcol);
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::Arrow, tline, tcol);
                } else {
                    push!(TokenKind::Minus, tline, tcol);
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut text = String::new();
                let mut seen_digit = false;
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        seen_digit = true;
                        text.push(c);
                        chars.next();
                        col += 1;
                    } else if c == '.' && !text.contains('.') && !text.contains('e') {
                        text.push(c);
                        chars.next();
                        col += 1;
                    } else if (c == 'e' || c == 'E')
                        && seen_digit
                        && !text.contains('e')
                        && !text.contains('E')
                    {
                        text.push('e');
                        chars.next();
                        col += 1;
                        if let Some(&sign) = chars.peek() {
                            if sign == '+' || sign == '-' {
                                text.push(sign);
                                chars.next();
                                col += 1;
                            }
                        }
                    } else {
                        break;
                    }
                }
                match text.parse::<f64>() {
                    Ok(value) => {
                        // an immediately following lone `i` makes it imaginary
                        if chars.peek() == Some(&'i') {
                            let mut lookahead = chars.clone();
                            lookahead.next();
                            let next_is_word = lookahead
                                .peek()
                                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_');
                            if !next_is_word {
                                chars.next();
                                col += 1;
                                push!(TokenKind::Imag(value), tline, tcol);
                                continue;
                            }
                        }
                        push!(TokenKind::Number(value), tline, tcol);
                    }
                    Err(_) => {
                        diagnostics.push(Diagnostic::error(
                            format!("malformed number `{text}`"),
                            tline,
                            tcol,
                        ));
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        text.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(TokenKind::Ident(text), tline, tcol);
            }
            other => {
                diagnostics.push(Diagnostic::error(
                    format!("unexpected character `{}`", other.escape_default()),
                    tline,
                    tcol,
                ));
                chars.next();
                col += 1;
            }
        }
    }
    if diagnostics.is_empty() {
        Ok(tokens)
    } else {
        Err(diagnostics)
    }
}
