//! Netlist document model and diagnostics.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A problem tied to a source position (1-based line and column).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, line: usize, column: usize) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            line,
            column,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

/// Source position carried by names and expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

/// Operator/scalar expression tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Number(f64),
    /// Imaginary literal `2.5i`.
    Imag(f64),
    /// Identifier: `i`, the grid variable `x`, or a space name in call
    /// argument position.
    Ident(String),
    Call { name: String, args: Vec<Expr> },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Postfix adjoint `expr'`.
    Adjoint(Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Fock,
    Dim,
}

/// Component definition body.
#[derive(Clone, Debug, PartialEq)]
pub enum ComponentBody {
    /// `component NAME = builtin(args...)`
    Builtin { builtin: Name, args: Vec<Expr> },
    /// `component NAME { S=[[..]] L=[..] H=expr }`
    Literal {
        s: Option<Vec<Vec<Expr>>>,
        l: Option<Vec<Expr>>,
        h: Option<Expr>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateDecl {
    Vacuum,
    Fock { space: Name, level: usize },
    Coherent { space: Name, re: f64, im: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Space {
        name: Name,
        kind: SpaceKind,
        dim: usize,
    },
    Component {
        name: Name,
        body: ComponentBody,
    },
    /// `connect A -> B` or `connect A -> B + C` (the `+`-list denotes the
    /// concatenation of the named components, in order).
    Connect {
        sources: Vec<Name>,
        targets: Vec<Name>,
    },
    Couple {
        m: Expr,
        n: Expr,
    },
    State {
        decl: StateDecl,
        span: Span,
    },
    Run {
        entries: Vec<(Name, Expr)>,
    },
}

/// Parsed netlist.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetlistDocument {
    pub statements: Vec<Statement>,
}

impl NetlistDocument {
    pub fn component_count(&self) -> usize {
        self.statements
            .iter()
            .filter(|s| matches!(s, Statement::Component { .. }))
            .count()
    }

    pub fn connection_count(&self) -> usize {
        self.statements
            .iter()
            .filter(|s| matches!(s, Statement::Connect { .. }))
            .count()
    }

    pub fn space_count(&self) -> usize {
        self.statements
            .iter()
            .filter(|s| matches!(s, Statement::Space { .. }))
            .count()
    }
}
