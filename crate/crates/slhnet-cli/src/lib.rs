//! Netlist front end for `slhnet-core`.
//!
//! A netlist declares spaces, components (builtin or literal `(S, L, H)`),
//! field connections, direct couplings, an initial state, and run
//! parameters; the commands reduce the network to a single triple, extract
//! Heisenberg coefficients, integrate the master equation, or run the
//! quantum filter. See the repository README for the language reference.

pub mod ast;
pub mod commands;
pub mod eval;
pub mod json;
pub mod lexer;
pub mod parser;

pub use ast::{Diagnostic, NetlistDocument, Severity};
pub use commands::{
    cmd_check, cmd_filter, cmd_heisenberg, cmd_reduce, cmd_simulate, CliError, CommandOptions,
    OutputFormat,
};
pub use eval::{compile, CompiledNetlist};
pub use json::{triple_from_json, triple_to_json, TripleJson};
pub use parser::{parse_expression, parse_netlist};
