//! The `.rom` text format.
//!
//! A file is a sequence of `;`-terminated statements:
//!
//! ```text
//! # the liar
//! machine L = oracle(L, 1/2, ret 1, ret 0);
//! query L at 1/2;
//! assign L at 1/2 = 1/2;
//! ```
//!
//! Machine bodies use `ret 0`, `ret 1`, `ret "label"`, `flip(p, heads,
//! tails)`, `oracle(NAME, p, on_zero, on_one)` and `call(NAME, on_zero,
//! on_one, on_other)`. Further statements declare world models (`world W0,
//! W1;`), utilities (`utility "$20" = 1;`), multi-agent games (`agentgame`
//! blocks) and normal-form games (`game m=3;` followed by `payoff`
//! lines). Keywords are contextual, so any of them can also name a machine.

mod lexer;
mod parser;
mod print;

use std::fmt;

pub use print::ToSource;

use crate::cdt::{MultiAgentSpec, UtilityTable, WorldModel};
use crate::game::{MixedProfile, NormalFormGame};
use crate::machine::{MachineRegistry, OracleAssignment, QuerySet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A message tied to a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
            severity: Severity::Error,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    fn single(d: Diagnostic) -> Self {
        Self {
            diagnostics: vec![d],
        }
    }

    /// The first diagnostic.
    pub fn first(&self) -> &Diagnostic {
        &self.diagnostics[0]
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Everything a `.rom` file can declare.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub registry: MachineRegistry,
    pub queries: QuerySet,
    pub assignment: OracleAssignment,
    pub world: Option<WorldModel>,
    pub utilities: UtilityTable,
    pub agent_games: Vec<MultiAgentSpec>,
    pub games: Vec<NormalFormGame>,
}

pub fn parse_document(source: &str) -> Result<Document, ParseError> {
    parser::parse(source)
}

/// Rejects invalid UTF-8 with a positioned diagnostic.
pub fn parse_document_bytes(source: &[u8]) -> Result<Document, ParseError> {
    match std::str::from_utf8(source) {
        Ok(s) => parse_document(s),
        Err(e) => {
            let valid = &source[..e.valid_up_to()];
            let line = 1 + valid.iter().filter(|&&b| b == b'\n').count();
            let line_start = valid
                .iter()
                .rposition(|&b| b == b'\n')
                .map_or(0, |p| p + 1);
            let column = 1 + String::from_utf8_lossy(&valid[line_start..]).chars().count();
            Err(ParseError::single(Diagnostic::error(
                line,
                column,
                "invalid UTF-8",
            )))
        }
    }
}

pub fn parse_registry(source: &str) -> Result<MachineRegistry, ParseError> {
    Ok(parse_document(source)?.registry)
}

pub fn parse_queryset(source: &str) -> Result<QuerySet, ParseError> {
    Ok(parse_document(source)?.queries)
}

/// The `assign` statements, in declaration order.
pub fn parse_assignment(source: &str) -> Result<OracleAssignment, ParseError> {
    Ok(parse_document(source)?.assignment)
}

pub fn parse_game(source: &str) -> Result<NormalFormGame, ParseError> {
    let doc = parse_document(source)?;
    match doc.games.len() {
        1 => Ok(doc.games.into_iter().next().unwrap()),
        k => Err(ParseError::single(Diagnostic::error(
            1,
            1,
            format!("expected exactly one game, found {k}"),
        ))),
    }
}

/// Space-separated probabilities, each a rational or a decimal.
pub fn parse_profile(source: &str) -> Result<MixedProfile, ParseError> {
    parser::parse_profile(source)
}
