//! Lexing, parsing and static checking of SimpleDB source.

pub mod ast;
pub mod check;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::*;
pub use check::{check, CheckedModel, Schema, TableSchema, VarType};
pub use lexer::{tokenize, LexError, Pos, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use pretty::pretty_print;

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            pos,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            pos,
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    /// `file:line:col: message`, with a `warning: ` prefix on warnings.
    pub fn render(&self, file: &str) -> String {
        match self.severity {
            Severity::Error => format!("{file}:{}: {}", self.pos, self.message),
            Severity::Warning => format!("{file}:{}: warning: {}", self.pos, self.message),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl From<LexError> for Diagnostic {
    fn from(e: LexError) -> Self {
        Diagnostic::error(e.pos, e.message)
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        Diagnostic::error(
            e.pos,
            format!("expected {}, found {}", e.expected.join(" or "), e.found),
        )
    }
}

/// Tokenize and parse.
pub fn parse_source(source: &str) -> Result<ModelDecl, Diagnostic> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

/// Tokenize, parse and check.
pub fn load_model(source: &str) -> Result<CheckedModel, Vec<Diagnostic>> {
    let model = parse_source(source).map_err(|d| vec![d])?;
    check(model)
}
