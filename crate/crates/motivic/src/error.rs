//! Crate-wide error type. Every validating constructor returns one of these
//! variants rather than panicking; messages carry the offending labels so CLI
//! diagnostics can point at the universe-file entry that caused the problem.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("dimension mismatch: {context} (got {got}, expected {expected})")]
    DimensionMismatch {
        context: String,
        got: u32,
        expected: u32,
    },

    #[error("contradiction: `{a}` and `{b}` are certified distinct (rule {rule}) but were declared birational")]
    Contradiction { a: String, b: String, rule: char },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("letters do not chain at position {position}: `{left}` then `{right}`")]
    ChainMismatch {
        position: usize,
        left: String,
        right: String,
    },

    #[error("missing declaration: {0}")]
    MissingDeclaration(String),

    #[error("link condition ({condition}) failed for `{link}`: {reason}")]
    LinkCondition {
        condition: &'static str,
        link: String,
        reason: String,
    },

    #[error("point-count budget exceeded: {needed} points to enumerate, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
}

impl Error {
    pub fn unknown(kind: &'static str, name: impl Into<String>) -> Self {
        Error::Unknown {
            kind,
            name: name.into(),
        }
    }

    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
