use thiserror::Error;

use crate::term::{Schema, Symbol};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("symbol {symbol} is not part of the {schema} schema")]
    SchemaViolation { symbol: Symbol, schema: Schema },

    #[error("schema violation: {0}")]
    Malformed(String),

    #[error("cannot combine {expected} and {found} terms in one list")]
    MixedSchema { expected: Schema, found: Schema },

    #[error("{0} cannot be differentiated")]
    TerminalSymbol(Symbol),

    #[error("unsupported symbol: {0}")]
    UnsupportedSymbol(String),

    #[error("term does not fit the fixed {schema} column layout: {reason}")]
    FixedLayout { schema: Schema, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("grouping failed: {0}")]
    Grouping(String),

    #[error("sample point ({t}, {x}) is singular for the weight")]
    Singularity { t: String, x: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
