//! A SQL dialect for search problems: `CREATE SPECIFICATION` blocks with
//! guessed tables, an optional objective, CHECK constraints and RETURN
//! tables.

pub mod ast;
mod eval;
mod lexer;
mod lower;
mod npalg;
mod parser;
mod print;

use thiserror::Error;

pub use eval::{compare, Table};
pub use lower::{lower_spec, run_query, Component, SearchProblem};
pub use npalg::{lower_to_npalg, NpAlgLowering};
pub use parser::{parse_expr, parse_query, parse_script, parse_spec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsqlError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: a specification needs at least one CHECK")]
    NoChecks { line: usize, col: usize },
    #[error("{line}:{col}: unknown search-space declaration, found {found}")]
    UnknownShape {
        line: usize,
        col: usize,
        found: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("table `{0}` is defined twice")]
    DuplicateTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("ambiguous column `{0}`")]
    AmbiguousColumn(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
    #[error("not a scalar: {0}")]
    NotScalar(String),
    #[error("UNION of {left} and {right} columns")]
    UnionWidth { left: usize, right: usize },
    #[error("guessed table `{table}` names {names} columns but selects {width}")]
    AliasCount {
        table: String,
        names: usize,
        width: usize,
    },
    #[error("total function in `{0}` has an empty range")]
    EmptyRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("specification has no objective")]
    NoObjective,
    #[error("state does not fit the search space")]
    BadState,
}

pub type Result<T> = std::result::Result<T, ConsqlError>;
