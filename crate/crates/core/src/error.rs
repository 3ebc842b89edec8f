use thiserror::Error;

use crate::ir::Span;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {span}: expected {expected}, found {found}")]
    Syntax { span: Span, expected: String, found: String },
    #[error("invalid program: {}", .0.join("; "))]
    Validation(Vec<String>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{n} qubits exceeds the simulator capacity of {max}")]
    Capacity { n: usize, max: usize },
    #[error("qubit index {index} out of range for {n} qubits")]
    Index { index: usize, n: usize },
    #[error("runtime type error: {0}")]
    RuntimeType(String),
    #[error("nontermination: {0}")]
    Nontermination(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("negated measurement at site {0} has no satisfying outcome")]
    InfeasibleNegation(usize),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver failed: {0}")]
    Failed(String),
    #[error("cannot parse solver model at line {line}: {text}")]
    Parse { line: usize, text: String },
    #[error("solver model is degenerate (norm {0:e})")]
    DegenerateModel(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Top-level error for end-to-end operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
