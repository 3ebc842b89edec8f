//! Program model and the `.qcp` surface language.

mod ast;
mod lexer;
mod parser;
mod unparse;
mod validate;

pub use ast::*;
pub use parser::{parse_program, parse_unvalidated};
pub use unparse::{cond_text, expr_text, unparse};
pub use validate::{validate_program, validate_with_depth, ValidationReport, Violation, DEFAULT_MAX_DEPTH};

/// One site per conditional, in pre-order.
pub fn list_branches(p: &Program) -> &[BranchSite] {
    &p.branch_sites
}
