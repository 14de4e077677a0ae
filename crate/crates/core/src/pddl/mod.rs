//! PDDL 2.1 front-end: typed STRIPS with fixed-duration durative actions.

mod ast;
mod ground;
mod parse;
mod sexpr;

pub use ast::*;
pub use ground::ground;
pub use parse::{parse_domain, parse_problem};
pub use sexpr::Pos;

use crate::task::GroundedTask;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax { pos: Pos, expected: String, found: String },
    #[error("unsupported PDDL feature at {pos}: {feature}")]
    Unsupported { feature: String, pos: Pos },
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("type mismatch in {context}: {message}")]
    TypeMismatch { context: String, message: String },
    #[error("invalid definition at {pos}: {message}")]
    Semantic { pos: Pos, message: String },
}

/// Parses and grounds a domain/problem pair.
pub fn load_task(domain_text: &str, problem_text: &str) -> Result<GroundedTask, PddlError> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text)?;
    ground(&domain, &problem)
}
