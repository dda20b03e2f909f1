use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("search space too large: about {estimate:.3e} solutions, limit is {limit}")]
    SearchSpaceTooLarge { estimate: f64, limit: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
