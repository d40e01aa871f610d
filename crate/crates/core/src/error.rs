use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: expected {}", expected.join(" | "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("non-rational constant: {0}")]
    NonRationalConstant(String),
    #[error("division by zero")]
    ZeroDivision,
    #[error("operator is not small: {0}")]
    NotSmall(String),
    #[error("family is not summable: {0}")]
    NotSummable(String),
}

impl Error {
    /// Process exit status used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. } => 1,
            Error::Domain(_) | Error::NotSmall(_) | Error::NotSummable(_) => 2,
            Error::BudgetExhausted(_) => 3,
            Error::NonRationalConstant(_) => 4,
            Error::ZeroDivision => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::Domain(_) => "domain",
            Error::BudgetExhausted(_) => "budget",
            Error::NonRationalConstant(_) => "constant",
            Error::ZeroDivision => "division",
            Error::NotSmall(_) => "not-small",
            Error::NotSummable(_) => "not-summable",
        }
    }

    pub(crate) fn budget(what: impl Into<String>) -> Self {
        Error::BudgetExhausted(what.into())
    }

    pub(crate) fn domain(what: impl Into<String>) -> Self {
        Error::Domain(what.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
