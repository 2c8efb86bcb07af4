use crate::expr::ExprError;
use crate::parser::ParseError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    /// The problem is well formed but lacks something a command needs.
    #[error("{0}")]
    Input(String),
    #[error("leading derivative {0} does not occur in the equation")]
    LeadingAbsent(String),
    #[error("equation is not linear in the leading derivative {0}")]
    NotLinearInLeading(String),
    #[error("basis is linearly dependent")]
    DependentBasis,
    #[error("change of variables is rank deficient: {0}")]
    RankDeficient(String),
    #[error("no sample point found: {0}")]
    EmptySampleRegion(String),
    #[error("comparison target vanishes at most sample points")]
    DegenerateSample,
    #[error("generator {0} has no closed-form flow")]
    UnsupportedGenerator(String),
    #[error("function '{0}' is not supported")]
    UnsupportedFunction(String),
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for engine failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Input(_) | Error::UnsupportedFunction(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
