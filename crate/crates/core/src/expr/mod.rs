//! Symbolic expressions: trees, the canonical normal form, jets and
//! numerical evaluation.

mod eval;
mod jet;
mod poly;
mod symbol;
mod tree;

pub use eval::{relative_difference, EvalMode, EvaluationPoint, Number};
pub use jet::{chain_derivative, lift_dependent, JetSpace};
pub use poly::{Atom, Exponent, Monomial, Poly};
pub use symbol::{JetCoordinate, Symbol, Var};
pub use tree::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("jet coordinate {coordinate} exceeds the maximum order {max_order}")]
    JetOrderOverflow { coordinate: String, max_order: usize },
    #[error("{0} does not enter polynomially")]
    NotPolynomial(Var),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no value bound for {0}")]
    Unbound(Var),
}
