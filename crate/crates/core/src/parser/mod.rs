//! The problem-file language: expressions, derivative notation and the
//! statements that make up a problem.

mod expr;
mod lexer;
mod problem;

pub use expr::{Kind, Scope};
pub use problem::{
    parse_problem, AnsatzDegrees, CommutatorSpec, FieldSpec, InfinitesimalSpec, ProblemSpec, Settings, SolutionBody,
    SolutionSpec, StageSpec, SubstitutionSpec,
};

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown symbol '{name}' at line {line}, column {column}")]
    UnknownSymbol { line: usize, column: usize, name: String },
    #[error("unsupported function '{name}' at line {line}, column {column}")]
    UnsupportedFunction { line: usize, column: usize, name: String },
    #[error("invalid problem: {0}")]
    Validation(String),
}

impl ParseError {
    /// Line and column of the diagnosis, when it has one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            ParseError::Syntax { line, column, .. }
            | ParseError::UnknownSymbol { line, column, .. }
            | ParseError::UnsupportedFunction { line, column, .. } => Some((*line, *column)),
            ParseError::Validation(_) => None,
        }
    }
}

/// Parses a standalone expression. Every identifier is accepted as a
/// symbol, and `D(u, ...)` as a jet coordinate of `u`.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    parse_expression_in(text, &Scope::open())
}

/// Parses a standalone expression against an explicit scope.
pub fn parse_expression_in(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let toks = lexer::lex(text)?;
    let mut cur = expr::Cursor::new(&toks);
    cur.skip_newlines = true;
    let e = expr::parse_expr(&mut cur, scope)?;
    let t = cur.next();
    if t.tok != lexer::Tok::Eof {
        return Err(expr::syntax(
            t,
            format!("unexpected {} after expression", expr::describe(&t.tok)),
        ));
    }
    Ok(e)
}
