use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::lexer::{Tok, Token};
use super::ParseError;
use crate::expr::{Exponent, Expr, JetCoordinate, Symbol};

/// What a name means inside the expression being parsed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Independent variable, constant, parameter or similarity variable.
    Variable,
    /// Dependent variable; a bare occurrence is the order-zero jet.
    Dependent,
    /// Name of a vector field, used in commutator tables.
    Field,
}

/// Names visible to an expression. An open scope accepts any identifier
/// as a plain symbol.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    names: BTreeMap<String, Kind>,
    open: bool,
}

impl Scope {
    pub fn open() -> Self {
        Scope {
            names: BTreeMap::new(),
            open: true,
        }
    }

    pub fn closed() -> Self {
        Scope::default()
    }

    pub fn declare(&mut self, name: &str, kind: Kind) {
        self.names.insert(name.to_string(), kind);
    }

    pub fn with(mut self, names: &[Symbol], kind: Kind) -> Self {
        for n in names {
            self.declare(n.name(), kind);
        }
        self
    }

    pub fn kind(&self, name: &str) -> Option<Kind> {
        self.names.get(name).copied().or(self.open.then_some(Kind::Variable))
    }
}

pub struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    /// Newlines are insignificant inside braces.
    pub skip_newlines: bool,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Cursor {
            toks,
            pos: 0,
            skip_newlines: false,
        }
    }

    fn settle(&mut self) {
        if self.skip_newlines {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
    }

    pub fn peek(&mut self) -> &'a Token {
        self.settle();
        &self.toks[self.pos]
    }

    pub fn next(&mut self) -> &'a Token {
        self.settle();
        let t = &self.toks[self.pos];
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    pub fn at_punct(&mut self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.at_punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(())
        } else {
            Err(syntax(t, format!("expected '{c}', found {}", describe(&t.tok))))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(&'a Token, &'a str), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(name) => Ok((t, name.as_str())),
            other => Err(syntax(t, format!("expected a name, found {}", describe(other)))),
        }
    }
}

pub fn syntax(t: &Token, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: t.line,
        column: t.column,
        message: message.into(),
    }
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Punct(c) => format!("'{c}'"),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

const ADD_BP: u8 = 1;
const MUL_BP: u8 = 3;
const UNARY_BP: u8 = 5;
const POW_BP: u8 = 7;

fn infix_bp(t: &Tok) -> Option<(u8, u8)> {
    match t {
        Tok::Punct('+' | '-') => Some((ADD_BP, ADD_BP + 1)),
        Tok::Punct('*' | '/') => Some((MUL_BP, MUL_BP + 1)),
        Tok::Punct('^') => Some((POW_BP, POW_BP - 1)),
        _ => None,
    }
}

/// Parses one expression; stops before the first token that cannot
/// continue it.
pub fn parse_expr(cur: &mut Cursor<'_>, scope: &Scope) -> Result<Expr, ParseError> {
    let e = expr_bp(cur, scope, 0)?;
    let t = cur.peek();
    if matches!(t.tok, Tok::Ident(_) | Tok::Number(_)) || t.tok == Tok::Punct('(') {
        return Err(syntax(t, "implicit multiplication is not supported; write '*'"));
    }
    Ok(e)
}

fn expr_bp(cur: &mut Cursor<'_>, scope: &Scope, min_bp: u8) -> Result<Expr, ParseError> {
    let mut lhs = prefix(cur, scope)?;
    loop {
        let t = cur.peek();
        let Some((l_bp, r_bp)) = infix_bp(&t.tok) else {
            if matches!(t.tok, Tok::Ident(_) | Tok::Number(_)) || t.tok == Tok::Punct('(') {
                return Err(syntax(t, "implicit multiplication is not supported; write '*'"));
            }
            break;
        };
        if l_bp < min_bp {
            break;
        }
        cur.next();
        let op = t.tok.clone();
        if op == Tok::Punct('^') {
            let at = cur.peek();
            let rhs = expr_bp(cur, scope, r_bp)?;
            let q = constant_exponent(&rhs).ok_or_else(|| syntax(at, "exponent must be a rational constant"))?;
            lhs = lhs.pow(q);
            continue;
        }
        let rhs = expr_bp(cur, scope, r_bp)?;
        lhs = match op {
            Tok::Punct('+') => lhs + rhs,
            Tok::Punct('-') => lhs - rhs,
            Tok::Punct('*') => lhs * rhs,
            _ => lhs / rhs,
        };
    }
    Ok(lhs)
}

fn constant_exponent(e: &Expr) -> Option<Exponent> {
    let c = e.to_poly().as_constant()?;
    let n = c.numer().to_i64()?;
    let d = c.denom().to_i64()?;
    Some(Exponent::new(n, d))
}

fn prefix(cur: &mut Cursor<'_>, scope: &Scope) -> Result<Expr, ParseError> {
    let t = cur.next();
    match &t.tok {
        Tok::Number(n) => Ok(Expr::Rational(n.clone())),
        Tok::Punct('-') => Ok(-expr_bp(cur, scope, UNARY_BP)?),
        Tok::Punct('+') => expr_bp(cur, scope, UNARY_BP),
        Tok::Punct('(') => {
            let e = expr_bp(cur, scope, 0)?;
            let close = cur.next();
            if close.tok != Tok::Punct(')') {
                return Err(syntax(close, format!("expected ')', found {}", describe(&close.tok))));
            }
            Ok(e)
        }
        Tok::Ident(name) => {
            if cur.at_punct('(') {
                return call(cur, scope, t, name);
            }
            match scope.kind(name) {
                Some(Kind::Dependent) => Ok(Expr::Jet(JetCoordinate::base(Symbol::new(name)))),
                Some(_) => Ok(Expr::sym(name)),
                None => Err(ParseError::UnknownSymbol {
                    line: t.line,
                    column: t.column,
                    name: name.clone(),
                }),
            }
        }
        other => Err(syntax(t, format!("expected an expression, found {}", describe(other)))),
    }
}

fn call(cur: &mut Cursor<'_>, scope: &Scope, t: &Token, name: &str) -> Result<Expr, ParseError> {
    cur.expect_punct('(')?;
    match name {
        "D" => {
            let (dt, dep) = cur.expect_ident()?;
            match scope.kind(dep) {
                Some(Kind::Dependent) => {}
                _ if scope.open => {}
                Some(_) => return Err(syntax(dt, format!("'{dep}' is not a dependent variable"))),
                None => {
                    return Err(ParseError::UnknownSymbol {
                        line: dt.line,
                        column: dt.column,
                        name: dep.to_string(),
                    })
                }
            }
            let mut index = Vec::new();
            while cur.eat_punct(',') {
                let (vt, v) = cur.expect_ident()?;
                if scope.kind(v) != Some(Kind::Variable) {
                    return Err(ParseError::UnknownSymbol {
                        line: vt.line,
                        column: vt.column,
                        name: v.to_string(),
                    });
                }
                index.push(Symbol::new(v));
            }
            if index.is_empty() {
                return Err(syntax(t, "D needs at least one differentiation variable"));
            }
            cur.expect_punct(')')?;
            Ok(Expr::Jet(JetCoordinate::new(Symbol::new(dep), index)))
        }
        "exp" | "sqrt" => {
            let arg = expr_bp(cur, scope, 0)?;
            cur.expect_punct(')')?;
            Ok(if name == "exp" {
                arg.exp()
            } else {
                arg.pow(Exponent::new(1, 2))
            })
        }
        _ => Err(ParseError::UnsupportedFunction {
            line: t.line,
            column: t.column,
            name: name.to_string(),
        }),
    }
}
