use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(BigRational),
    Str(String),
    Punct(char),
    Newline,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCT: &str = "+-*/^(),;{}=:";

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Scanner {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn number(&mut self) -> BigRational {
        let int = self.digits();
        let mut frac = String::new();
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            frac = self.digits();
        }
        let mut exp: i64 = 0;
        if matches!(self.peek(), Some('e' | 'E')) {
            let signed =
                matches!(self.peek_at(1), Some('+' | '-')) && self.peek_at(2).is_some_and(|c| c.is_ascii_digit());
            if signed || self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                let neg = if signed { self.bump() == Some('-') } else { false };
                let e: i64 = self.digits().parse().unwrap_or(0);
                exp = if neg { -e } else { e };
            }
        }
        let mantissa: BigInt = format!("{int}{frac}").parse().unwrap_or_default();
        let scale = exp - frac.len() as i64;
        let ten = BigRational::from_integer(BigInt::from(10));
        let factor = if scale >= 0 {
            Pow::pow(ten, scale as u32)
        } else {
            BigRational::one() / Pow::pow(ten, (-scale) as u32)
        };
        BigRational::from_integer(mantissa) * factor
    }
}

/// Splits problem-file text into tokens with 1-based line and column
/// positions. `#` starts a comment; a trailing `\` joins the next line.
pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut s = Scanner {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = s.peek() {
        let (line, column) = (s.line, s.column);
        match c {
            '\n' => {
                s.bump();
                out.push(Token {
                    tok: Tok::Newline,
                    line,
                    column,
                });
            }
            c if c.is_whitespace() => {
                s.bump();
            }
            '#' => {
                while s.peek().is_some_and(|c| c != '\n') {
                    s.bump();
                }
            }
            '\\' => {
                s.bump();
                loop {
                    match s.peek() {
                        Some('\n') => {
                            s.bump();
                            break;
                        }
                        Some('#') => {
                            while s.peek().is_some_and(|c| c != '\n') {
                                s.bump();
                            }
                        }
                        Some(c) if c.is_whitespace() => {
                            s.bump();
                        }
                        None => break,
                        Some(_) => return Err(s.error(s.line, s.column, "line continuation must end the line")),
                    }
                }
            }
            '"' => {
                s.bump();
                let mut body = String::new();
                loop {
                    match s.bump() {
                        Some('"') => break,
                        Some('\n') | None => return Err(s.error(line, column, "unterminated string")),
                        Some(c) => body.push(c),
                    }
                }
                out.push(Token {
                    tok: Tok::Str(body),
                    line,
                    column,
                });
            }
            c if c.is_ascii_digit() || (c == '.' && s.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                let n = s.number();
                out.push(Token {
                    tok: Tok::Number(n),
                    line,
                    column,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(c) = s.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
                    name.push(c);
                    s.bump();
                }
                out.push(Token {
                    tok: Tok::Ident(name),
                    line,
                    column,
                });
            }
            c if PUNCT.contains(c) => {
                s.bump();
                out.push(Token {
                    tok: Tok::Punct(c),
                    line,
                    column,
                });
            }
            c => return Err(s.error(line, column, format!("unexpected character '{c}'"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line: s.line,
        column: s.column,
    });
    Ok(out)
}
