//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { "*" unary } ;
//! unary   = "-" unary | power ;
//! power   = atom { "^" integer } ;
//! atom    = integer | variable | "(" expr ")" ;
//! variable = "x" digit { digit } ;      (* x1 .. x{n} *)
//! ```
//!
//! Binary operators are left-associative and `^` binds tightest, so
//! `-x1^2` is `-(x1^2)` and `x1^2^3` is `(x1^2)^3`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::MultiPoly;
use crate::error::{Error, Result};

/// Largest accepted exponent literal.
const MAX_EXPONENT: u32 = 4096;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Var(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(text: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = |t| Ok((t, start));
        match c {
            b'+' => {
                self.pos += 1;
                single(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                single(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                single(Tok::Star)
            }
            b'^' => {
                self.pos += 1;
                single(Tok::Caret)
            }
            b'(' => {
                self.pos += 1;
                single(Tok::LParen)
            }
            b')' => {
                self.pos += 1;
                single(Tok::RParen)
            }
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok((Tok::Int(digits.parse().unwrap()), start))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok((Tok::Var(name.to_string()), start))
            }
            _ => Err(Error::Syntax {
                position: start,
                message: format!("unexpected character `{}`", c as char),
            }),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    n_vars: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn pos(&self) -> usize {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if t != Tok::End {
            self.idx += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<MultiPoly> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<MultiPoly> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-&self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<MultiPoly> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let at = self.pos();
            match self.bump() {
                Tok::Int(k) => {
                    let k = k
                        .to_u32()
                        .filter(|&k| k <= MAX_EXPONENT)
                        .ok_or_else(|| Error::Syntax {
                            position: at,
                            message: format!("exponent larger than {MAX_EXPONENT}"),
                        })?;
                    base = base.pow(k);
                }
                Tok::Minus => return Err(Error::NegativeExponent { position: at }),
                other => {
                    return Err(Error::Syntax {
                        position: at,
                        message: format!("expected a non-negative integer exponent, found {}", describe(&other)),
                    })
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MultiPoly> {
        let at = self.pos();
        match self.bump() {
            Tok::Int(v) => Ok(MultiPoly::constant(self.n_vars, v)),
            Tok::Var(name) => {
                let index = parse_var(&name, self.n_vars).ok_or(Error::UnknownVariable {
                    name,
                    position: at,
                })?;
                Ok(MultiPoly::var(self.n_vars, index))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.pos();
                match self.bump() {
                    Tok::RParen => Ok(inner),
                    other => Err(Error::Syntax {
                        position: close,
                        message: format!("expected `)`, found {}", describe(&other)),
                    }),
                }
            }
            other => Err(Error::Syntax {
                position: at,
                message: format!("expected a number, variable or `(`, found {}", describe(&other)),
            }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(v) => format!("`{v}`"),
        Tok::Var(v) => format!("`{v}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

fn parse_var(name: &str, n_vars: usize) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    let i: usize = digits.parse().ok()?;
    (1..=n_vars).contains(&i).then(|| i - 1)
}

/// Parses `text` as a polynomial in `x1..x{n_vars}`.
///
/// Algebraically equal inputs produce identical term maps. The zero
/// polynomial is rejected.
pub fn parse_polynomial(text: &str, n_vars: usize) -> Result<MultiPoly> {
    if n_vars == 0 {
        return Err(Error::InvalidArgument("n_vars must be positive".into()));
    }
    let toks = Lexer::tokenize(text)?;
    let mut parser = Parser {
        toks,
        idx: 0,
        n_vars,
    };
    let poly = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(Error::Syntax {
            position: parser.pos(),
            message: format!("unexpected {}", describe(parser.peek())),
        });
    }
    if poly.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    Ok(poly)
}
