//! A small expression language for polynomials, Puiseux polynomials and
//! right-hand sides.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | number 'i' | 'i' | 'z' | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Complex constants are written `(a+bi)`; `z^(-3/2)` is a fractional power.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                line: l0,
                column: c0,
                message: format!("malformed number '{text}'"),
            })?;
            col += i - start;
            // imaginary suffix, but not the start of an identifier
            if i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len() && chars[i + 1].is_ascii_alphanumeric())
            {
                i += 1;
                col += 1;
                out.push(Token { tok: Tok::Imag(v), line: l0, col: c0 });
            } else {
                out.push(Token { tok: Tok::Num(v), line: l0, col: c0 });
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(text), line: l0, col: c0 });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(Error::Parse {
                    line: l0,
                    column: c0,
                    message: format!("unexpected character '{c}'"),
                })
            }
        };
        out.push(Token { tok, line: l0, col: c0 });
        i += 1;
        col += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Parse { line, column, message: msg.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(Complex64::new(v, 0.0)))
            }
            Tok::Imag(v) => {
                self.pos += 1;
                Ok(Expr::Num(Complex64::new(0.0, v)))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "z" => Ok(Expr::Var),
                    "i" => Ok(Expr::Num(Complex64::i())),
                    "exp" | "log" => {
                        if self.peek() != Some(&Tok::LParen) {
                            return self.err(format!("expected '(' after {name}"));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        if self.peek() != Some(&Tok::RParen) {
                            return self.err("expected ')'");
                        }
                        self.pos += 1;
                        Ok(Expr::Call(name, Box::new(arg)))
                    }
                    _ => {
                        self.pos -= 1;
                        self.err(format!("unknown identifier '{name}'"))
                    }
                }
            }
            Tok::Op(c) => self.err(format!("unexpected operator '{c}'")),
            Tok::RParen => self.err("unexpected ')'"),
        }
    }
}

/// Parses `src`; errors carry the 1-based line and column of the offending token.
pub fn parse(src: &str) -> Result<Expr> {
    let toks = lex(src)?;
    let end = match src.lines().enumerate().last() {
        Some((n, l)) => (n + 1, l.chars().count() + 1),
        None => (1, 1),
    };
    let mut p = Parser { toks, pos: 0, end };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl Expr {
    /// Value of a variable-free expression.
    pub fn constant(&self) -> Option<Complex64> {
        Some(match self {
            Expr::Num(c) => *c,
            Expr::Var => return None,
            Expr::Neg(a) => -a.constant()?,
            Expr::Add(a, b) => a.constant()? + b.constant()?,
            Expr::Sub(a, b) => a.constant()? - b.constant()?,
            Expr::Mul(a, b) => a.constant()? * b.constant()?,
            Expr::Div(a, b) => a.constant()? / b.constant()?,
            Expr::Pow(a, b) => {
                let (a, b) = (a.constant()?, b.constant()?);
                if b.im == 0.0 && b.re.fract() == 0.0 {
                    a.powi(b.re as i32)
                } else {
                    a.powc(b)
                }
            }
            Expr::Call(name, a) => {
                let a = a.constant()?;
                match name.as_str() {
                    "exp" => a.exp(),
                    _ => a.ln(),
                }
            }
        })
    }
}

/// Recovers `x = num/den` with a small denominator.
pub fn rationalize(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    for den in 1..=720i64 {
        let n = x * den as f64;
        if (n - n.round()).abs() < 1e-9 * den as f64 {
            return Some((n.round() as i64, den));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_constant() {
        let e = parse("(0+1i)").unwrap();
        assert_eq!(e.constant(), Some(Complex64::new(0.0, 1.0)));
        let e = parse("2.5e-1 - 3i").unwrap();
        assert_eq!(e.constant(), Some(Complex64::new(0.25, -3.0)));
    }

    #[test]
    fn error_position() {
        match parse("1 + * z") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("{other:?}"),
        }
        match parse("z +\n  q") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse("(z").is_err());
        assert!(parse("z)").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(rationalize(-1.5), Some((-3, 2)));
        assert_eq!(rationalize(2.0 / 3.0), Some((2, 3)));
        assert_eq!(rationalize(std::f64::consts::PI), None);
    }
}
