//! Small arithmetic expressions in the variables `a` (or `alpha`), `x` and `y`.

use crate::interval::RatInterval;
use crate::rat::{self, Rat};
use num::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("unexpected character {0:?} at offset {1}")]
    BadChar(char, usize),
    #[error("bad number {0:?}")]
    BadNumber(String),
    #[error("unknown name {0:?}")]
    UnknownName(String),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token at offset {0}")]
    Unexpected(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    A,
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
    Sign,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rat, f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable values for interval evaluation.
pub struct Env<'a> {
    pub a: &'a RatInterval,
    pub x: &'a RatInterval,
    pub y: &'a RatInterval,
}

impl Expr {
    pub fn num(r: Rat) -> Expr {
        let f = rat::to_f64(&r);
        Expr::Num(r, f)
    }

    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0 };
        let e = p.sum()?;
        match p.toks.get(p.pos) {
            None => Ok(e),
            Some(t) => Err(ExprError::Unexpected(t.at)),
        }
    }

    pub fn eval_f64(&self, a: f64, x: f64, y: f64) -> f64 {
        let ev = |e: &Expr| e.eval_f64(a, x, y);
        match self {
            Expr::Num(_, f) => *f,
            Expr::Var(Var::A) => a,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Neg(e) => -ev(e),
            Expr::Add(l, r) => ev(l) + ev(r),
            Expr::Sub(l, r) => ev(l) - ev(r),
            Expr::Mul(l, r) => ev(l) * ev(r),
            Expr::Div(l, r) => ev(l) / ev(r),
            Expr::Pow(l, r) => ev(l).powf(ev(r)),
            Expr::Call(f, e) => {
                let v = ev(e);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Abs => v.abs(),
                    Func::Sign => {
                        if v == 0.0 {
                            0.0
                        } else {
                            v.signum()
                        }
                    }
                }
            }
        }
    }

    /// Outward enclosure; None where the expression is undefined somewhere on the boxes.
    pub fn eval_iv(&self, env: &Env, bits: u32) -> Option<RatInterval> {
        let ev = |e: &Expr| e.eval_iv(env, bits);
        Some(match self {
            Expr::Num(r, _) => RatInterval::point(r.clone()),
            Expr::Var(Var::A) => env.a.clone(),
            Expr::Var(Var::X) => env.x.clone(),
            Expr::Var(Var::Y) => env.y.clone(),
            Expr::Neg(e) => -&ev(e)?,
            Expr::Add(l, r) => &ev(l)? + &ev(r)?,
            Expr::Sub(l, r) => &ev(l)? - &ev(r)?,
            Expr::Mul(l, r) => &ev(l)? * &ev(r)?,
            Expr::Div(l, r) => ev(l)?.div(&ev(r)?)?,
            Expr::Pow(l, r) => ev(l)?.pow(&ev(r)?, bits)?,
            Expr::Call(f, e) => {
                let v = ev(e)?;
                match f {
                    Func::Sqrt => v.sqrt(bits)?,
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln()?,
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Abs => v.abs(),
                    Func::Sign => {
                        let s = |r: &Rat| {
                            if r.is_zero() {
                                rat::int(0)
                            } else if r.is_negative() {
                                rat::int(-1)
                            } else {
                                rat::int(1)
                            }
                        };
                        RatInterval::new(s(&v.lo), s(&v.hi))
                    }
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Name(String),
    Op(char),
}

struct Token {
    tok: Tok,
    at: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() {
                let ch = chars[i].1;
                let exp_sign = (ch == '+' || ch == '-') && matches!(chars[i - 1].1, 'e' | 'E');
                if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Num(chars[start..i].iter().map(|p| p.1).collect()), at });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Name(chars[start..i].iter().map(|p| p.1).collect()), at });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Op(c), at });
            i += 1;
        } else {
            return Err(ExprError::BadChar(c, at));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Op(d), .. }) if *d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ExprError::Unexpected(t.at)),
            None => Err(ExprError::UnexpectedEnd),
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let r = Box::new(self.product()?);
            e = if c == '+' { Expr::Add(Box::new(e), r) } else { Expr::Sub(Box::new(e), r) };
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let r = Box::new(self.unary()?);
            e = if c == '*' { Expr::Mul(Box::new(e), r) } else { Expr::Div(Box::new(e), r) };
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            // right associative; the exponent may carry its own sign
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let t = self.toks.get(self.pos).ok_or(ExprError::UnexpectedEnd)?;
        let at = t.at;
        match t.tok.clone() {
            Tok::Num(s) => {
                self.pos += 1;
                rat::parse_rat(&s).map(Expr::num).map_err(|_| ExprError::BadNumber(s))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Name(n) => {
                self.pos += 1;
                let var = match n.as_str() {
                    "a" | "alpha" => Some(Var::A),
                    "x" => Some(Var::X),
                    "y" => Some(Var::Y),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(Expr::Var(v));
                }
                let f = match n.as_str() {
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "abs" => Func::Abs,
                    "sign" => Func::Sign,
                    _ => return Err(ExprError::UnknownName(n)),
                };
                self.expect('(')?;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(Expr::Call(f, Box::new(e)))
            }
            Tok::Op(_) => Err(ExprError::Unexpected(at)),
        }
    }
}
