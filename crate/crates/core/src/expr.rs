//! Small arithmetic expression parser for custom implicit domains and
//! boundary data. Grammar: operators + - * / ^ (power is right
//! associative), unary minus, parentheses, the functions abs, log, exp,
//! sqrt, float literals, and the variables x1..xn and t. Whitespace is
//! ignored.

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => { toks.push((i, Tok::Plus)); i += 1; }
            '-' => { toks.push((i, Tok::Minus)); i += 1; }
            '*' => { toks.push((i, Tok::Star)); i += 1; }
            '/' => { toks.push((i, Tok::Slash)); i += 1; }
            '^' => { toks.push((i, Tok::Caret)); i += 1; }
            '(' => { toks.push((i, Tok::LParen)); i += 1; }
            ')' => { toks.push((i, Tok::RParen)); i += 1; }
            ',' => { toks.push((i, Tok::Comma)); i += 1; }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, '0'..='9' | '.' | 'e' | 'E' )
                {
                    // allow exponent signs like 1e-3
                    if matches!(bytes[i] as char, 'e' | 'E')
                        && i + 1 < bytes.len()
                        && matches!(bytes[i + 1] as char, '+' | '-')
                    {
                        i += 1;
                    }
                    i += 1;
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::ExprParse {
                    pos: start,
                    msg: format!("bad number literal '{text}'"),
                })?;
                toks.push((start, Tok::Num(v)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                return Err(Error::ExprParse { pos: i, msg: format!("unexpected character '{c}'") });
            }
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone)]
enum Ast {
    Num(f64),
    Var(usize), // 0..n-1 spatial, n = time
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Abs(Box<Ast>),
    Log(Box<Ast>),
    Exp(Box<Ast>),
    Sqrt(Box<Ast>),
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn bump(&mut self) -> Option<&(usize, Tok)> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        let pos = self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(usize::MAX);
        Error::ExprParse { pos: if pos == usize::MAX { 0 } else { pos }, msg: msg.into() }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(Ast::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            // right associative; exponent may carry a unary sign
            let exp = self.unary()?;
            return Ok(Ast::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast> {
        let (pos, tok) = match self.bump() {
            Some(t) => t.clone(),
            None => return Err(self.err_here("unexpected end of expression")),
        };
        match tok {
            Tok::Num(v) => Ok(Ast::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    _ => Err(Error::ExprParse { pos, msg: "unclosed parenthesis".into() }),
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.bump();
                    let arg = self.expr()?;
                    match self.bump() {
                        Some((_, Tok::RParen)) => {}
                        _ => {
                            return Err(Error::ExprParse {
                                pos,
                                msg: format!("unclosed argument list for '{name}'"),
                            })
                        }
                    }
                    let arg = Box::new(arg);
                    match name.as_str() {
                        "abs" => Ok(Ast::Abs(arg)),
                        "log" => Ok(Ast::Log(arg)),
                        "exp" => Ok(Ast::Exp(arg)),
                        "sqrt" => Ok(Ast::Sqrt(arg)),
                        _ => Err(Error::ExprParse {
                            pos,
                            msg: format!("unknown function '{name}' (have abs, log, exp, sqrt)"),
                        }),
                    }
                } else if name == "t" {
                    Ok(Ast::Var(self.dim))
                } else if let Some(rest) = name.strip_prefix('x') {
                    let k: usize = rest.parse().map_err(|_| Error::ExprParse {
                        pos,
                        msg: format!("unknown variable '{name}'"),
                    })?;
                    if k == 0 || k > self.dim {
                        return Err(Error::ExprParse {
                            pos,
                            msg: format!("variable '{name}' out of range for dimension {}", self.dim),
                        });
                    }
                    Ok(Ast::Var(k - 1))
                } else {
                    Err(Error::ExprParse { pos, msg: format!("unknown identifier '{name}'") })
                }
            }
            other => Err(Error::ExprParse { pos, msg: format!("unexpected token {other:?}") }),
        }
    }
}

fn eval(ast: &Ast, vars: &[f64]) -> f64 {
    match ast {
        Ast::Num(v) => *v,
        Ast::Var(i) => vars[*i],
        Ast::Neg(a) => -eval(a, vars),
        Ast::Add(a, b) => eval(a, vars) + eval(b, vars),
        Ast::Sub(a, b) => eval(a, vars) - eval(b, vars),
        Ast::Mul(a, b) => eval(a, vars) * eval(b, vars),
        Ast::Div(a, b) => eval(a, vars) / eval(b, vars),
        Ast::Pow(a, b) => eval(a, vars).powf(eval(b, vars)),
        Ast::Abs(a) => eval(a, vars).abs(),
        Ast::Log(a) => eval(a, vars).ln(),
        Ast::Exp(a) => eval(a, vars).exp(),
        Ast::Sqrt(a) => eval(a, vars).sqrt(),
    }
}

/// A compiled scalar expression over x1..xn, t.
#[derive(Debug, Clone)]
pub struct Expression {
    ast: Ast,
    dim: usize,
    source: String,
}

impl Expression {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let toks = tokenize(src)?;
        let mut p = Parser { toks: &toks, pos: 0, dim };
        let ast = p.expr()?;
        if p.pos != toks.len() {
            return Err(p.err_here("trailing input after expression"));
        }
        Ok(Expression { ast, dim, source: src.to_string() })
    }

    pub fn eval_point(&self, point: &Point) -> f64 {
        debug_assert_eq!(point.dim(), self.dim);
        let mut vars = point.x.clone();
        vars.push(point.t);
        eval(&self.ast, &vars)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(src: &str, x: Vec<f64>, t: f64) -> f64 {
        Expression::parse(src, x.len()).unwrap().eval_point(&Point::new(x, t))
    }

    #[test]
    fn precedence_and_power() {
        assert_relative_eq!(ev("1+2*3", vec![0.0], 0.0), 7.0);
        assert_relative_eq!(ev("2^3^2", vec![0.0], 0.0), 512.0); // right assoc
        assert_relative_eq!(ev("-x1^2", vec![3.0], 0.0), -9.0);
        assert_relative_eq!(ev("(1+2)*3", vec![0.0], 0.0), 9.0);
    }

    #[test]
    fn functions_and_vars() {
        assert_relative_eq!(ev("abs(x1)-sqrt(x2)+log(exp(t))", vec![-2.0, 9.0], 1.5), 2.0 - 3.0 + 1.5);
        assert_relative_eq!(ev("x1 ^ 2 + t - 1", vec![2.0], 0.5), 3.5);
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(ev("  x1+ t ", vec![1.0], 2.0), ev("x1+t", vec![1.0], 2.0));
    }

    #[test]
    fn rejects_unknowns() {
        assert!(Expression::parse("y + 1", 1).is_err());
        assert!(Expression::parse("x2", 1).is_err());
        assert!(Expression::parse("sin(x1)", 1).is_err());
        assert!(Expression::parse("x1 +", 1).is_err());
        assert!(Expression::parse("(x1", 1).is_err());
    }
}
