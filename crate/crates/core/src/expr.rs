//! Expression trees for analytic fields.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' ['-'] integer)?
//! atom   := number | 'x' index | '(' expr ')' | func '(' expr ')'
//! func   := sqrt | exp | log | abs
//! ```
//!
//! Variables are numbered from `x1`. Unary minus is accepted as a prefix of a
//! factor, so `-x1^2` parses as `-(x1^2)`.

use std::fmt;

use crate::error::{DomainOp, Error, Result};
use crate::taylor::Number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index (`x1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `source` and checks that every variable is among `x1..x{dim}`.
    pub fn parse(source: &str, dim: usize) -> Result<Expr> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            dim,
            end: source.len(),
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax {
                position: tok.pos,
                token: tok.kind.to_string(),
                message: "unexpected trailing input".into(),
            });
        }
        Ok(expr)
    }

    /// Largest variable index used, one-based; zero for constants.
    pub fn max_variable(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_variable(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_variable().max(b.max_variable())
            }
        }
    }

    /// Replaces every variable `x_{i+1}` by `sub(i)`.
    pub fn substitute(&self, sub: &dyn Fn(usize) -> Expr) -> Expr {
        let b = |e: &Expr| Box::new(e.substitute(sub));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => sub(*i),
            Expr::Neg(a) => Expr::Neg(b(a)),
            Expr::Add(l, r) => Expr::Add(b(l), b(r)),
            Expr::Sub(l, r) => Expr::Sub(b(l), b(r)),
            Expr::Mul(l, r) => Expr::Mul(b(l), b(r)),
            Expr::Div(l, r) => Expr::Div(b(l), b(r)),
            Expr::Pow(a, k) => Expr::Pow(b(a), *k),
            Expr::Call(f, a) => Expr::Call(*f, b(a)),
        }
    }

    /// The expression of `x ↦ u(Mx + c)`, with `M` given by rows.
    pub fn affine_substitution(&self, m: &[Vec<f64>], c: &[f64]) -> Expr {
        self.substitute(&|i| {
            let mut acc = Expr::Const(c[i]);
            for (j, &mij) in m[i].iter().enumerate() {
                if mij != 0.0 {
                    let term = Expr::Mul(Box::new(Expr::Const(mij)), Box::new(Expr::Var(j)));
                    acc = Expr::Add(Box::new(acc), Box::new(term));
                }
            }
            acc
        })
    }

    /// Evaluates with any [`Number`] type bound to the variables.
    pub fn eval<T: Number>(&self, vars: &[T]) -> std::result::Result<T, DomainOp> {
        Ok(match self {
            Expr::Const(c) => T::constant(*c),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Neg(a) => a.eval(vars)?.neg(),
            Expr::Add(a, b) => a.eval(vars)?.add(&b.eval(vars)?),
            Expr::Sub(a, b) => a.eval(vars)?.sub(&b.eval(vars)?),
            Expr::Mul(a, b) => a.eval(vars)?.mul(&b.eval(vars)?),
            Expr::Div(a, b) => a.eval(vars)?.div(&b.eval(vars)?)?,
            Expr::Pow(a, k) => a.eval(vars)?.powi(*k)?,
            Expr::Call(f, a) => {
                let inner = a.eval(vars)?;
                match f {
                    Func::Sqrt => inner.sqrt()?,
                    Func::Exp => inner.exp(),
                    Func::Log => inner.ln()?,
                    Func::Abs => inner.abs()?,
                }
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(x) => write!(f, "{x}"),
            TokenKind::Ident(s) => f.write_str(s),
            TokenKind::Plus => f.write_str("+"),
            TokenKind::Minus => f.write_str("-"),
            TokenKind::Star => f.write_str("*"),
            TokenKind::Slash => f.write_str("/"),
            TokenKind::Caret => f.write_str("^"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
    text: String,
}

fn lex(source: &str) -> Result<Vec<Token>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part, only when followed by digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &source[start..i];
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    position: start,
                    token: text.to_string(),
                    message: "malformed number".into(),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    pos: start,
                    text: text.to_string(),
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let text = &source[start..i];
                tokens.push(Token {
                    kind: TokenKind::Ident(text.to_string()),
                    pos: start,
                    text: text.to_string(),
                });
                continue;
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    position: start,
                    token: ch.to_string(),
                    message: "unexpected character".into(),
                });
            }
        };
        i += 1;
        tokens.push(Token {
            kind,
            pos: start,
            text: source[start..i].to_string(),
        });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, message: &str) -> Error {
        match self.peek() {
            Some(tok) => Error::Syntax {
                position: tok.pos,
                token: tok.text.clone(),
                message: message.into(),
            },
            None => Error::Syntax {
                position: self.end,
                token: "end of input".into(),
                message: message.into(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected '{kind}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(&TokenKind::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if !self.eat(&TokenKind::Caret) {
            return Ok(base);
        }
        let negative = self.eat(&TokenKind::Minus);
        match self.next() {
            Some(Token {
                kind: TokenKind::Number(x),
                pos,
                text,
            }) => {
                if x.fract() != 0.0 || x > i32::MAX as f64 || text.contains(['e', 'E', '.']) {
                    return Err(Error::Syntax {
                        position: pos,
                        token: text,
                        message: "exponent must be an integer".into(),
                    });
                }
                let k = x as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.unexpected("expected an integer exponent"))
            }
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.next() else {
            return Err(self.unexpected("expected an operand"));
        };
        match tok.kind {
            TokenKind::Number(x) => Ok(Expr::Const(x)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(TokenKind::LParen)?;
                    let arg = self.expr()?;
                    self.expect(TokenKind::RParen)?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.variable(&name, tok.pos)
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected("expected an operand"))
            }
        }
    }

    fn variable(&self, name: &str, position: usize) -> Result<Expr> {
        let index = name
            .strip_prefix('x')
            .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|digits| digits.parse::<usize>().ok())
            .filter(|&k| k >= 1);
        match index {
            Some(k) if k <= self.dim => Ok(Expr::Var(k - 1)),
            Some(k) => Err(Error::VariableOutOfRange {
                index: k,
                dim: self.dim,
                position,
            }),
            None => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                position,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, dim: usize, x: &[f64]) -> f64 {
        Expr::parse(src, dim).unwrap().eval(x).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1+2*3", 1, &[0.0]), 7.0);
        assert_eq!(eval("8-3-2", 1, &[0.0]), 3.0);
        assert_eq!(eval("8/4/2", 1, &[0.0]), 1.0);
        assert_eq!(eval("-x1^2", 1, &[3.0]), -9.0);
        assert_eq!(eval("2*x1^-1", 1, &[4.0]), 0.5);
        assert_eq!(eval(" ( x1 + x2 ) ^ 2 ", 2, &[1.0, 2.0]), 9.0);
        assert_eq!(eval("1.5e1*x1", 1, &[2.0]), 30.0);
    }

    #[test]
    fn functions() {
        let v = eval("0.5*sqrt(x1^2+1)", 2, &[0.0, 5.0]);
        assert_eq!(v, 0.5);
        assert!((eval("log(exp(x1))", 1, &[1.25]) - 1.25).abs() < 1e-15);
        assert_eq!(eval("abs(x1-3)", 1, &[1.0]), 2.0);
    }

    #[test]
    fn variable_beyond_dimension_is_rejected() {
        assert_eq!(
            Expr::parse("x3", 2),
            Err(Error::VariableOutOfRange {
                index: 3,
                dim: 2,
                position: 0
            })
        );
    }

    #[test]
    fn unknown_identifiers_report_position() {
        match Expr::parse("1 + sin(x1)", 1) {
            Err(Error::UnknownIdentifier { name, position }) => {
                assert_eq!(name, "sin");
                assert_eq!(position, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expr::parse("x0", 1),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position_and_token() {
        match Expr::parse("x1 + * 2", 1) {
            Err(Error::Syntax {
                position, token, ..
            }) => {
                assert_eq!(position, 5);
                assert_eq!(token, "*");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Expr::parse("(x1", 1), Err(Error::Syntax { position: 3, .. })));
        assert!(matches!(Expr::parse("x1^1.5", 1), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("x1 x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("x1 $", 1), Err(Error::Syntax { position: 3, .. })));
    }

    #[test]
    fn partial_functions_parse_and_fail_at_evaluation() {
        let e = Expr::parse("sqrt(x1)", 1).unwrap();
        assert_eq!(e.eval(&[-1.0]), Err(DomainOp::Sqrt));
        let e = Expr::parse("1/x1", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(DomainOp::Div));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        let e = Expr::parse("-0.5*sqrt(x1^2+x2^-2)/exp(x2)-abs(x1)", 2).unwrap();
        let again = Expr::parse(&e.to_string(), 2).unwrap();
        assert_eq!(e, again);
    }
}
