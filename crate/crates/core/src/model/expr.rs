//! Expression AST, parser and printer for the problem text format.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' int)?
//! int     := ['+' | '-'] digits | '(' ['+' | '-'] digits ')'
//! primary := number | 'x' digits | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt'
//! ```
//!
//! A unary minus applied directly to a literal folds into a negative
//! constant, so `print` followed by `parse` reproduces the tree exactly.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; printed as `x{i+1}`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
}

impl Expr {
    /// Largest variable index used plus one (0 for constants).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.arity().max(b.arity()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 5,
            _ => 5,
        }
    }
}

struct Child<'a>(&'a Expr, u8);

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => match a.as_ref() {
                // A bare literal would fold back into a constant.
                Expr::Const(_) => write!(f, "-({a})"),
                _ => write!(f, "-{}", Child(a, 3)),
            },
            Expr::Add(a, b) => write!(f, "{} + {}", Child(a, 1), Child(b, 2)),
            Expr::Sub(a, b) => write!(f, "{} - {}", Child(a, 1), Child(b, 2)),
            Expr::Mul(a, b) => write!(f, "{} * {}", Child(a, 2), Child(b, 3)),
            Expr::Div(a, b) => write!(f, "{} / {}", Child(a, 2), Child(b, 3)),
            Expr::Pow(a, k) => write!(f, "{}^{}", Child(a, 5), k),
            Expr::Func(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexed {
    tok: Tok,
    col: usize,
}

fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<Lexed>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |i: usize, message: String| Error::Parse {
        line,
        column: col0 + i,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Lexed { tok, col });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut integral = true;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                integral &= chars[i] != '.';
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    integral = false;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| err(start, format!("malformed number `{text}`")))?;
            out.push(Lexed {
                tok: Tok::Num(v, integral),
                col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Lexed {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        return Err(err(i, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    line: usize,
    end_col: usize,
    nvars: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.col(),
            message: message.into(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let paren = self.eat(&Tok::LParen);
        let negative = if self.eat(&Tok::Minus) {
            true
        } else {
            self.eat(&Tok::Plus);
            false
        };
        let k = match self.peek() {
            Some(Tok::Num(v, true)) if *v <= i32::MAX as f64 => *v as i32,
            _ => return Err(self.error("exponent must be an integer literal")),
        };
        self.pos += 1;
        if paren {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn primary(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v, _)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Func(func, Box::new(arg)));
                }
                let idx = name
                    .strip_prefix('x')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|d| d.parse::<usize>().ok());
                match idx {
                    Some(k) if k >= 1 && k <= self.nvars => Ok(Expr::Var(k - 1)),
                    Some(k) => Err(Error::Parse {
                        line: self.line,
                        column: col,
                        message: format!("variable x{k} outside x1..x{}", self.nvars),
                    }),
                    None => Err(Error::Parse {
                        line: self.line,
                        column: col,
                        message: format!("unknown symbol `{name}`"),
                    }),
                }
            }
            Some(_) => Err(self.error("expected an operand")),
            None => Err(self.error("unexpected end of expression")),
        }
    }
}

/// Parses one expression over variables `x1..x{nvars}`. `line`/`col` locate
/// the first character of `src` for error reporting (1-based).
pub fn parse_expr_at(src: &str, nvars: usize, line: usize, col: usize) -> Result<Expr> {
    let toks = lex(src, line, col)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        end_col: col + src.chars().count(),
        nvars,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses one expression over variables `x1..x{nvars}`.
pub fn parse_expr(src: &str, nvars: usize) -> Result<Expr> {
    parse_expr_at(src, nvars, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_folding() {
        let e = parse_expr("-x1^2 + 3*x2 - -2", 2).unwrap();
        let want = Expr::Sub(
            Box::new(Expr::Add(
                Box::new(Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)))),
                Box::new(Expr::Mul(Box::new(Expr::Const(3.0)), Box::new(Expr::Var(1)))),
            )),
            Box::new(Expr::Const(-2.0)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn negative_exponents() {
        assert_eq!(parse_expr("x1^-2", 1).unwrap(), Expr::Pow(Box::new(Expr::Var(0)), -2));
        assert_eq!(parse_expr("x1^(-2)", 1).unwrap(), Expr::Pow(Box::new(Expr::Var(0)), -2));
        assert!(parse_expr("x1^2.5", 1).is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "(x1 + 1)^2 + x2^2",
            "sin(x1) + exp(x2) * x1",
            "x1 - (x2 - x1)",
            "x1 / (x2 * x1)",
            "-(x1 + x2)",
            "(-3) * x1 + 1.5e-7",
            "(x1^2)^3 - sqrt(log(x2))",
            "-(-x1)",
        ] {
            let e = parse_expr(src, 2).unwrap();
            let back = parse_expr(&e.to_string(), 2).unwrap();
            assert_eq!(e, back, "{src} -> {e}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_expr("x1 + y", 1).unwrap_err() {
            Error::Parse { column, message, .. } => {
                assert_eq!(column, 6);
                assert!(message.contains("unknown symbol"));
            }
            e => panic!("{e:?}"),
        }
        assert!(parse_expr("x3", 2).is_err());
        assert!(parse_expr("(x1", 1).is_err());
        assert!(parse_expr("x1 x1", 1).is_err());
        assert!(parse_expr("", 1).is_err());
    }
}
