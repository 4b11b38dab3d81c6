//! Expression language for symbols m(x, ν).
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := unary (("*"|"/") unary)* ;
//! unary  := "-" unary | power ;
//! power  := atom ("^" ("-")* atom)? ;
//! atom   := NUMBER | IDENT | "(" expr ")" | IDENT "(" expr ("," expr)* ")" ;
//! ```
//!
//! `-x1^2` is `-(x1^2)`, `2^-1` is allowed and `a^b^c` is rejected.

use std::f64::consts::{E, PI};
use std::fmt;

use crate::error::{Error, Position, Result};
use crate::hermite::lambda_of_order;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// x_j, zero-based coordinate.
    X(usize),
    /// ν_j, zero-based coordinate.
    Nu(usize),
    AbsNu,
    Lam,
    Dim,
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Pow,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Values bound to the free variables during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub x: &'a [f64],
    pub nu: &'a [usize],
    pub order: usize,
}

impl Expr {
    /// True if some x_j occurs in the tree.
    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Var(Var::X(_)) => true,
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(e) => e.depends_on_x(),
            Expr::Binary(_, a, b) => a.depends_on_x() || b.depends_on_x(),
            Expr::Call(_, args) => args.iter().any(Expr::depends_on_x),
        }
    }

    pub fn eval(&self, b: &Bindings<'_>) -> std::result::Result<f64, String> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => match *var {
                Var::X(j) => b.x[j],
                Var::Nu(j) => b.nu[j] as f64,
                Var::AbsNu => b.order as f64,
                Var::Lam => lambda_of_order(b.order, b.nu.len()),
                Var::Dim => b.nu.len() as f64,
                Var::Pi => PI,
                Var::E => E,
            },
            Expr::Neg(e) => -e.eval(b)?,
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval(b)?;
                let r = rhs.eval(b)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err("division by zero".into());
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(b)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(format!("log of non-positive value {a}"));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(format!("sqrt of negative value {a}"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Pow => a.powf(args[1].eval(b)?),
                    Func::Min => a.min(args[1].eval(b)?),
                    Func::Max => a.max(args[1].eval(b)?),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite intermediate value in `{self}`"))
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(j) => write!(f, "x{}", j + 1),
            Var::Nu(j) => write!(f, "nu{}", j + 1),
            Var::AbsNu => f.write_str("absnu"),
            Var::Lam => f.write_str("lam"),
            Var::Dim => f.write_str("n"),
            Var::Pi => f.write_str("pi"),
            Var::E => f.write_str("e"),
        }
    }
}

/// Fully parenthesized canonical form; reparses to an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

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
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Position)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
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
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let value: f64 = lit.parse().map_err(|_| Error::Syntax {
                pos,
                msg: format!("malformed number `{lit}`"),
            })?;
            if !value.is_finite() {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("number `{lit}` is out of range"),
                });
            }
            Tok::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                other => {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            }
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Position { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Position)>,
    at: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Position) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {}, found {}", want.describe(), self.peek().describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.exponent()?;
            if *self.peek() == Tok::Caret {
                return Err(Error::Syntax {
                    pos: self.pos(),
                    msg: "chained `^` is ambiguous; add parentheses".into(),
                });
            }
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.atom()
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, pos)
                } else {
                    self.variable(&name, pos).map(Expr::Var)
                }
            }
            other => Err(Error::Syntax {
                pos,
                msg: format!("expected a number, identifier or `(`, found {}", other.describe()),
            }),
        }
    }

    fn call(&mut self, name: String, pos: Position) -> Result<Expr> {
        let func = match Func::from_name(&name) {
            Some(f) => f,
            None if self.variable(&name, pos).is_ok() => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("`{name}` is a variable, not a function"),
                })
            }
            None => return Err(Error::UnknownIdentifier { pos, name }),
        };
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        if args.len() != func.arity() {
            return Err(Error::Arity {
                pos,
                name,
                expected: func.arity(),
                got: args.len(),
            });
        }
        Ok(Expr::Call(func, args))
    }

    fn variable(&self, name: &str, pos: Position) -> Result<Var> {
        let indexed = |prefix: &str| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            if rest.is_empty() || rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let j: usize = rest.parse().ok()?;
            (1..=self.dim).contains(&j).then(|| j - 1)
        };
        let var = match name {
            "absnu" => Var::AbsNu,
            "lam" => Var::Lam,
            "n" => Var::Dim,
            "pi" => Var::Pi,
            "e" => Var::E,
            _ => {
                if let Some(j) = indexed("x") {
                    Var::X(j)
                } else if let Some(j) = indexed("nu") {
                    Var::Nu(j)
                } else if Func::from_name(name).is_some() {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!("function `{name}` must be called with arguments"),
                    });
                } else {
                    return Err(Error::UnknownIdentifier {
                        pos,
                        name: name.to_string(),
                    });
                }
            }
        };
        Ok(var)
    }
}

/// Parses an expression over the variables of dimension `dim`.
pub fn parse_expr(text: &str, dim: usize) -> Result<Expr> {
    if dim == 0 {
        return Err(Error::InvalidArgument("symbol dimension must be at least 1".into()));
    }
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        dim,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: format!("unexpected {} after expression", p.peek().describe()),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(text: &str, x: f64, nu: usize) -> f64 {
        let e = parse_expr(text, 1).unwrap();
        e.eval(&Bindings {
            x: &[x],
            nu: &[nu],
            order: nu,
        })
        .unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(eval1("1 + 2 * 3", 0.0, 0), 7.0);
        assert_eq!(eval1("(1 + 2) * 3", 0.0, 0), 9.0);
        assert_eq!(eval1("2 ^ 3 * 2", 0.0, 0), 16.0);
        assert_eq!(eval1("-2 ^ 2", 0.0, 0), -4.0);
        assert_eq!(eval1("(-2) ^ 2", 0.0, 0), 4.0);
        assert_eq!(eval1("8 / 4 / 2", 0.0, 0), 1.0);
        assert_eq!(eval1("10 - 4 - 3", 0.0, 0), 3.0);
        assert_eq!(eval1("2 ^ -1", 0.0, 0), 0.5);
        assert_eq!(eval1("1.5e2 + .5", 0.0, 0), 150.5);
    }

    #[test]
    fn variables() {
        assert_eq!(eval1("lam", 0.0, 2), 5.0);
        assert_eq!(eval1("absnu + nu1 + n", 0.0, 3), 7.0);
        assert_eq!(eval1("x1 * 2", 1.25, 0), 2.5);
        assert!((eval1("pi", 0.0, 0) - PI).abs() == 0.0);
        assert!((eval1("e", 0.0, 0) - E).abs() == 0.0);
        assert_eq!(eval1("pow(lam, -1.0)", 0.0, 2), 0.2);
        assert_eq!(eval1("max(min(3, x1), 1)", 2.0, 0), 2.0);
    }

    #[test]
    fn unknown_identifier_with_position() {
        let err = parse_expr("x1 + x3", 2).unwrap_err();
        match err {
            Error::UnknownIdentifier { pos, name } => {
                assert_eq!(name, "x3");
                assert_eq!(pos, Position { line: 1, column: 6 });
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("x1^2 * exp(-absnu/4)", 2).is_ok());
        assert!(matches!(parse_expr("x0", 2), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("foo(1)", 1), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn syntax_errors() {
        let err = parse_expr("1 +\n  * 2", 1).unwrap_err();
        match err {
            Error::Syntax { pos, .. } => assert_eq!(pos, Position { line: 2, column: 3 }),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_expr("(1 + 2", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("2 ^ 3 ^ 4", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("1 $ 2", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("exp", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1(2)", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("1e999", 1), Err(Error::Syntax { .. })));
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(parse_expr("pow(2)", 1), Err(Error::Arity { expected: 2, got: 1, .. })));
        assert!(matches!(parse_expr("exp(1, 2)", 1), Err(Error::Arity { .. })));
    }

    #[test]
    fn evaluation_errors() {
        let b = Bindings { x: &[0.0], nu: &[0], order: 0 };
        assert!(parse_expr("1 / x1", 1).unwrap().eval(&b).is_err());
        assert!(parse_expr("log(x1)", 1).unwrap().eval(&b).is_err());
        assert!(parse_expr("log(-1)", 1).unwrap().eval(&b).is_err());
        assert!(parse_expr("exp(1000)", 1).unwrap().eval(&b).is_err());
    }

    #[test]
    fn detects_x_dependence() {
        assert!(!parse_expr("exp(-absnu)", 1).unwrap().depends_on_x());
        assert!(parse_expr("exp(-x1^2)*exp(-absnu)", 1).unwrap().depends_on_x());
    }
}
