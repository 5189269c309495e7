//! A tiny arithmetic language with one free variable.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | base ("^" factor)?
//! base   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! The free variable may be written `x` or `p`; both name the single
//! argument passed to [`Expr::eval`]. Named calls are `pow`, `exp`, `log`,
//! `abs` and `sqrt`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Nesting limit for parenthesised groups and unary chains.
const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected one of {expected:?}")]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {what} at argument {arg}")]
pub struct EvalError {
    pub what: &'static str,
    pub arg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    P,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::P => "p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Pow,
    Exp,
    Log,
    Abs,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Pow => "pow",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "pow" => Func::Pow,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        Parser::new(source).parse_all()
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates the expression with the free variable bound to `arg`.
    ///
    /// Any non-finite intermediate or final value is reported as an
    /// [`EvalError`]; NaN never escapes.
    pub fn eval(&self, arg: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(_) => arg,
            Expr::Neg(e) => -e.eval(arg)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(arg)?;
                let b = r.eval(arg)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError { what: "division by zero", arg });
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b, arg)?,
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(arg)?;
                match func {
                    Func::Pow => power(a, args[1].eval(arg)?, arg)?,
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError { what: "log of non-positive", arg });
                        }
                        a.ln()
                    }
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError { what: "sqrt of negative", arg });
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError { what: "non-finite result", arg })
        }
    }

    /// Replaces every occurrence of the free variable with `inner`.
    pub fn substitute(&self, inner: &Expr) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(_) => inner.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(inner))),
            Expr::Bin(op, l, r) => Expr::bin(*op, l.substitute(inner), r.substitute(inner)),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.substitute(inner)).collect()),
        }
    }

    /// Value of a closed subexpression, if it has no free variable.
    pub fn constant_value(&self) -> Option<f64> {
        if self.mentions_var() {
            None
        } else {
            self.eval(0.0).ok()
        }
    }

    pub fn mentions_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(e) => e.mentions_var(),
            Expr::Bin(_, l, r) => l.mentions_var() || r.mentions_var(),
            Expr::Call(_, args) => args.iter().any(Expr::mentions_var),
        }
    }
}

fn power(base: f64, exponent: f64, arg: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError { what: "zero to a negative power", arg });
    }
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalError { what: "negative base with fractional exponent", arg });
    }
    // powf already returns 1 for 0^0
    Ok(base.powf(exponent))
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Fully parenthesised rendering; re-parsing yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
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
enum Token {
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
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(_) => "number".into(),
            Token::Ident(_) => "identifier".into(),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    tok: Token,
    tok_start: usize,
    depth: usize,
    lex_error: Option<ParseError>,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        let mut p = Parser {
            src: source.as_bytes(),
            pos: 0,
            tok: Token::End,
            tok_start: 0,
            depth: 0,
            lex_error: None,
        };
        p.advance();
        p
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        if let Some(err) = self.lex_error.take() {
            return Err(err);
        }
        if self.tok != Token::End {
            return Err(self.expected(&["operator", "end of input"]));
        }
        Ok(e)
    }

    fn expected(&mut self, what: &[&str]) -> ParseError {
        if let Some(err) = self.lex_error.take() {
            return err;
        }
        ParseError::Syntax {
            offset: self.tok_start,
            expected: what.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn advance(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            self.tok = Token::End;
            return;
        };
        self.tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b',' => Token::Comma,
            b'0'..=b'9' | b'.' => {
                self.lex_number();
                return;
            }
            c if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.tok = Token::Ident(name);
                return;
            }
            _ => {
                self.lex_error = Some(ParseError::Syntax {
                    offset: self.pos,
                    expected: vec!["number".into(), "identifier".into(), "operator".into()],
                });
                // Poison the stream so the parser stops at this offset.
                self.tok = Token::End;
                self.pos = self.src.len();
                return;
            }
        };
        self.pos += 1;
    }

    fn lex_number(&mut self) {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.lex_error = Some(ParseError::Syntax { offset: start, expected: vec!["digit".into()] });
            self.tok = Token::End;
            self.pos = self.src.len();
            return;
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all; leave `e` for the identifier lexer
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => self.tok = Token::Num(v),
            _ => {
                self.lex_error = Some(ParseError::Syntax { offset: start, expected: vec!["finite number".into()] });
                self.tok = Token::End;
                self.pos = self.src.len();
            }
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::Syntax {
                offset: self.tok_start,
                expected: vec![format!("nesting depth at most {MAX_DEPTH}")],
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let out = if self.tok == Token::Minus {
            self.advance();
            Expr::Neg(Box::new(self.factor()?))
        } else {
            let base = self.base()?;
            if self.tok == Token::Caret {
                self.advance();
                Expr::bin(BinOp::Pow, base, self.factor()?)
            } else {
                base
            }
        };
        self.depth -= 1;
        Ok(out)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Token::Num(v) => {
                self.advance();
                Ok(Expr::Num(v))
            }
            Token::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => {
                let offset = self.tok_start;
                self.advance();
                match name.as_str() {
                    "x" => return Ok(Expr::Var(Var::X)),
                    "p" => return Ok(Expr::Var(Var::P)),
                    _ => {}
                }
                let func = Func::lookup(&name)
                    .ok_or(ParseError::UnknownIdentifier { name: name.clone(), offset })?;
                self.expect(Token::LParen)?;
                let mut args = vec![self.expr()?];
                while self.tok == Token::Comma {
                    self.advance();
                    args.push(self.expr()?);
                }
                if args.len() != func.arity() {
                    return Err(ParseError::Syntax {
                        offset: self.tok_start,
                        expected: vec![format!("{} argument(s) to {}", func.arity(), func.name())],
                    });
                }
                self.expect(Token::RParen)?;
                Ok(Expr::Call(func, args))
            }
            _ => Err(self.expected(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        if self.tok == want {
            self.advance();
            Ok(())
        } else {
            let d = want.describe();
            Err(self.expected(&[d.as_str()]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(src: &str, x: f64) -> Result<f64, EvalError> {
        Expr::parse(src).unwrap().eval(x)
    }

    #[test]
    fn inverse_square_root() {
        let e = Expr::parse("x^(-1/2)").unwrap();
        assert_eq!(e.eval(4.0).unwrap(), 0.5);
        assert_eq!(e.eval(0.25).unwrap(), 2.0);
    }

    #[test]
    fn cube_map_parses() {
        let e = Expr::parse("x^3").unwrap();
        assert_eq!(e, Expr::bin(BinOp::Pow, Expr::Var(Var::X), Expr::Num(3.0)));
        assert_eq!(e.eval(2.0).unwrap(), 8.0);
    }

    #[test]
    fn division_by_zero_is_eval_error() {
        let e = Expr::parse("1/0").unwrap();
        assert!(e.eval(0.3).is_err());
        assert!(e.eval(-7.0).is_err());
    }

    #[test]
    fn cube_density_at_one() {
        let v = eval("3^(-1) * x^(-2/3)", 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(eval("log(x)", -1.0).is_err());
        assert!(eval("log(x)", 0.0).is_err());
        assert!(eval("x^(-1)", 0.0).is_err());
        assert!(eval("sqrt(x)", -1.0).is_err());
        assert!(eval("exp(x)", 1000.0).is_err());
    }

    #[test]
    fn zero_to_zero_is_one() {
        assert_eq!(eval("x^0", 0.0).unwrap(), 1.0);
        assert_eq!(eval("pow(x, x)", 0.0).unwrap(), 1.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("2*x^2", 3.0).unwrap(), 18.0);
        assert_eq!(eval("2^3^2", 0.0).unwrap(), 512.0);
        assert_eq!(eval("-x^2", 3.0).unwrap(), -9.0);
        assert_eq!(eval("1-2-3", 0.0).unwrap(), -4.0);
        assert_eq!(eval("8/4/2", 0.0).unwrap(), 1.0);
        assert_eq!(eval("2^-1", 0.0).unwrap(), 0.5);
    }

    #[test]
    fn both_variable_names_bind_the_argument() {
        assert_eq!(eval("(2/(2-p))^(1/p)", 1.0).unwrap(), 2.0);
        assert_eq!(eval("x + p", 1.5).unwrap(), 3.0);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(eval("1e-3", 0.0).unwrap(), 1e-3);
        assert_eq!(eval("2.5E+2", 0.0).unwrap(), 250.0);
        assert_eq!(eval(".5", 0.0).unwrap(), 0.5);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match Expr::parse("2x") {
            Err(ParseError::UnknownIdentifier { .. }) | Err(ParseError::Syntax { .. }) => {}
            other => panic!("implicit multiplication accepted: {other:?}"),
        }
        match Expr::parse("1 + ") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match Expr::parse("foo(x)") {
            Err(ParseError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 0);
            }
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("pow(x)").is_err());
        assert!(Expr::parse("(x").is_err());
        assert!(Expr::parse("x $ 2").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn implicit_multiplication_rejected() {
        // "2x" lexes as the number 2 followed by identifier x
        assert!(matches!(Expr::parse("2x"), Err(ParseError::Syntax { offset: 1, .. })));
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = "(".repeat(100_000) + "x" + &")".repeat(100_000);
        assert!(Expr::parse(&src).is_err());
        let src = "-".repeat(100_000) + "x";
        assert!(Expr::parse(&src).is_err());
    }

    #[test]
    fn substitution_composes() {
        let f = Expr::parse("x^(-1/2)").unwrap();
        let xi = Expr::parse("x^3").unwrap();
        let g = f.substitute(&xi);
        let v = g.eval(0.5).unwrap();
        assert!((v - 0.5f64.powf(-1.5)).abs() < 1e-12);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            (0u32..20).prop_map(|n| Expr::Num(n as f64)),
            Just(Expr::Var(Var::X)),
            Just(Expr::Var(Var::P)),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::bin(op, l, r)),
                (
                    prop_oneof![Just(Func::Exp), Just(Func::Log), Just(Func::Abs), Just(Func::Sqrt)],
                    inner.clone()
                )
                    .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(), x in -10.0f64..10.0) {
            let printed = e.to_string();
            let back = Expr::parse(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            match (e.eval(x), back.eval(x)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let s = String::from_utf8_lossy(&bytes);
            let _ = Expr::parse(&s);
        }

        #[test]
        fn parser_never_panics_on_grammar_soup(
            s in "[0-9xp+*/^().,eE -]{0,40}|(pow|exp|log|abs|sqrt|[(),x0-9.+-])*"
        ) {
            if let Ok(e) = Expr::parse(&s) {
                let _ = e.eval(0.7);
            }
        }
    }
}
