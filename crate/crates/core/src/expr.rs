//! A small closed-form expression language over the coordinates `x1..x8`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'pi' | 'e' | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Expressions evaluate either to plain `f64` or to a [`TaylorScalar`]
//! carrying all partial derivatives up to the requested order.

use std::fmt;

use thiserror::Error;

use crate::taylor::{TaylorScalar, MAX_DIM, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at offset {offset} takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("variable x{index} is not available at a {dim}-dimensional point")]
    MissingVariable { index: usize, dim: usize },
    #[error("evaluation overflowed to a non-finite value")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
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

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Expression tree. Variables are stored zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(source: &str) -> Result<Vec<(Token, usize)>, ParseError> {
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
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // Exponent only when digits follow, so `2*e` and `2e` stay distinct.
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
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("number `{text}` out of range"),
                });
            }
            tokens.push((Token::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((Token::Ident(source[start..i].to_string()), start));
            continue;
        }
        let token = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Token::Op(c as char),
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b',' => Token::Comma,
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        tokens.push((token, start));
        i += 1;
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser

/// Nesting limit; keeps adversarial input from exhausting the stack.
const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    tokens: &'a [(Token, usize)],
    pos: usize,
    end: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.syntax("expression nested too deeply");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek() {
            let op = if *op == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek() {
            let op = if *op == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let out = if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            Expr::Neg(Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                self.identifier(name, offset)
            }
            Some(_) => self.syntax("expected a number, identifier or `(`"),
            None => self.syntax("unexpected end of input"),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        let called = matches!(self.peek(), Some(Token::LParen));
        if let Some(func) = Func::from_name(&name) {
            if !called {
                return Err(ParseError::Arity {
                    name,
                    offset,
                    expected: 1,
                    found: 0,
                });
            }
            self.pos += 1;
            if let Some(Token::RParen) = self.peek() {
                return Err(ParseError::Arity {
                    name,
                    offset,
                    expected: 1,
                    found: 0,
                });
            }
            let arg = self.expr()?;
            let mut found = 1;
            while let Some(Token::Comma) = self.peek() {
                self.pos += 1;
                self.expr()?;
                found += 1;
            }
            if found != 1 {
                return Err(ParseError::Arity {
                    name,
                    offset,
                    expected: 1,
                    found,
                });
            }
            self.expect_rparen()?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        let atom = match name.as_str() {
            "pi" => Expr::Const(Constant::Pi),
            "e" => Expr::Const(Constant::E),
            _ => match variable_index(&name) {
                Some(i) => Expr::Var(i),
                None => return Err(ParseError::UnknownIdentifier { name, offset }),
            },
        };
        if called {
            let found = self.count_call_args()?;
            return Err(ParseError::Arity {
                name,
                offset,
                expected: 0,
                found,
            });
        }
        Ok(atom)
    }

    /// Consumes `( a, b, ... )` after a non-callable name to report its arity.
    fn count_call_args(&mut self) -> Result<usize, ParseError> {
        self.pos += 1;
        if let Some(Token::RParen) = self.peek() {
            self.pos += 1;
            return Ok(0);
        }
        self.expr()?;
        let mut found = 1;
        while let Some(Token::Comma) = self.peek() {
            self.pos += 1;
            self.expr()?;
            found += 1;
        }
        self.expect_rparen()?;
        Ok(found)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.syntax("expected `)`"),
            None => self.syntax("unexpected end of input, expected `)`"),
        }
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.len() != 1 {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    (1..=MAX_DIM).contains(&k).then(|| k - 1)
}

/// Parses an expression. Byte offsets in errors refer to `source`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        end: source.len(),
        depth: 0,
    };
    let expr = parser.expr()?;
    if parser.pos != tokens.len() {
        return parser.syntax("unexpected trailing input");
    }
    Ok(expr)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Printing

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 0,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "-{}", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, inner.precedence() < 3)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    write_child(f, lhs, lhs.precedence() <= p)?;
                    write!(f, "{}", op.symbol())?;
                    write_child(f, rhs, rhs.precedence() < 3)
                } else {
                    write_child(f, lhs, lhs.precedence() < p)?;
                    write!(f, " {} ", op.symbol())?;
                    write_child(f, rhs, rhs.precedence() <= p)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Construction helpers

impl Expr {
    /// Literal; negative values become `Neg(Num(|v|))`, the shape the parser produces.
    pub fn num(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    /// Zero-based coordinate variable.
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Binary(BinOp::Pow, Box::new(self), Box::new(exponent))
    }

    /// Largest zero-based variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Num(_) | Expr::Const(_) => None,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    /// Literal zero, as produced by the parser for `0`.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Renames every variable `xi` to `x(i + offset)`.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        self.map_vars(&|i| Expr::Var(i + offset))
    }

    /// Replaces each variable by the expression returned from `f`.
    pub fn map_vars(&self, f: &dyn Fn(usize) -> Expr) -> Expr {
        match self {
            Expr::Var(i) => f(*i),
            Expr::Num(_) | Expr::Const(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_vars(f))),
            Expr::Call(func, a) => Expr::Call(*func, Box::new(a.map_vars(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
        }
    }

    /// Symbolic partial derivative with respect to the zero-based variable `var`.
    /// No simplification beyond dropping obvious zeros.
    pub fn derivative(&self, var: usize) -> Expr {
        use BinOp::*;
        let d = |e: &Expr| e.derivative(var);
        match self {
            Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(d(a)),
            Expr::Binary(Add, a, b) => add(d(a), d(b)),
            Expr::Binary(Sub, a, b) => sub(d(a), d(b)),
            Expr::Binary(Mul, a, b) => add(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
            Expr::Binary(Div, a, b) => div(
                sub(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
                Expr::Binary(Pow, b.clone(), Box::new(Expr::Num(2.0))),
            ),
            Expr::Binary(Pow, a, b) => {
                if b.is_constant() {
                    // a^c -> c a^(c-1) a'
                    let lowered = sub((**b).clone(), Expr::Num(1.0));
                    mul(
                        mul(
                            (**b).clone(),
                            Expr::Binary(Pow, a.clone(), Box::new(lowered)),
                        ),
                        d(a),
                    )
                } else {
                    // a^b = exp(b log a)
                    let log_a = Expr::call(Func::Log, (**a).clone());
                    let inner = add(
                        mul(d(b), log_a),
                        mul((**b).clone(), div(d(a), (**a).clone())),
                    );
                    mul(self.clone(), inner)
                }
            }
            Expr::Call(func, a) => {
                let a0 = (**a).clone();
                let outer = match func {
                    Func::Exp => self.clone(),
                    Func::Log => div(Expr::Num(1.0), a0),
                    Func::Sin => Expr::call(Func::Cos, a0),
                    Func::Cos => neg(Expr::call(Func::Sin, a0)),
                    Func::Sinh => Expr::call(Func::Cosh, a0),
                    Func::Cosh => Expr::call(Func::Sinh, a0),
                    Func::Tanh => sub(
                        Expr::Num(1.0),
                        Expr::Binary(Pow, Box::new(self.clone()), Box::new(Expr::Num(2.0))),
                    ),
                    Func::Sqrt => div(Expr::Num(0.5), self.clone()),
                    Func::Abs => div(a0, self.clone()),
                };
                mul(outer, d(a))
            }
        }
    }
}

fn neg(a: Expr) -> Expr {
    if a.is_zero_literal() {
        a
    } else {
        Expr::Neg(Box::new(a))
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.is_zero_literal(), b.is_zero_literal()) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.is_zero_literal(), b.is_zero_literal()) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() || b.is_zero_literal() {
        return Expr::Num(0.0);
    }
    match (&a, &b) {
        (Expr::Num(v), _) if *v == 1.0 => b,
        (_, Expr::Num(v)) if *v == 1.0 => a,
        _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() {
        return a;
    }
    Expr::Binary(BinOp::Div, Box::new(a), Box::new(b))
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Binary(BinOp::Add, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Binary(BinOp::Sub, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Binary(BinOp::Mul, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Binary(BinOp::Div, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn check(value: f64) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::Overflow)
    }
}

fn check_series(s: TaylorScalar) -> Result<TaylorScalar, EvalError> {
    if s.is_finite() {
        Ok(s)
    } else {
        Err(EvalError::Overflow)
    }
}

/// Small integer value of a constant exponent, evaluated once by the caller
/// (re-evaluating nested towers like `a^b^c^...` would be exponential).
fn integer_exponent(constant: bool, v: f64) -> Option<i32> {
    (constant && v.fract() == 0.0 && v.abs() <= 64.0).then_some(v as i32)
}

impl Expr {
    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Const(c) => Ok(c.value()),
            Expr::Var(i) => point.get(*i).copied().ok_or(EvalError::MissingVariable {
                index: i + 1,
                dim: point.len(),
            }),
            Expr::Neg(a) => Ok(-a.eval(point)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                match op {
                    BinOp::Add => check(x + b.eval(point)?),
                    BinOp::Sub => check(x - b.eval(point)?),
                    BinOp::Mul => check(x * b.eval(point)?),
                    BinOp::Div => {
                        let y = b.eval(point)?;
                        if y == 0.0 {
                            return Err(EvalError::Domain {
                                func: "division",
                                value: y,
                            });
                        }
                        check(x / y)
                    }
                    BinOp::Pow => {
                        let y = b.eval(point)?;
                        if let Some(n) = integer_exponent(b.is_constant(), y) {
                            if x == 0.0 && n < 0 {
                                return Err(EvalError::Domain {
                                    func: "negative power",
                                    value: x,
                                });
                            }
                            return check(x.powi(n));
                        }
                        if x <= 0.0 && !(x == 0.0 && y > 0.0) {
                            return Err(EvalError::Domain {
                                func: "power",
                                value: x,
                            });
                        }
                        check(x.powf(y))
                    }
                }
            }
            Expr::Call(func, a) => {
                let x = a.eval(point)?;
                let v = match func {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(EvalError::Domain {
                                func: "log",
                                value: x,
                            });
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain {
                                func: "sqrt",
                                value: x,
                            });
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                };
                check(v)
            }
        }
    }

    /// Evaluates the truncated Taylor expansion at `point` in the variables
    /// listed in `active` (zero-based coordinate indices). The resulting series
    /// has `active.len()` independent variables; inactive coordinates are held
    /// fixed.
    pub fn eval_taylor(
        &self,
        point: &[f64],
        active: &[usize],
        order: usize,
    ) -> Result<TaylorScalar, EvalError> {
        assert!(order <= MAX_ORDER, "order {order} exceeds {MAX_ORDER}");
        assert!(!active.is_empty() && active.len() <= MAX_DIM);
        let mut vars = Vec::with_capacity(point.len());
        for (i, &p) in point.iter().enumerate() {
            vars.push(match active.iter().position(|&a| a == i) {
                Some(slot) => TaylorScalar::variable(active.len(), order, slot, p),
                None => TaylorScalar::constant(active.len(), order, p),
            });
        }
        self.eval_series(&vars, active.len(), order)
    }

    /// Evaluates with every coordinate of `point` active.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<TaylorScalar, EvalError> {
        let active: Vec<usize> = (0..point.len()).collect();
        self.eval_taylor(point, &active, order)
    }

    /// Evaluates with variables bound to arbitrary series (composition).
    pub fn eval_series(
        &self,
        vars: &[TaylorScalar],
        dim: usize,
        order: usize,
    ) -> Result<TaylorScalar, EvalError> {
        let out = match self {
            Expr::Num(v) => TaylorScalar::constant(dim, order, *v),
            Expr::Const(c) => TaylorScalar::constant(dim, order, c.value()),
            Expr::Var(i) => vars.get(*i).cloned().ok_or(EvalError::MissingVariable {
                index: i + 1,
                dim: vars.len(),
            })?,
            Expr::Neg(a) => -a.eval_series(vars, dim, order)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval_series(vars, dim, order)?;
                match op {
                    BinOp::Add => x + b.eval_series(vars, dim, order)?,
                    BinOp::Sub => x - b.eval_series(vars, dim, order)?,
                    BinOp::Mul => x * b.eval_series(vars, dim, order)?,
                    BinOp::Div => {
                        let y = b.eval_series(vars, dim, order)?;
                        if y.value() == 0.0 {
                            return Err(EvalError::Domain {
                                func: "division",
                                value: 0.0,
                            });
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let constant = b.is_constant();
                        let y = if constant {
                            let v = b.eval(&[])?;
                            TaylorScalar::constant(dim, order, v)
                        } else {
                            b.eval_series(vars, dim, order)?
                        };
                        if let Some(n) = integer_exponent(constant, y.value()) {
                            if x.value() == 0.0 && n < 0 {
                                return Err(EvalError::Domain {
                                    func: "negative power",
                                    value: 0.0,
                                });
                            }
                            x.powi(n)
                        } else {
                            if x.value() <= 0.0 {
                                return Err(EvalError::Domain {
                                    func: "power",
                                    value: x.value(),
                                });
                            }
                            if constant {
                                x.powf(y.value())
                            } else {
                                x.pow(&y)
                            }
                        }
                    }
                }
            }
            Expr::Call(func, a) => {
                let x = a.eval_series(vars, dim, order)?;
                let v = x.value();
                match func {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(EvalError::Domain {
                                func: "log",
                                value: v,
                            });
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Sqrt => {
                        if v < 0.0 || (v == 0.0 && order > 0) {
                            return Err(EvalError::Domain {
                                func: "sqrt",
                                value: v,
                            });
                        }
                        x.sqrt()
                    }
                    Func::Abs => {
                        if v == 0.0 && order > 0 {
                            return Err(EvalError::Domain {
                                func: "abs",
                                value: v,
                            });
                        }
                        x.abs()
                    }
                }
            }
        };
        check_series(out)
    }
}
