//! Small arithmetic expression language for scenario closures.
//!
//! Expressions are parsed against a fixed list of variable names and can be
//! evaluated or differentiated symbolically. Supported: `+ - * / ^` (also
//! `**`), unary minus, `pow(a,b)`, `exp`, `ln`/`log`, `sin`, `cos`, `tan`,
//! `sqrt`, `abs`, `sgn`, and the constants `pi` and `e`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Abs,
    Sgn,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sgn" | "sign" => Func::Sgn,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sgn => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

use Node::*;

fn c(v: f64) -> Node {
    Const(v)
}

fn neg(a: Node) -> Node {
    match a {
        Const(v) => Const(-v),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (a, b) {
        (Const(x), Const(y)) => Const(x + y),
        (Const(z), other) | (other, Const(z)) if z == 0.0 => other,
        (a, Neg(b)) => sub(a, *b),
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (a, b) {
        (Const(x), Const(y)) => Const(x - y),
        (a, Const(z)) if z == 0.0 => a,
        (Const(z), b) if z == 0.0 => neg(b),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (a, b) {
        (Const(x), Const(y)) => Const(x * y),
        (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
        (Const(o), other) | (other, Const(o)) if o == 1.0 => other,
        (Const(m), other) | (other, Const(m)) if m == -1.0 => neg(other),
        (Neg(a), b) => neg(mul(*a, b)),
        (a, Neg(b)) => neg(mul(a, *b)),
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (a, b) {
        (Const(x), Const(y)) if y != 0.0 => Const(x / y),
        (Const(z), _) if z == 0.0 => Const(0.0),
        (a, Const(o)) if o == 1.0 => a,
        (a, b) => Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (a, b) {
        (Const(x), Const(y)) => Const(x.powf(y)),
        (_, Const(z)) if z == 0.0 => Const(1.0),
        (a, Const(o)) if o == 1.0 => a,
        (a, b) => Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Node) -> Node {
    match a {
        Const(x) => Const(f.apply(x)),
        a => Call(f, Box::new(a)),
    }
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Const(v) => *v,
            Var(i) => vars[*i],
            Neg(a) => -a.eval(vars),
            Add(a, b) => a.eval(vars) + b.eval(vars),
            Sub(a, b) => a.eval(vars) - b.eval(vars),
            Mul(a, b) => a.eval(vars) * b.eval(vars),
            Div(a, b) => a.eval(vars) / b.eval(vars),
            Pow(a, b) => {
                let base = a.eval(vars);
                match **b {
                    Const(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(vars)),
                }
            }
            Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    fn diff(&self, var: usize) -> Node {
        match self {
            Const(_) => c(0.0),
            Var(i) => c(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => {
                let num = sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var)));
                div(num, pow((**b).clone(), c(2.0)))
            }
            Pow(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if let Const(e) = **b {
                    mul(mul(c(e), pow((**a).clone(), c(e - 1.0))), da)
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let inner = add(
                        mul(db, call(Func::Ln, (**a).clone())),
                        div(mul((**b).clone(), da), (**a).clone()),
                    );
                    mul(self.clone(), inner)
                }
            }
            Call(f, a) => {
                let da = a.diff(var);
                let a = (**a).clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, a),
                    Func::Ln => div(c(1.0), a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tan => div(c(1.0), pow(call(Func::Cos, a), c(2.0))),
                    Func::Sqrt => div(c(0.5), call(Func::Sqrt, a)),
                    Func::Abs => call(Func::Sgn, a),
                    Func::Sgn => c(0.0),
                };
                mul(outer, da)
            }
        }
    }

    fn uses_var(&self, var: usize) -> bool {
        match self {
            Const(_) => false,
            Var(i) => *i == var,
            Neg(a) | Call(_, a) => a.uses_var(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.uses_var(var) || b.uses_var(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(..) => 3,
            Pow(..) => 4,
            Const(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    fn write(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |node: &Node, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if node.precedence() < min {
                write!(f, "(")?;
                node.write(names, f)?;
                write!(f, ")")
            } else {
                node.write(names, f)
            }
        };
        match self {
            Const(v) => write!(f, "{v}"),
            Var(i) => write!(f, "{}", names[*i]),
            Neg(a) => {
                write!(f, "-")?;
                wrap(a, 4, f)
            }
            Add(a, b) => {
                wrap(a, 1, f)?;
                write!(f, " + ")?;
                wrap(b, 2, f)
            }
            Sub(a, b) => {
                wrap(a, 1, f)?;
                write!(f, " - ")?;
                wrap(b, 2, f)
            }
            Mul(a, b) => {
                wrap(a, 2, f)?;
                write!(f, "*")?;
                wrap(b, 3, f)
            }
            Div(a, b) => {
                wrap(a, 2, f)?;
                write!(f, "/")?;
                wrap(b, 4, f)
            }
            Pow(a, b) => {
                wrap(a, 5, f)?;
                write!(f, "^")?;
                wrap(b, 4, f)
            }
            Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(names, f)?;
                write!(f, ")")
            }
        }
    }
}

/// Parsed expression over a fixed, ordered variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            vars: &vars,
        };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Expression(format!("unexpected trailing input in '{source}'")));
        }
        Ok(Self { root, vars })
    }

    /// Coordinate expression in `u1..uN`.
    pub fn parse_coords(source: &str, dim: usize) -> Result<Self> {
        let names: Vec<String> = (1..=dim).map(|i| format!("u{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::parse(source, &refs)
    }

    pub fn constant(value: f64, vars: &[&str]) -> Self {
        Self {
            root: c(value),
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.vars.len());
        self.root.eval(args)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        Expr {
            root: self.root.diff(var),
            vars: self.vars.clone(),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.root.uses_var(var)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Const(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.vars, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
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
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number '{text}'")))?;
            out.push(Token::Num(value));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            match ch {
                '*' if chars.get(i + 1) == Some(&'*') => {
                    out.push(Token::Op('^'));
                    i += 1;
                }
                '+' | '-' | '*' | '/' | '^' => out.push(Token::Op(ch)),
                '(' => out.push(Token::LParen),
                ')' => out.push(Token::RParen),
                ',' => out.push(Token::Comma),
                other => return Err(Error::Expression(format!("unexpected character '{other}' in '{src}'"))),
            }
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(Error::Expression(format!("expected {tok:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { add(lhs, rhs) } else { sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { mul(lhs, rhs) } else { div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(c(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some(Token::LParen) = self.peek() {
                    self.pos += 1;
                    let first = self.expr()?;
                    let node = if name == "pow" {
                        self.expect(Token::Comma)?;
                        let second = self.expr()?;
                        pow(first, second)
                    } else {
                        let func = Func::from_name(&name)
                            .ok_or_else(|| Error::Expression(format!("unknown function '{name}'")))?;
                        call(func, first)
                    };
                    self.expect(Token::RParen)?;
                    return Ok(node);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(c(std::f64::consts::PI)),
                    "e" => Ok(c(std::f64::consts::E)),
                    _ => Err(Error::Expression(format!("unknown variable '{name}'"))),
                }
            }
            other => Err(Error::Expression(format!("unexpected token {other:?}"))),
        }
    }
}
