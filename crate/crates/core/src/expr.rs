//! Small arithmetic expression language for right-hand sides and boundary
//! data, with symbolic differentiation.
//!
//! Grammar: numbers, `pi`, the variables `y1 y2 z1 z2 z3 u`, the binary
//! operators `+ - * / ^`, unary minus, parentheses and the functions
//! `exp log sqrt sin cos tan sinh cosh tanh`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Y1,
    Y2,
    Z1,
    Z2,
    Z3,
    U,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::Y1, Var::Y2, Var::Z1, Var::Z2, Var::Z3, Var::U];

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            Var::Y1 => "y1",
            Var::Y2 => "y2",
            Var::Z1 => "z1",
            Var::Z2 => "z2",
            Var::Z3 => "z3",
            Var::U => "u",
        }
    }

    fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

fn num(x: f64) -> Node {
    Node::Num(x)
}

// Constructors with light constant folding so derivative trees stay small.
fn add(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x + y),
        (Node::Num(z), e) | (e, Node::Num(z)) if z == 0.0 => e,
        (a, b) => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x - y),
        (e, Node::Num(z)) if z == 0.0 => e,
        (Node::Num(z), e) if z == 0.0 => neg(e),
        (a, b) => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x * y),
        (Node::Num(z), _) | (_, Node::Num(z)) if z == 0.0 => num(0.0),
        (Node::Num(o), e) | (e, Node::Num(o)) if o == 1.0 => e,
        (a, b) => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x / y),
        (Node::Num(z), _) if z == 0.0 => num(0.0),
        (e, Node::Num(o)) if o == 1.0 => e,
        (a, b) => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(x) => num(-x),
        Node::Neg(e) => *e,
        e => Node::Neg(Box::new(e)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x.powf(y)),
        (_, Node::Num(z)) if z == 0.0 => num(1.0),
        (e, Node::Num(o)) if o == 1.0 => e,
        (a, b) => Node::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Node) -> Node {
    match a {
        Node::Num(x) => num(f.apply(x)),
        a => Node::Call(f, Box::new(a)),
    }
}

impl Node {
    pub fn eval(&self, vars: &[f64; 6]) -> f64 {
        match self {
            Node::Num(x) => *x,
            Node::Var(v) => vars[v.index()],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => {
                let (x, y) = (a.eval(vars), b.eval(vars));
                if y.fract() == 0.0 && y.abs() < 64.0 {
                    x.powi(y as i32)
                } else {
                    x.powf(y)
                }
            }
            Node::Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(v),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Node {
        if !self.depends_on(v) {
            return num(0.0);
        }
        match self {
            Node::Num(_) => num(0.0),
            Node::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
            Node::Neg(a) => neg(a.diff(v)),
            Node::Add(a, b) => add(a.diff(v), b.diff(v)),
            Node::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Node::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone()),
                mul((**a).clone(), b.diff(v)),
            ),
            Node::Div(a, b) => div(
                sub(
                    mul(a.diff(v), (**b).clone()),
                    mul((**a).clone(), b.diff(v)),
                ),
                pow((**b).clone(), num(2.0)),
            ),
            Node::Pow(a, b) => {
                if !b.depends_on(v) {
                    // d(a^c) = c a^(c-1) a'
                    mul(
                        mul((**b).clone(), pow((**a).clone(), sub((**b).clone(), num(1.0)))),
                        a.diff(v),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.diff(v), call(Func::Log, (**a).clone())),
                            div(mul((**b).clone(), a.diff(v)), (**a).clone()),
                        ),
                    )
                }
            }
            Node::Call(f, a) => {
                let x = (**a).clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, x),
                    Func::Log => div(num(1.0), x),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, x)),
                    Func::Sin => call(Func::Cos, x),
                    Func::Cos => neg(call(Func::Sin, x)),
                    Func::Tan => div(num(1.0), pow(call(Func::Cos, x), num(2.0))),
                    Func::Sinh => call(Func::Cosh, x),
                    Func::Cosh => call(Func::Sinh, x),
                    Func::Tanh => div(num(1.0), pow(call(Func::Cosh, x), num(2.0))),
                };
                mul(outer, a.diff(v))
            }
        }
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Node) -> Node {
        let s = |n: &Node| n.substitute(v, with);
        match self {
            Node::Num(x) => num(*x),
            Node::Var(w) if *w == v => with.clone(),
            Node::Var(w) => Node::Var(*w),
            Node::Neg(a) => neg(s(a)),
            Node::Add(a, b) => add(s(a), s(b)),
            Node::Sub(a, b) => sub(s(a), s(b)),
            Node::Mul(a, b) => mul(s(a), s(b)),
            Node::Div(a, b) => div(s(a), s(b)),
            Node::Pow(a, b) => pow(s(a), s(b)),
            Node::Call(f, a) => call(*f, s(a)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(..) => 3,
            Node::Pow(..) => 4,
            Node::Num(x) if *x < 0.0 => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |n: &Node, min: u8, f: &mut fmt::Formatter<'_>| {
            if n.precedence() < min {
                write!(f, "({n})")
            } else {
                write!(f, "{n}")
            }
        };
        match self {
            Node::Num(x) => write!(f, "{x:?}"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => {
                f.write_str("-")?;
                wrap(a, 4, f)
            }
            Node::Add(a, b) => {
                wrap(a, 1, f)?;
                f.write_str(" + ")?;
                wrap(b, 2, f)
            }
            Node::Sub(a, b) => {
                wrap(a, 1, f)?;
                f.write_str(" - ")?;
                wrap(b, 2, f)
            }
            Node::Mul(a, b) => {
                wrap(a, 2, f)?;
                f.write_str(" * ")?;
                wrap(b, 3, f)
            }
            Node::Div(a, b) => {
                wrap(a, 2, f)?;
                f.write_str(" / ")?;
                wrap(b, 3, f)
            }
            Node::Pow(a, b) => {
                wrap(a, 5, f)?;
                f.write_str("^")?;
                wrap(b, 4, f)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed expression together with the variables it may reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    node: Node,
    source: String,
}

impl Expression {
    /// Parses `text`, rejecting variables outside `allowed`.
    pub fn parse(text: &str, allowed: &[Var]) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            allowed,
        };
        let node = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input in '{text}'"
            )));
        }
        Ok(Self {
            node,
            source: text.trim().to_string(),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            node: num(c),
            source: format!("{c:?}"),
        }
    }

    pub fn from_node(node: Node) -> Self {
        let source = node.to_string();
        Self { node, source }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Canonical text, parseable back into the same tree.
    pub fn normalized(&self) -> String {
        self.node.to_string()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.node.depends_on(v)
    }

    pub fn eval(&self, vars: &[f64; 6]) -> f64 {
        self.node.eval(vars)
    }

    pub fn diff(&self, v: Var) -> Expression {
        Expression::from_node(self.node.diff(v))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.node {
            Node::Num(x) => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad number '{s}'")))?,
            ));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn eat(&mut self, c: char) -> bool {
        if self.tokens.get(self.pos) == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Node::Num(x) => Node::Num(-x),
                e => Node::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(x)) => {
                self.pos += 1;
                Ok(Node::Num(x))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                if let Some(f) = Func::ALL.into_iter().find(|f| f.name() == name) {
                    if !self.eat('(') {
                        return Err(Error::Parse(format!("expected '(' after {name}")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Parse("missing ')'".into()));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match Var::from_name(&name) {
                    Some(v) if self.allowed.contains(&v) => Ok(Node::Var(v)),
                    Some(v) => Err(Error::Parse(format!(
                        "variable '{}' is not available here",
                        v.name()
                    ))),
                    None => Err(Error::Parse(format!("unknown identifier '{name}'"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}
