//! Arithmetic expressions over the variables `x`, `t`, `u`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          (right associative)
//! atom    := number | 'pi' | 'x' | 't' | 'u' | func '(' args ')' | '(' sum ')'
//! ```
//!
//! Functions: `sin cos exp log sqrt abs floor` (one argument) and `min max`
//! (two arguments).

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
    U,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::U => "u",
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Floor,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Floor,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Syntax tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval<T: Real>(&self, env: &Bindings<T>) -> std::result::Result<T, Var> {
        Ok(match self {
            Node::Num(v) => T::lit(*v),
            Node::Pi => T::lit(std::f64::consts::PI),
            Node::Var(v) => env.get(*v).ok_or(*v)?,
            Node::Neg(a) => -a.eval(env)?,
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call(f, args) => {
                let a = args[0].eval(env)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Floor => a.floor(),
                    Func::Min => a.min(args[1].eval(env)?),
                    Func::Max => a.max(args[1].eval(env)?),
                }
            }
        })
    }

    fn visit_vars(&self, out: &mut [bool; 3]) {
        match self {
            Node::Var(v) => out[*v as usize] = true,
            Node::Neg(a) => a.visit_vars(out),
            Node::Bin(_, a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.visit_vars(out)),
            Node::Num(_) | Node::Pi => {}
        }
    }
}

// Every compound node is parenthesised so that re-parsing reproduces the tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Pi => f.write_str("pi"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
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

/// Values bound to the expression variables.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<T> {
    pub x: Option<T>,
    pub t: Option<T>,
    pub u: Option<T>,
}

impl<T: Real> Bindings<T> {
    pub fn xt(x: T, t: T) -> Self {
        Bindings {
            x: Some(x),
            t: Some(t),
            u: None,
        }
    }

    pub fn xtu(x: T, t: T, u: T) -> Self {
        Bindings {
            x: Some(x),
            t: Some(t),
            u: Some(u),
        }
    }

    fn get(&self, v: Var) -> Option<T> {
        match v {
            Var::X => self.x,
            Var::T => self.t,
            Var::U => self.u,
        }
    }
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: [bool; 3],
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser {
            src: source.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        if p.at_end() {
            return Err(p.error("empty expression"));
        }
        let root = p.sum()?;
        p.skip_ws();
        if !p.at_end() {
            let msg = if p.peek() == Some(b')') {
                "unbalanced parentheses: unexpected ')'"
            } else {
                "unexpected trailing input"
            };
            return Err(p.error(msg));
        }
        Ok(Self::from_node(root))
    }

    pub fn from_node(root: Node) -> Self {
        let mut vars = [false; 3];
        root.visit_vars(&mut vars);
        Expression { root, vars }
    }

    pub fn constant(v: f64) -> Self {
        let node = if v < 0.0 {
            Node::Neg(Box::new(Node::Num(-v)))
        } else {
            Node::Num(v)
        };
        Self::from_node(node)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn uses(&self, v: Var) -> bool {
        self.vars[v as usize]
    }

    /// Value when the expression does not reference any variable.
    pub fn as_constant(&self) -> Option<f64> {
        if self.vars.iter().any(|&b| b) {
            return None;
        }
        self.root.eval::<f64>(&Bindings::default()).ok()
    }

    /// Checked evaluation: unbound variables and non-finite results are errors.
    pub fn eval<T: Real>(&self, env: &Bindings<T>) -> Result<T> {
        let v = self
            .root
            .eval(env)
            .map_err(|v| Error::Domain(format!("unbound variable `{}`", v.name())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!(
                "non-finite result {v} evaluating `{}`",
                self.root
            )))
        }
    }

    /// Evaluation for the hot path; unbound variables read as NaN and the
    /// caller is expected to check finiteness of the filled arrays.
    #[inline]
    pub fn eval_raw<T: Real>(&self, env: &Bindings<T>) -> T {
        self.root.eval(env).unwrap_or_else(|_| T::nan())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for Expression {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expression::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        self.error_at(self.pos, message)
    }

    fn error_at(&self, offset: usize, message: &str) -> Error {
        Error::Syntax {
            offset,
            message: message.to_string(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error_at(start, "unbalanced parentheses: missing ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match name {
                    "x" => Ok(Node::Var(Var::X)),
                    "t" => Ok(Node::Var(Var::T)),
                    "u" => Ok(Node::Var(Var::U)),
                    "pi" => Ok(Node::Pi),
                    _ => {
                        let func = Func::lookup(name).ok_or_else(|| {
                            self.error_at(start, &format!("unknown identifier `{name}`"))
                        })?;
                        self.call(func, start)
                    }
                }
            }
            Some(b')') => Err(self.error("unbalanced parentheses: unexpected ')'")),
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn call(&mut self, func: Func, start: usize) -> Result<Node> {
        if !self.eat(b'(') {
            return Err(self.error(&format!("expected '(' after `{}`", func.name())));
        }
        let open = self.pos - 1;
        let mut args = Vec::new();
        if !self.eat(b')') {
            loop {
                args.push(self.sum()?);
                if self.eat(b',') {
                    continue;
                }
                if self.eat(b')') {
                    break;
                }
                return Err(self.error_at(open, "unbalanced parentheses: missing ')'"));
            }
        }
        if args.len() != func.arity() {
            return Err(self.error_at(
                start,
                &format!(
                    "wrong arity: `{}` takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
            ));
        }
        Ok(Node::Call(func, args))
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| self.error_at(start, &format!("malformed number `{text}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str) -> f64 {
        Expression::parse(src)
            .unwrap()
            .eval(&Bindings::<f64>::default())
            .unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1+2*3"), 7.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2^-1"), 0.5);
        assert_eq!(ev("10-4-3"), 3.0);
        assert_eq!(ev("8/4/2"), 1.0);
        assert!((ev("sin(pi/2)") - 1.0).abs() < 1e-15);
        assert_eq!(ev("1.5e2 + 2E-1"), 150.2);
        assert_eq!(ev("max(1, min(3, 2)) + floor(2.7) + abs(-1)"), 5.0);
    }

    #[test]
    fn bindings() {
        let e = Expression::parse("1+0.5*sin(t)").unwrap();
        assert_eq!(e.eval(&Bindings::xt(0.3, 0.0)).unwrap(), 1.0);
        let e = Expression::parse("1+0.5*cos(2*pi*x)").unwrap();
        let v: f64 = e.eval(&Bindings::xt(0.25, 0.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(e.uses(Var::X) && !e.uses(Var::T) && !e.uses(Var::U));
    }

    #[test]
    fn domain_errors() {
        let e = Expression::parse("sqrt(-1)").unwrap();
        assert!(matches!(
            e.eval(&Bindings::<f64>::default()),
            Err(Error::Domain(_))
        ));
        let e = Expression::parse("log(x)").unwrap();
        assert!(e.eval(&Bindings::xt(-1.0, 0.0)).is_err());
        let e = Expression::parse("u*2").unwrap();
        let err = e.eval(&Bindings::xt(0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("unbound variable `u`"));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let off = |s: &str| match Expression::parse(s) {
            Err(Error::Syntax { offset, .. }) => offset,
            other => panic!("expected syntax error for {s:?}, got {other:?}"),
        };
        assert_eq!(off("1 + foo(2)"), 4);
        assert_eq!(off("(1+2"), 0);
        assert_eq!(off("1+2)"), 3);
        assert_eq!(off("min(1)"), 0);
        assert_eq!(off("2 * sin(1, 2)"), 4);
        assert_eq!(off("1 +"), 3);
        assert!(Expression::parse("   ").is_err());
    }

    #[test]
    fn display_reparses() {
        for src in ["1+2*3", "-x^2^t", "max(sin(x), -cos(t*pi))/3.25e-3", "u*(1-u)"] {
            let e = Expression::parse(src).unwrap();
            let again = Expression::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src}");
        }
    }

    #[test]
    fn constants() {
        assert_eq!(Expression::constant(-0.5).as_constant(), Some(-0.5));
        assert_eq!(Expression::parse("2*pi").unwrap().as_constant(), Some(2.0 * std::f64::consts::PI));
        assert_eq!(Expression::parse("2*t").unwrap().as_constant(), None);
    }

    #[test]
    fn generic_scalar() {
        let e = Expression::parse("exp(x) - 1").unwrap();
        let v: f32 = e.eval(&Bindings::xt(1.0f32, 0.0)).unwrap();
        assert!((v - (std::f32::consts::E - 1.0)).abs() < 1e-6);
    }
}
