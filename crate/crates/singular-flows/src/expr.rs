//! Parsing and evaluation of real-valued coefficient functions.
//!
//! Expressions are plain infix arithmetic over a fixed variable list with the
//! function set {sqrt, exp, ln, sin, cos, pow, abs}. Precedence is
//! unary minus > power > mul/div > add/sub, all binary operators associate to
//! the left, and there is no implicit multiplication. Evaluation is either
//! plain `f64` or a truncated Taylor expansion through the jet engine;
//! derivatives never come from symbolic rewriting.

use crate::jets::{Jet, JetError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` expects {expected} argument(s), got {got} (at byte {offset})")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::ArityMismatch { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { subexpr: String, message: String },
    #[error("point has {got} coordinates but the expression has {expected} free variables")]
    PointDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Pow,
    Abs,
}

impl Function {
    fn lookup(name: &str) -> Option<Function> {
        match name {
            "sqrt" => Some(Function::Sqrt),
            "exp" => Some(Function::Exp),
            "ln" => Some(Function::Ln),
            "sin" => Some(Function::Sin),
            "cos" => Some(Function::Cos),
            "pow" => Some(Function::Pow),
            "abs" => Some(Function::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Function::Sqrt => "sqrt",
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Pow => "pow",
            Function::Abs => "abs",
        }
    }

    fn arity(self) -> usize {
        match self {
            Function::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Constant(f64),
    Variable(usize),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Function, Vec<Node>),
}

/// A parsed expression over an ordered list of free variables.
///
/// Immutable after construction; evaluation is pure and safe to run from
/// multiple threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Node,
    free_vars: Vec<String>,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
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

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((Tok::Plus, start));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((Tok::Minus, start));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((Tok::Star, start));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((Tok::Slash, start));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((Tok::Caret, start));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((Tok::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Tok::RParen, start));
                    self.pos += 1;
                }
                b',' => {
                    out.push((Tok::Comma, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'.' => {
                    let value = self.number(start)?;
                    out.push((Tok::Number(value), start));
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric()
                            || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.src[start..self.pos])
                        .unwrap()
                        .to_string();
                    out.push((Tok::Ident(name), start));
                }
                other => {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", other as char),
                    });
                }
            }
        }
        Ok(out)
    }

    fn number(&mut self, start: usize) -> Result<f64, ParseError> {
        let mut saw_digit = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
            saw_digit = true;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
                saw_digit = true;
            }
        }
        if !saw_digit {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            let mut exp_digit = false;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
                exp_digit = true;
            }
            if !exp_digit {
                // `2e` followed by something else: the `e` belongs elsewhere.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src_len, |t| t.1)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<usize, ParseError> {
        match self.bump() {
            Some((t, off)) if t == tok => Ok(off),
            Some((_, off)) => Err(ParseError::Syntax {
                offset: off,
                message: format!("expected {what}"),
            }),
            None => Err(ParseError::Syntax {
                offset: self.src_len,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.term()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            node = Node::Binary(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.factor()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            node = Node::Binary(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let mut node = self.base()?;
        while let Some((Tok::Caret, _)) = self.peek() {
            self.pos += 1;
            let rhs = self.base()?;
            node = Node::Binary(BinaryOp::Pow, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn base(&mut self) -> Result<Node, ParseError> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.pos += 1;
            let inner = self.base()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.bump() {
            Some((Tok::Number(v), _)) => Ok(Node::Constant(v)),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some((Tok::Ident(name), off)) => {
                if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Variable(idx));
                }
                if let Some(func) = Function::lookup(&name) {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let mut args = vec![self.expr()?];
                    while let Some((Tok::Comma, _)) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() != func.arity() {
                        return Err(ParseError::ArityMismatch {
                            name: name.clone(),
                            expected: func.arity(),
                            got: args.len(),
                            offset: off,
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                Err(ParseError::UnknownIdentifier { name, offset: off })
            }
            Some((_, off)) => Err(ParseError::Syntax {
                offset: off,
                message: "expected a value".into(),
            }),
            None => Err(ParseError::Syntax {
                offset: self.src_len,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parse `source` over the ordered free-variable list.
pub fn parse(source: &str, variables: &[&str]) -> Result<Expression, ParseError> {
    assert!(!variables.is_empty(), "variable list must be nonempty");
    let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
    {
        let mut seen = vars.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), vars.len(), "variable names must be distinct");
    }
    let toks = Lexer::new(source).tokens()?;
    let mut parser = Parser {
        toks,
        pos: 0,
        vars: &vars,
        src_len: source.len(),
    };
    let ast = parser.expr()?;
    if let Some((_, off)) = parser.peek() {
        return Err(ParseError::Syntax {
            offset: *off,
            message: "trailing input".into(),
        });
    }
    let _ = parser.here();
    Ok(Expression {
        ast,
        free_vars: vars,
    })
}

impl Expression {
    pub fn free_vars(&self) -> &[String] {
        &self.free_vars
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    /// Build an expression that is a plain constant.
    pub fn constant(value: f64, variables: &[&str]) -> Expression {
        Expression {
            ast: Node::Constant(value),
            free_vars: variables.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Plain evaluation at a point.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.free_vars.len() {
            return Err(EvalError::PointDimension {
                expected: self.free_vars.len(),
                got: point.len(),
            });
        }
        self.eval_node(&self.ast, point)
    }

    fn eval_node(&self, node: &Node, point: &[f64]) -> Result<f64, EvalError> {
        match node {
            Node::Constant(v) => Ok(*v),
            Node::Variable(i) => Ok(point[*i]),
            Node::Neg(inner) => Ok(-self.eval_node(inner, point)?),
            Node::Binary(op, l, r) => {
                let a = self.eval_node(l, point)?;
                let b = self.eval_node(r, point)?;
                match op {
                    BinaryOp::Add => Ok(a + b),
                    BinaryOp::Sub => Ok(a - b),
                    BinaryOp::Mul => Ok(a * b),
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain(node, "division by zero"));
                        }
                        Ok(a / b)
                    }
                    BinaryOp::Pow => self.eval_pow(node, a, b),
                }
            }
            Node::Call(func, args) => {
                let a = self.eval_node(&args[0], point)?;
                match func {
                    Function::Sqrt => {
                        if a < 0.0 {
                            return Err(self.domain(node, "square root of negative value"));
                        }
                        Ok(a.sqrt())
                    }
                    Function::Exp => Ok(a.exp()),
                    Function::Ln => {
                        if a <= 0.0 {
                            return Err(self.domain(node, "logarithm of non-positive value"));
                        }
                        Ok(a.ln())
                    }
                    Function::Sin => Ok(a.sin()),
                    Function::Cos => Ok(a.cos()),
                    Function::Abs => Ok(a.abs()),
                    Function::Pow => {
                        let b = self.eval_node(&args[1], point)?;
                        self.eval_pow(node, a, b)
                    }
                }
            }
        }
    }

    fn eval_pow(&self, node: &Node, base: f64, exponent: f64) -> Result<f64, EvalError> {
        if base > 0.0 {
            return Ok(base.powf(exponent));
        }
        if exponent.fract() == 0.0 && exponent.abs() < 1e9 {
            let n = exponent as i32;
            if base == 0.0 && n < 0 {
                return Err(self.domain(node, "zero raised to a negative power"));
            }
            return Ok(base.powi(n));
        }
        Err(self.domain(
            node,
            "real power needs a positive base or an integer exponent",
        ))
    }

    fn domain(&self, node: &Node, message: &str) -> EvalError {
        EvalError::Domain {
            subexpr: self.render(node),
            message: message.into(),
        }
    }

    /// Truncated Taylor expansion at `point` up to total degree `order`.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet, EvalError> {
        if point.len() != self.free_vars.len() {
            return Err(EvalError::PointDimension {
                expected: self.free_vars.len(),
                got: point.len(),
            });
        }
        let nvars = point.len();
        let args: Vec<Jet> = (0..nvars)
            .map(|i| Jet::variable(nvars, order, i, point[i]))
            .collect();
        self.eval_with_jets(&args)
    }

    /// Evaluate with arbitrary jet assignments for each free variable. All
    /// assignments must share one shape; this is how coefficient functions of
    /// few variables are lifted into larger phase spaces.
    pub fn eval_with_jets(&self, args: &[Jet]) -> Result<Jet, EvalError> {
        if args.len() != self.free_vars.len() {
            return Err(EvalError::PointDimension {
                expected: self.free_vars.len(),
                got: args.len(),
            });
        }
        self.jet_node(&self.ast, args)
    }

    fn jet_node(&self, node: &Node, args: &[Jet]) -> Result<Jet, EvalError> {
        let shape = &args[0];
        match node {
            Node::Constant(v) => Ok(Jet::constant(shape.nvars(), shape.order(), *v)),
            Node::Variable(i) => Ok(args[*i].clone()),
            Node::Neg(inner) => Ok(self.jet_node(inner, args)?.neg()),
            Node::Binary(op, l, r) => {
                let a = self.jet_node(l, args)?;
                let b = self.jet_node(r, args)?;
                match op {
                    BinaryOp::Add => a.add(&b).map_err(|e| self.jet_err(node, e)),
                    BinaryOp::Sub => a.sub(&b).map_err(|e| self.jet_err(node, e)),
                    BinaryOp::Mul => a.mul(&b).map_err(|e| self.jet_err(node, e)),
                    BinaryOp::Div => a.div(&b).map_err(|e| self.jet_err(node, e)),
                    BinaryOp::Pow => self.jet_pow(node, &a, &b),
                }
            }
            Node::Call(func, call_args) => {
                let a = self.jet_node(&call_args[0], args)?;
                let result = match func {
                    Function::Sqrt => a.sqrt(),
                    Function::Exp => a.exp(),
                    Function::Ln => a.ln(),
                    Function::Sin => a.sin(),
                    Function::Cos => a.cos(),
                    Function::Abs => a.abs(),
                    Function::Pow => {
                        let b = self.jet_node(&call_args[1], args)?;
                        return self.jet_pow(node, &a, &b);
                    }
                };
                result.map_err(|e| self.jet_err(node, e))
            }
        }
    }

    fn jet_pow(&self, node: &Node, base: &Jet, exponent: &Jet) -> Result<Jet, EvalError> {
        let mut nonconst = exponent.clone();
        let e0 = nonconst.value();
        nonconst = nonconst.add_scalar(-e0);
        let exponent_is_constant = nonconst.max_abs() == 0.0;
        if exponent_is_constant {
            if e0.fract() == 0.0 && e0.abs() < 1e9 {
                return base.powi(e0 as i32).map_err(|e| self.jet_err(node, e));
            }
            return base.powf(e0).map_err(|e| self.jet_err(node, e));
        }
        // Variable exponent: x^y = exp(y·ln x), positive base required.
        let ln = base.ln().map_err(|e| self.jet_err(node, e))?;
        exponent
            .mul(&ln)
            .and_then(|p| p.exp())
            .map_err(|e| self.jet_err(node, e))
    }

    fn jet_err(&self, node: &Node, err: JetError) -> EvalError {
        EvalError::Domain {
            subexpr: self.render(node),
            message: err.to_string(),
        }
    }

    /// Render back to parseable text; reparsing yields a structurally
    /// identical tree.
    pub fn pretty(&self) -> String {
        self.render(&self.ast)
    }

    fn render(&self, node: &Node) -> String {
        fn level(node: &Node) -> u8 {
            match node {
                Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
                Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
                Node::Binary(BinaryOp::Pow, ..) => 3,
                Node::Neg(_) => 4,
                _ => 5,
            }
        }
        match node {
            Node::Constant(v) => {
                if *v < 0.0 {
                    format!("({v})")
                } else {
                    format!("{v}")
                }
            }
            Node::Variable(i) => self.free_vars[*i].clone(),
            Node::Neg(inner) => {
                let body = self.render(inner);
                if level(inner) < 4 {
                    format!("-({body})")
                } else {
                    format!("-{body}")
                }
            }
            Node::Binary(op, l, r) => {
                let my = level(node);
                let ls = self.render(l);
                let rs = self.render(r);
                let ls = if level(l) < my { format!("({ls})") } else { ls };
                let rs = if level(r) <= my {
                    format!("({rs})")
                } else {
                    rs
                };
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                };
                format!("{ls} {sym} {rs}")
            }
            Node::Call(func, args) => {
                let rendered: Vec<String> = args.iter().map(|a| self.render(a)).collect();
                format!("{}({})", func.name(), rendered.join(", "))
            }
        }
    }
}
