//! A small differentiable expression language for scalar fields.
//!
//! Grammar (usual precedence, `^` binds tightest and is right-associative,
//! unary minus binds looser than `^` so `-x^2 = -(x^2)`):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos exp log sqrt`. Constant: `pi`. Variables are the
//! chart names `theta x y z1 t1 z2 t2 z t zeta h` plus `phi`, which parses
//! but is rejected wherever a wave profile is expected. `θ`, `φ`, `ζ` are
//! accepted as aliases.
//!
//! Parenthesized groups are kept in the tree, so printing a parsed field
//! reproduces its source up to whitespace.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jets::{Jet, JetError, JetSpace};

pub const KNOWN_VARIABLES: &[&str] =
    &["theta", "phi", "x", "y", "z1", "t1", "z2", "t2", "z", "t", "zeta", "h"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
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

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num { value: f64, text: String },
    Const { name: String, value: f64 },
    Var(String),
    Neg(Box<Node>),
    Plus(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    Group(Box<Node>),
}

/// A parsed scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    BadNumber(String),
    UnknownIdentifier(String),
    UnknownFunction(String),
    VariableNotInChart(String),
    PhiDependence,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {}", describe(.kind))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::UnexpectedChar(c) => format!("unexpected character '{c}'"),
        ParseErrorKind::UnexpectedToken(t) => format!("unexpected token '{t}'"),
        ParseErrorKind::UnexpectedEnd => "unexpected end of input".into(),
        ParseErrorKind::BadNumber(t) => format!("malformed number '{t}'"),
        ParseErrorKind::UnknownIdentifier(t) => format!("unknown identifier '{t}'"),
        ParseErrorKind::UnknownFunction(t) => format!("unknown function '{t}'"),
        ParseErrorKind::VariableNotInChart(t) => {
            format!("variable '{t}' is not a coordinate of the selected chart")
        }
        ParseErrorKind::PhiDependence => {
            "the wave profile H must not depend on phi (the null angular coordinate)".into()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in '{subexpr}': {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("variable '{0}' has no binding")]
    Unbound(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn canonical_ident(s: &str) -> String {
    match s {
        "θ" => "theta".into(),
        "φ" | "ϕ" => "phi".into(),
        "ζ" => "zeta".into(),
        "π" => "pi".into(),
        _ => s.to_string(),
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value: f64 = text.parse().map_err(|_| ParseError {
                line: l0,
                column: c0,
                kind: ParseErrorKind::BadNumber(text.clone()),
            })?;
            out.push(Spanned { tok: Tok::Num(value, text), line: l0, column: c0 });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(text), line: l0, column: c0 });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(ParseError { line: l0, column: c0, kind: ParseErrorKind::UnexpectedChar(c) })
            }
        };
        advance(1, &mut i, &mut col);
        out.push(Spanned { tok, line: l0, column: c0 });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        let (line, column) = self
            .toks
            .get(self.pos)
            .map(|s| (s.line, s.column))
            .unwrap_or(self.end);
        ParseError { line, column, kind }
    }

    fn unexpected(&self) -> ParseError {
        match self.toks.get(self.pos) {
            None => self.err_here(ParseErrorKind::UnexpectedEnd),
            Some(s) => {
                let text = match &s.tok {
                    Tok::Num(_, t) | Tok::Ident(t) => t.clone(),
                    Tok::Op(c) => c.to_string(),
                    Tok::LParen => "(".into(),
                    Tok::RParen => ")".into(),
                };
                self.err_here(ParseErrorKind::UnexpectedToken(text))
            }
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                Ok(Node::Plus(Box::new(self.unary()?)))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected());
        };
        match tok {
            Tok::Num(value, text) => {
                self.pos += 1;
                Ok(Node::Num { value, text })
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(Node::Group(Box::new(inner)))
            }
            Tok::Ident(raw) => {
                let name = canonical_ident(&raw);
                let at = self.pos;
                self.pos += 1;
                if let Some(Tok::LParen) = self.peek() {
                    let Some(f) = Func::from_name(&name) else {
                        self.pos = at;
                        return Err(self.err_here(ParseErrorKind::UnknownFunction(raw)));
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Node::Const { name: raw, value: std::f64::consts::PI });
                }
                if KNOWN_VARIABLES.contains(&name.as_str()) {
                    return Ok(Node::Var(name));
                }
                self.pos = at;
                Err(self.err_here(ParseErrorKind::UnknownIdentifier(raw)))
            }
            _ => Err(self.unexpected()),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected()),
        }
    }
}

fn find_var<'a>(node: &'a Node, name: &str) -> Option<&'a Node> {
    match node {
        Node::Var(v) if v == name => Some(node),
        Node::Var(_) | Node::Num { .. } | Node::Const { .. } => None,
        Node::Neg(a) | Node::Plus(a) | Node::Call(_, a) | Node::Group(a) => find_var(a, name),
        Node::Binary(_, a, b) => find_var(a, name).or_else(|| find_var(b, name)),
    }
}

/// Locates the first occurrence of `ident` in the source for error reporting.
fn locate(src: &str, pred: impl Fn(&str) -> bool) -> (usize, usize) {
    if let Ok(toks) = lex(src) {
        for t in toks {
            if let Tok::Ident(s) = &t.tok {
                if pred(&canonical_ident(s)) {
                    return (t.line, t.column);
                }
            }
        }
    }
    (1, 1)
}

impl FieldExpr {
    /// Parses any expression over the known variable names.
    pub fn parse(src: &str) -> Result<FieldExpr, ParseError> {
        let toks = lex(src)?;
        let end = {
            let lines: Vec<&str> = src.split('\n').collect();
            (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1)
        };
        let mut p = Parser { toks, pos: 0, end };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.unexpected());
        }
        Ok(FieldExpr { root })
    }

    /// Parses and restricts variables to `chart`.
    pub fn parse_in(src: &str, chart: &[&str]) -> Result<FieldExpr, ParseError> {
        let e = Self::parse(src)?;
        if let Some(bad) = e.variables().into_iter().find(|v| !chart.contains(&v.as_str())) {
            let (line, column) = locate(src, |s| s == bad);
            return Err(ParseError { line, column, kind: ParseErrorKind::VariableNotInChart(bad) });
        }
        Ok(e)
    }

    /// Parses a wave profile: like [`parse_in`](Self::parse_in) but any
    /// occurrence of `phi` is rejected with a dedicated message.
    pub fn parse_profile(src: &str, chart: &[&str]) -> Result<FieldExpr, ParseError> {
        let e = Self::parse(src)?;
        if find_var(&e.root, "phi").is_some() {
            let (line, column) = locate(src, |s| s == "phi");
            return Err(ParseError { line, column, kind: ParseErrorKind::PhiDependence });
        }
        Self::parse_in(src, chart)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn from_node(root: Node) -> FieldExpr {
        FieldExpr { root }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        fn walk(n: &Node, out: &mut BTreeSet<String>) {
            match n {
                Node::Var(v) => {
                    out.insert(v.clone());
                }
                Node::Num { .. } | Node::Const { .. } => {}
                Node::Neg(a) | Node::Plus(a) | Node::Call(_, a) | Node::Group(a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut s = BTreeSet::new();
        walk(&self.root, &mut s);
        s
    }

    pub fn depends_on(&self, var: &str) -> bool {
        find_var(&self.root, var).is_some()
    }

    pub fn is_constant(&self) -> bool {
        self.variables().is_empty()
    }

    /// Evaluates every variable-free subtree into a single number.
    pub fn fold_constants(&self) -> FieldExpr {
        FieldExpr { root: fold(&self.root) }
    }

    /// Multiplies the field by `s`, returning `s*(expr)`.
    pub fn scaled(&self, s: f64) -> FieldExpr {
        FieldExpr {
            root: Node::Binary(
                BinOp::Mul,
                Box::new(Node::Num { value: s, text: format!("{s:?}") }),
                Box::new(Node::Group(Box::new(self.root.clone()))),
            ),
        }
    }

    /// Plain value at a point.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        eval_f64(&self.root, env)
    }

    /// Jet of the field, variables supplied as jets by `env`.
    pub fn eval_jet(
        &self,
        space: &Arc<JetSpace>,
        env: &dyn Fn(&str) -> Option<Jet>,
    ) -> Result<Jet, EvalError> {
        eval_jet(&self.root, env, space)
    }

    /// Expands the field at `point`, the coordinates of which are named by `vars`.
    ///
    /// The returned jet stores `∂^α f / α!`; use [`Jet::partial`] for the
    /// un-normalized derivatives.
    pub fn lift(&self, vars: &[&str], point: &[f64], order: usize) -> Result<Jet, EvalError> {
        let space = JetSpace::new(point.len(), order)?;
        let seeds: Vec<Jet> =
            point.iter().enumerate().map(|(i, &x)| Jet::variable(&space, i, x)).collect();
        let env = |name: &str| vars.iter().position(|v| *v == name).map(|i| seeds[i].clone());
        self.eval_jet(&space, &env)
    }
}

fn fold(n: &Node) -> Node {
    let folded = match n {
        Node::Num { .. } | Node::Const { .. } | Node::Var(_) => return n.clone(),
        Node::Neg(a) => Node::Neg(Box::new(fold(a))),
        Node::Plus(a) => Node::Plus(Box::new(fold(a))),
        Node::Group(a) => Node::Group(Box::new(fold(a))),
        Node::Call(f, a) => Node::Call(*f, Box::new(fold(a))),
        Node::Binary(op, a, b) => Node::Binary(*op, Box::new(fold(a)), Box::new(fold(b))),
    };
    if find_any_var(&folded) {
        return strip_constant_groups(folded);
    }
    match eval_f64(&folded, &|_| None) {
        Ok(v) => Node::Num { value: v, text: format!("{v:?}") },
        Err(_) => folded,
    }
}

fn strip_constant_groups(n: Node) -> Node {
    match n {
        Node::Group(inner) if matches!(*inner, Node::Num { .. }) => *inner,
        Node::Binary(op, a, b) => Node::Binary(
            op,
            Box::new(strip_constant_groups(*a)),
            Box::new(strip_constant_groups(*b)),
        ),
        other => other,
    }
}

fn find_any_var(n: &Node) -> bool {
    match n {
        Node::Var(_) => true,
        Node::Num { .. } | Node::Const { .. } => false,
        Node::Neg(a) | Node::Plus(a) | Node::Call(_, a) | Node::Group(a) => find_any_var(a),
        Node::Binary(_, a, b) => find_any_var(a) || find_any_var(b),
    }
}

fn domain(n: &Node, reason: &str) -> EvalError {
    EvalError::Domain { subexpr: n.to_string(), reason: reason.into() }
}

fn integer_exponent(v: f64) -> Option<i32> {
    (v.fract() == 0.0 && v.abs() <= 64.0).then_some(v as i32)
}

fn eval_f64(n: &Node, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
    Ok(match n {
        Node::Num { value, .. } | Node::Const { value, .. } => *value,
        Node::Var(v) => env(v).ok_or_else(|| EvalError::Unbound(v.clone()))?,
        Node::Neg(a) => -eval_f64(a, env)?,
        Node::Plus(a) | Node::Group(a) => eval_f64(a, env)?,
        Node::Call(f, a) => {
            let x = eval_f64(a, env)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log if x <= 0.0 => return Err(domain(n, "logarithm of a non-positive value")),
                Func::Log => x.ln(),
                Func::Sqrt if x < 0.0 => return Err(domain(n, "square root of a negative value")),
                Func::Sqrt => x.sqrt(),
            }
        }
        Node::Binary(op, a, b) => {
            let x = eval_f64(a, env)?;
            let y = eval_f64(b, env)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y == 0.0 => return Err(domain(n, "division by zero")),
                BinOp::Div => x / y,
                BinOp::Pow => match integer_exponent(y) {
                    Some(k) if k < 0 && x == 0.0 => return Err(domain(n, "division by zero")),
                    Some(k) => x.powi(k),
                    None if x <= 0.0 => {
                        return Err(domain(n, "non-integer power of a non-positive value"))
                    }
                    None => x.powf(y),
                },
            }
        }
    })
}

fn eval_jet(
    n: &Node,
    env: &dyn Fn(&str) -> Option<Jet>,
    space: &Arc<JetSpace>,
) -> Result<Jet, EvalError> {
    let constant = |v: f64| -> Result<Jet, EvalError> { Ok(Jet::constant(space, v)) };
    Ok(match n {
        Node::Num { value, .. } | Node::Const { value, .. } => constant(*value)?,
        Node::Var(v) => env(v).ok_or_else(|| EvalError::Unbound(v.clone()))?,
        Node::Neg(a) => -eval_jet(a, env, space)?,
        Node::Plus(a) | Node::Group(a) => eval_jet(a, env, space)?,
        Node::Call(f, a) => {
            let x = eval_jet(a, env, space)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log if x.value() <= 0.0 => {
                    return Err(domain(n, "logarithm of a non-positive value"))
                }
                Func::Log => x.ln(),
                Func::Sqrt if x.value() <= 0.0 => {
                    return Err(domain(n, "square root of a non-positive value"))
                }
                Func::Sqrt => x.sqrt(),
            }
        }
        Node::Binary(op, a, b) => {
            if *op == BinOp::Pow && !find_any_var(b) {
                let x = eval_jet(a, env, space)?;
                let y = eval_f64(b, &|_| None)?;
                return match integer_exponent(y) {
                    Some(k) if k < 0 && x.value() == 0.0 => Err(domain(n, "division by zero")),
                    Some(k) => Ok(x.powi(k)),
                    None if x.value() <= 0.0 => {
                        Err(domain(n, "non-integer power of a non-positive value"))
                    }
                    None => Ok(x.powf(y)),
                };
            }
            let x = eval_jet(a, env, space)?;
            let y = eval_jet(b, env, space)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y.value() == 0.0 => return Err(domain(n, "division by zero")),
                BinOp::Div => x / y,
                BinOp::Pow if x.value() <= 0.0 => {
                    return Err(domain(n, "variable power of a non-positive value"))
                }
                BinOp::Pow => (y * x.ln()).exp(),
            }
        }
    })
}

fn node_precedence(n: &Node) -> u8 {
    match n {
        Node::Binary(op, ..) => op.precedence(),
        Node::Neg(_) | Node::Plus(_) => 3,
        _ => 5,
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num { text, .. } => write!(f, "{text}"),
            Node::Const { name, .. } => write!(f, "{name}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Group(a) => write!(f, "({a})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Neg(a) | Node::Plus(a) => {
                let sign = if matches!(self, Node::Neg(_)) { "-" } else { "+" };
                if node_precedence(a) < 3 {
                    write!(f, "{sign}({a})")
                } else {
                    write!(f, "{sign}{a}")
                }
            }
            Node::Binary(op, a, b) => {
                let p = op.precedence();
                let (pa, pb) = (node_precedence(a), node_precedence(b));
                let left_paren = if *op == BinOp::Pow { pa <= p } else { pa < p };
                let right_paren = match op {
                    BinOp::Pow => pb < 3,
                    BinOp::Add | BinOp::Mul => pb < p,
                    BinOp::Sub | BinOp::Div => pb <= p,
                };
                if left_paren {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "{}", op.symbol())?;
                if right_paren {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn parses_profile_with_theta_and_z1() {
        let e = FieldExpr::parse("sin(theta)*cos(z1)").unwrap();
        let vars: Vec<String> = e.variables().into_iter().collect();
        assert_eq!(vars, vec!["theta".to_string(), "z1".to_string()]);
    }

    #[test]
    fn phi_is_rejected_in_profile_slot() {
        let err = FieldExpr::parse_profile("H + sin(phi)", &["theta", "x"]).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("H".into()));
        let err = FieldExpr::parse_profile("x*sin(phi)", &["theta", "x"]).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::PhiDependence);
        assert_eq!((err.line, err.column), (1, 7));
        assert!(err.to_string().contains("phi"));
    }

    #[test]
    fn function_call_on_phi_is_rejected() {
        // `H(phi)`: H is not a function name of the language.
        let err = FieldExpr::parse_profile("H(phi)", &["theta"]).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("H".into()));
        let err = FieldExpr::parse_profile("exp(phi)", &["theta"]).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::PhiDependence);
    }

    #[test]
    fn constant_folding_sqrt_six() {
        let e = FieldExpr::parse("sqrt(6)*z").unwrap().fold_constants();
        match e.root() {
            Node::Binary(BinOp::Mul, a, _) => match a.as_ref() {
                Node::Num { value, .. } => assert!((value - 6f64.sqrt()).abs() < 1e-15),
                other => panic!("not folded: {other:?}"),
            },
            other => panic!("unexpected shape {other:?}"),
        }
        assert!(e.to_string().starts_with("2.449489742783178"));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = FieldExpr::parse("x +\n  * y").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        let err = FieldExpr::parse("sin(x").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        let err = FieldExpr::parse("x $ y").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
    }

    #[test]
    fn chart_restriction() {
        let err = FieldExpr::parse_in("x + z1", &["x", "y"]).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::VariableNotInChart("z1".into()));
        assert_eq!(err.column, 5);
    }

    #[test]
    fn print_reproduces_source() {
        for src in ["-x^2 + (y - 1)/(x*y)", "sin(theta)*cos(z1)", "2^-x", "((x))", "1e-3*exp(-(x+y))"] {
            let e = FieldExpr::parse(src).unwrap();
            assert_eq!(strip(&e.to_string()), strip(src));
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let v = |s: &str| FieldExpr::parse(s).unwrap().eval(&|_| None).unwrap();
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("-2^2"), -4.0);
        assert_eq!(v("8/4/2"), 1.0);
        assert_eq!(v("1-2-3"), -4.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = FieldExpr::parse("1 + log(x - 2)").unwrap();
        let err = e.lift(&["x"], &[1.0], 2).unwrap_err();
        match err {
            EvalError::Domain { subexpr, .. } => assert_eq!(subexpr, "log(x-2)"),
            other => panic!("{other:?}"),
        }
        let e = FieldExpr::parse("1/(x-1)").unwrap();
        assert!(matches!(e.lift(&["x"], &[1.0], 1), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn unicode_aliases() {
        let e = FieldExpr::parse("sin(θ) + ζ").unwrap();
        assert!(e.depends_on("theta") && e.depends_on("zeta"));
    }
}
