//! Finite-domain predicate logic simulated with tensors.
//!
//! Entities are one-hot vectors of `N`, sets are 0/1 indicator vectors,
//! relations are tensors `S ⊗ N^⊗m` over a boolean sentence space, and
//! connectives are tensors over `B₂`. Quantifiers are not multilinear, so
//! they are ordinary functions on indicator vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::space::norm;
use crate::tensor::{Method, Tensor, TensorError};

/// Below this norm a `B₁` vector reads as false.
pub const B1_FALSE_NORM: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LogicError {
    #[error("element {0:?} declared twice")]
    DuplicateElement(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("unknown predicate or relation {0:?}")]
    UnknownSymbol(String),
    #[error("{0} has no linear realisation over B1")]
    UnsupportedMode(Connective),
    #[error("expected a 0/1 indicator vector")]
    NotIndicator,
    #[error("vector {0:?} is neither true nor false")]
    NotBoolean(Vec<f64>),
    #[error("{name} used with {got} arguments, its tuples have {want}")]
    Arity { name: String, got: usize, want: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("expression: {0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicDomain {
    elements: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl LogicDomain {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, LogicError> {
        let mut d = LogicDomain {
            elements: Vec::new(),
            index: BTreeMap::new(),
        };
        for n in names {
            d.push(n.into())?;
        }
        Ok(d)
    }

    fn push(&mut self, name: String) -> Result<(), LogicError> {
        if self.index.contains_key(&name) {
            return Err(LogicError::DuplicateElement(name));
        }
        self.index.insert(name.clone(), self.elements.len());
        self.elements.push(name);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn position(&self, name: &str) -> Result<usize, LogicError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| LogicError::UnknownElement(name.to_string()))
    }

    pub fn one_hot(&self, name: &str) -> Result<Vec<f64>, LogicError> {
        let mut v = vec![0.0; self.dim()];
        v[self.position(name)?] = 1.0;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolSpace {
    B1,
    B2,
}

impl BoolSpace {
    pub fn dim(self) -> usize {
        match self {
            BoolSpace::B1 => 1,
            BoolSpace::B2 => 2,
        }
    }

    pub fn top(self) -> Vec<f64> {
        match self {
            BoolSpace::B1 => vec![1.0],
            BoolSpace::B2 => vec![1.0, 0.0],
        }
    }

    /// The zero vector in `B₁`, `⊥` in `B₂`.
    pub fn falsehood(self) -> Vec<f64> {
        match self {
            BoolSpace::B1 => vec![0.0],
            BoolSpace::B2 => vec![0.0, 1.0],
        }
    }

    pub fn from_bool(self, b: bool) -> Vec<f64> {
        if b {
            self.top()
        } else {
            self.falsehood()
        }
    }

    pub fn read(self, v: &[f64]) -> Result<bool, LogicError> {
        match self {
            BoolSpace::B1 if v.len() == 1 => Ok(norm(v) >= B1_FALSE_NORM),
            BoolSpace::B2 if v == [1.0, 0.0] => Ok(true),
            BoolSpace::B2 if v == [0.0, 1.0] => Ok(false),
            _ => Err(LogicError::NotBoolean(v.to_vec())),
        }
    }
}

impl FromStr for BoolSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B1" | "b1" => Ok(BoolSpace::B1),
            "B2" | "b2" => Ok(BoolSpace::B2),
            other => Err(format!("unknown sentence space {other:?}, expected B1 or B2")),
        }
    }
}

pub fn encode_set(domain: &LogicDomain, members: &[&str]) -> Result<Vec<f64>, LogicError> {
    let mut v = vec![0.0; domain.dim()];
    for m in members {
        v[domain.position(m)?] = 1.0;
    }
    Ok(v)
}

/// Diagonal 0/1 matrix; applied to a set it gives the intersection.
pub fn predicate_tensor(domain: &LogicDomain, members: &[&str]) -> Result<Tensor, LogicError> {
    let n = domain.dim();
    let mut t = Tensor::zeros("pred", Method::Given, vec![n, n]);
    for m in members {
        let i = domain.position(m)?;
        t.data[i * n + i] = 1.0;
    }
    Ok(t)
}

/// Tensor of shape `[S, n, …, n]` with argument axes subject first.
pub fn relation_tensor(
    domain: &LogicDomain,
    arity: usize,
    tuples: &[Vec<&str>],
    s: BoolSpace,
) -> Result<Tensor, LogicError> {
    let n = domain.dim();
    let mut shape = vec![s.dim()];
    shape.extend(std::iter::repeat_n(n, arity));
    let mut t = Tensor::zeros("rel", Method::Given, shape);
    let block = n.pow(arity as u32);
    let mut member = vec![false; block];
    for tuple in tuples {
        if tuple.len() != arity {
            return Err(LogicError::Arity {
                name: "relation".into(),
                got: arity,
                want: tuple.len(),
            });
        }
        let mut off = 0;
        for a in tuple {
            off = off * n + domain.position(a)?;
        }
        member[off] = true;
    }
    for (off, m) in member.into_iter().enumerate() {
        if m {
            t.data[off] = 1.0;
        } else if s == BoolSpace::B2 {
            t.data[block + off] = 1.0;
        }
    }
    Ok(t)
}

/// Contracts the last axis of `t` with `arg`.
pub fn contract(t: &Tensor, arg: &[f64]) -> Result<Tensor, LogicError> {
    Ok(t.contract_last(arg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    Not,
    And,
    Or,
    Implies,
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connective::Not => "not",
            Connective::And => "and",
            Connective::Or => "or",
            Connective::Implies => "implies",
        })
    }
}

/// `¬` is `[2, 2]`. Binary connectives are `[out, second, first]`: applying
/// the first argument picks a 2×2 block that then acts on the second.
pub fn connective_tensor(kind: Connective, mode: BoolSpace) -> Result<Tensor, LogicError> {
    if mode == BoolSpace::B1 {
        return match kind {
            Connective::And => Ok(Tensor::new("and", Method::Given, vec![1, 1, 1], vec![1.0])?),
            other => Err(LogicError::UnsupportedMode(other)),
        };
    }
    let identity = [[1.0, 0.0], [0.0, 1.0]];
    let to_top = [[1.0, 1.0], [0.0, 0.0]];
    let to_bottom = [[0.0, 0.0], [1.0, 1.0]];
    let (when_top, when_bottom) = match kind {
        Connective::Not => {
            return Ok(Tensor::new("not", Method::Given, vec![2, 2], vec![0.0, 1.0, 1.0, 0.0])?);
        }
        Connective::And => (identity, to_bottom),
        Connective::Or => (to_top, identity),
        Connective::Implies => (identity, to_top),
    };
    let mut data = Vec::with_capacity(8);
    for o in 0..2 {
        for y in 0..2 {
            data.push(when_top[o][y]);
            data.push(when_bottom[o][y]);
        }
    }
    Ok(Tensor::new(kind.to_string(), Method::Given, vec![2, 2, 2], data)?)
}

pub fn negate(x: &[f64], mode: BoolSpace) -> Result<Vec<f64>, LogicError> {
    Ok(contract(&connective_tensor(Connective::Not, mode)?, x)?.data)
}

/// `(T × first) × second`
pub fn apply_binary(kind: Connective, mode: BoolSpace, first: &[f64], second: &[f64]) -> Result<Vec<f64>, LogicError> {
    let t = connective_tensor(kind, mode)?;
    Ok(contract(&contract(&t, first)?, second)?.data)
}

fn check_indicator(x: &[f64]) -> Result<(), LogicError> {
    if x.iter().all(|v| *v == 0.0 || *v == 1.0) {
        Ok(())
    } else {
        Err(LogicError::NotIndicator)
    }
}

/// "All Xs are Ys": true when `min(x, y) = x`.
pub fn forall(x: &[f64], y: &[f64], mode: BoolSpace) -> Result<Vec<f64>, LogicError> {
    check_indicator(x)?;
    check_indicator(y)?;
    if x.len() != y.len() {
        return Err(TensorError::Shape(format!("sets of size {} and {}", x.len(), y.len())).into());
    }
    Ok(mode.from_bool(x.iter().zip(y).all(|(a, b)| a.min(*b) == *a)))
}

/// "Some X exists": true when `x` is non-zero. Accepts any non-negative weights.
pub fn exists(x: &[f64], mode: BoolSpace) -> Result<Vec<f64>, LogicError> {
    if x.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(LogicError::NotIndicator);
    }
    Ok(mode.from_bool(norm(x) > 0.0))
}

/// A finite model: a domain, named sets and named relations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub elements: Vec<String>,
    pub predicates: BTreeMap<String, BTreeSet<String>>,
    pub relations: BTreeMap<String, BTreeSet<Vec<String>>>,
}

impl Model {
    /// Parses `element<TAB>name`, `pred<TAB>P<TAB>a,b` and `rel<TAB>R<TAB>a,b;c,d` lines.
    pub fn parse(text: &str) -> Result<Model, LogicError> {
        let mut m = Model::default();
        for (idx, line) in text.lines().enumerate() {
            let err = |reason: &str| LogicError::Format {
                line: idx + 1,
                reason: reason.to_string(),
            };
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let list = |s: Option<&&str>| -> Vec<String> {
                s.map(|s| {
                    s.split(',')
                        .map(str::trim)
                        .filter(|x| !x.is_empty())
                        .map(String::from)
                        .collect()
                })
                .unwrap_or_default()
            };
            match cols[0] {
                "element" if cols.len() == 2 && !cols[1].is_empty() => m.elements.push(cols[1].into()),
                "pred" if (2..=3).contains(&cols.len()) && !cols[1].is_empty() => {
                    m.predicates
                        .entry(cols[1].into())
                        .or_default()
                        .extend(list(cols.get(2)));
                }
                "rel" if (2..=3).contains(&cols.len()) && !cols[1].is_empty() => {
                    let tuples = cols.get(2).map_or(&[][..], |_| &cols[2..]);
                    let entry = m.relations.entry(cols[1].into()).or_default();
                    for t in tuples.iter().flat_map(|s| s.split(';')) {
                        let tuple = list(Some(&t));
                        if !tuple.is_empty() {
                            entry.insert(tuple);
                        }
                    }
                }
                "element" | "pred" | "rel" => return Err(err("wrong number of columns")),
                other => return Err(err(&format!("unknown record type {other:?}"))),
            }
        }
        let domain = m.domain()?;
        for members in m.predicates.values() {
            for e in members {
                domain.position(e)?;
            }
        }
        for (name, tuples) in &m.relations {
            let arities: BTreeSet<usize> = tuples.iter().map(Vec::len).collect();
            if arities.len() > 1 {
                return Err(LogicError::Format {
                    line: 0,
                    reason: format!("relation {name} mixes tuple lengths"),
                });
            }
            for e in tuples.iter().flatten() {
                domain.position(e)?;
            }
        }
        Ok(m)
    }

    pub fn domain(&self) -> Result<LogicDomain, LogicError> {
        LogicDomain::new(self.elements.iter().cloned())
    }

    pub fn set_vector(&self, name: &str) -> Result<Vec<f64>, LogicError> {
        let members = self
            .predicates
            .get(name)
            .ok_or_else(|| LogicError::UnknownSymbol(name.to_string()))?;
        let refs: Vec<&str> = members.iter().map(String::as_str).collect();
        encode_set(&self.domain()?, &refs)
    }

    /// Tensor for a predicate (arity 1) or relation used with `arity` arguments.
    pub fn symbol_tensor(&self, name: &str, arity: usize, mode: BoolSpace) -> Result<Tensor, LogicError> {
        let domain = self.domain()?;
        let tuples: Vec<Vec<&str>> = if let Some(tuples) = self.relations.get(name) {
            if let Some(t) = tuples.iter().find(|t| t.len() != arity) {
                return Err(LogicError::Arity {
                    name: name.into(),
                    got: arity,
                    want: t.len(),
                });
            }
            tuples.iter().map(|t| t.iter().map(String::as_str).collect()).collect()
        } else if let Some(members) = self.predicates.get(name) {
            if arity != 1 {
                return Err(LogicError::Arity {
                    name: name.into(),
                    got: arity,
                    want: 1,
                });
            }
            members.iter().map(|m| vec![m.as_str()]).collect()
        } else {
            return Err(LogicError::UnknownSymbol(name.into()));
        };
        let mut t = relation_tensor(&domain, arity, &tuples, mode)?;
        t.label = name.to_string();
        Ok(t)
    }

    pub fn evaluate(&self, expr: &Expr, mode: BoolSpace) -> Result<Vec<f64>, LogicError> {
        match expr {
            Expr::Atom { name, args } => {
                let domain = self.domain()?;
                let vecs = args
                    .iter()
                    .map(|a| domain.one_hot(a))
                    .collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&[f64]> = vecs.iter().map(Vec::as_slice).collect();
                Ok(self.symbol_tensor(name, args.len(), mode)?.apply(&refs)?.data)
            }
            Expr::Not(e) => negate(&self.evaluate(e, mode)?, mode),
            Expr::Binary(kind, a, b) => {
                let x = self.evaluate(a, mode)?;
                let y = self.evaluate(b, mode)?;
                apply_binary(*kind, mode, &x, &y)
            }
            Expr::Forall(x, y) => forall(&self.evaluate_set(x)?, &self.evaluate_set(y)?, mode),
            Expr::Exists(x) => exists(&self.evaluate_set(x)?, mode),
        }
    }

    pub fn evaluate_set(&self, term: &SetTerm) -> Result<Vec<f64>, LogicError> {
        match term {
            SetTerm::Named(n) => self.set_vector(n),
            SetTerm::Meet(a, b) => {
                let x = self.evaluate_set(a)?;
                let SetTerm::Named(p) = a.as_ref() else {
                    let y = self.evaluate_set(b)?;
                    return Ok(x.iter().zip(&y).map(|(p, q)| p.min(*q)).collect());
                };
                let members = &self.predicates[p];
                let refs: Vec<&str> = members.iter().map(String::as_str).collect();
                let t = predicate_tensor(&self.domain()?, &refs)?;
                Ok(contract(&t, &self.evaluate_set(b)?)?.data)
            }
        }
    }

    pub fn truth(&self, source: &str, mode: BoolSpace) -> Result<bool, LogicError> {
        let expr: Expr = source.parse()?;
        mode.read(&self.evaluate(&expr, mode)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetTerm {
    Named(String),
    /// Intersection, computed by applying the left set's predicate tensor.
    Meet(Box<SetTerm>, Box<SetTerm>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom { name: String, args: Vec<String> },
    Not(Box<Expr>),
    Binary(Connective, Box<Expr>, Box<Expr>),
    Forall(SetTerm, SetTerm),
    Exists(SetTerm),
}

impl fmt::Display for SetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetTerm::Named(n) => f.write_str(n),
            SetTerm::Meet(a, b) => write!(f, "({a} & {b})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Atom { name, args } => write!(f, "{name}({})", args.join(",")),
            Expr::Not(e) => write!(f, "!{e}"),
            Expr::Binary(k, a, b) => {
                let op = match k {
                    Connective::And => "&",
                    Connective::Or => "|",
                    _ => "->",
                };
                write!(f, "({a} {op} {b})")
            }
            Expr::Forall(x, y) => write!(f, "forall({x},{y})"),
            Expr::Exists(x) => write!(f, "exists({x})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    And,
    Or,
    Not,
    Implies,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, LogicError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | ',' | '&' | '|' | '!' | '~' => {
                chars.next();
                out.push(match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '&' => Tok::And,
                    '|' => Tok::Or,
                    _ => Tok::Not,
                });
            }
            '-' => {
                chars.next();
                if chars.next() != Some('>') {
                    return Err(LogicError::Syntax("expected '->'".into()));
                }
                out.push(Tok::Implies);
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(match word.as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    "implies" => Tok::Implies,
                    _ => Tok::Ident(word),
                });
            }
            other => return Err(LogicError::Syntax(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), LogicError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(LogicError::Syntax(format!("expected {t:?} at token {}", self.pos)))
        }
    }

    fn ident(&mut self) -> Result<String, LogicError> {
        match self.toks.get(self.pos) {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(LogicError::Syntax(format!("expected a name at token {}", self.pos))),
        }
    }

    fn implication(&mut self) -> Result<Expr, LogicError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implication()?;
            return Ok(Expr::Binary(Connective::Implies, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Expr, LogicError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Or) {
            let rhs = self.conjunction()?;
            lhs = Expr::Binary(Connective::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr, LogicError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::And) {
            let rhs = self.unary()?;
            lhs = Expr::Binary(Connective::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LogicError> {
        if self.eat(&Tok::Not) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let e = self.implication()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let e = match name.as_str() {
            "forall" => {
                let x = self.set_term()?;
                self.expect(Tok::Comma)?;
                Expr::Forall(x, self.set_term()?)
            }
            "exists" => Expr::Exists(self.set_term()?),
            _ => {
                let mut args = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.ident()?);
                }
                Expr::Atom { name, args }
            }
        };
        self.expect(Tok::RParen)?;
        Ok(e)
    }

    fn set_term(&mut self) -> Result<SetTerm, LogicError> {
        let mut lhs = self.set_atom()?;
        while self.eat(&Tok::And) {
            lhs = SetTerm::Meet(Box::new(lhs), Box::new(self.set_atom()?));
        }
        Ok(lhs)
    }

    fn set_atom(&mut self) -> Result<SetTerm, LogicError> {
        if self.eat(&Tok::LParen) {
            let t = self.set_term()?;
            self.expect(Tok::RParen)?;
            return Ok(t);
        }
        let name = self.ident()?;
        if self.eat(&Tok::LParen) {
            let inner = self.set_term()?;
            self.expect(Tok::RParen)?;
            return Ok(SetTerm::Meet(Box::new(SetTerm::Named(name)), Box::new(inner)));
        }
        Ok(SetTerm::Named(name))
    }
}

impl FromStr for Expr {
    type Err = LogicError;

    /// `loves(j,m) & !hates(p,m)`, `a -> b`, `forall(B,P)`, `exists(B & C)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            toks: tokenize(s)?,
            pos: 0,
        };
        let e = p.implication()?;
        if p.pos != p.toks.len() {
            return Err(LogicError::Syntax(format!("trailing input at token {}", p.pos)));
        }
        Ok(e)
    }
}
