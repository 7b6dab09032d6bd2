//! Relational tensors: learning from argument co-occurrences, reduced and
//! full representations, and the composition operations built on them.
//!
//! A relation of arity `m` over a noun space `N` of dimension `d` is stored in
//! reduced form as an order-`m` tensor of shape `[d; m]`. Composition with
//! arguments is the component-wise product of that tensor with the Kronecker
//! product of the argument vectors, giving a sentence vector in `N^⊗m`
//! (flattened row-major). The full order-`2m` form exists to check that
//! identity against explicit contraction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{cosine, dot, format_sig9, norm, Similarity, VectorSpace};

/// Cells allowed in a full tensor unless the caller raises the cap.
pub const DEFAULT_FULL_CAP: usize = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("relation {0:?} has no usable instances")]
    NoInstances(String),
    #[error("relation vector for {0:?} is zero")]
    ZeroVector(String),
    #[error("full tensor would need {cells} cells, cap is {cap}")]
    TooLarge { cells: usize, cap: usize },
    #[error("model {0} needs parameters: {1}")]
    MissingParams(&'static str, &'static str),
    #[error("tensor file line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Sum over instances of the Kronecker product of argument vectors.
    Sum,
    /// Kronecker power of the relation word's own vector.
    Kronecker,
    /// Full order-2m tensor.
    Full,
    /// Estimated by multi-step regression.
    Regression,
    /// Built by hand or loaded from elsewhere.
    Given,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sum => "sum",
            Method::Kronecker => "kronecker",
            Method::Full => "full",
            Method::Regression => "regression",
            Method::Given => "given",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Method::Sum),
            "kronecker" => Ok(Method::Kronecker),
            "full" => Ok(Method::Full),
            "regression" => Ok(Method::Regression),
            "given" => Ok(Method::Given),
            other => Err(format!("unknown tensor method {other:?}")),
        }
    }
}

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub label: String,
    pub method: Method,
    /// For full tensors, the axis holding the sentence index.
    pub sentence_axis: Option<usize>,
}

impl Tensor {
    pub fn new(label: impl Into<String>, method: Method, shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let cells: usize = shape.iter().product();
        if cells != data.len() {
            return Err(TensorError::Shape(format!(
                "shape {shape:?} needs {cells} cells, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape,
            data,
            label: label.into(),
            method,
            sentence_axis: None,
        })
    }

    pub fn zeros(label: impl Into<String>, method: Method, shape: Vec<usize>) -> Self {
        let cells = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; cells],
            label: label.into(),
            method,
            sentence_axis: None,
        }
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        index.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Contracts the last axis with `arg`, giving a tensor of one order less.
    pub fn contract_last(&self, arg: &[f64]) -> Result<Tensor, TensorError> {
        let last = *self
            .shape
            .last()
            .ok_or_else(|| TensorError::Shape("cannot contract an order-0 tensor".into()))?;
        if arg.len() != last {
            return Err(TensorError::Shape(format!(
                "argument of length {} against axis of size {last}",
                arg.len()
            )));
        }
        let data = self.data.chunks(last).map(|row| dot(row, arg)).collect();
        Ok(Tensor {
            shape: self.shape[..self.shape.len() - 1].to_vec(),
            data,
            label: self.label.clone(),
            method: self.method,
            sentence_axis: None,
        })
    }

    /// Curried application: contracts the last argument first, so
    /// `apply(&[subj, obj])` on `[S, subj, obj]` gives `(T × obj) × subj`.
    pub fn apply(&self, args: &[&[f64]]) -> Result<Tensor, TensorError> {
        let mut t = self.clone();
        for arg in args.iter().rev() {
            t = t.contract_last(arg)?;
        }
        Ok(t)
    }

    /// `label<TAB>method<TAB>d1,d2,…<TAB>x1 x2 …`
    pub fn to_line(&self) -> String {
        let dims: Vec<String> = self.shape.iter().map(usize::to_string).collect();
        let values: Vec<String> = self.data.iter().map(|x| format_sig9(*x)).collect();
        format!(
            "{}\t{}\t{}\t{}",
            self.label,
            self.method,
            dims.join(","),
            values.join(" ")
        )
    }

    pub fn from_line(line: &str, lineno: usize) -> Result<Tensor, TensorError> {
        let err = |reason: String| TensorError::Format { line: lineno, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 tab-separated columns, got {}", cols.len())));
        }
        let method: Method = cols[1].parse().map_err(err)?;
        let shape = cols[2]
            .split(',')
            .map(|d| d.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(e.to_string()))?;
        let data = cols[3]
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(e.to_string()))?;
        Tensor::new(cols[0], method, shape, data).map_err(|e| err(e.to_string()))
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// A file of tensors, one per line, keyed by label.
pub fn read_tensor_file(text: &str) -> Result<BTreeMap<String, Tensor>, TensorError> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let t = Tensor::from_line(line, idx + 1)?;
        out.insert(t.label.clone(), t);
    }
    Ok(out)
}

pub fn write_tensor_file<'a>(tensors: impl IntoIterator<Item = &'a Tensor>) -> String {
    let mut out = String::new();
    for t in tensors {
        out.push_str(&t.to_line());
        out.push('\n');
    }
    out
}

/// Flat Kronecker product, row-major.
pub fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

pub fn kron_all<'a>(vectors: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    vectors.into_iter().fold(vec![1.0], |acc, v| kron(&acc, v))
}

pub fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub relation: String,
    pub args: Vec<String>,
}

/// Reads `relation<TAB>arg1<TAB>…` lines.
pub fn read_relation_instances(text: &str) -> Result<Vec<RelationInstance>, TensorError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() < 2 || cols.iter().any(|c| c.is_empty()) {
            return Err(TensorError::Format {
                line: idx + 1,
                reason: "expected relation followed by at least one argument".into(),
            });
        }
        out.push(RelationInstance {
            relation: cols[0].to_string(),
            args: cols[1..].iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Learned {
    pub tensor: Tensor,
    pub used: usize,
    /// Instances dropped because an argument had no vector.
    pub skipped: usize,
}

/// `Σ_k (w₁ ⊗ … ⊗ w_m)_k` over the instances of one relation.
///
/// Instances whose relation differs from `relation` are ignored; instances
/// with an argument missing from the space are skipped and counted.
pub fn learn_relation_sum(
    relation: &str,
    instances: &[RelationInstance],
    space: &VectorSpace,
    arity: usize,
) -> Result<Learned, TensorError> {
    let d = space.dim();
    let mut data = vec![0.0; d.pow(arity as u32)];
    let (mut used, mut skipped) = (0, 0);
    for inst in instances.iter().filter(|i| i.relation == relation) {
        if inst.args.len() != arity {
            return Err(TensorError::Shape(format!(
                "instance of {relation} has {} arguments, expected {arity}",
                inst.args.len()
            )));
        }
        let vecs: Option<Vec<&[f64]>> = inst.args.iter().map(|a| space.get(a)).collect();
        let Some(vecs) = vecs else {
            skipped += 1;
            continue;
        };
        for (acc, x) in data.iter_mut().zip(kron_all(vecs)) {
            *acc += x;
        }
        used += 1;
    }
    if used == 0 {
        return Err(TensorError::NoInstances(relation.to_string()));
    }
    Ok(Learned {
        tensor: Tensor::new(relation, Method::Sum, vec![d; arity], data)?,
        used,
        skipped,
    })
}

/// `m`-fold Kronecker power of the relation word's lexical vector.
pub fn learn_relation_kronecker(label: &str, lex: &[f64], arity: usize) -> Result<Tensor, TensorError> {
    if lex.iter().all(|x| *x == 0.0) {
        return Err(TensorError::ZeroVector(label.to_string()));
    }
    let data = kron_all(std::iter::repeat_n(lex, arity));
    Tensor::new(label, Method::Kronecker, vec![lex.len(); arity], data)
}

fn check_reduced_args(t: &Tensor, args: &[&[f64]]) -> Result<(), TensorError> {
    if args.len() != t.order() {
        return Err(TensorError::Shape(format!(
            "tensor of order {} given {} arguments",
            t.order(),
            args.len()
        )));
    }
    for (k, (a, &d)) in args.iter().zip(&t.shape).enumerate() {
        if a.len() != d {
            return Err(TensorError::Shape(format!(
                "argument {k} has length {}, axis has size {d}",
                a.len()
            )));
        }
    }
    Ok(())
}

/// `t ⊙ (arg₁ ⊗ … ⊗ arg_m)`, flattened row-major.
pub fn compose_reduced(t: &Tensor, args: &[&[f64]]) -> Result<Vec<f64>, TensorError> {
    check_reduced_args(t, args)?;
    Ok(hadamard(&t.data, &kron_all(args.iter().copied())))
}

/// Full-tensor layout for a reduced relation of the given arity: argument axes
/// of size `d` with the sentence axis (size `d^m`) after the first argument
/// when `m = 2`, and last otherwise.
pub fn full_layout(arity: usize, d: usize) -> (Vec<usize>, usize) {
    let s = d.pow(arity as u32);
    let axis = if arity == 2 { 1 } else { arity };
    let mut shape = vec![d; arity];
    shape.insert(axis, s);
    (shape, axis)
}

/// Embeds a reduced tensor into the full order-`2m` space: the cell for
/// arguments `(i₁…i_m)` and sentence index `s` holds `t[i₁…i_m]` when `s` is
/// the row-major index of `(i₁…i_m)`, and zero otherwise.
pub fn expand_reduced_to_full(t: &Tensor, cap: usize) -> Result<Tensor, TensorError> {
    let arity = t.order();
    let d = *t.shape.first().ok_or_else(|| TensorError::Shape("empty shape".into()))?;
    if t.shape.iter().any(|&x| x != d) {
        return Err(TensorError::Shape("reduced tensor must be hypercubic".into()));
    }
    let (shape, axis) = full_layout(arity, d);
    let cells: usize = shape.iter().product();
    if cells > cap {
        return Err(TensorError::TooLarge { cells, cap });
    }
    let mut full = Tensor::zeros(t.label.clone(), Method::Full, shape);
    full.sentence_axis = Some(axis);
    for (s, &value) in t.data.iter().enumerate() {
        let mut idx = unravel(s, &t.shape);
        idx.insert(axis, s);
        let off = full.offset(&idx);
        full.data[off] = value;
    }
    Ok(full)
}

/// Recovers the reduced tensor from a full one by reading the diagonal cells.
pub fn compress_full(full: &Tensor) -> Result<Tensor, TensorError> {
    let axis = full
        .sentence_axis
        .ok_or_else(|| TensorError::Shape("tensor has no sentence axis".into()))?;
    let mut arg_shape = full.shape.clone();
    arg_shape.remove(axis);
    let cells: usize = arg_shape.iter().product();
    let mut data = Vec::with_capacity(cells);
    for s in 0..cells {
        let mut idx = unravel(s, &arg_shape);
        idx.insert(axis, s);
        data.push(full.get(&idx));
    }
    Tensor::new(full.label.clone(), Method::Sum, arg_shape, data)
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

/// Contracts every argument axis of a full tensor with its argument (inner
/// product) and returns the sentence vector.
pub fn compose_full_epsilon(full: &Tensor, args: &[&[f64]]) -> Result<Vec<f64>, TensorError> {
    let axis = full
        .sentence_axis
        .ok_or_else(|| TensorError::Shape("tensor has no sentence axis".into()))?;
    if args.len() + 1 != full.order() {
        return Err(TensorError::Shape(format!(
            "full tensor of order {} given {} arguments",
            full.order(),
            args.len()
        )));
    }
    let arg_axes: Vec<usize> = (0..full.order()).filter(|&k| k != axis).collect();
    for (a, &k) in args.iter().zip(&arg_axes) {
        if a.len() != full.shape[k] {
            return Err(TensorError::Shape(format!(
                "argument of length {} against axis {k} of size {}",
                a.len(),
                full.shape[k]
            )));
        }
    }
    let mut out = vec![0.0; full.shape[axis]];
    for (flat, &value) in full.data.iter().enumerate() {
        if value == 0.0 {
            continue;
        }
        let idx = unravel(flat, &full.shape);
        let weight: f64 = args.iter().zip(&arg_axes).map(|(a, &k)| a[idx[k]]).product();
        out[idx[axis]] += value * weight;
    }
    Ok(out)
}

/// Composition models that do not need a learned relation tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    Add,
    /// One weight per vector.
    WeightedAdd,
    /// Optional smoothing constant added to every component before the product.
    Multiply,
    /// `α a + β b + γ (a ⊙ b)` for exactly two vectors.
    Mixture,
    /// Returns the vector at `head` unchanged.
    VerbOnly { head: usize },
    TensorProduct,
}

pub fn compose_baseline(model: Baseline, vectors: &[&[f64]], params: &[f64]) -> Result<Vec<f64>, TensorError> {
    let first = vectors
        .first()
        .ok_or_else(|| TensorError::Shape("no vectors to compose".into()))?;
    let d = first.len();
    if model != Baseline::TensorProduct && vectors.iter().any(|v| v.len() != d) {
        return Err(TensorError::Shape("vectors differ in length".into()));
    }
    Ok(match model {
        Baseline::Add => {
            let mut out = vec![0.0; d];
            for v in vectors {
                for (o, x) in out.iter_mut().zip(v.iter()) {
                    *o += x;
                }
            }
            out
        }
        Baseline::WeightedAdd => {
            if params.len() != vectors.len() {
                return Err(TensorError::MissingParams("weighted-add", "one weight per vector"));
            }
            let mut out = vec![0.0; d];
            for (v, w) in vectors.iter().zip(params) {
                for (o, x) in out.iter_mut().zip(v.iter()) {
                    *o += w * x;
                }
            }
            out
        }
        Baseline::Multiply => {
            let s = params.first().copied().unwrap_or(0.0);
            let mut out = vec![1.0; d];
            for v in vectors {
                for (o, x) in out.iter_mut().zip(v.iter()) {
                    *o *= x + s;
                }
            }
            out
        }
        Baseline::Mixture => {
            let [alpha, beta, gamma] = params else {
                return Err(TensorError::MissingParams("mixture", "alpha, beta, gamma"));
            };
            let [a, b] = vectors else {
                return Err(TensorError::Shape("mixture composes exactly two vectors".into()));
            };
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| alpha * x + beta * y + gamma * x * y)
                .collect()
        }
        Baseline::VerbOnly { head } => vectors
            .get(head)
            .ok_or_else(|| TensorError::Shape(format!("no vector at head position {head}")))?
            .to_vec(),
        Baseline::TensorProduct => kron_all(vectors.iter().copied()),
    })
}

/// Kronecker-model sentence similarity without building `d²` vectors:
/// the sentence vector `(v⊙s) ⊗ (v⊙o)` factorises, so the cosine is the
/// product of the subject-side and object-side cosines.
pub fn kronecker_similarity_factorized(verb1: &[f64], verb2: &[f64], subject: &[f64], object: &[f64]) -> Similarity {
    let a1 = hadamard(verb1, subject);
    let a2 = hadamard(verb2, subject);
    let b1 = hadamard(verb1, object);
    let b2 = hadamard(verb2, object);
    let denom = norm(&a1) * norm(&a2) * norm(&b1) * norm(&b2);
    if denom == 0.0 {
        return Similarity {
            value: 0.0,
            degenerate: true,
        };
    }
    Similarity {
        value: (dot(&a1, &a2) * dot(&b1, &b2) / denom).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// The same similarity computed on materialised sentence vectors.
pub fn kronecker_similarity_explicit(verb1: &[f64], verb2: &[f64], subject: &[f64], object: &[f64]) -> Result<Similarity, TensorError> {
    let t1 = learn_relation_kronecker("v1", verb1, 2)?;
    let t2 = learn_relation_kronecker("v2", verb2, 2)?;
    let s1 = compose_reduced(&t1, &[subject, object])?;
    let s2 = compose_reduced(&t2, &[subject, object])?;
    Ok(cosine(&s1, &s2))
}
