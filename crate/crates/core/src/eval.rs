//! Phrase-similarity evaluation: dataset loading, per-entry model scores,
//! Spearman correlation against human judgements and the inter-annotator
//! upper bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::space::{cosine, VectorSpace};
use crate::tensor::{compose_reduced, hadamard, kronecker_similarity_factorized, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("dataset line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("dataset line {line}: score {score} outside 1..7")]
    ScoreRange { line: usize, score: i64 },
    #[error("score lists differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("need at least two scores, got {0}")]
    TooFew(usize),
    #[error("correlation is undefined for constant scores")]
    Constant,
    #[error("no pair of annotators shares two scored items with varying scores")]
    NoOverlap,
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("model {model}: {reason}")]
    Resource { model: String, reason: String },
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Aggregate(Vec<EvalError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Intransitive,
    Transitive,
    AdjTransitive,
}

impl Kind {
    pub fn slot_count(self) -> usize {
        match self {
            Kind::Intransitive => 3,
            Kind::Transitive => 4,
            Kind::AdjTransitive => 6,
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intransitive" => Ok(Kind::Intransitive),
            "transitive" => Ok(Kind::Transitive),
            "adj-transitive" | "adjective-transitive" => Ok(Kind::AdjTransitive),
            other => Err(format!("unknown dataset kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Band {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalEntry {
    pub kind: Kind,
    /// Dataset columns between the annotator and the band, in file order.
    pub slots: Vec<String>,
    pub band: Band,
    pub annotator: String,
    pub score: u8,
}

/// One side of a sentence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence<'a> {
    pub adj_subject: Option<&'a str>,
    pub subject: &'a str,
    pub verb: &'a str,
    pub adj_object: Option<&'a str>,
    pub object: Option<&'a str>,
}

impl<'a> Sentence<'a> {
    pub fn words(&self) -> Vec<&'a str> {
        [
            self.adj_subject,
            Some(self.subject),
            Some(self.verb),
            self.adj_object,
            self.object,
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

impl EvalEntry {
    /// The sentence with the verb and, with `landmark`, the one with the landmark.
    pub fn sentence(&self, landmark: bool) -> Sentence<'_> {
        let s = &self.slots;
        match self.kind {
            Kind::Intransitive => Sentence {
                adj_subject: None,
                subject: &s[0],
                verb: if landmark { &s[2] } else { &s[1] },
                adj_object: None,
                object: None,
            },
            Kind::Transitive => Sentence {
                adj_subject: None,
                subject: &s[0],
                verb: if landmark { &s[2] } else { &s[1] },
                adj_object: None,
                object: Some(&s[3]),
            },
            Kind::AdjTransitive => Sentence {
                adj_subject: Some(&s[0]),
                subject: &s[1],
                verb: if landmark { &s[3] } else { &s[2] },
                adj_object: Some(&s[4]),
                object: Some(&s[5]),
            },
        }
    }
}

/// Parses a dataset in the column layout of `kind`.
pub fn load_dataset(text: &str, kind: Kind) -> Result<Vec<EvalEntry>, EvalError> {
    let want = kind.slot_count() + 3;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != want {
            return Err(EvalError::Format {
                line: line_no,
                reason: format!("expected {want} columns, got {}", cols.len()),
            });
        }
        let band = match cols[want - 2].to_ascii_uppercase().as_str() {
            "HIGH" => Band::High,
            "LOW" => Band::Low,
            other => {
                return Err(EvalError::Format {
                    line: line_no,
                    reason: format!("band must be HIGH or LOW, got {other:?}"),
                })
            }
        };
        let score: i64 = cols[want - 1].parse().map_err(|_| EvalError::Format {
            line: line_no,
            reason: format!("score {:?} is not an integer", cols[want - 1]),
        })?;
        if !(1..=7).contains(&score) {
            return Err(EvalError::ScoreRange { line: line_no, score });
        }
        out.push(EvalEntry {
            kind,
            slots: cols[1..want - 2].iter().map(|s| s.to_string()).collect(),
            band,
            annotator: cols[0].to_string(),
            score: score as u8,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Verb,
    Add,
    Multiply,
    Categorical,
    Kronecker,
    Bigram,
    Trigram,
    AddMult,
    MultAdd,
}

impl ModelId {
    pub const ALL: [ModelId; 9] = [
        ModelId::Verb,
        ModelId::Add,
        ModelId::Multiply,
        ModelId::Categorical,
        ModelId::Kronecker,
        ModelId::Bigram,
        ModelId::Trigram,
        ModelId::AddMult,
        ModelId::MultAdd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Verb => "verb",
            ModelId::Add => "add",
            ModelId::Multiply => "multiply",
            ModelId::Categorical => "categorical",
            ModelId::Kronecker => "kronecker",
            ModelId::Bigram => "bigram",
            ModelId::Trigram => "trigram",
            ModelId::AddMult => "addmult",
            ModelId::MultAdd => "multadd",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| EvalError::UnknownModel(s.to_string()))
    }
}

/// Add-λ smoothed n-gram language model with sentence boundary markers.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub order: usize,
    pub lambda: f64,
    counts: BTreeMap<Vec<String>, u64>,
    context_counts: BTreeMap<Vec<String>, u64>,
    vocab: BTreeSet<String>,
}

const BOS: &str = "<s>";
const EOS: &str = "</s>";

impl NgramModel {
    pub fn train<'a>(sentences: impl IntoIterator<Item = &'a [String]>, order: usize, lambda: f64) -> Self {
        assert!(order >= 1, "n-gram order must be positive");
        let mut m = NgramModel {
            order,
            lambda,
            counts: BTreeMap::new(),
            context_counts: BTreeMap::new(),
            vocab: BTreeSet::from([EOS.to_string()]),
        };
        for s in sentences {
            let padded = Self::pad(s.iter().map(String::as_str), order);
            m.vocab.extend(s.iter().cloned());
            for w in padded.windows(order) {
                *m.counts.entry(w.to_vec()).or_default() += 1;
                *m.context_counts.entry(w[..order - 1].to_vec()).or_default() += 1;
            }
        }
        m
    }

    fn pad<'a>(words: impl Iterator<Item = &'a str>, order: usize) -> Vec<String> {
        let mut v = vec![BOS.to_string(); order - 1];
        v.extend(words.map(String::from));
        v.push(EOS.to_string());
        v
    }

    /// Natural-log probability of a sentence including its end marker.
    pub fn log_prob(&self, words: &[&str]) -> f64 {
        let v = (self.vocab.len() + 1) as f64;
        let padded = Self::pad(words.iter().copied(), self.order);
        padded
            .windows(self.order)
            .map(|w| {
                let c = self.counts.get(w).copied().unwrap_or(0) as f64;
                let ctx = self.context_counts.get(&w[..self.order - 1]).copied().unwrap_or(0) as f64;
                ((c + self.lambda) / (ctx + self.lambda * v)).ln()
            })
            .sum()
    }
}

/// Everything a model may need to score an entry.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub space: Option<VectorSpace>,
    /// Relation tensors keyed by word; reduced (order = arity) or with a
    /// leading sentence axis (order = arity + 1).
    pub tensors: BTreeMap<String, Tensor>,
    pub bigram: Option<NgramModel>,
    pub trigram: Option<NgramModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Value(f64),
    /// A word lacked a vector or tensor.
    Skipped,
}

fn resource_error(model: ModelId, reason: &str) -> EvalError {
    EvalError::Resource {
        model: model.to_string(),
        reason: reason.to_string(),
    }
}

/// Fails when a model's resources are absent altogether.
pub fn check_resources(model: ModelId, res: &Resources) -> Result<(), EvalError> {
    match model {
        ModelId::Bigram if res.bigram.is_none() => Err(resource_error(model, "no bigram model")),
        ModelId::Trigram if res.trigram.is_none() => Err(resource_error(model, "no trigram model")),
        ModelId::Bigram | ModelId::Trigram => Ok(()),
        _ if res.space.is_none() => Err(resource_error(model, "no vector space")),
        ModelId::Categorical if res.tensors.is_empty() => Err(resource_error(model, "no tensors")),
        _ => Ok(()),
    }
}

fn apply_relation(t: &Tensor, args: &[&[f64]]) -> Option<Vec<f64>> {
    if t.order() == args.len() {
        compose_reduced(t, args).ok()
    } else if t.order() == args.len() + 1 {
        t.apply(args).ok().map(|t| t.data)
    } else {
        None
    }
}

fn sum(vs: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    out
}

fn product(vs: &[&[f64]]) -> Vec<f64> {
    vs[1..].iter().fold(vs[0].to_vec(), |acc, v| hadamard(&acc, v))
}

struct Lookup<'a> {
    space: &'a VectorSpace,
    tensors: &'a BTreeMap<String, Tensor>,
}

impl<'a> Lookup<'a> {
    fn vec(&self, w: &str) -> Option<&'a [f64]> {
        self.space.get(w)
    }

    /// Noun with its adjective folded in: the adjective's tensor when one is
    /// known, its lexical vector otherwise.
    fn adj_noun(&self, adj: Option<&str>, noun: &str, categorical: bool) -> Option<Vec<f64>> {
        let n = self.vec(noun)?;
        let Some(adj) = adj else {
            return Some(n.to_vec());
        };
        if categorical {
            if let Some(t) = self.tensors.get(adj) {
                return apply_relation(t, &[n]);
            }
        }
        Some(hadamard(self.vec(adj)?, n))
    }

    fn sentence(&self, model: ModelId, s: &Sentence) -> Option<Vec<f64>> {
        let words: Option<Vec<&[f64]>> = s.words().iter().map(|w| self.vec(w)).collect();
        match model {
            ModelId::Verb => self.vec(s.verb).map(<[f64]>::to_vec),
            ModelId::Add => Some(sum(&words?)),
            ModelId::Multiply => Some(product(&words?)),
            ModelId::AddMult | ModelId::MultAdd => {
                let v = self.vec(s.verb)?;
                let noun = |adj: Option<&str>, n: &str| -> Option<Vec<f64>> {
                    let nv = self.vec(n)?;
                    Some(match adj {
                        None => nv.to_vec(),
                        Some(a) if model == ModelId::AddMult => sum(&[self.vec(a)?, nv]),
                        Some(a) => hadamard(self.vec(a)?, nv),
                    })
                };
                let mut parts = vec![noun(s.adj_subject, s.subject)?, v.to_vec()];
                if let Some(o) = s.object {
                    parts.push(noun(s.adj_object, o)?);
                }
                let refs: Vec<&[f64]> = parts.iter().map(Vec::as_slice).collect();
                Some(if model == ModelId::AddMult { product(&refs) } else { sum(&refs) })
            }
            ModelId::Categorical => {
                let t = self.tensors.get(s.verb)?;
                let subj = self.adj_noun(s.adj_subject, s.subject, true)?;
                match s.object {
                    None => apply_relation(t, &[&subj]),
                    Some(o) => {
                        let obj = self.adj_noun(s.adj_object, o, true)?;
                        apply_relation(t, &[&subj, &obj])
                    }
                }
            }
            ModelId::Kronecker => {
                // Order-1 case only; transitive sentences use the factorised similarity.
                let subj = self.adj_noun(s.adj_subject, s.subject, false)?;
                Some(hadamard(self.vec(s.verb)?, &subj))
            }
            ModelId::Bigram | ModelId::Trigram => None,
        }
    }
}

/// Model score for one entry: cosine of the two sentence vectors, or the
/// summed log-probability of both sentences for the n-gram baselines.
pub fn entry_score(entry: &EvalEntry, model: ModelId, res: &Resources) -> Result<Score, EvalError> {
    check_resources(model, res)?;
    let (s1, s2) = (entry.sentence(false), entry.sentence(true));
    let ngram = match model {
        ModelId::Bigram => res.bigram.as_ref(),
        ModelId::Trigram => res.trigram.as_ref(),
        _ => None,
    };
    if let Some(lm) = ngram {
        return Ok(Score::Value(lm.log_prob(&s1.words()) + lm.log_prob(&s2.words())));
    }
    let look = Lookup {
        space: res.space.as_ref().expect("checked above"),
        tensors: &res.tensors,
    };
    if model == ModelId::Kronecker && s1.object.is_some() {
        let parts = (|| {
            let subj = look.adj_noun(s1.adj_subject, s1.subject, false)?;
            let obj = look.adj_noun(s1.adj_object, s1.object?, false)?;
            Some(kronecker_similarity_factorized(look.vec(s1.verb)?, look.vec(s2.verb)?, &subj, &obj))
        })();
        return Ok(parts.map_or(Score::Skipped, |sim| Score::Value(sim.value)));
    }
    match (look.sentence(model, &s1), look.sentence(model, &s2)) {
        (Some(a), Some(b)) if a.len() == b.len() => Ok(Score::Value(cosine(&a, &b).value)),
        _ => Ok(Score::Skipped),
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(EvalError::Constant);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ as the Pearson correlation of average ranks.
pub fn spearman(model: &[f64], human: &[f64]) -> Result<f64, EvalError> {
    if model.len() != human.len() {
        return Err(EvalError::Length(model.len(), human.len()));
    }
    if model.len() < 2 {
        return Err(EvalError::TooFew(model.len()));
    }
    pearson(&ranks(model), &ranks(human))
}

type ItemKey = (Kind, Vec<String>, Band);

fn item_key(e: &EvalEntry) -> ItemKey {
    (e.kind, e.slots.clone(), e.band)
}

/// Mean pairwise Spearman over annotator pairs, each on their common items.
/// Pairs whose shared scores are constant are left out.
pub fn upper_bound(entries: &[EvalEntry]) -> Result<f64, EvalError> {
    let mut by_annotator: BTreeMap<&str, BTreeMap<ItemKey, f64>> = BTreeMap::new();
    for e in entries {
        by_annotator
            .entry(&e.annotator)
            .or_default()
            .insert(item_key(e), e.score as f64);
    }
    let annotators: Vec<_> = by_annotator.values().collect();
    let mut rhos = Vec::new();
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            let (xs, ys): (Vec<f64>, Vec<f64>) = a
                .iter()
                .filter_map(|(k, x)| b.get(k).map(|y| (*x, *y)))
                .unzip();
            if let Ok(r) = spearman(&xs, &ys) {
                rhos.push(r);
            }
        }
    }
    if rhos.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    Ok(rhos.iter().sum::<f64>() / rhos.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// One row per annotation.
    #[default]
    Pooled,
    /// One row per item, human scores averaged.
    Mean,
}

impl FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pooled" | "none" => Ok(Aggregate::Pooled),
            "mean" => Ok(Aggregate::Mean),
            other => Err(format!("unknown aggregation {other:?}, expected pooled or mean")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub model: ModelId,
    pub rho: f64,
    /// Rows entering the correlation.
    pub n: usize,
    /// Annotation rows dropped for missing vectors.
    pub skipped: usize,
    pub upper_bound: Option<f64>,
    pub high_mean: Option<f64>,
    pub low_mean: Option<f64>,
}

/// Scores every entry under each model and correlates with the annotations.
/// Reports come back sorted by ρ, highest first.
pub fn run_experiment(
    entries: &[EvalEntry],
    models: &[ModelId],
    res: &Resources,
    aggregate: Aggregate,
) -> Result<Vec<ExperimentReport>, EvalError> {
    let failures: Vec<EvalError> = models
        .iter()
        .filter_map(|m| check_resources(*m, res).err())
        .collect();
    if !failures.is_empty() {
        return Err(EvalError::Aggregate(failures));
    }
    if models.is_empty() {
        return Ok(Vec::new());
    }
    let ub = upper_bound(entries).ok();

    let mut items: BTreeMap<ItemKey, (usize, Vec<f64>)> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        items.entry(item_key(e)).or_insert((i, Vec::new())).1.push(e.score as f64);
    }

    let mut reports = Vec::new();
    for &model in models {
        let mut machine = Vec::new();
        let mut human = Vec::new();
        let mut skipped = 0;
        let mut band_scores: BTreeMap<Band, Vec<f64>> = BTreeMap::new();
        for (key, (first, scores)) in &items {
            let Score::Value(v) = entry_score(&entries[*first], model, res)? else {
                skipped += scores.len();
                continue;
            };
            band_scores.entry(key.2).or_default().push(v);
            match aggregate {
                Aggregate::Pooled => {
                    for s in scores {
                        machine.push(v);
                        human.push(*s);
                    }
                }
                Aggregate::Mean => {
                    machine.push(v);
                    human.push(scores.iter().sum::<f64>() / scores.len() as f64);
                }
            }
        }
        let rho = spearman(&machine, &human).map_err(|e| EvalError::Resource {
            model: model.to_string(),
            reason: e.to_string(),
        })?;
        let mean = |b: Band| {
            band_scores
                .get(&b)
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        reports.push(ExperimentReport {
            model,
            rho,
            n: machine.len(),
            skipped,
            upper_bound: ub,
            high_mean: mean(Band::High),
            low_mean: mean(Band::Low),
        });
    }
    reports.sort_by(|a, b| b.rho.total_cmp(&a.rho));
    Ok(reports)
}

/// Plain-text table of reports.
pub fn format_reports(reports: &[ExperimentReport]) -> String {
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    let mut out = format!(
        "{:<12} {:>8} {:>6} {:>8} {:>10} {:>10}\n",
        "model", "rho", "n", "skipped", "high_mean", "low_mean"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<12} {:>8.4} {:>6} {:>8} {:>10} {:>10}\n",
            r.model.name(),
            r.rho,
            r.n,
            r.skipped,
            opt(r.high_mean),
            opt(r.low_mean)
        ));
    }
    if let Some(ub) = reports.first().and_then(|r| r.upper_bound) {
        out.push_str(&format!("{:<12} {:>8.4}\n", "upperbound", ub));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Method;

    fn space() -> VectorSpace {
        let mut s = VectorSpace::new(vec!["a".into(), "b".into(), "c".into()]);
        for (w, v) in [
            ("butler", [1.0, 2.0, 0.5]),
            ("bow", [0.5, 1.0, 2.0]),
            ("submit", [2.0, 0.1, 1.0]),
            ("stoop", [0.4, 1.2, 1.8]),
            ("table", [3.0, 1.0, 0.0]),
            ("result", [1.0, 0.0, 2.0]),
            ("show", [1.0, 1.0, 1.0]),
            ("express", [2.0, 0.5, 0.2]),
            ("old", [0.3, 0.3, 0.9]),
        ] {
            s.insert(w, v.to_vec()).unwrap();
        }
        s
    }

    fn resources() -> Resources {
        let mut tensors = BTreeMap::new();
        tensors.insert(
            "bow".into(),
            Tensor::new("bow", Method::Sum, vec![3], vec![0.5, 1.0, 2.0]).unwrap(),
        );
        tensors.insert(
            "submit".into(),
            Tensor::new("submit", Method::Sum, vec![3], vec![2.0, 0.1, 1.0]).unwrap(),
        );
        Resources {
            space: Some(space()),
            tensors,
            ..Resources::default()
        }
    }

    #[test]
    fn loads_dataset_lines() {
        let e = load_dataset("ann3\tbutler\tbow\tsubmit\tHIGH\t6\n", Kind::Intransitive).unwrap();
        assert_eq!(e[0].slots, vec!["butler", "bow", "submit"]);
        assert_eq!((e[0].band, e[0].score), (Band::High, 6));
        let t = load_dataset("ann1\ttable\tshow\texpress\tresult\tHIGH\t7\n", Kind::Transitive).unwrap();
        assert_eq!(t[0].sentence(true).words(), vec!["table", "express", "result"]);
        assert_eq!(
            load_dataset("ann3\tbutler\tbow\tsubmit\tHIGH\t8\n", Kind::Intransitive).unwrap_err(),
            EvalError::ScoreRange { line: 1, score: 8 }
        );
        assert!(matches!(
            load_dataset("ann3\tbutler\tbow\tHIGH\t5\n", Kind::Intransitive),
            Err(EvalError::Format { line: 1, .. })
        ));
        let a = load_dataset(
            "x\told\tbutler\tbow\tsubmit\told\ttable\tLOW\t2\n",
            Kind::AdjTransitive,
        )
        .unwrap();
        assert_eq!(a[0].sentence(false).words(), vec!["old", "butler", "bow", "old", "table"]);
    }

    #[test]
    fn verb_baseline_ignores_noun() {
        let e = &load_dataset("a\tbutler\tbow\tsubmit\tHIGH\t6\n", Kind::Intransitive).unwrap()[0];
        let res = resources();
        let s = res.space.as_ref().unwrap();
        let want = cosine(s.get("bow").unwrap(), s.get("submit").unwrap()).value;
        assert_eq!(entry_score(e, ModelId::Verb, &res).unwrap(), Score::Value(want));
    }

    #[test]
    fn categorical_arity_one_equals_multiply() {
        let e = &load_dataset("a\tbutler\tbow\tsubmit\tHIGH\t6\n", Kind::Intransitive).unwrap()[0];
        let res = resources();
        assert_eq!(
            entry_score(e, ModelId::Categorical, &res).unwrap(),
            entry_score(e, ModelId::Multiply, &res).unwrap()
        );
    }

    #[test]
    fn identical_sentences_score_one() {
        let e = &load_dataset("a\ttable\tshow\tshow\tresult\tHIGH\t7\n", Kind::Transitive).unwrap()[0];
        let res = resources();
        for m in [ModelId::Verb, ModelId::Add, ModelId::Multiply, ModelId::Kronecker, ModelId::AddMult, ModelId::MultAdd] {
            let Score::Value(v) = entry_score(e, m, &res).unwrap() else {
                panic!("{m} skipped");
            };
            assert!((v - 1.0).abs() < 1e-12, "{m}: {v}");
        }
    }

    #[test]
    fn missing_words_skip() {
        let e = &load_dataset("a\tunicorn\tbow\tsubmit\tHIGH\t6\n", Kind::Intransitive).unwrap()[0];
        assert_eq!(entry_score(e, ModelId::Add, &resources()).unwrap(), Score::Skipped);
        // The verb baseline never looks at the noun.
        assert!(matches!(entry_score(e, ModelId::Verb, &resources()).unwrap(), Score::Value(_)));
    }

    #[test]
    fn spearman_edges() {
        let h = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&h, &h).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[4.0, 3.0, 2.0, 1.0], &h).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0, 1.0, 1.0], &h).unwrap_err(), EvalError::Constant);
        assert_eq!(spearman(&[1.0], &[1.0]).unwrap_err(), EvalError::TooFew(1));
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn upper_bound_cases() {
        let data = "a\tbutler\tbow\tsubmit\tHIGH\t6\n\
a\tbutler\tbow\tstoop\tLOW\t2\n\
a\ttable\tbow\tsubmit\tLOW\t4\n\
b\tbutler\tbow\tsubmit\tHIGH\t6\n\
b\tbutler\tbow\tstoop\tLOW\t2\n\
b\ttable\tbow\tsubmit\tLOW\t4\n";
        let e = load_dataset(data, Kind::Intransitive).unwrap();
        assert!((upper_bound(&e).unwrap() - 1.0).abs() < 1e-12);
        let reversed = data.replacen("b\tbutler\tbow\tsubmit\tHIGH\t6", "b\tbutler\tbow\tsubmit\tHIGH\t2", 1)
            .replacen("b\tbutler\tbow\tstoop\tLOW\t2", "b\tbutler\tbow\tstoop\tLOW\t6", 1);
        let e = load_dataset(&reversed, Kind::Intransitive).unwrap();
        assert!((upper_bound(&e).unwrap() + 1.0).abs() < 1e-12);
        let lone = load_dataset("a\tbutler\tbow\tsubmit\tHIGH\t6\n", Kind::Intransitive).unwrap();
        assert_eq!(upper_bound(&lone).unwrap_err(), EvalError::NoOverlap);
    }

    #[test]
    fn ngram_probabilities() {
        let corpus: Vec<Vec<String>> = ["a b", "a b", "a c"]
            .iter()
            .map(|s| s.split(' ').map(String::from).collect())
            .collect();
        let lm = NgramModel::train(corpus.iter().map(Vec::as_slice), 2, 1.0);
        // Vocabulary {a, b, c, </s>} plus one unseen slot.
        let p_a: f64 = (3.0 + 1.0) / (3.0 + 5.0);
        let p_b = (2.0 + 1.0) / (3.0 + 5.0);
        let p_end = (2.0 + 1.0) / (2.0 + 5.0);
        let want = (p_a * p_b * p_end).ln();
        assert!((lm.log_prob(&["a", "b"]) - want).abs() < 1e-12);
        assert!(lm.log_prob(&["a", "b"]) > lm.log_prob(&["a", "c"]));
    }

    #[test]
    fn experiment_reports() {
        let data = "a\tbutler\tbow\tsubmit\tLOW\t2\n\
a\tbutler\tbow\tstoop\tHIGH\t6\n\
a\ttable\tbow\tsubmit\tLOW\t3\n\
b\tbutler\tbow\tsubmit\tLOW\t1\n\
b\tbutler\tbow\tstoop\tHIGH\t7\n";
        let e = load_dataset(data, Kind::Intransitive).unwrap();
        let mut res = resources();
        assert!(run_experiment(&e, &[], &res, Aggregate::Pooled).unwrap().is_empty());
        res.tensors.insert(
            "stoop".into(),
            Tensor::new("stoop", Method::Sum, vec![3], vec![0.4, 1.2, 1.8]).unwrap(),
        );
        let r = run_experiment(&e, &[ModelId::Verb, ModelId::Categorical], &res, Aggregate::Pooled).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].rho >= r[1].rho);
        assert_eq!(r[0].n, 5);
        assert!(r[0].high_mean.unwrap() > r[0].low_mean.unwrap());
        let m = run_experiment(&e, &[ModelId::Verb], &res, Aggregate::Mean).unwrap();
        assert_eq!(m[0].n, 3);
        let err = run_experiment(&e, &[ModelId::Bigram, ModelId::Trigram], &res, Aggregate::Pooled).unwrap_err();
        assert!(matches!(err, EvalError::Aggregate(ref v) if v.len() == 2));
        assert!(format_reports(&r).contains("categorical"));
    }
}
