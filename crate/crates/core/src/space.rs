//! Distributional vector spaces built from co-occurrence counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("space file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("vector for {word:?} has {got} weights, basis has {want}")]
    Length { word: String, got: usize, want: usize },
}

/// Context window around each target occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    /// Every other token of the same sentence.
    Sentence,
    /// `k` tokens either side, cut at sentence boundaries.
    Words(usize),
}

impl Default for Window {
    fn default() -> Self {
        Window::Words(5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Weighting {
    Raw,
    /// `P(b|w) / P(b)`.
    #[default]
    Ratio,
    TfIdf,
    /// Positive pointwise mutual information, `max(0, ln(P(b|w)/P(b)))`.
    Pmi,
}

impl std::str::FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Weighting::Raw),
            "ratio" => Ok(Weighting::Ratio),
            "tfidf" | "tf-idf" => Ok(Weighting::TfIdf),
            "pmi" | "ppmi" => Ok(Weighting::Pmi),
            other => Err(format!("unknown weighting scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SpaceConfig {
    pub basis_size: usize,
    pub window: Window,
    pub weighting: Weighting,
    /// Words never used as basis elements.
    pub stoplist: BTreeSet<String>,
    /// Words to build vectors for; `None` means the whole vocabulary.
    pub targets: Option<BTreeSet<String>>,
}

/// Frequency information kept alongside a space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CountsMeta {
    pub total_tokens: u64,
    /// Corpus frequency of each basis word, aligned with the basis.
    pub basis_freq: Vec<u64>,
    pub word_freq: BTreeMap<String, u64>,
    /// `f_b*`: total corpus occurrences of all basis words.
    pub context_total: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorSpace {
    pub basis: Vec<String>,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub meta: CountsMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildWarning {
    #[error("basis size {requested} exceeds the {available} available context words")]
    BasisClamped { requested: usize, available: usize },
}

impl VectorSpace {
    pub fn new(basis: Vec<String>) -> Self {
        VectorSpace {
            basis,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn insert(&mut self, word: impl Into<String>, v: Vec<f64>) -> Result<(), SpaceError> {
        let word = word.into();
        if v.len() != self.dim() {
            return Err(SpaceError::Length {
                word,
                got: v.len(),
                want: self.dim(),
            });
        }
        self.vectors.insert(word, v);
        Ok(())
    }

    /// Serialises to the space TSV format with 9 significant digits.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("#basis");
        for b in &self.basis {
            out.push('\t');
            out.push_str(b);
        }
        out.push('\n');
        for (w, v) in &self.vectors {
            out.push_str(w);
            for x in v {
                out.push('\t');
                out.push_str(&format_sig9(*x));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, SpaceError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(SpaceError::Format {
            line: 1,
            reason: "missing #basis header".into(),
        })?;
        let mut cols = header.split('\t');
        if cols.next() != Some("#basis") {
            return Err(SpaceError::Format {
                line: 1,
                reason: "first line must start with #basis".into(),
            });
        }
        let mut space = VectorSpace::new(cols.map(str::to_string).collect());
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let word = cols.next().unwrap_or_default().to_string();
            let v = cols
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SpaceError::Format {
                    line: idx + 1,
                    reason: e.to_string(),
                })?;
            space.insert(word, v)?;
        }
        Ok(space)
    }
}

/// Rounds to 9 significant digits and prints the shortest decimal that reads
/// back to the rounded value.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("valid float");
    let mut s = String::new();
    write!(s, "{rounded}").unwrap();
    s
}

/// Reads a corpus: one sentence per line, whitespace tokenised.
pub fn tokenize_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Word frequencies over the corpus.
pub fn word_frequencies(corpus: &[Vec<String>]) -> BTreeMap<String, u64> {
    let mut freq = BTreeMap::new();
    for s in corpus {
        for w in s {
            *freq.entry(w.clone()).or_insert(0) += 1;
        }
    }
    freq
}

/// Most frequent words, excluding the stop list; ties broken lexicographically.
pub fn select_basis(
    freq: &BTreeMap<String, u64>,
    size: usize,
    stoplist: &BTreeSet<String>,
) -> Vec<String> {
    let mut ranked: Vec<(&String, u64)> = freq
        .iter()
        .filter(|(w, _)| !stoplist.contains(*w))
        .map(|(w, &f)| (w, f))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(size).map(|(w, _)| w.clone()).collect()
}

/// Raw co-occurrence counts: for every target occurrence, each basis word in
/// its window adds one.
pub fn count_cooccurrences(
    corpus: &[Vec<String>],
    basis: &[String],
    window: Window,
    targets: Option<&BTreeSet<String>>,
) -> BTreeMap<String, Vec<f64>> {
    let index: HashMap<&str, usize> = basis
        .iter()
        .enumerate()
        .map(|(i, b)| (b.as_str(), i))
        .collect();
    let mut counts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for sentence in corpus {
        let ids: Vec<Option<usize>> = sentence.iter().map(|w| index.get(w.as_str()).copied()).collect();
        for (i, w) in sentence.iter().enumerate() {
            if targets.is_some_and(|t| !t.contains(w)) {
                continue;
            }
            let (lo, hi) = match window {
                Window::Sentence => (0, sentence.len()),
                Window::Words(k) => (i.saturating_sub(k), (i + k + 1).min(sentence.len())),
            };
            let row = counts
                .entry(w.clone())
                .or_insert_with(|| vec![0.0; basis.len()]);
            for (j, id) in ids.iter().enumerate().take(hi).skip(lo) {
                if j == i {
                    continue;
                }
                if let Some(b) = id {
                    row[*b] += 1.0;
                }
            }
        }
    }
    counts
}

/// `f_{w∧b} · f_b* / (f_b · f_w)`, zero whenever the co-occurrence count or a
/// marginal is zero.
pub fn ratio_weight(cooc: f64, f_w: f64, f_b: f64, context_total: f64) -> f64 {
    if cooc == 0.0 || f_w == 0.0 || f_b == 0.0 {
        return 0.0;
    }
    cooc * context_total / (f_b * f_w)
}

/// Reweights raw counts in place according to `scheme`.
pub fn weight_ratio(space: &mut VectorSpace) {
    reweight(space, Weighting::Ratio);
}

pub fn reweight(space: &mut VectorSpace, scheme: Weighting) {
    let meta = &space.meta;
    let context_total = meta.context_total as f64;
    match scheme {
        Weighting::Raw => {}
        Weighting::Ratio | Weighting::Pmi => {
            for (w, row) in space.vectors.iter_mut() {
                let f_w = meta.word_freq.get(w).copied().unwrap_or(0) as f64;
                for (b, x) in row.iter_mut().enumerate() {
                    let r = ratio_weight(*x, f_w, meta.basis_freq[b] as f64, context_total);
                    *x = match scheme {
                        Weighting::Pmi if r > 0.0 => r.ln().max(0.0),
                        Weighting::Pmi => 0.0,
                        _ => r,
                    };
                }
            }
        }
        Weighting::TfIdf => {
            let n_docs = space.vectors.len() as f64;
            let mut df = vec![0.0f64; space.basis.len()];
            for row in space.vectors.values() {
                for (b, x) in row.iter().enumerate() {
                    if *x > 0.0 {
                        df[b] += 1.0;
                    }
                }
            }
            for row in space.vectors.values_mut() {
                for (b, x) in row.iter_mut().enumerate() {
                    *x = if df[b] > 0.0 { *x * (n_docs / df[b]).ln() } else { 0.0 };
                }
            }
        }
    }
}

/// Builds a space from a tokenised corpus. A basis request larger than the
/// available vocabulary is clamped and reported as a warning.
pub fn build_space(
    corpus: &[Vec<String>],
    config: &SpaceConfig,
) -> Result<(VectorSpace, Vec<BuildWarning>), SpaceError> {
    let word_freq = word_frequencies(corpus);
    let total_tokens: u64 = word_freq.values().sum();
    if total_tokens == 0 {
        return Err(SpaceError::EmptyCorpus);
    }
    let mut warnings = Vec::new();
    let basis = select_basis(&word_freq, config.basis_size, &config.stoplist);
    if basis.len() < config.basis_size {
        log::warn!(
            "basis size {} exceeds available vocabulary {}; clamping",
            config.basis_size,
            basis.len()
        );
        warnings.push(BuildWarning::BasisClamped {
            requested: config.basis_size,
            available: basis.len(),
        });
    }
    let basis_freq: Vec<u64> = basis.iter().map(|b| word_freq[b]).collect();
    let context_total = basis_freq.iter().sum();
    let mut vectors = count_cooccurrences(corpus, &basis, config.window, config.targets.as_ref());
    if let Some(targets) = &config.targets {
        for t in targets {
            vectors
                .entry(t.clone())
                .or_insert_with(|| vec![0.0; basis.len()]);
        }
    }
    let mut space = VectorSpace {
        basis,
        vectors,
        meta: CountsMeta {
            total_tokens,
            basis_freq,
            word_freq,
            context_total,
        },
    };
    reweight(&mut space, config.weighting);
    Ok((space, warnings))
}

/// Cosine similarity with a flag for degenerate (zero-norm) inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub value: f64,
    pub degenerate: bool,
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// `⟨u|v⟩ / (‖u‖‖v‖)`; a zero vector gives 0 with the degenerate flag set.
///
/// Panics if the lengths differ.
pub fn cosine(u: &[f64], v: &[f64]) -> Similarity {
    assert_eq!(u.len(), v.len(), "cosine of vectors with different lengths");
    let denom = norm(u) * norm(v);
    if denom == 0.0 {
        return Similarity {
            value: 0.0,
            degenerate: true,
        };
    }
    Similarity {
        value: (dot(u, v) / denom).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(text: &str) -> Vec<Vec<String>> {
        tokenize_corpus(text)
    }

    #[test]
    fn cosine_goldens() {
        let dog = [2.0, 2.0, 1.0];
        let cat = [3.0, 1.0, 0.0];
        let snake = [0.0, 2.0, 2.0];
        let c = cosine(&dog, &cat).value;
        assert!((c - 8.0 / (3.0 * 10f64.sqrt())).abs() < 1e-12);
        assert!((c - 0.843).abs() < 0.005);
        let s = cosine(&dog, &snake).value;
        assert!((s - 6.0 / (3.0 * 8f64.sqrt())).abs() < 1e-12);
        assert!((s - 0.707).abs() < 0.005);
        assert!((cosine(&dog, &dog).value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_cosine_is_flagged() {
        let sim = cosine(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(sim.value, 0.0);
        assert!(sim.degenerate);
    }

    #[test]
    fn toy_dog_vector() {
        let c = corpus("dog furry pet\ndog furry pet stroke\nstroke furry pet\n");
        let basis: Vec<String> = ["furry", "pet", "stroke"].iter().map(|s| s.to_string()).collect();
        let counts = count_cooccurrences(&c, &basis, Window::Sentence, None);
        assert_eq!(counts["dog"], vec![2.0, 2.0, 1.0]);
    }

    #[test]
    fn unseen_context_gives_zero_vector() {
        let c = corpus("lonely word\nfurry pet\n");
        let config = SpaceConfig {
            basis_size: 2,
            window: Window::Sentence,
            weighting: Weighting::Raw,
            stoplist: ["lonely", "word"].iter().map(|s| s.to_string()).collect(),
            targets: None,
        };
        let (space, _) = build_space(&c, &config).unwrap();
        assert_eq!(space.get("lonely").unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn ratio_weight_cases() {
        assert!((ratio_weight(2.0, 4.0, 10.0, 100.0) - 5.0).abs() < 1e-12);
        assert_eq!(ratio_weight(0.0, 4.0, 10.0, 100.0), 0.0);
        assert_eq!(ratio_weight(3.0, 0.0, 10.0, 100.0), 0.0);
    }

    #[test]
    fn ratio_is_one_under_independence() {
        // b occurs once with each of w and x; f_b = 2, f_b* = 2, f_w = 1
        let c = corpus("w b\nx b\n");
        let config = SpaceConfig {
            basis_size: 1,
            window: Window::Sentence,
            weighting: Weighting::Ratio,
            stoplist: ["w", "x"].iter().map(|s| s.to_string()).collect(),
            targets: None,
        };
        let (space, _) = build_space(&c, &config).unwrap();
        assert_eq!(space.basis, vec!["b"]);
        assert!((space.get("w").unwrap()[0] - 1.0).abs() < 1e-12);
        assert!((space.get("x").unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn word_window_is_sentence_bounded() {
        let c = corpus("a b c d e\nf a\n");
        let basis: Vec<String> = ["a", "c", "e", "f"].iter().map(|s| s.to_string()).collect();
        let counts = count_cooccurrences(&c, &basis, Window::Words(1), None);
        assert_eq!(counts["b"], vec![1.0, 1.0, 0.0, 0.0]);
        // "a" in sentence 2 sees f but nothing across the line break
        assert_eq!(counts["a"], vec![0.0, 0.0, 0.0, 1.0]);
        let counts = count_cooccurrences(&c, &basis, Window::Words(2), None);
        assert_eq!(counts["c"], vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_corpus_errors_and_clamp_warns() {
        assert!(matches!(
            build_space(&[], &SpaceConfig::default()),
            Err(SpaceError::EmptyCorpus)
        ));
        let c = corpus("a b\n");
        let config = SpaceConfig {
            basis_size: 10,
            ..Default::default()
        };
        let (space, warnings) = build_space(&c, &config).unwrap();
        assert_eq!(space.dim(), 2);
        assert_eq!(
            warnings,
            vec![BuildWarning::BasisClamped {
                requested: 10,
                available: 2
            }]
        );
    }

    #[test]
    fn basis_ties_break_lexicographically() {
        let mut freq = BTreeMap::new();
        freq.insert("zeta".to_string(), 3);
        freq.insert("alpha".to_string(), 3);
        freq.insert("mid".to_string(), 5);
        let basis = select_basis(&freq, 2, &BTreeSet::new());
        assert_eq!(basis, vec!["mid", "alpha"]);
    }

    #[test]
    fn pmi_is_non_negative() {
        let c = corpus("a b c\na b\nc d\nd a\n");
        let config = SpaceConfig {
            basis_size: 4,
            window: Window::Sentence,
            weighting: Weighting::Pmi,
            ..Default::default()
        };
        let (space, _) = build_space(&c, &config).unwrap();
        assert!(space.vectors.values().flatten().all(|&x| x >= 0.0));
    }

    #[test]
    fn space_tsv_round_trip() {
        let mut space = VectorSpace::new(vec!["far".into(), "room".into()]);
        space.insert("dog", vec![5.5, 1.0 / 3.0]).unwrap();
        space.insert("cat", vec![0.0, -2.25e-7]).unwrap();
        let text = space.to_tsv();
        assert!(text.starts_with("#basis\tfar\troom\n"));
        let back = VectorSpace::from_tsv(&text).unwrap();
        assert_eq!(back.basis, space.basis);
        assert_eq!(back.get("dog").unwrap()[1], 0.333333333);
        assert_eq!(back.to_tsv(), text);
        assert!(VectorSpace::from_tsv("dog\t1\n").is_err());
        assert!(VectorSpace::from_tsv("#basis\ta\ndog\t1\t2\n").is_err());
    }
}
