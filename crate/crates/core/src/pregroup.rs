//! Pregroup types and contraction-based reduction.
//!
//! An atom carries an integer adjoint order: `0` is the plain type, `-1` the
//! left adjoint `aˡ`, `+1` the right adjoint `aʳ`, and larger magnitudes stand
//! for iterated adjoints. A contraction removes two adjacent atoms `x y` with
//! the same name when `order(y) = order(x) + 1`, which covers both `a aʳ → 1`
//! and `aˡ a → 1`.
//!
//! Reduction never applies expansions. Deciding whether a sequence contracts
//! to a target is done with an interval table over the concatenated atoms:
//! contraction-only reductions are exactly the non-crossing linkages between
//! contractible atom pairs, with the target atoms left unlinked.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: String,
    pub order: i32,
}

impl Atom {
    pub fn new(name: impl Into<String>, order: i32) -> Self {
        Atom {
            name: name.into(),
            order,
        }
    }

    pub fn plain(name: impl Into<String>) -> Self {
        Atom::new(name, 0)
    }

    /// True when `self` immediately followed by `next` contracts to the unit.
    pub fn contracts_with(&self, next: &Atom) -> bool {
        self.name == next.name && next.order == self.order + 1
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        match self.order {
            0 => Ok(()),
            k if k > 0 => write!(f, "^{}", "r".repeat(k as usize)),
            k => write!(f, "^{}", "l".repeat(k.unsigned_abs() as usize)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// An element of the free pregroup: a (possibly empty) product of atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PregroupType {
    atoms: Vec<Atom>,
}

impl PregroupType {
    pub fn unit() -> Self {
        PregroupType { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<Atom>) -> Self {
        PregroupType { atoms }
    }

    pub fn atom(name: impl Into<String>) -> Self {
        PregroupType {
            atoms: vec![Atom::plain(name)],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Returns the single plain atom this type consists of, if any.
    pub fn as_basic(&self) -> Option<&Atom> {
        match self.atoms.as_slice() {
            [a] if a.order == 0 => Some(a),
            _ => None,
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.atoms.iter().any(|a| a.name == name)
    }

    pub fn concat(&self, other: &PregroupType) -> PregroupType {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        PregroupType { atoms }
    }

    /// `(a·b)ʳ = bʳ·aʳ` and `(a·b)ˡ = bˡ·aˡ`.
    pub fn adjoint(&self, side: Side) -> PregroupType {
        let delta = match side {
            Side::Left => -1,
            Side::Right => 1,
        };
        PregroupType {
            atoms: self
                .atoms
                .iter()
                .rev()
                .map(|a| Atom::new(a.name.clone(), a.order + delta))
                .collect(),
        }
    }

    pub fn left(&self) -> PregroupType {
        self.adjoint(Side::Left)
    }

    pub fn right(&self) -> PregroupType {
        self.adjoint(Side::Right)
    }

    /// Applies `|k|` adjoints (right for positive `k`, left for negative).
    pub fn iterated_adjoint(&self, k: i32) -> PregroupType {
        let side = if k >= 0 { Side::Right } else { Side::Left };
        let mut out = self.clone();
        for _ in 0..k.unsigned_abs() {
            out = out.adjoint(side);
        }
        out
    }

    /// Replaces every occurrence of the atom named `name` by `replacement`,
    /// distributing adjoints: an occurrence of order `k` becomes the `k`-fold
    /// adjoint of the replacement.
    pub fn substitute(&self, name: &str, replacement: &PregroupType) -> PregroupType {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if a.name == name {
                atoms.extend(replacement.iterated_adjoint(a.order).atoms);
            } else {
                atoms.push(a.clone());
            }
        }
        PregroupType { atoms }
    }
}

impl fmt::Display for PregroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("1");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed type token {token:?} at position {position}: {reason}")]
pub struct TypeParseError {
    /// Zero-based token index within the notation string.
    pub position: usize,
    pub token: String,
    pub reason: &'static str,
}

/// Parses whitespace-separated atoms such as `n^r s n^l`; `1` is the unit.
pub fn parse_type(text: &str) -> Result<PregroupType, TypeParseError> {
    let mut atoms = Vec::new();
    for (position, token) in text.split_whitespace().enumerate() {
        if token == "1" {
            continue;
        }
        let err = |reason| TypeParseError {
            position,
            token: token.to_string(),
            reason,
        };
        let (name, suffix) = match token.split_once('^') {
            Some((name, suffix)) => (name, Some(suffix)),
            None => (token, None),
        };
        if name.is_empty() {
            return Err(err("empty atom name"));
        }
        let order = match suffix {
            None => 0,
            Some("") => return Err(err("empty adjoint suffix")),
            Some(s) if s.chars().all(|c| c == 'l') => -(s.len() as i32),
            Some(s) if s.chars().all(|c| c == 'r') => s.len() as i32,
            Some(s) if s.chars().all(|c| c == 'l' || c == 'r') => {
                return Err(err("mixed l/r adjoint suffix"))
            }
            Some(_) => return Err(err("adjoint suffix must be l or r")),
        };
        atoms.push(Atom::new(name, order));
    }
    Ok(PregroupType { atoms })
}

impl FromStr for PregroupType {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_type(s)
    }
}

/// One contraction: the atoms at `position` and `position + 1` of the current
/// sequence cancel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionStep {
    pub position: usize,
    pub left: Atom,
    pub right: Atom,
}

impl ContractionStep {
    /// `"aaʳ"` when the left atom is the base of the pair, `"aˡa"` otherwise.
    pub fn kind(&self) -> &'static str {
        if self.left.order >= 0 {
            "aaʳ"
        } else {
            "aˡa"
        }
    }
}

impl fmt::Display for ContractionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}: {} {} -> 1", self.position, self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTrace {
    pub steps: Vec<ContractionStep>,
    pub residual: PregroupType,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {index} does not match the sequence: {reason}")]
pub struct ReplayError {
    pub index: usize,
    pub reason: &'static str,
}

impl ReductionTrace {
    /// Applies the steps to `input` and returns the resulting atoms, checking
    /// that each step names an adjacent contractible pair.
    pub fn replay(&self, input: &[Atom]) -> Result<PregroupType, ReplayError> {
        let mut seq = input.to_vec();
        for (index, step) in self.steps.iter().enumerate() {
            let p = step.position;
            if p + 1 >= seq.len() {
                return Err(ReplayError {
                    index,
                    reason: "position out of range",
                });
            }
            if seq[p] != step.left || seq[p + 1] != step.right {
                return Err(ReplayError {
                    index,
                    reason: "atoms differ from the recorded pair",
                });
            }
            if !seq[p].contracts_with(&seq[p + 1]) {
                return Err(ReplayError {
                    index,
                    reason: "pair is not contractible",
                });
            }
            seq.drain(p..p + 2);
        }
        Ok(PregroupType::new(seq))
    }
}

/// Interval table over a fixed atom sequence: `empty[i][j]` says whether the
/// half-open range `i..j` contracts to the unit, and `link[i][j]` records the
/// partner chosen for atom `i` in that case.
struct Linkage<'a> {
    atoms: &'a [Atom],
    empty: Vec<Vec<bool>>,
    link: Vec<Vec<usize>>,
}

impl<'a> Linkage<'a> {
    fn new(atoms: &'a [Atom]) -> Self {
        let n = atoms.len();
        let mut empty = vec![vec![false; n + 1]; n + 1];
        let mut link = vec![vec![usize::MAX; n + 1]; n + 1];
        for (i, row) in empty.iter_mut().enumerate() {
            row[i] = true;
        }
        for len in (2..=n).step_by(2) {
            for i in 0..=n - len {
                let j = i + len;
                // atom i links with some m; the inside and the remainder must both vanish
                let mut m = i + 1;
                while m < j {
                    if atoms[i].contracts_with(&atoms[m]) && empty[i + 1][m] && empty[m + 1][j] {
                        empty[i][j] = true;
                        link[i][j] = m;
                        break;
                    }
                    m += 2;
                }
            }
        }
        Linkage { atoms, empty, link }
    }

    fn collect_pairs(&self, i: usize, j: usize, out: &mut Vec<(usize, usize)>) {
        let (mut i, j) = (i, j);
        while i < j {
            let m = self.link[i][j];
            out.push((i, m));
            self.collect_pairs(i + 1, m, out);
            i = m + 1;
        }
    }

    /// Positions of the atoms left standing when the sequence is reduced to
    /// `target`, choosing the leftmost feasible position for each target atom.
    fn residual_positions(&self, target: &[Atom]) -> Option<Vec<usize>> {
        let n = self.atoms.len();
        let t = target.len();
        if t > n {
            return None;
        }
        // feasible[k][p]: atoms p.. can reduce to target[k..]
        let mut feasible = vec![vec![false; n + 1]; t + 1];
        for p in 0..=n {
            feasible[t][p] = self.empty[p][n];
        }
        for k in (0..t).rev() {
            for p in (0..=n).rev() {
                feasible[k][p] = (p..n).any(|q| {
                    self.empty[p][q] && self.atoms[q] == target[k] && feasible[k + 1][q + 1]
                });
            }
        }
        if !feasible[0][0] {
            return None;
        }
        let mut positions = Vec::with_capacity(t);
        let mut p = 0;
        for (k, goal) in target.iter().enumerate() {
            let q = (p..n)
                .find(|&q| self.empty[p][q] && &self.atoms[q] == goal && feasible[k + 1][q + 1])
                .expect("feasibility table guarantees a position");
            positions.push(q);
            p = q + 1;
        }
        Some(positions)
    }
}

/// Turns a non-crossing linkage into an ordered list of contractions, always
/// contracting the leftmost adjacent linked pair first.
fn linkage_to_steps(atoms: &[Atom], pairs: &[(usize, usize)]) -> Vec<ContractionStep> {
    let mut partner = vec![usize::MAX; atoms.len()];
    for &(a, b) in pairs {
        partner[a] = b;
        partner[b] = a;
    }
    let mut alive: Vec<usize> = (0..atoms.len()).collect();
    let mut steps = Vec::with_capacity(pairs.len());
    loop {
        let next = alive
            .windows(2)
            .position(|w| partner[w[0]] == w[1] && w[0] < w[1]);
        let Some(p) = next else { break };
        steps.push(ContractionStep {
            position: p,
            left: atoms[alive[p]].clone(),
            right: atoms[alive[p + 1]].clone(),
        });
        alive.drain(p..p + 2);
    }
    steps
}

/// Decides whether the concatenation of `seq` contracts to `target`. On
/// success the trace replays to `target`; `None` means no contraction-only
/// reduction exists.
pub fn reduce(seq: &[PregroupType], target: &PregroupType) -> Option<ReductionTrace> {
    let atoms: Vec<Atom> = seq.iter().flat_map(|t| t.atoms.iter().cloned()).collect();
    reduce_atoms(&atoms, target)
}

pub fn reduce_atoms(atoms: &[Atom], target: &PregroupType) -> Option<ReductionTrace> {
    if !(atoms.len() - target.len().min(atoms.len())).is_multiple_of(2) || target.len() > atoms.len() {
        return None;
    }
    let table = Linkage::new(atoms);
    let residual = table.residual_positions(target.atoms())?;
    let mut pairs = Vec::new();
    let mut start = 0;
    for &q in residual.iter().chain(std::iter::once(&atoms.len())) {
        table.collect_pairs(start, q, &mut pairs);
        start = q + 1;
    }
    Some(ReductionTrace {
        steps: linkage_to_steps(atoms, &pairs),
        residual: target.clone(),
    })
}

/// Word → candidate types. Words may carry several types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<PregroupType>>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected `word<TAB>type`")]
    MissingColumn { line: usize },
    #[error("line {line}: {source}")]
    BadType {
        line: usize,
        #[source]
        source: TypeParseError,
    },
    #[error("word {0:?} is not in the lexicon")]
    UnknownWord(String),
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a type for `word`; duplicates are ignored.
    pub fn insert(&mut self, word: impl Into<String>, ty: PregroupType) {
        let types = self.entries.entry(word.into()).or_default();
        if !types.contains(&ty) {
            types.push(ty);
        }
    }

    pub fn types(&self, word: &str) -> Option<&[PregroupType]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[PregroupType])> {
        self.entries.iter().map(|(w, t)| (w.as_str(), t.as_slice()))
    }

    /// Reads `word<TAB>type-notation` lines; blank lines and `#` comments are
    /// skipped.
    pub fn from_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (word, ty) = raw
                .split_once('\t')
                .ok_or(LexiconError::MissingColumn { line })?;
            let ty = parse_type(ty).map_err(|source| LexiconError::BadType { line, source })?;
            lex.insert(word.trim(), ty);
        }
        Ok(lex)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, types) in &self.entries {
            for ty in types {
                out.push_str(word);
                out.push('\t');
                out.push_str(&ty.to_string());
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parse {
    /// The type chosen for each token, in order.
    pub assignment: Vec<PregroupType>,
    pub trace: ReductionTrace,
}

/// Tries every per-token type assignment (in lexicon order) and returns the
/// first one whose concatenation reduces to `target`.
pub fn is_grammatical(
    tokens: &[&str],
    lexicon: &Lexicon,
    target: &PregroupType,
) -> Result<Option<Parse>, LexiconError> {
    let mut candidates = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let types = lexicon
            .types(tok)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| LexiconError::UnknownWord(tok.to_string()))?;
        candidates.push(types);
    }
    let mut choice = vec![0usize; tokens.len()];
    loop {
        let assignment: Vec<PregroupType> = choice
            .iter()
            .zip(&candidates)
            .map(|(&c, types)| types[c].clone())
            .collect();
        if let Some(trace) = reduce(&assignment, target) {
            return Ok(Some(Parse { assignment, trace }));
        }
        // odometer over assignments, last token fastest
        let mut k = tokens.len();
        loop {
            if k == 0 {
                return Ok(None);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < candidates[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
}
