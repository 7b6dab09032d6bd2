//! Context-free grammars and their translation into pregroup type
//! dictionaries.
//!
//! The translation works on grammars that are pseudo-proper, binarised, and
//! keep terminal rules apart from non-terminal rules. [`validate`] reports
//! which of those restrictions a grammar breaks; [`binarize`] and
//! [`lift_terminals`] repair the two that can be repaired mechanically.
//! [`infer_types`] then walks the non-terminal rules in order, refining a set
//! of type dictionaries: each binary rule `A -> B C` is read either as
//! `(a cˡ) c → a` (the left symbol is compound) or `b (bʳ a) → a` (the right
//! symbol is compound).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::pregroup::{reduce, Lexicon, PregroupType};

/// Reserved spelling of the empty string in grammar files.
pub const EPSILON: &str = "EPS";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    NonTerminal(String),
    Terminal(String),
    Epsilon,
}

impl Symbol {
    pub fn nt(name: &str) -> Self {
        Symbol::NonTerminal(name.to_string())
    }

    pub fn t(word: &str) -> Self {
        Symbol::Terminal(word.to_string())
    }

    fn as_nonterminal(&self) -> Option<&str> {
        match self {
            Symbol::NonTerminal(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::NonTerminal(n) => f.write_str(n),
            Symbol::Terminal(w) => write!(f, "\"{w}\""),
            Symbol::Epsilon => f.write_str(EPSILON),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl Rule {
    pub fn new(lhs: &str, rhs: Vec<Symbol>) -> Self {
        Rule {
            lhs: lhs.to_string(),
            rhs,
        }
    }

    /// Right-hand side with ε removed.
    pub fn visible(&self) -> impl Iterator<Item = &Symbol> {
        self.rhs.iter().filter(|s| **s != Symbol::Epsilon)
    }

    fn has_terminal(&self) -> bool {
        self.rhs.iter().any(|s| matches!(s, Symbol::Terminal(_)))
    }

    fn has_nonterminal(&self) -> bool {
        self.rhs.iter().any(|s| matches!(s, Symbol::NonTerminal(_)))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        for s in &self.rhs {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("line {line}: expected `LHS -> RHS`")]
    MissingArrow { line: usize },
    #[error("line {line}: bad left-hand side {lhs:?}")]
    BadLhs { line: usize, lhs: String },
    #[error("line {line}: empty alternative")]
    EmptyAlternative { line: usize },
    #[error("line {line}: unterminated string literal")]
    Unterminated { line: usize },
    #[error("grammar has no rules")]
    Empty,
    #[error("rule {rule} could not be interpreted under any branch")]
    InferenceDeadlock { rule: String },
    #[error("nonterminal {0} has no type in the dictionary")]
    MissingType(String),
    #[error("terminal {word:?} is produced by complex type {nonterminal}")]
    TerminalFromComplex { word: String, nonterminal: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub nonterminals: BTreeSet<String>,
    pub terminals: BTreeSet<String>,
    pub rules: Vec<Rule>,
    pub start: String,
}

impl Cfg {
    /// Builds a grammar from rules; the first rule's left-hand side is the
    /// start symbol. Symbol sets are derived from the rules.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Self, GrammarError> {
        let start = rules.first().ok_or(GrammarError::Empty)?.lhs.clone();
        let mut nonterminals = BTreeSet::new();
        let mut terminals = BTreeSet::new();
        for r in &rules {
            nonterminals.insert(r.lhs.clone());
            for s in &r.rhs {
                match s {
                    Symbol::NonTerminal(n) => {
                        nonterminals.insert(n.clone());
                    }
                    Symbol::Terminal(w) => {
                        terminals.insert(w.clone());
                    }
                    Symbol::Epsilon => {}
                }
            }
        }
        Ok(Cfg {
            nonterminals,
            terminals,
            rules,
            start,
        })
    }

    /// Parses the line-oriented grammar format: `A -> B C`, `N -> "dog" | "cat"`,
    /// `#` comments, `EPS` for ε.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            let (lhs, rhs) = content
                .split_once("->")
                .ok_or(GrammarError::MissingArrow { line })?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) || lhs.contains('"') {
                return Err(GrammarError::BadLhs {
                    line,
                    lhs: lhs.to_string(),
                });
            }
            for alt in split_alternatives(rhs, line)? {
                if alt.is_empty() {
                    return Err(GrammarError::EmptyAlternative { line });
                }
                rules.push(Rule::new(lhs, alt));
            }
        }
        Cfg::from_rules(rules)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    fn uses_epsilon(&self) -> bool {
        self.rules.iter().any(|r| r.rhs.contains(&Symbol::Epsilon))
    }

    /// Nonterminals on the left of some rule with a terminal on the right.
    pub fn basic_types(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .filter(|r| r.has_terminal())
            .map(|r| r.lhs.clone())
            .collect()
    }

    pub fn complex_types(&self) -> BTreeSet<String> {
        let basic = self.basic_types();
        self.nonterminals
            .iter()
            .filter(|n| !basic.contains(*n))
            .cloned()
            .collect()
    }

    /// Rules whose right-hand side holds only nonterminals (ε ignored).
    pub fn nonterminal_rules(&self) -> Vec<&Rule> {
        self.rules
            .iter()
            .filter(|r| r.has_nonterminal() && !r.has_terminal())
            .collect()
    }

    fn fresh_name(&self, prefix: &str, counter: &mut usize) -> String {
        loop {
            *counter += 1;
            let name = format!("{prefix}{counter}");
            if !self.nonterminals.contains(&name) {
                return name;
            }
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_alternatives(rhs: &str, line: usize) -> Result<Vec<Vec<Symbol>>, GrammarError> {
    let mut alts = vec![Vec::new()];
    let mut chars = rhs.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '|' {
            chars.next();
            alts.push(Vec::new());
        } else if c == '"' {
            chars.next();
            let mut word = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => word.push(ch),
                    None => return Err(GrammarError::Unterminated { line }),
                }
            }
            alts.last_mut().unwrap().push(Symbol::Terminal(word));
        } else {
            let mut name = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '|' || ch == '"' {
                    break;
                }
                name.push(ch);
                chars.next();
            }
            let sym = if name == EPSILON {
                Symbol::Epsilon
            } else {
                Symbol::NonTerminal(name)
            };
            alts.last_mut().unwrap().push(sym);
        }
    }
    Ok(alts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub pseudo_proper: bool,
    pub violations: Vec<Violation>,
    pub basic_types: BTreeSet<String>,
    pub complex_types: BTreeSet<String>,
}

/// Checks the pseudo-proper conditions plus the terminal-separation
/// restrictions. Binarisation is not checked here; see [`binarize`].
pub fn validate(cfg: &Cfg) -> ValidationReport {
    let mut violations = Vec::new();
    let mut flag = |subject: String, reason: &str| {
        violations.push(Violation {
            subject,
            reason: reason.to_string(),
        })
    };

    let lhs: BTreeSet<&str> = cfg.rules.iter().map(|r| r.lhs.as_str()).collect();
    for n in &cfg.nonterminals {
        if !lhs.contains(n.as_str()) {
            flag(n.clone(), "nonterminal is not the left-hand side of any rule");
        }
    }

    let reachable = reachable_symbols(cfg);
    for n in &cfg.nonterminals {
        if !reachable.contains(&Symbol::NonTerminal(n.clone())) {
            flag(n.clone(), "unreachable from the start symbol");
        }
    }
    for w in &cfg.terminals {
        if !reachable.contains(&Symbol::Terminal(w.clone())) {
            flag(format!("\"{w}\""), "unreachable from the start symbol");
        }
    }

    for n in unit_cycle_members(cfg) {
        flag(n, "lies on a unit-rule cycle");
    }

    for r in &cfg.rules {
        if r.visible().next().is_none() {
            flag(r.to_string(), "rule has no symbol besides ε");
        }
        if r.has_terminal() && r.has_nonterminal() {
            flag(r.to_string(), "rule mixes terminals and nonterminals");
        }
    }

    let basic = cfg.basic_types();
    for n in &basic {
        if cfg
            .rules
            .iter()
            .any(|r| &r.lhs == n && r.has_nonterminal() && !r.has_terminal())
        {
            flag(
                n.clone(),
                "left-hand side of both terminal and non-terminal rules",
            );
        }
    }

    ValidationReport {
        pseudo_proper: violations.is_empty(),
        violations,
        complex_types: cfg.complex_types(),
        basic_types: basic,
    }
}

fn reachable_symbols(cfg: &Cfg) -> BTreeSet<Symbol> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![cfg.start.clone()];
    seen.insert(Symbol::NonTerminal(cfg.start.clone()));
    while let Some(n) = stack.pop() {
        for r in cfg.rules.iter().filter(|r| r.lhs == n) {
            for s in &r.rhs {
                if seen.insert(s.clone()) {
                    if let Symbol::NonTerminal(m) = s {
                        stack.push(m.clone());
                    }
                }
            }
        }
    }
    seen
}

/// Nonterminals `A` with `A ⇒⁺ A` through unit rules (ε ignored).
fn unit_cycle_members(cfg: &Cfg) -> Vec<String> {
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &cfg.rules {
        let vis: Vec<&Symbol> = r.visible().collect();
        if let [Symbol::NonTerminal(b)] = vis.as_slice() {
            edges.entry(r.lhs.as_str()).or_default().insert(b.as_str());
        }
    }
    let mut members = Vec::new();
    for &a in edges.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = edges[a].iter().copied().collect();
        while let Some(x) = stack.pop() {
            if x == a {
                members.push(a.to_string());
                break;
            }
            if seen.insert(x) {
                if let Some(next) = edges.get(x) {
                    stack.extend(next.iter().copied());
                }
            }
        }
    }
    members
}

/// Rewrites every rule with more than two visible symbols into a left-branching
/// chain of binary rules over fresh symbols `_Bin1`, `_Bin2`, ...
pub fn binarize(cfg: &Cfg) -> Cfg {
    let mut counter = 0;
    let mut rules = Vec::with_capacity(cfg.rules.len());
    let mut names = cfg.clone();
    for r in &cfg.rules {
        let mut rhs: Vec<Symbol> = r.visible().cloned().collect();
        if rhs.len() <= 2 {
            rules.push(r.clone());
            continue;
        }
        let mut lhs = r.lhs.clone();
        while rhs.len() > 2 {
            let last = rhs.pop().unwrap();
            let fresh = names.fresh_name("_Bin", &mut counter);
            names.nonterminals.insert(fresh.clone());
            rules.push(Rule {
                lhs: lhs.clone(),
                rhs: vec![Symbol::NonTerminal(fresh.clone()), last],
            });
            lhs = fresh;
        }
        rules.push(Rule { lhs, rhs });
    }
    Cfg::from_rules(rules).expect("binarisation keeps at least one rule")
}

/// Separates terminals from nonterminals: terminals inside mixed or
/// multi-word rules become fresh basic nonterminals `_T1`, `_T2`, ..., and the
/// terminal rules of a
/// nonterminal that also has non-terminal rules move to a fresh nonterminal.
pub fn lift_terminals(cfg: &Cfg) -> Cfg {
    let mut counter = 0;
    let mut names = cfg.clone();
    let mut word_symbol: HashMap<String, String> = HashMap::new();
    let mut rules: Vec<Rule> = Vec::with_capacity(cfg.rules.len());
    let mut added: Vec<Rule> = Vec::new();

    for r in &cfg.rules {
        if !(r.has_terminal() && (r.has_nonterminal() || r.visible().count() > 1)) {
            rules.push(r.clone());
            continue;
        }
        let rhs = r
            .rhs
            .iter()
            .map(|s| match s {
                Symbol::Terminal(w) => {
                    let sym = word_symbol.entry(w.clone()).or_insert_with(|| {
                        let fresh = names.fresh_name("_T", &mut counter);
                        names.nonterminals.insert(fresh.clone());
                        added.push(Rule::new(&fresh, vec![Symbol::Terminal(w.clone())]));
                        fresh
                    });
                    Symbol::NonTerminal(sym.clone())
                }
                other => other.clone(),
            })
            .collect();
        rules.push(Rule {
            lhs: r.lhs.clone(),
            rhs,
        });
    }

    // nonterminals with both kinds of rules
    let with_nt: BTreeSet<String> = rules
        .iter()
        .filter(|r| r.has_nonterminal())
        .map(|r| r.lhs.clone())
        .collect();
    let mut moved: BTreeMap<String, String> = BTreeMap::new();
    let mut out = Vec::with_capacity(rules.len() + added.len());
    for r in rules {
        if r.has_terminal() && with_nt.contains(&r.lhs) {
            let fresh = match moved.get(&r.lhs) {
                Some(f) => f.clone(),
                None => {
                    let f = names.fresh_name("_T", &mut counter);
                    names.nonterminals.insert(f.clone());
                    out.push(Rule::new(&r.lhs, vec![Symbol::NonTerminal(f.clone())]));
                    moved.insert(r.lhs.clone(), f.clone());
                    f
                }
            };
            added.push(Rule {
                lhs: fresh,
                rhs: r.rhs,
            });
        } else {
            out.push(r);
        }
    }
    out.extend(added);
    Cfg::from_rules(out).expect("lifting keeps at least one rule")
}

/// Pregroup types for the nonterminals of a grammar plus the derived term
/// lexicon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDictionary {
    pub nonterminal_types: BTreeMap<String, PregroupType>,
    pub term_types: Lexicon,
}

impl TypeDictionary {
    pub fn get(&self, nonterminal: &str) -> Option<&PregroupType> {
        self.nonterminal_types.get(nonterminal)
    }

    pub fn nonterminals_tsv(&self) -> String {
        let mut out = String::new();
        for (n, ty) in &self.nonterminal_types {
            out.push_str(&format!("{n}\t{ty}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceMode {
    /// Every leaf of the inference tree.
    Full,
    /// Only the leftmost path.
    Fast,
}

/// Initial dictionary: each nonterminal gets its own atom (lowercased name,
/// made unique), ε gets the unit.
pub fn initial_dictionary(cfg: &Cfg) -> BTreeMap<String, PregroupType> {
    let mut used = BTreeSet::new();
    let mut dict = BTreeMap::new();
    for n in &cfg.nonterminals {
        let base = n.to_lowercase();
        let mut name = base.clone();
        let mut k = 1;
        while !used.insert(name.clone()) {
            k += 1;
            name = format!("{base}{k}");
        }
        dict.insert(n.clone(), PregroupType::atom(name));
    }
    if cfg.uses_epsilon() {
        dict.insert(EPSILON.to_string(), PregroupType::unit());
    }
    dict
}

type Dict = BTreeMap<String, PregroupType>;

fn substitute_all(dict: &Dict, atom: &str, replacement: &PregroupType) -> Dict {
    dict.iter()
        .map(|(k, v)| (k.clone(), v.substitute(atom, replacement)))
        .collect()
}

/// The children of one inference-tree node for one rule, left child first.
fn expand(rule: &[&str], lhs: &str, d0: &Dict, dj: &Dict) -> Vec<Dict> {
    let ty = |n: &str| &dj[n];
    let mut children = Vec::new();
    match rule {
        [b] => {
            let (a_ty, b_ty) = (ty(lhs), ty(b));
            if a_ty == b_ty {
                children.push(dj.clone());
            } else if let Some(atom) = b_ty.as_basic().filter(|x| !a_ty.mentions(&x.name)) {
                children.push(substitute_all(dj, &atom.name, a_ty));
            } else if let Some(atom) = a_ty.as_basic().filter(|x| !b_ty.mentions(&x.name)) {
                children.push(substitute_all(dj, &atom.name, b_ty));
            }
        }
        [b, c] => {
            // left element compound: b := a cˡ
            if *b != lhs && ty(b) == &d0[*b] {
                let atom = &d0[*b].atoms()[0].name;
                if !ty(lhs).mentions(atom) && !ty(c).mentions(atom) {
                    let repl = ty(lhs).concat(&ty(c).left());
                    children.push(substitute_all(dj, atom, &repl));
                }
            }
            // right element compound: c := bʳ a
            if *c != lhs && ty(c) == &d0[*c] {
                let atom = &d0[*c].atoms()[0].name;
                if !ty(lhs).mentions(atom) && !ty(b).mentions(atom) {
                    let repl = ty(b).right().concat(ty(lhs));
                    children.push(substitute_all(dj, atom, &repl));
                }
            }
        }
        _ => {}
    }
    children
}

/// Runs type inference over the non-terminal rules in grammar order.
///
/// The grammar should already be validated, binarised, and have its terminals
/// lifted. Each returned dictionary makes every non-terminal rule a valid
/// pregroup reduction. A substitution is only made when the atom being
/// replaced does not occur in the replacement; otherwise the branch is pruned.
pub fn infer_types(cfg: &Cfg, mode: InferenceMode) -> Result<Vec<TypeDictionary>, GrammarError> {
    let d0 = initial_dictionary(cfg);
    let mut boundary = vec![d0.clone()];
    for rule in cfg.nonterminal_rules() {
        let rhs: Vec<&str> = rule
            .visible()
            .filter_map(Symbol::as_nonterminal)
            .collect();
        let mut next = Vec::new();
        for dj in &boundary {
            let mut children = expand(&rhs, &rule.lhs, &d0, dj);
            if mode == InferenceMode::Fast {
                children.truncate(1);
            }
            next.extend(children);
            if mode == InferenceMode::Fast && !next.is_empty() {
                break;
            }
        }
        if next.is_empty() {
            return Err(GrammarError::InferenceDeadlock {
                rule: rule.to_string(),
            });
        }
        boundary = next;
    }
    boundary
        .into_iter()
        .map(|nonterminal_types| {
            let mut d = TypeDictionary {
                nonterminal_types,
                term_types: Lexicon::new(),
            };
            d.term_types = term_dictionary(cfg, &d)?;
            Ok(d)
        })
        .collect()
}

/// A grammar prepared for inference together with its dictionaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub grammar: Cfg,
    pub dictionaries: Vec<TypeDictionary>,
}

/// Lifts terminals, binarises, and infers pregroup dictionaries.
pub fn translate(cfg: &Cfg, mode: InferenceMode) -> Result<Translation, GrammarError> {
    let grammar = binarize(&lift_terminals(cfg));
    let dictionaries = infer_types(&grammar, mode)?;
    Ok(Translation { grammar, dictionaries })
}

/// Assigns each terminal word the type of every basic nonterminal producing it.
pub fn term_dictionary(cfg: &Cfg, d: &TypeDictionary) -> Result<Lexicon, GrammarError> {
    let complex: BTreeSet<String> = cfg
        .rules
        .iter()
        .filter(|r| r.has_nonterminal())
        .map(|r| r.lhs.clone())
        .collect();
    let mut lex = Lexicon::new();
    for r in cfg.rules.iter().filter(|r| r.has_terminal()) {
        if complex.contains(&r.lhs) {
            let word = r
                .rhs
                .iter()
                .find_map(|s| match s {
                    Symbol::Terminal(w) => Some(w.clone()),
                    _ => None,
                })
                .unwrap_or_default();
            return Err(GrammarError::TerminalFromComplex {
                word,
                nonterminal: r.lhs.clone(),
            });
        }
        let ty = d
            .get(&r.lhs)
            .ok_or_else(|| GrammarError::MissingType(r.lhs.clone()))?;
        for s in &r.rhs {
            if let Symbol::Terminal(w) = s {
                lex.insert(w.clone(), ty.clone());
            }
        }
    }
    Ok(lex)
}

/// Checks that every non-terminal rule `A -> B C` (or `A -> B`) becomes a
/// pregroup reduction under `d`. Returns the first failing rule.
pub fn check_soundness(cfg: &Cfg, d: &TypeDictionary) -> Result<(), String> {
    for rule in cfg.nonterminal_rules() {
        let parts: Vec<PregroupType> = rule
            .visible()
            .filter_map(Symbol::as_nonterminal)
            .map(|n| d.nonterminal_types[n].clone())
            .collect();
        if reduce(&parts, &d.nonterminal_types[&rule.lhs]).is_none() {
            return Err(rule.to_string());
        }
    }
    Ok(())
}
