//! Reference implementations used as test oracles. Each one takes a
//! deliberately different route from the library code it checks.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use discocat::cfg::{validate, Cfg, Rule, Symbol};
use discocat::pregroup::{Atom, PregroupType};
use rand::seq::SliceRandom;
use rand::Rng;

/// Exhaustive search over every contraction order.
pub fn brute_force_reduces(atoms: &[Atom], target: &[Atom]) -> bool {
    fn go(seq: Vec<Atom>, target: &[Atom], seen: &mut HashSet<Vec<Atom>>) -> bool {
        if seq == target {
            return true;
        }
        if seq.len() <= target.len() || !seen.insert(seq.clone()) {
            return false;
        }
        for i in 0..seq.len() - 1 {
            let (x, y) = (&seq[i], &seq[i + 1]);
            if x.name == y.name && y.order == x.order + 1 {
                let mut next = seq.clone();
                next.drain(i..i + 2);
                if go(next, target, seen) {
                    return true;
                }
            }
        }
        false
    }
    go(atoms.to_vec(), target, &mut HashSet::new())
}

/// Memoised span recogniser over the grammar as written (rules of any
/// length, unit rules, ε symbols), without binarisation.
pub struct ChartOracle<'g> {
    rules: HashMap<&'g str, Vec<Vec<&'g Symbol>>>,
    start: &'g str,
}

impl<'g> ChartOracle<'g> {
    pub fn new(cfg: &'g Cfg) -> Self {
        let mut rules: HashMap<&str, Vec<Vec<&Symbol>>> = HashMap::new();
        for r in &cfg.rules {
            let rhs = r.rhs.iter().filter(|s| **s != Symbol::Epsilon).collect();
            rules.entry(r.lhs.as_str()).or_default().push(rhs);
        }
        ChartOracle {
            rules,
            start: &cfg.start,
        }
    }

    pub fn accepts(&self, words: &[&str]) -> bool {
        let mut memo = HashMap::new();
        self.derives(self.start, words, 0, words.len(), &mut memo, &mut HashSet::new())
    }

    fn derives(
        &self,
        nt: &'g str,
        w: &[&str],
        i: usize,
        j: usize,
        memo: &mut HashMap<(&'g str, usize, usize), bool>,
        active: &mut HashSet<(&'g str, usize, usize)>,
    ) -> bool {
        if let Some(&b) = memo.get(&(nt, i, j)) {
            return b;
        }
        if !active.insert((nt, i, j)) {
            return false;
        }
        let mut ok = false;
        for rhs in self.rules.get(nt).map(Vec::as_slice).unwrap_or(&[]) {
            if self.seq(rhs, w, i, j, memo, active) {
                ok = true;
                break;
            }
        }
        active.remove(&(nt, i, j));
        memo.insert((nt, i, j), ok);
        ok
    }

    fn seq(
        &self,
        rhs: &[&'g Symbol],
        w: &[&str],
        i: usize,
        j: usize,
        memo: &mut HashMap<(&'g str, usize, usize), bool>,
        active: &mut HashSet<(&'g str, usize, usize)>,
    ) -> bool {
        let Some((first, rest)) = rhs.split_first() else {
            return i == j;
        };
        // Every symbol covers at least one word in the grammars tested here.
        let max_end = j.saturating_sub(rest.len());
        for k in i + 1..=max_end {
            let head = match first {
                Symbol::Terminal(t) => k == i + 1 && w[i] == t,
                Symbol::NonTerminal(n) => self.derives(n, w, i, k, memo, active),
                Symbol::Epsilon => false,
            };
            if head && self.seq(rest, w, k, j, memo, active) {
                return true;
            }
        }
        false
    }
}

/// All strings over `alphabet` with length in `1..=max_len`.
pub fn all_strings<'a>(alphabet: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |a| {
                    let mut t = s.clone();
                    t.push(*a);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// A random grammar that passes validation: basic nonterminals produce
/// single terminals; complex ones produce one to three nonterminals.
pub fn random_valid_grammar<R: Rng>(rng: &mut R) -> Cfg {
    loop {
        let n_complex = rng.gen_range(1..=3);
        let n_basic = rng.gen_range(1..=3);
        let complex: Vec<String> = (0..n_complex)
            .map(|i| if i == 0 { "S".to_string() } else { format!("C{i}") })
            .collect();
        let basic: Vec<String> = (0..n_basic).map(|i| format!("B{i}")).collect();
        let terminals = ["x", "y", "z"];
        let pool: Vec<&String> = complex.iter().chain(&basic).collect();
        let mut rules = Vec::new();
        for c in &complex {
            for _ in 0..rng.gen_range(1..=2) {
                let len = rng.gen_range(1..=3);
                let rhs = (0..len)
                    .map(|_| Symbol::nt(pool.choose(rng).unwrap()))
                    .collect();
                rules.push(Rule::new(c, rhs));
            }
        }
        for b in &basic {
            let k = rng.gen_range(1..=2);
            for t in terminals.choose_multiple(rng, k) {
                rules.push(Rule::new(b, vec![Symbol::t(t)]));
            }
        }
        let cfg = Cfg::from_rules(rules).unwrap();
        if validate(&cfg).pseudo_proper && derives_something(&cfg) {
            return cfg;
        }
    }
}

/// Every nonterminal derives at least one terminal string.
fn derives_something(cfg: &Cfg) -> bool {
    let mut productive: BTreeSet<&str> = BTreeSet::new();
    loop {
        let before = productive.len();
        for r in &cfg.rules {
            if r.rhs.iter().all(|s| match s {
                Symbol::NonTerminal(n) => productive.contains(n.as_str()),
                _ => true,
            }) {
                productive.insert(&r.lhs);
            }
        }
        if productive.len() == before {
            break;
        }
    }
    cfg.nonterminals.iter().all(|n| productive.contains(n.as_str()))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ridge solution column by column through the normal equations.
pub fn ridge_oracle(x: &[Vec<f64>], y: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let p = x[0].len();
    let q = y[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            xtx[i][j] = x.iter().map(|r| r[i] * r[j]).sum::<f64>() + if i == j { lambda } else { 0.0 };
        }
    }
    let mut b = vec![vec![0.0; q]; p];
    for c in 0..q {
        let rhs: Vec<f64> = (0..p).map(|i| x.iter().zip(y).map(|(r, t)| r[i] * t[c]).sum()).collect();
        let col = gauss_solve(xtx.clone(), rhs);
        for i in 0..p {
            b[i][c] = col[i];
        }
    }
    b
}

/// Spearman's ρ from ranks found by pairwise comparison.
pub fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    let rank = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .map(|x| {
                let less = xs.iter().filter(|y| *y < x).count() as f64;
                let equal = xs.iter().filter(|y| *y == x).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn ty(s: &str) -> PregroupType {
    s.parse().unwrap()
}
