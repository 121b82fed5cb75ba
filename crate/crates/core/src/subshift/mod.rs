//! Symbolic layer: infinite-volume recurrence on patterns, the 1D pattern
//! languages of R_h, V_g^(h) and W_g^(h), graph presentations and entropy
//! estimates by counting.
//!
//! Languages of V and W are taken as words on an interval D that extend
//! to a pattern on D plus a collar of K sites per side, with p = g·u,
//! 0 ≤ p < γ_h and p recurrent on the extended interval. The collar is a
//! finite stand-in for a bi-infinite extension; the language shrinks as
//! K grows and stabilises quickly on the worked examples.

mod automaton;
mod figures;
mod graph;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

pub use automaton::{compare_languages, count_words, enumerate_words, Dfa, LanguageAutomaton, LanguageComparison, Nfa, WordAutomaton};
pub use figures::{figure_graphs, FIGURE_MAX_LENGTH, verify_figure_graphs, FigureCheck, FigureReport};
pub use graph::{graph_entropy, Edge, GraphEntropy, GraphLanguage, LabeledGraph};

use crate::error::{guard, Error, Result};
use crate::exec::Exec;
use crate::laurent::{parse, LaurentPoly};
use crate::toppling::{poly_matrix, Config, TopplingMatrix};
use crate::window::Window;
use automaton::Exposed;

/// Collar used when none is given.
pub const DEFAULT_COLLAR: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PatternKind {
    /// Recurrent configurations of h.
    R,
    /// Cofactors u with g·u recurrent for h = fg.
    V,
    /// Products g·u recurrent for h = fg.
    W,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternModel {
    pub kind: PatternKind,
    pub h: LaurentPoly,
    pub f: Option<LaurentPoly>,
    pub g: Option<LaurentPoly>,
    gamma: i64,
}

impl PatternModel {
    pub fn recurrent(h: &LaurentPoly) -> Result<Self> {
        let c = h.classify()?;
        if !c.sandpile {
            return Err(Error::NotSandpile(h.to_string()));
        }
        Ok(PatternModel { kind: PatternKind::R, h: h.clone(), f: None, g: None, gamma: c.gamma() })
    }

    fn product(kind: PatternKind, f: &LaurentPoly, g: &LaurentPoly) -> Result<Self> {
        let h = f.mul(g)?;
        let ch = h.classify()?;
        if !ch.sandpile {
            return Err(Error::NotSandpile(format!("fg = {h}")));
        }
        if !g.classify()?.sandpile {
            return Err(Error::InvalidModel("g must be a sandpile polynomial".into()));
        }
        Ok(PatternModel { kind, h, f: Some(f.clone()), g: Some(g.clone()), gamma: ch.gamma() })
    }

    pub fn cofactors(f: &LaurentPoly, g: &LaurentPoly) -> Result<Self> {
        Self::product(PatternKind::V, f, g)
    }

    pub fn products(f: &LaurentPoly, g: &LaurentPoly) -> Result<Self> {
        Self::product(PatternKind::W, f, g)
    }

    pub fn gamma(&self) -> i64 {
        self.gamma
    }

    fn g_or_one(&self) -> LaurentPoly {
        self.g.clone().unwrap_or_else(|| LaurentPoly::one(self.h.dim()))
    }

    /// Largest admissible cofactor value: g ∈ P_d forces 0 ≤ u ≤ (γ_h − 1)/g(1).
    pub fn u_max(&self) -> i64 {
        let g1 = self.g_or_one().value_at_one().to_i64().unwrap_or(1).max(1);
        (self.gamma - 1) / g1
    }

    /// Number of symbols a pattern may use.
    pub fn alphabet(&self) -> i64 {
        match self.kind {
            PatternKind::V => self.u_max() + 1,
            _ => self.gamma,
        }
    }

    /// Automaton for words on an interval (d = 1).
    pub fn automaton(&self, collar: usize, pinned: bool) -> Result<LanguageAutomaton> {
        let (exposed, collar) = match self.kind {
            PatternKind::R => (Exposed::Heights, 0),
            PatternKind::V => (Exposed::Cofactors, collar),
            PatternKind::W => (Exposed::Products, collar),
        };
        LanguageAutomaton::new(&self.h, &self.g_or_one(), exposed, collar, pinned)
    }
}

/// Runs one word through an automaton.
pub fn accepts_word<A: WordAutomaton>(a: &A, word: &[u8]) -> bool {
    let mut s = a.start();
    for &sym in word {
        match a.successors(&s).into_iter().find(|(x, _)| *x == sym) {
            Some((_, t)) => s = t,
            None => return false,
        }
    }
    a.accepts(&s)
}

/// Whether a finite pattern occurs in the model.
///
/// R_h: burning on the pattern's own window, which covers every finite
/// subset of the domain (sites outside can be given maximal heights, and
/// those burn first). V/W in d = 1 on an interval: exact membership in the
/// collar-K language. V/W otherwise: a necessary filter, namely range
/// checks plus burning of g·u on the part of the window where it is known.
pub fn pattern_admissible(p: &Config, model: &PatternModel) -> Result<bool> {
    pattern_admissible_with(p, model, DEFAULT_COLLAR)
}

pub fn pattern_admissible_with(p: &Config, model: &PatternModel, collar: usize) -> Result<bool> {
    let w = &p.window;
    if w.dim() != model.h.dim() {
        return Err(Error::DimensionMismatch { left: w.dim(), right: model.h.dim() });
    }
    if let Some(x) = p.heights.iter().find(|&&x| x < 0 || x >= model.alphabet()) {
        return Err(Error::InvalidConfig(format!("symbol {x} outside 0..{}", model.alphabet())));
    }
    if w.is_empty() {
        return Ok(true);
    }
    let burn = |win: &Window, heights: &[i64]| -> Result<bool> {
        if win.is_empty() {
            return Ok(true);
        }
        TopplingMatrix::from_poly(&model.h, win)?.is_recurrent_burning(heights)
    };
    if model.kind == PatternKind::R {
        return burn(w, &p.heights);
    }
    if let Some(word) = interval_word(p) {
        let a = model.automaton(collar, false)?;
        return Ok(accepts_word(&a, &word));
    }
    let heights = match model.kind {
        PatternKind::W => p.heights.clone(),
        _ => {
            let g = model.g.as_ref().expect("product model");
            let inner = w.interior(&g.reflect());
            let mut ps = Vec::with_capacity(inner.len());
            for n in inner.sites() {
                let v: i64 = g
                    .terms()
                    .map(|(j, c)| {
                        let m: Vec<i64> = n.iter().zip(j).map(|(a, b)| a - b).collect();
                        c.to_i64().unwrap() * p.heights[w.index_of(&m).expect("interior site")]
                    })
                    .sum();
                if !(0..model.gamma).contains(&v) {
                    return Ok(false);
                }
                ps.push(v);
            }
            return burn(&inner, &ps);
        }
    };
    burn(w, &heights)
}

/// The pattern as a word, if its window is a 1D interval.
fn interval_word(p: &Config) -> Option<Vec<u8>> {
    let w = &p.window;
    if w.dim() != 1 {
        return None;
    }
    let mut pairs: Vec<(i64, i64)> = w.sites().iter().map(|s| s[0]).zip(p.heights.iter().copied()).collect();
    pairs.sort_unstable();
    let contiguous = pairs.windows(2).all(|x| x[1].0 == x[0].0 + 1);
    contiguous.then(|| pairs.into_iter().map(|(_, v)| v as u8).collect())
}

fn is_worked_example(f: &LaurentPoly, g: &LaurentPoly) -> bool {
    *f == parse("-u^-1+2").unwrap() && *g == parse("2-u").unwrap()
}

/// The local rules for cofactors of f = 2 − u⁻¹, g = 2 − u:
/// u_n = 1 forces only 2s to its left, u_{n+1} = 2 and (g·u)_n ∈ {0, 1};
/// u_n = 2 forces u_{n−1} ∈ {1..4}, u_{n+1} ∈ {1, 2, 3}, (g·u)_n ≤ 3;
/// u_n = 3 forces u_{n−1} ∈ {2, 3, 4}, u_{n+1} ∈ {2, 3}, (g·u)_n ≥ 2;
/// u_n = 4 forces u_{n−1} = 4, u_{n+1} ∈ {2, 3, 4}, (g·u)_n = 4.
/// Each rule is applied where its neighbours lie inside the word.
pub fn local_conditions_check(u: &[i64], f: &LaurentPoly, g: &LaurentPoly) -> Result<bool> {
    if !is_worked_example(f, g) {
        return Err(Error::Unsupported("local rules are tabulated for f = 2 − u⁻¹, g = 2 − u only".into()));
    }
    for (n, &x) in u.iter().enumerate() {
        if !(1..=4).contains(&x) {
            return Ok(false);
        }
        let prev = n.checked_sub(1).map(|k| u[k]);
        let next = u.get(n + 1).copied();
        let gu = prev.map(|q| 2 * x - q);
        let (left, right, image): (&[i64], &[i64], &[i64]) = match x {
            1 => (&[2], &[2], &[0, 1]),
            2 => (&[1, 2, 3, 4], &[1, 2, 3], &[0, 1, 2, 3]),
            3 => (&[2, 3, 4], &[2, 3], &[2, 3, 4]),
            _ => (&[4], &[2, 3, 4], &[4]),
        };
        let ok = prev.is_none_or(|q| left.contains(&q))
            && next.is_none_or(|q| right.contains(&q))
            && gu.is_none_or(|q| image.contains(&q))
            && (x != 1 || u[..n].iter().all(|&q| q == 2));
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Boundary treatment when counting patterns on Q_N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStyle {
    /// Any extension to a collar of the given width.
    Free { collar: usize },
    /// Extensions whose collar carries the maximal symbol.
    MaxHeight { collar: usize },
}

impl Default for BoundaryStyle {
    fn default() -> Self {
        BoundaryStyle::Free { collar: DEFAULT_COLLAR }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountRow {
    pub n: usize,
    pub sites: usize,
    #[serde(serialize_with = "as_string")]
    pub count: BigUint,
    pub estimate: f64,
}

fn as_string<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// (1/|Q_N|) log #patterns on Q_N for N = 1..=n_max.
///
/// R_h patterns on a window are exactly its recurrent configurations, so
/// their number is |det Δ| in any dimension. V and W are counted by the
/// interval automaton in d = 1.
pub fn entropy_by_counting(model: &PatternModel, n_max: usize, style: BoundaryStyle, exec: Exec) -> Result<Vec<CountRow>> {
    let d = model.h.dim();
    let mut rows = Vec::with_capacity(n_max);
    let (collar, pinned) = match style {
        BoundaryStyle::Free { collar } => (collar, false),
        BoundaryStyle::MaxHeight { collar } => (collar, true),
    };
    let automaton = match (model.kind, d) {
        (PatternKind::R, _) => None,
        (_, 1) => Some(model.automaton(collar, pinned)?),
        _ => return Err(Error::Unsupported("V and W counting is implemented for d = 1".into())),
    };
    for n in 1..=n_max {
        let sites = (2 * n + 1).pow(d as u32);
        let count = match &automaton {
            None => {
                guard("counting window sites", sites as u128, 4096)?;
                let w = Window::cube(d, n as i64);
                poly_matrix(&model.h, &w).det().magnitude().clone()
            }
            Some(a) => BigUint::from(count_words(a, sites, exec)?),
        };
        let estimate = ln_big(&count) / sites as f64;
        rows.push(CountRow { n, sites, count, estimate });
    }
    Ok(rows)
}

/// CSV with columns n, count, estimate.
pub fn counts_to_csv(rows: &[CountRow]) -> String {
    let mut s = String::from("n,sites,count,estimate\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{:.12}\n", r.n, r.sites, r.count, r.estimate));
    }
    s
}

/// Pairs of W-words that agree outside the core Q_j but differ there by a
/// multiple of f. The expected outcome is none.
#[derive(Clone, Debug, Serialize)]
pub struct DistinctnessReport {
    pub core: i64,
    pub collar: i64,
    pub words: usize,
    pub groups: usize,
    pub pairs_checked: usize,
    pub violations: Vec<(Vec<u8>, Vec<u8>)>,
}

impl DistinctnessReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn distinctness_check(f: &LaurentPoly, g: &LaurentPoly, core: i64, collar: i64, extension: usize) -> Result<DistinctnessReport> {
    let model = PatternModel::products(f, g)?;
    let a = model.automaton(extension, false)?;
    let len = (2 * (core + collar) + 1) as usize;
    let words = enumerate_words(&a, len, 50_000_000)?;
    let (lo, hi) = (collar as usize, (collar + 2 * core) as usize);
    let mut groups: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for (k, w) in words.iter().enumerate() {
        let mut key = w.clone();
        key.drain(lo..=hi);
        groups.entry(key).or_default().push(k);
    }
    let mut report = DistinctnessReport {
        core,
        collar,
        words: words.len(),
        groups: groups.len(),
        pairs_checked: 0,
        violations: Vec::new(),
    };
    for members in groups.values() {
        for (i, &x) in members.iter().enumerate() {
            for &y in &members[i + 1..] {
                report.pairs_checked += 1;
                let diff = LaurentPoly::univariate(
                    &(lo..=hi)
                        .map(|k| (k as i64 - collar - core, words[x][k] as i64 - words[y][k] as i64))
                        .collect::<Vec<_>>(),
                );
                if diff.div_exact_1d(f)?.is_some() {
                    report.violations.push((words[x].clone(), words[y].clone()));
                }
            }
        }
    }
    Ok(report)
}
