//! Finite automata for 1D pattern languages.
//!
//! A pattern p on an interval is recurrent iff some linear order of its
//! sites (the burn order) gives every site i a nonnegative budget
//! p_i − Σ_{j after i} |h_{i−j}|. Only sites within the support radius
//! interact, so a left-to-right scan only needs the relative order and
//! remaining budgets of the last r sites. Inserting each new site into
//! that local order always extends to a global order, which makes the
//! scan an exact nondeterministic automaton. Subset construction with
//! budget antichains then counts words rather than paths.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use smallvec::SmallVec;

use crate::error::{guard, Error, Result};
use crate::exec::Exec;
use crate::laurent::LaurentPoly;

pub(crate) const STATE_LIMIT: u128 = 100_000_000;

/// Language over the alphabet 0..alphabet(), read one symbol at a time.
pub trait WordAutomaton: Sync {
    type State: Clone + Eq + Hash + Ord + Send + Sync;

    fn alphabet(&self) -> u8;
    fn start(&self) -> Self::State;
    /// Successor on each symbol; dead successors are omitted.
    fn successors(&self, s: &Self::State) -> Vec<(u8, Self::State)>;
    fn accepts(&self, s: &Self::State) -> bool;
}

/// One NFA state of the recurrence scan.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nfa {
    /// Last s values of u, oldest first.
    hist: SmallVec<[u8; 4]>,
    /// Burn ranks of the window sites, oldest first.
    ranks: SmallVec<[u8; 8]>,
    budgets: SmallVec<[i16; 8]>,
}

/// Antichain of NFA states: for equal history and order, more budget wins.
pub type Dfa = Vec<Nfa>;

fn reduce(mut states: Vec<Nfa>) -> Dfa {
    states.sort();
    states.dedup();
    let mut out: Vec<Nfa> = Vec::with_capacity(states.len());
    let mut start = 0;
    while start < states.len() {
        let mut end = start + 1;
        while end < states.len() && states[end].hist == states[start].hist && states[end].ranks == states[start].ranks {
            end += 1;
        }
        let group = &states[start..end];
        for (a, sa) in group.iter().enumerate() {
            // states are deduplicated, so domination is strict
            let dominated = group
                .iter()
                .enumerate()
                .any(|(b, sb)| b != a && sb.budgets.iter().zip(&sa.budgets).all(|(x, y)| x >= y));
            if !dominated {
                out.push(sa.clone());
            }
        }
        start = end;
    }
    out
}

/// Which symbol a step exposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Label {
    Hidden,
    U,
    P,
}

/// Restriction on the hidden steps of a collar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Pin {
    Free,
    MaxU,
    MaxP,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Step {
    label: Label,
    pin: Pin,
}

/// Recurrence scan for p = g·u with p recurrent for h.
#[derive(Clone, Debug)]
pub(crate) struct Scanner {
    /// |h_d| for d in −r..=r.
    h_abs: Vec<i16>,
    r: usize,
    gamma: i64,
    /// g_{gl}, g_{gl+1}, …, g_{gh}.
    g: Vec<i64>,
    gl: i64,
    s: usize,
    u_max: u8,
}

impl Scanner {
    pub(crate) fn new(h: &LaurentPoly, g: &LaurentPoly) -> Result<Self> {
        if h.dim() != 1 || g.dim() != 1 {
            return Err(Error::Unsupported("automata are implemented for d = 1 only".into()));
        }
        let ch = h.classify()?;
        let cg = g.classify()?;
        if !ch.sandpile || !cg.sandpile {
            return Err(Error::NotSandpile("h and g must be sandpile polynomials".into()));
        }
        let gamma = ch.gamma();
        let r = h.radius() as usize;
        let h_abs = (-(r as i64)..=r as i64).map(|d| h.coeff_i64(&[d]).abs() as i16).collect();
        let (lo, hi) = g.exponent_bounds().expect("nonzero");
        let g_dense: Vec<i64> = (lo[0]..=hi[0]).map(|j| g.coeff_i64(&[j])).collect();
        let g1 = g.value_at_one().to_string().parse::<i64>().expect("small");
        let u_max = ((gamma - 1) / g1) as u8;
        Ok(Scanner { h_abs, r, gamma, gl: lo[0], s: g_dense.len() - 1, g: g_dense, u_max })
    }

    fn h_abs(&self, d: i64) -> i16 {
        self.h_abs[(d + self.r as i64) as usize]
    }

    /// Reads u; returns p (if emitted) and pushes the successors.
    fn advance(&self, st: &Nfa, u: u8, out: &mut Vec<Nfa>) -> Option<i64> {
        if st.hist.len() < self.s {
            let mut n = st.clone();
            n.hist.push(u);
            out.push(n);
            return None;
        }
        // p_x = g_gl u_t + Σ_{k≥1} g_{gl+k} u_{t−k}
        let mut p = self.g[0] * u as i64;
        for k in 1..=self.s {
            p += self.g[k] * st.hist[self.s - k] as i64;
        }
        if p < 0 || p >= self.gamma {
            return Some(p);
        }
        let mut hist = st.hist.clone();
        if self.s > 0 {
            hist.remove(0);
            hist.push(u);
        }
        let k = st.ranks.len();
        'q: for q in 0..=k as u8 {
            let mut ranks = st.ranks.clone();
            let mut budgets = st.budgets.clone();
            let mut load: i16 = 0;
            for idx in 0..k {
                let dist = (k - idx) as i64;
                if ranks[idx] >= q {
                    load += self.h_abs(dist);
                    ranks[idx] += 1;
                } else {
                    budgets[idx] -= self.h_abs(-dist);
                    if budgets[idx] < 0 {
                        continue 'q;
                    }
                }
            }
            let own = p as i16 - load;
            if own < 0 {
                continue;
            }
            ranks.push(q);
            budgets.push(own);
            if ranks.len() > self.r {
                let dropped = ranks.remove(0);
                budgets.remove(0);
                for x in ranks.iter_mut() {
                    if *x > dropped {
                        *x -= 1;
                    }
                }
            }
            out.push(Nfa { hist: hist.clone(), ranks, budgets });
        }
        Some(p)
    }

    fn choices(&self, pin: Pin) -> std::ops::RangeInclusive<u8> {
        match pin {
            Pin::MaxU => self.u_max..=self.u_max,
            _ => 0..=self.u_max,
        }
    }

    /// Successors bucketed by exposed symbol (0 for hidden steps).
    fn expand(&self, dfa: &Dfa, step: Step) -> BTreeMap<u8, Dfa> {
        let mut buckets: BTreeMap<u8, Vec<Nfa>> = BTreeMap::new();
        let mut buf = Vec::new();
        for st in dfa {
            for u in self.choices(step.pin) {
                buf.clear();
                let p = self.advance(st, u, &mut buf);
                if buf.is_empty() {
                    continue;
                }
                if step.pin == Pin::MaxP && p.is_some_and(|p| p != self.gamma - 1) {
                    continue;
                }
                let key = match step.label {
                    Label::Hidden => 0,
                    Label::U => u,
                    Label::P => match p {
                        Some(p) => p as u8,
                        None => continue,
                    },
                };
                buckets.entry(key).or_default().extend(buf.drain(..));
            }
        }
        buckets.into_iter().map(|(k, v)| (k, reduce(v))).filter(|(_, v)| !v.is_empty()).collect()
    }
}

/// Which symbols a language exposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Exposed {
    /// p itself (R_h, g = 1).
    Heights,
    /// u, with p = g·u hidden (V).
    Cofactors,
    /// p = g·u, with u hidden (W).
    Products,
}

/// Words of a fixed length on D = [0, n) admitting an extension by a
/// collar of `collar` sites on each side.
#[derive(Clone, Debug)]
pub struct LanguageAutomaton {
    scanner: Scanner,
    prefix: Vec<Step>,
    suffix: Vec<Step>,
    labeled: Step,
    alphabet: u8,
}

impl LanguageAutomaton {
    pub(crate) fn new(h: &LaurentPoly, g: &LaurentPoly, exposed: Exposed, collar: usize, pinned: bool) -> Result<Self> {
        let scanner = Scanner::new(h, g)?;
        let gl = scanner.gl;
        let gh = gl + scanner.s as i64;
        let k = collar as i64;
        // p lives on [−K, n−1+K]; u on [−K−gh, n−1+K−gl]; step t reads u_t, emits p_{t+gl}
        let pin = match (pinned, exposed) {
            (false, _) => Pin::Free,
            (true, Exposed::Cofactors) => Pin::MaxU,
            (true, _) => Pin::MaxP,
        };
        let hidden = Step { label: Label::Hidden, pin };
        let (n_prefix, n_suffix) = match exposed {
            Exposed::Cofactors => (k + gh, k - gl),
            _ => (k + gh - gl, k),
        };
        let labeled = Step {
            label: if exposed == Exposed::Cofactors { Label::U } else { Label::P },
            pin: Pin::Free,
        };
        let alphabet = match exposed {
            Exposed::Cofactors => scanner.u_max + 1,
            _ => scanner.gamma as u8,
        };
        // fill steps of the prefix precede E_p and are never pinned to a max p
        let mut prefix: Vec<Step> = vec![hidden; n_prefix.max(0) as usize];
        if pin == Pin::MaxP {
            for st in prefix.iter_mut().take(scanner.s) {
                st.pin = Pin::Free;
            }
        }
        Ok(LanguageAutomaton { prefix, suffix: vec![hidden; n_suffix.max(0) as usize], labeled, alphabet, scanner })
    }

    fn run_hidden(&self, mut dfa: Dfa, steps: &[Step]) -> Dfa {
        for &st in steps {
            if dfa.is_empty() {
                break;
            }
            dfa = self.scanner.expand(&dfa, st).remove(&0).unwrap_or_default();
        }
        dfa
    }
}

impl WordAutomaton for LanguageAutomaton {
    type State = Dfa;

    fn alphabet(&self) -> u8 {
        self.alphabet
    }

    fn start(&self) -> Dfa {
        let init = vec![Nfa { hist: SmallVec::new(), ranks: SmallVec::new(), budgets: SmallVec::new() }];
        self.run_hidden(init, &self.prefix)
    }

    fn successors(&self, s: &Dfa) -> Vec<(u8, Dfa)> {
        self.scanner.expand(s, self.labeled).into_iter().collect()
    }

    fn accepts(&self, s: &Dfa) -> bool {
        !self.run_hidden(s.clone(), &self.suffix).is_empty()
    }
}

/// Number of accepted words of length n.
pub fn count_words<A: WordAutomaton>(a: &A, n: usize, exec: Exec) -> Result<u128> {
    let mut layer: HashMap<A::State, u128> = HashMap::new();
    layer.insert(a.start(), 1);
    for _ in 0..n {
        let mut states: Vec<(A::State, u128)> = layer.into_iter().collect();
        states.sort_by(|x, y| x.0.cmp(&y.0));
        let succ = exec.map_slice(&states, |(s, c)| (a.successors(s), *c));
        let mut next: HashMap<A::State, u128> = HashMap::new();
        for (list, c) in succ {
            for (_, t) in list {
                *next.entry(t).or_insert(0) += c;
            }
        }
        guard("automaton states", next.len() as u128, STATE_LIMIT)?;
        layer = next;
    }
    let mut states: Vec<(A::State, u128)> = layer.into_iter().collect();
    states.sort_by(|x, y| x.0.cmp(&y.0));
    let acc = exec.map_slice(&states, |(s, c)| if a.accepts(s) { *c } else { 0 });
    Ok(acc.into_iter().sum())
}

/// All accepted words of length n in lexicographic order.
pub fn enumerate_words<A: WordAutomaton>(a: &A, n: usize, limit: usize) -> Result<Vec<Vec<u8>>> {
    fn go<A: WordAutomaton>(
        a: &A,
        s: &A::State,
        n: usize,
        word: &mut Vec<u8>,
        out: &mut Vec<Vec<u8>>,
        limit: usize,
    ) -> Result<()> {
        if word.len() == n {
            if a.accepts(s) {
                guard("enumerated words", out.len() as u128 + 1, limit as u128)?;
                out.push(word.clone());
            }
            return Ok(());
        }
        for (sym, t) in a.successors(s) {
            word.push(sym);
            go(a, &t, n, word, out, limit)?;
            word.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    go(a, &a.start(), n, &mut Vec::new(), &mut out, limit)?;
    Ok(out)
}

/// Comparison of two languages at a fixed word length.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LanguageComparison {
    pub length: usize,
    pub left: u128,
    pub right: u128,
    pub common: u128,
    pub only_left: Option<Vec<u8>>,
    pub only_right: Option<Vec<u8>>,
}

impl LanguageComparison {
    pub fn equal(&self) -> bool {
        self.left == self.common && self.right == self.common
    }
}

/// Product DP over both automata, tracking one witness per state pair.
pub fn compare_languages<A: WordAutomaton, B: WordAutomaton>(a: &A, b: &B, n: usize) -> Result<LanguageComparison> {
    type Key<SA, SB> = (Option<SA>, Option<SB>);
    let mut layer: BTreeMap<Key<A::State, B::State>, (u128, Vec<u8>)> = BTreeMap::new();
    layer.insert((Some(a.start()), Some(b.start())), (1, Vec::new()));
    for _ in 0..n {
        let mut next: BTreeMap<Key<A::State, B::State>, (u128, Vec<u8>)> = BTreeMap::new();
        for ((sa, sb), (c, w)) in &layer {
            let la: BTreeMap<u8, A::State> = sa.as_ref().map(|s| a.successors(s).into_iter().collect()).unwrap_or_default();
            let lb: BTreeMap<u8, B::State> = sb.as_ref().map(|s| b.successors(s).into_iter().collect()).unwrap_or_default();
            let mut syms: Vec<u8> = la.keys().chain(lb.keys()).copied().collect();
            syms.sort_unstable();
            syms.dedup();
            for sym in syms {
                let key = (la.get(&sym).cloned(), lb.get(&sym).cloned());
                let e = next.entry(key).or_insert_with(|| {
                    let mut w2 = w.clone();
                    w2.push(sym);
                    (0, w2)
                });
                e.0 += c;
            }
        }
        guard("product automaton states", next.len() as u128, STATE_LIMIT)?;
        layer = next;
    }
    let mut cmp = LanguageComparison { length: n, left: 0, right: 0, common: 0, only_left: None, only_right: None };
    for ((sa, sb), (c, w)) in layer {
        let ia = sa.is_some_and(|s| a.accepts(&s));
        let ib = sb.is_some_and(|s| b.accepts(&s));
        if ia {
            cmp.left += c;
        }
        if ib {
            cmp.right += c;
        }
        if ia && ib {
            cmp.common += c;
        }
        if ia && !ib && cmp.only_left.is_none() {
            cmp.only_left = Some(w);
        } else if ib && !ia && cmp.only_right.is_none() {
            cmp.only_right = Some(w);
        }
    }
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;
    use crate::toppling::TopplingMatrix;
    use crate::window::Window;

    fn brute_recurrent(h: &LaurentPoly, n: usize) -> u128 {
        let tm = TopplingMatrix::from_poly(h, &Window::interval(0, n as i64 - 1)).unwrap();
        let gamma = h.classify().unwrap().gamma();
        let mut count = 0;
        let total = (gamma as u128).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let v: Vec<i64> = (0..n)
                .map(|_| {
                    let x = (c % gamma as u128) as i64;
                    c /= gamma as u128;
                    x
                })
                .collect();
            if tm.is_recurrent_burning(&v).unwrap() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn heights_language_matches_burning() {
        let one = LaurentPoly::one(1);
        for src in ["5-2u-2u^-1", "-2u^-2-3u^-1+8-u-u^2", "4-u-2u^-1"] {
            let h = parse(src).unwrap();
            let a = LanguageAutomaton::new(&h, &one, Exposed::Heights, 0, false).unwrap();
            for n in 1..=5 {
                assert_eq!(count_words(&a, n, Exec::Sequential).unwrap(), brute_recurrent(&h, n), "{src} n={n}");
            }
        }
    }

    #[test]
    fn comparison_finds_witnesses() {
        let one = LaurentPoly::one(1);
        let a = LanguageAutomaton::new(&parse("5-2u-2u^-1").unwrap(), &one, Exposed::Heights, 0, false).unwrap();
        let b = LanguageAutomaton::new(&parse("5").unwrap(), &one, Exposed::Heights, 0, false).unwrap();
        let c = compare_languages(&a, &b, 2).unwrap();
        assert_eq!((c.left, c.right), (21, 25));
        assert_eq!(c.common, 21);
        assert!(c.only_left.is_none());
        assert!(c.only_right.is_some());
        let same = compare_languages(&a, &a, 4).unwrap();
        assert!(same.equal());
    }
}
