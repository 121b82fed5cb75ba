//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use sandpile_core::{parse, LaurentPoly, TopplingMatrix};

pub fn p(s: &str) -> LaurentPoly {
    parse(s).unwrap()
}

/// The three reference polynomials: symmetric 1D, asymmetric 1D, 2D.
pub fn reference_polys() -> Vec<LaurentPoly> {
    vec![p("5-2u-2u^-1"), p("-2u^-2-3u^-1+8-u-u^2"), p("9-u1^2-2u1*u2-u2^2")]
}

/// All stable configurations in lex order.
pub fn all_stable(tm: &TopplingMatrix) -> Vec<Vec<i64>> {
    let diag = tm.diag();
    let mut out = vec![Vec::new()];
    for &d in diag {
        out = out.into_iter().flat_map(|v| (0..d).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Recurrent set as the closure of v_max under single-grain additions.
pub fn recurrent_by_closure(tm: &TopplingMatrix) -> BTreeSet<Vec<i64>> {
    let start = tm.v_max();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for i in 0..v.len() {
            let mut w = v.clone();
            w[i] += 1;
            let s = tm.stabilize(&w).unwrap().stable;
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    seen
}

/// Plain convolution (a·b)_n = Σ a_j b_{n−j} of finite 1D sequences given
/// with their first index.
pub fn convolve(a: (i64, &[f64]), b: (i64, &[f64])) -> (i64, Vec<f64>) {
    let mut out = vec![0.0; a.1.len() + b.1.len() - 1];
    for (i, x) in a.1.iter().enumerate() {
        for (j, y) in b.1.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    (a.0 + b.0, out)
}
