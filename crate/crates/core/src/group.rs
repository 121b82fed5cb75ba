//! The sandpile group R_F: enumeration, identity, inverses, Haar sampling.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{guard, Error, Result};
use crate::exec::Exec;
use crate::toppling::{Representative, TopplingMatrix};

/// Largest candidate space `enumerate_recurrent` will scan.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

const CHUNK: u128 = 1 << 14;

/// The identity of R_F with its certificate e = Δ m.
pub fn identity(tm: &TopplingMatrix) -> Representative {
    tm.representative(&vec![0; tm.len()]).expect("length matches")
}

/// The inverse of a recurrent v: the recurrent representative of −v.
pub fn inverse(tm: &TopplingMatrix, v: &[i64]) -> Result<Vec<i64>> {
    if !tm.is_recurrent_burning(v)? {
        return Err(Error::NotRecurrent);
    }
    let neg: Vec<i64> = v.iter().map(|x| -x).collect();
    Ok(tm.representative(&neg)?.config)
}

/// Size of the stable-configuration space Π Δ_ii.
pub fn candidate_count(tm: &TopplingMatrix) -> u128 {
    tm.diag().iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
}

/// Enumerated recurrent group, elements in lexicographic order.
#[derive(Debug, Clone)]
pub struct RecurrentGroup {
    matrix: Arc<TopplingMatrix>,
    elements: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    identity: Representative,
    det: BigInt,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub order: usize,
    pub det: String,
    pub identity: Vec<i64>,
    pub identity_certificate: Vec<i64>,
}

/// Scans all stable configurations and keeps those that burn.
pub fn enumerate_recurrent(tm: &TopplingMatrix, exec: Exec) -> Result<RecurrentGroup> {
    let total = candidate_count(tm);
    guard("stable-configuration space", total, ENUMERATION_LIMIT)?;
    let elements = scan_stable(tm, total, exec, |v| tm.burn_order(v, Default::default()).is_some());
    Ok(RecurrentGroup::from_elements(Arc::new(tm.clone()), elements))
}

/// Lexicographic scan of {0..Δ_ii−1}^F in parallel chunks; the merge keeps
/// lexicographic order.
pub(crate) fn scan_stable<P>(tm: &TopplingMatrix, total: u128, exec: Exec, keep: P) -> Vec<Vec<i64>>
where
    P: Fn(&[i64]) -> bool + Sync + Send,
{
    let diag = tm.diag().to_vec();
    let n = diag.len();
    let chunks = total.div_ceil(CHUNK) as usize;
    let parts = exec.map_range(chunks, |c| {
        let start = c as u128 * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut v = vec![0i64; n];
        let mut r = start;
        for i in (0..n).rev() {
            v[i] = (r % diag[i] as u128) as i64;
            r /= diag[i] as u128;
        }
        let mut out = Vec::new();
        for _ in start..end {
            if keep(&v) {
                out.push(v.clone());
            }
            for i in (0..n).rev() {
                v[i] += 1;
                if v[i] < diag[i] {
                    break;
                }
                v[i] = 0;
            }
        }
        out
    });
    parts.into_iter().flatten().collect()
}

impl RecurrentGroup {
    pub(crate) fn from_elements(matrix: Arc<TopplingMatrix>, elements: Vec<Vec<i64>>) -> Self {
        let index = elements.iter().enumerate().map(|(k, v)| (v.clone(), k)).collect();
        let identity = identity(&matrix);
        let det = matrix.matrix().det();
        RecurrentGroup { matrix, elements, index, identity, det }
    }

    pub fn matrix(&self) -> &TopplingMatrix {
        &self.matrix
    }

    pub fn elements(&self) -> &[Vec<i64>] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// det Δ computed by Bareiss elimination.
    pub fn det(&self) -> &BigInt {
        &self.det
    }

    /// |R_F| = |det Δ|.
    pub fn order_matches_det(&self) -> bool {
        self.det.abs().to_usize() == Some(self.order())
    }

    pub fn identity(&self) -> &[i64] {
        &self.identity.config
    }

    /// m with identity = Δ m.
    pub fn identity_certificate(&self) -> &[i64] {
        &self.identity.m
    }

    pub fn index_of(&self, v: &[i64]) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.index.contains_key(v)
    }

    pub fn add(&self, u: &[i64], v: &[i64]) -> Result<Vec<i64>> {
        self.matrix.add(u, v)
    }

    pub fn inverse(&self, v: &[i64]) -> Result<Vec<i64>> {
        if !self.contains(v) {
            return Err(Error::NotRecurrent);
        }
        inverse(&self.matrix, v)
    }

    /// Inverse found by walking the cyclic subgroup v, 2v, … until the
    /// identity; the element before it is −v. Slow, kept as a cross-check.
    pub fn inverse_by_cycling(&self, v: &[i64]) -> Result<Vec<i64>> {
        if !self.contains(v) {
            return Err(Error::NotRecurrent);
        }
        let e = self.identity();
        let mut prev = e.to_vec();
        let mut cur = v.to_vec();
        while cur != e {
            prev = cur.clone();
            cur = self.matrix.add_unchecked(&cur, v);
        }
        Ok(prev)
    }

    /// A Haar-uniform element, deterministic in `seed`.
    pub fn haar_uniform(&self, seed: u64) -> &[i64] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(&mut rng)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> &[i64] {
        &self.elements[rng.random_range(0..self.elements.len())]
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            order: self.order(),
            det: self.det.to_string(),
            identity: self.identity().to_vec(),
            identity_certificate: self.identity_certificate().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;
    use crate::window::Window;

    fn group(h: &str, w: Window) -> RecurrentGroup {
        let tm = TopplingMatrix::from_poly(&parse(h).unwrap(), &w).unwrap();
        enumerate_recurrent(&tm, Exec::default()).unwrap()
    }

    #[test]
    fn two_site_group() {
        let g = group("5-2u-2u^-1", Window::interval(1, 2));
        assert_eq!(g.order(), 21);
        assert!(g.order_matches_det());
        let e = g.identity().to_vec();
        let dm = g.matrix().apply(g.identity_certificate());
        assert_eq!(dm, e);
        for v in g.elements() {
            assert_eq!(g.add(&e, v).unwrap(), *v);
            let inv = g.inverse(v).unwrap();
            assert_eq!(g.add(v, &inv).unwrap(), e);
            assert_eq!(g.inverse(&inv).unwrap(), *v);
            assert_eq!(g.inverse_by_cycling(v).unwrap(), inv);
        }
    }

    #[test]
    fn singleton_group_is_cyclic_of_order_five() {
        let g = group("5-2u-2u^-1", Window::interval(0, 0));
        assert_eq!(g.elements(), &[vec![0], vec![1], vec![2], vec![3], vec![4]]);
        let e = g.identity().to_vec();
        for v in g.elements() {
            assert_eq!(g.add(&e, v).unwrap(), *v);
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let tm = TopplingMatrix::from_poly(&parse("-2u^-2-3u^-1+8-u-u^2").unwrap(), &Window::interval(1, 5)).unwrap();
        let a = enumerate_recurrent(&tm, Exec::Sequential).unwrap();
        let b = enumerate_recurrent(&tm, Exec::Parallel).unwrap();
        assert_eq!(a.elements(), b.elements());
        assert!(a.order_matches_det());
        let mut sorted = a.elements().to_vec();
        sorted.sort();
        assert_eq!(sorted, a.elements());
    }

    #[test]
    fn guard_trips() {
        let tm = TopplingMatrix::from_poly(&parse("5-2u-2u^-1").unwrap(), &Window::interval(1, 12)).unwrap();
        assert!(matches!(enumerate_recurrent(&tm, Exec::default()), Err(Error::Guard { .. })));
    }

    #[test]
    fn haar_is_deterministic() {
        let g = group("5-2u-2u^-1", Window::interval(1, 2));
        assert_eq!(g.haar_uniform(7), g.haar_uniform(7));
        let single = group("5-2u-2u^-1", Window::interval(0, 0));
        assert!(single.contains(single.haar_uniform(1)));
    }
}
