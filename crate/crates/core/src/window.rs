//! Finite windows F ⋐ ℤ^d.

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;

/// A finite ordered set of distinct lattice sites.
#[derive(Clone, PartialEq, Eq)]
pub struct Window {
    dim: usize,
    sites: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Window").field("dim", &self.dim).field("sites", &self.sites).finish()
    }
}

impl Window {
    pub fn from_sites(dim: usize, sites: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidWindow("dimension must be positive".into()));
        }
        let mut index = HashMap::with_capacity(sites.len());
        for (k, s) in sites.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::InvalidWindow(format!("site {s:?} is not in Z^{dim}")));
            }
            if index.insert(s.clone(), k).is_some() {
                return Err(Error::InvalidWindow(format!("duplicate site {s:?}")));
            }
        }
        Ok(Window { dim, sites, index })
    }

    /// The box Π [lo_k, hi_k], sites in lexicographic order. Empty ranges
    /// give an empty window.
    pub fn boxed(ranges: &[(i64, i64)]) -> Self {
        let dim = ranges.len();
        assert!(dim > 0, "dimension must be positive");
        let mut sites: Vec<Vec<i64>> = vec![vec![]];
        for &(lo, hi) in ranges {
            sites = sites
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |x| {
                        let mut s = prefix.clone();
                        s.push(x);
                        s
                    })
                })
                .collect();
        }
        Window::from_sites(dim, sites).expect("box sites are distinct")
    }

    /// {a, …, b} ⊂ ℤ.
    pub fn interval(a: i64, b: i64) -> Self {
        Self::boxed(&[(a, b)])
    }

    /// Q_M = {−M, …, M}^d.
    pub fn cube(dim: usize, m: i64) -> Self {
        Self::boxed(&vec![(-m, m); dim])
    }

    /// Parses `box:d=1:1..5`, `box:d=2:-2..2,-2..2`, or a JSON list of sites.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |m: String| Error::InvalidWindow(m);
        if spec.starts_with('[') {
            let sites: Vec<Vec<i64>> =
                serde_json::from_str(spec).map_err(|e| bad(format!("site list: {e}")))?;
            let dim = sites.first().map(|s| s.len()).ok_or_else(|| bad("empty site list".into()))?;
            return Window::from_sites(dim, sites);
        }
        let rest = spec.strip_prefix("box:d=").ok_or_else(|| bad(format!("unrecognised spec '{spec}'")))?;
        let (d, ranges) = rest.split_once(':').ok_or_else(|| bad("missing ':' after dimension".into()))?;
        let d: usize = d.parse().map_err(|_| bad(format!("bad dimension '{d}'")))?;
        let ranges: Vec<(i64, i64)> = ranges
            .split(',')
            .map(|r| {
                let (a, b) = r.trim().split_once("..").ok_or_else(|| bad(format!("bad range '{r}'")))?;
                let a: i64 = a.trim().parse().map_err(|_| bad(format!("bad bound '{a}'")))?;
                let b: i64 = b.trim().parse().map_err(|_| bad(format!("bad bound '{b}'")))?;
                if a > b {
                    return Err(bad(format!("empty range {a}..{b}")));
                }
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        if ranges.len() != d || d == 0 {
            return Err(bad(format!("expected {d} ranges, found {}", ranges.len())));
        }
        Ok(Self::boxed(&ranges))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> &[i64] {
        &self.sites[k]
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.index.contains_key(site)
    }

    /// F° = {i ∈ F : i + supp(f) ⊂ F}, in the order of F.
    pub fn interior(&self, f: &LaurentPoly) -> Window {
        let supp = f.support();
        let sites = self
            .sites
            .iter()
            .filter(|s| {
                supp.iter().all(|e| {
                    let t: Vec<i64> = s.iter().zip(e).map(|(a, b)| a + b).collect();
                    self.contains(&t)
                })
            })
            .cloned()
            .collect();
        Window::from_sites(self.dim, sites).expect("subset of a window")
    }

    pub fn translate(&self, by: &[i64]) -> Window {
        let sites = self.sites.iter().map(|s| s.iter().zip(by).map(|(a, b)| a + b).collect()).collect();
        Window::from_sites(self.dim, sites).expect("translation is injective")
    }
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.sites.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;

    #[test]
    fn box_order_is_lexicographic() {
        let w = Window::cube(2, 1);
        assert_eq!(w.len(), 9);
        assert_eq!(w.site(0), &[-1, -1]);
        assert_eq!(w.site(1), &[-1, 0]);
        assert_eq!(w.site(8), &[1, 1]);
        assert_eq!(w.index_of(&[0, 0]), Some(4));
    }

    #[test]
    fn spec_grammar() {
        assert_eq!(Window::parse_spec("box:d=1:1..5").unwrap(), Window::interval(1, 5));
        assert_eq!(Window::parse_spec("box:d=2:-2..2,-2..2").unwrap(), Window::cube(2, 2));
        let w = Window::parse_spec("[[0,0],[3,1]]").unwrap();
        assert_eq!(w.len(), 2);
        assert!(Window::parse_spec("box:d=2:1..2").is_err());
        assert!(Window::parse_spec("box:d=1:3..1").is_err());
        assert!(Window::parse_spec("[[0],[0]]").is_err());
        assert!(Window::parse_spec("circle").is_err());
    }

    #[test]
    fn interior_of_interval() {
        let f = parse("-u^-1+2").unwrap();
        let w = Window::interval(1, 5);
        assert_eq!(w.interior(&f), Window::interval(2, 5));
        let f2 = parse("3+u1+u2").unwrap();
        assert_eq!(Window::boxed(&[(0, 2), (0, 2)]).interior(&f2), Window::boxed(&[(0, 1), (0, 1)]));
        assert!(Window::interval(1, 1).interior(&parse("u^-1+u").unwrap()).is_empty());
    }
}
