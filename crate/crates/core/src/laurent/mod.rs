//! Sparse Laurent polynomials in ℤ[u₁^±1,…,u_d^±1] with exact coefficients.

mod parse;
mod roots;

pub use parse::{parse, parse_with_dim};
pub use roots::{polish_roots, roots_1d};

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector in ℤ^d.
pub type Exponent = Vec<i64>;

/// A Laurent polynomial. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    dim: usize,
    terms: BTreeMap<Exponent, BigInt>,
}

impl LaurentPoly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        LaurentPoly { dim, terms: BTreeMap::new() }
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, 1)
    }

    pub fn constant(dim: usize, c: i64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], BigInt::from(c));
        p
    }

    pub fn monomial(exp: Exponent, coeff: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, coeff.into());
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I, C>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: e.len() });
            }
            p.add_term(e, c.into());
        }
        Ok(p)
    }

    /// One-variable shorthand: `univariate(&[(-1, -2), (0, 5), (1, -2)])`.
    pub fn univariate(terms: &[(i64, i64)]) -> Self {
        Self::from_terms(1, terms.iter().map(|&(e, c)| (vec![e], c))).expect("dimension 1")
    }

    fn add_term(&mut self, exp: Exponent, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &[i64]) -> BigInt {
        self.terms.get(exp).cloned().unwrap_or_default()
    }

    /// Coefficient as `i64`; panics if it does not fit.
    pub fn coeff_i64(&self, exp: &[i64]) -> i64 {
        self.terms.get(exp).map_or(0, |c| c.to_i64().expect("coefficient fits in i64"))
    }

    pub fn support(&self) -> Vec<Exponent> {
        self.terms.keys().cloned().collect()
    }

    pub fn l1_norm(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Sum of all coefficients, i.e. the value at u = (1,…,1).
    pub fn value_at_one(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Componentwise minimum and maximum exponent over the support.
    pub fn exponent_bounds(&self) -> Option<(Exponent, Exponent)> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.clone(), first.clone());
        for e in it {
            for k in 0..self.dim {
                lo[k] = lo[k].min(e[k]);
                hi[k] = hi[k].max(e[k]);
            }
        }
        Some((lo, hi))
    }

    /// Largest |exponent component| over the support (the interaction range).
    pub fn radius(&self) -> i64 {
        self.terms.keys().flat_map(|e| e.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch { left: self.dim, right: other.dim })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    /// Convolution product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<Exponent, BigInt> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *acc.entry(e).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(LaurentPoly { dim: self.dim, terms: acc })
    }

    /// h̃: the coefficient at n becomes the coefficient at −n.
    pub fn reflect(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.iter().map(|x| -x).collect(), c.clone()))
            .collect();
        LaurentPoly { dim: self.dim, terms }
    }

    /// Multiplies by the monomial u^shift.
    pub fn shift(&self, shift: &[i64]) -> Self {
        assert_eq!(shift.len(), self.dim);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.iter().zip(shift).map(|(x, s)| x + s).collect(), c.clone()))
            .collect();
        LaurentPoly { dim: self.dim, terms }
    }

    pub fn classify(&self) -> Result<Classification> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let l1 = self.l1_norm();
        let two = BigInt::from(2);
        let candidates: Vec<&Exponent> =
            self.terms.iter().filter(|(_, c)| &two * *c > l1).map(|(e, _)| e).collect();
        assert!(candidates.len() <= 1, "lopsided inequality holds at two positions");
        let lopsided = candidates.len() == 1;
        let (pos, gamma) = match candidates.first() {
            Some(e) => (Some((*e).clone()), self.coeff(e)),
            None => {
                let (_, c) = self.terms.iter().max_by(|a, b| a.1.cmp(b.1)).expect("nonzero");
                (None, c.clone())
            }
        };
        let origin = vec![0i64; self.dim];
        let sandpile = lopsided
            && pos.as_deref() == Some(origin.as_slice())
            && self.terms.iter().all(|(e, c)| e == &origin || !c.is_positive());
        let simple = sandpile && self.is_simple_shape();
        Ok(Classification {
            lopsided,
            dominant_position: pos,
            dominant_coeff: gamma,
            sandpile,
            simple,
            l1_norm: l1,
        })
    }

    fn is_simple_shape(&self) -> bool {
        let minus_one = BigInt::from(-1);
        for k in 0..self.dim {
            for s in [-1i64, 1] {
                let mut e = vec![0i64; self.dim];
                e[k] = s;
                if self.coeff(&e) != minus_one {
                    return false;
                }
            }
        }
        // only the origin and the 2d unit vectors may carry coefficients
        self.terms.len() == 2 * self.dim + 1
    }

    /// f with f_n = |g_n|, for a sandpile polynomial g.
    pub fn associated_plus(&self) -> Result<Self> {
        if !self.classify()?.sandpile {
            return Err(Error::NotSandpile(self.to_string()));
        }
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c.abs())).collect();
        Ok(LaurentPoly { dim: self.dim, terms })
    }

    /// Σ h_n z^n at arbitrary complex points z ∈ (ℂ∖0)^d.
    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.dim);
        let mut total = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut term = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
            for (zk, &ek) in z.iter().zip(e) {
                term *= zk.powi(ek as i32);
            }
            total += term;
        }
        total
    }

    /// h(e^{2πit₁},…,e^{2πit_d}).
    pub fn eval_torus(&self, t: &[f64]) -> Complex64 {
        assert_eq!(t.len(), self.dim);
        let mut total = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let phase: f64 = e.iter().zip(t).map(|(&n, &x)| n as f64 * x).sum();
            // reduce the phase first so large exponents keep full precision
            let frac = phase - phase.floor();
            let c = c.to_f64().unwrap_or(f64::NAN);
            total += Complex64::from_polar(c, std::f64::consts::TAU * frac);
        }
        total
    }

    pub fn expansiveness_certificate(&self, grid_resolution: usize) -> ExpansivenessCertificate {
        if let Ok(cls) = self.classify() {
            if cls.lopsided {
                let gap = BigInt::from(2) * &cls.dominant_coeff - &cls.l1_norm;
                return ExpansivenessCertificate {
                    expansive: true,
                    min_modulus: gap.to_f64().unwrap_or(f64::INFINITY),
                    method: ExpansiveMethod::Lopsided,
                    heuristic: false,
                };
            }
        } else {
            return ExpansivenessCertificate {
                expansive: false,
                min_modulus: 0.0,
                method: ExpansiveMethod::Lopsided,
                heuristic: false,
            };
        }
        if self.dim == 1 {
            let roots = roots_1d(self);
            let dist = roots.iter().map(|r| (r.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
            return ExpansivenessCertificate {
                expansive: dist > 1e-9,
                min_modulus: dist,
                method: ExpansiveMethod::RootModulus,
                heuristic: false,
            };
        }
        let n = grid_resolution.max(2);
        let total = n.pow(self.dim as u32);
        let mut min = f64::INFINITY;
        let mut t = vec![0.0; self.dim];
        for idx in 0..total {
            let mut r = idx;
            for tk in t.iter_mut() {
                *tk = (r % n) as f64 / n as f64;
                r /= n;
            }
            min = min.min(self.eval_torus(&t).norm());
        }
        ExpansivenessCertificate {
            expansive: min > 1e-9,
            min_modulus: min,
            method: ExpansiveMethod::Grid,
            heuristic: true,
        }
    }

    /// Exact quotient self / divisor in ℤ[u^±1] for d = 1, or `None` when the
    /// divisor does not divide.
    pub fn div_exact_1d(&self, divisor: &Self) -> Result<Option<Self>> {
        if self.dim != 1 || divisor.dim != 1 {
            return Err(Error::Unsupported("exact division is implemented for d = 1".into()));
        }
        if divisor.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.is_zero() {
            return Ok(Some(self.clone()));
        }
        let dense = |p: &Self| -> (i64, Vec<BigRational>) {
            let (lo, hi) = p.exponent_bounds().expect("nonzero");
            let mut v = vec![BigRational::zero(); (hi[0] - lo[0] + 1) as usize];
            for (e, c) in &p.terms {
                v[(e[0] - lo[0]) as usize] = BigRational::from_integer(c.clone());
            }
            (lo[0], v)
        };
        let (la, mut a) = dense(self);
        let (lb, b) = dense(divisor);
        if a.len() < b.len() {
            return Ok(None);
        }
        let lead = b.last().expect("nonzero").clone();
        let qlen = a.len() - b.len() + 1;
        let mut q = vec![BigRational::zero(); qlen];
        for k in (0..qlen).rev() {
            let c = &a[k + b.len() - 1] / &lead;
            if !c.is_zero() {
                for (j, bj) in b.iter().enumerate() {
                    a[k + j] -= &c * bj;
                }
            }
            q[k] = c;
        }
        if a.iter().any(|x| !x.is_zero()) || q.iter().any(|x| !x.is_integer()) {
            return Ok(None);
        }
        let terms = q
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (vec![la - lb + k as i64], c.to_integer()));
        Ok(Some(Self::from_terms(1, terms)?))
    }

    /// Canonical JSON: a list of `{exponent, coeff}` objects.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(e, c)| serde_json::json!({ "exponent": e, "coeff": crate::json::to_value(c) }))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse { pos: 0, msg: m.to_string() };
        let arr = v.as_array().ok_or_else(|| bad("expected a list of terms"))?;
        let mut dim = None;
        let mut terms = Vec::new();
        for t in arr {
            let e: Exponent = t
                .get("exponent")
                .and_then(|e| serde_json::from_value(e.clone()).ok())
                .ok_or_else(|| bad("term without integer exponent list"))?;
            let c = t
                .get("coeff")
                .and_then(crate::json::from_value)
                .ok_or_else(|| bad("term without integer coeff"))?;
            if *dim.get_or_insert(e.len()) != e.len() {
                return Err(bad("inconsistent exponent lengths"));
            }
            terms.push((e, c));
        }
        let dim = dim.ok_or_else(|| bad("empty term list has no dimension"))?;
        if dim == 0 {
            return Err(bad("exponents must be nonempty"));
        }
        Self::from_terms(dim, terms)
    }
}

impl fmt::Display for LaurentPoly {
    /// Prints in the same grammar accepted by [`parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(k, &x)| if x == 1 { format!("u{}", k + 1) } else { format!("u{}^{}", k + 1, x) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        LaurentPoly::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Lopsided / sandpile / simple flags of a polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub lopsided: bool,
    /// Position of the dominant coefficient when the polynomial is lopsided.
    pub dominant_position: Option<Exponent>,
    /// γ_h when lopsided, otherwise the largest coefficient.
    #[serde(serialize_with = "crate::json::serialize")]
    pub dominant_coeff: BigInt,
    pub sandpile: bool,
    pub simple: bool,
    #[serde(serialize_with = "crate::json::serialize")]
    pub l1_norm: BigInt,
}

impl Classification {
    /// γ_h as a machine integer.
    pub fn gamma(&self) -> i64 {
        self.dominant_coeff.to_i64().expect("gamma fits in i64")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansiveMethod {
    Lopsided,
    RootModulus,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansivenessCertificate {
    pub expansive: bool,
    /// Lower bound on |h| over the torus (lopsided), distance of the nearest
    /// root to the unit circle (root modulus), or the sampled minimum (grid).
    pub min_modulus: f64,
    pub method: ExpansiveMethod,
    /// Grid sampling is evidence, not proof.
    pub heuristic: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> LaurentPoly {
        parse(s).unwrap()
    }

    #[test]
    fn worked_products() {
        let cases = [
            ("-u^-1+3+u", "u^-1+3-u", "-u^-2+11-u^2"),
            ("-u^-2-2*u^-1+2-u+u^2", "1-u-u^2", "-u^-2-u^-1+5-u-u^4"),
            ("-u^-1+2", "2-u", "-2*u^-1+5-2*u"),
        ];
        for (a, b, c) in cases {
            assert_eq!(p(a).mul(&p(b)).unwrap(), p(c), "{a} * {b}");
        }
        let h = p("-2u^-1+5-2u");
        assert_eq!(h.mul(&LaurentPoly::one(1)).unwrap(), h);
    }

    #[test]
    fn cancellation_drops_terms() {
        let a = p("1+u");
        let b = p("1-u");
        assert_eq!(a.mul(&b).unwrap(), p("1-u^2"));
        assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn reflect_examples() {
        assert_eq!(p("2-u").reflect(), p("2-u^-1"));
        let h = p("5-2u-2u^-1");
        assert_eq!(h.reflect(), h);
    }

    #[test]
    fn classify_examples() {
        let h1 = p("-2u^-2-3u^-1+8-u-u^2").classify().unwrap();
        assert!(h1.sandpile);
        assert_eq!(h1.gamma(), 8);
        assert_eq!(h1.l1_norm, BigInt::from(15));
        assert!(!p("2-u-u^-1").classify().unwrap().lopsided);
        let h = p("-2u^-1+5-2u").classify().unwrap();
        assert!(h.sandpile && !h.simple);
        assert_eq!(h.gamma(), 5);
        let s = p("4-u1-u1^-1-u2-u2^-1+1").classify().unwrap();
        assert!(s.simple);
        assert!(!p("3-u").classify().unwrap().simple);
        assert_eq!(LaurentPoly::zero(1).classify(), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn lopsided_off_origin_is_not_sandpile() {
        let c = p("-1+3*u").classify().unwrap();
        assert!(c.lopsided && !c.sandpile);
        assert_eq!(c.dominant_position, Some(vec![1]));
    }

    #[test]
    fn associated_plus_examples() {
        assert_eq!(p("2-u").associated_plus().unwrap(), p("2+u"));
        assert_eq!(p("-2u^-1+5-2u").associated_plus().unwrap(), p("2u^-1+5+2u"));
        let g = p("3-u1-u2");
        let f = g.associated_plus().unwrap();
        assert_eq!(f, p("3+u1+u2"));
        let h = f.mul(&g).unwrap();
        assert_eq!(h, p("9-u1^2-2u1*u2-u2^2"));
        assert!(h.classify().unwrap().sandpile);
        assert!(p("2+u").associated_plus().is_err());
    }

    #[test]
    fn eval_torus_examples() {
        let g = p("2-u");
        assert!((g.eval_torus(&[0.0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((g.eval_torus(&[0.5]) - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!((p("5-2u-2u^-1").eval_torus(&[0.0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expansiveness_examples() {
        let c = p("5-2u-2u^-1").expansiveness_certificate(16);
        assert!(c.expansive && c.method == ExpansiveMethod::Lopsided);
        assert_eq!(c.min_modulus, 1.0);
        let c = p("2-u-u^-1").expansiveness_certificate(16);
        assert!(!c.expansive);
        let c = p("1-u-u^2").expansiveness_certificate(16);
        assert!(c.expansive && c.method == ExpansiveMethod::RootModulus);
        // distance of 0.618 and 1.618 to the circle
        assert!((c.min_modulus - 0.381_966_011_250_105).abs() < 1e-9);
        let c = p("4-u1-u1^-1-u2-u2^-1").expansiveness_certificate(32);
        assert!(!c.expansive && c.heuristic);
    }

    #[test]
    fn exact_division() {
        let f = p("-u^-1+2");
        let g = p("2-u");
        let h = f.mul(&g).unwrap();
        assert_eq!(h.div_exact_1d(&f).unwrap(), Some(g.clone()));
        assert_eq!(h.div_exact_1d(&g).unwrap(), Some(f.clone()));
        assert_eq!(p("1+u").div_exact_1d(&f).unwrap(), None);
        // divisible over ℚ but not over ℤ
        assert_eq!(p("1").div_exact_1d(&p("2")).unwrap(), None);
        assert_eq!(p("u^3").div_exact_1d(&p("u^-2")).unwrap(), Some(p("u^5")));
    }

    #[test]
    fn json_round_trip() {
        let h = p("-2u1^-1 + 5 - 2u1");
        let v = h.to_json();
        assert_eq!(v[0]["exponent"], serde_json::json!([-1]));
        assert_eq!(v[0]["coeff"], serde_json::json!(-2));
        assert_eq!(LaurentPoly::from_json(&v).unwrap(), h);
        assert_eq!(serde_json::from_str::<LaurentPoly>(&serde_json::to_string(&h).unwrap()).unwrap(), h);
    }

    #[test]
    fn display_round_trip() {
        for s in ["-2*u1^-1 + 5 - 2*u1", "9 - u1^2 - 2*u1*u2 - u2^2", "u1^-3*u2"] {
            let h = p(s);
            assert_eq!(p(&h.to_string()), h);
        }
        assert_eq!(p("5-2u-2u^-1").to_string(), "-2*u1^-1 + 5 - 2*u1");
    }
}
