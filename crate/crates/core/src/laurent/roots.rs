//! Roots of one-variable Laurent polynomials.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::LaurentPoly;

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of the associated polynomial u^{-lo}·h (multiplicity included).
///
/// The polynomial is first split into squarefree factors with exact
/// rational arithmetic, so each eigenvalue problem only sees simple roots
/// and repeated roots come back bit-identical instead of as a spread cluster.
pub fn roots_1d(h: &LaurentPoly) -> Vec<Complex64> {
    assert_eq!(h.dim(), 1, "roots are defined for d = 1");
    let Some((lo, hi)) = h.exponent_bounds() else { return vec![] };
    let mut exact = vec![BigRational::zero(); (hi[0] - lo[0] + 1) as usize];
    for (e, v) in h.terms() {
        exact[(e[0] - lo[0]) as usize] = BigRational::from_integer(v.clone());
    }
    let mut out = Vec::new();
    for (multiplicity, factor) in squarefree(exact).into_iter().enumerate() {
        let c = to_f64(&factor);
        for r in simple_roots(&c) {
            out.extend(std::iter::repeat_n(r, multiplicity + 1));
        }
    }
    out
}

fn simple_roots(c: &[f64]) -> Vec<Complex64> {
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return vec![];
    }
    let lead = c[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i] / lead;
    }
    let raw: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    polish_roots(c, raw)
}

type QPoly = Vec<BigRational>;

fn trim(mut p: QPoly) -> QPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn derivative(p: &QPoly) -> QPoly {
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect())
}

/// Quotient and remainder of `a / b`, `b` nonzero.
fn div_rem(a: &QPoly, b: &QPoly) -> (QPoly, QPoly) {
    let mut r = trim(a.clone());
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (vec![], r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let t = r.last().unwrap() / b.last().unwrap();
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= &t * bc;
        }
        q[shift] = t;
        r.pop();
        r = trim(r);
    }
    (q, r)
}

fn monic(p: QPoly) -> QPoly {
    let lead = p.last().unwrap().clone();
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(mut a: QPoly, mut b: QPoly) -> QPoly {
    while !b.is_empty() {
        let (_, r) = div_rem(&a, &b);
        a = b;
        b = r;
    }
    monic(a)
}

/// Yun's algorithm: factor `i` of the result has the roots of multiplicity
/// `i + 1`. The leading coefficient is dropped, which does not move roots.
fn squarefree(p: QPoly) -> Vec<QPoly> {
    let p = trim(p);
    if p.len() <= 1 {
        return vec![];
    }
    let dp = derivative(&p);
    let a0 = gcd(p.clone(), dp.clone());
    let mut b = div_rem(&p, &a0).0;
    let mut c = div_rem(&dp, &a0).0;
    let mut d: QPoly = trim(
        (0..c.len().max(b.len()))
            .map(|i| {
                let x = c.get(i).cloned().unwrap_or_else(BigRational::zero);
                x - derivative(&b).get(i).cloned().unwrap_or_else(BigRational::zero)
            })
            .collect(),
    );
    let mut out = Vec::new();
    while b.len() > 1 {
        let a = gcd(b.clone(), d.clone());
        b = div_rem(&b, &a).0;
        c = div_rem(&d, &a).0;
        let db = derivative(&b);
        d = trim(
            (0..c.len().max(db.len()))
                .map(|i| {
                    c.get(i).cloned().unwrap_or_else(BigRational::zero)
                        - db.get(i).cloned().unwrap_or_else(BigRational::zero)
                })
                .collect(),
        );
        out.push(a);
    }
    out
}

fn to_f64(p: &QPoly) -> Vec<f64> {
    let scale = p.iter().map(|c| c.to_f64().unwrap_or(0.0).abs()).fold(0.0, f64::max);
    p.iter().map(|c| c.to_f64().expect("finite coefficient") / scale).collect()
}

/// Newton-polishes approximate roots of the dense polynomial `c`.
/// Steps that would increase the residual are rejected.
pub fn polish_roots(c: &[f64], roots: Vec<Complex64>) -> Vec<Complex64> {
    roots
        .into_iter()
        .map(|mut z| {
            for _ in 0..50 {
                let (p, dp) = horner(c, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let next = z - p / dp;
                if horner(c, next).0.norm() >= p.norm() {
                    break;
                }
                z = next;
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;

    fn sorted_moduli(h: &str) -> Vec<f64> {
        let mut m: Vec<f64> = roots_1d(&parse(h).unwrap()).iter().map(|z| z.norm()).collect();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        m
    }

    #[test]
    fn simple_roots() {
        let m = sorted_moduli("5-2u-2u^-1");
        assert!((m[0] - 0.5).abs() < 1e-14 && (m[1] - 2.0).abs() < 1e-14);
        let m = sorted_moduli("2-u");
        assert_eq!(m.len(), 1);
        assert!((m[0] - 2.0).abs() < 1e-15);
        assert!(sorted_moduli("7").is_empty());
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let m = sorted_moduli("1-u-u^2");
        assert!((m[0] - golden).abs() < 1e-14 && (m[1] - 1.0 / golden).abs() < 1e-13);
    }

    #[test]
    fn repeated_roots_are_exact() {
        let m = sorted_moduli("9-12u^2+4u^4");
        assert_eq!(m.len(), 4);
        let r = 1.5f64.sqrt();
        assert!(m.iter().all(|x| (x - r).abs() < 1e-15), "{m:?}");
        let m = sorted_moduli("24u^-2-44u^-1+30-9u+u^2");
        assert_eq!(m.len(), 4);
        assert!(m[..3].iter().all(|x| (x - 2.0).abs() < 1e-14) && (m[3] - 3.0).abs() < 1e-14);
    }
}
