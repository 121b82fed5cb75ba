//! Homoclinic kernels w with h·w = δ₀, the covering map ξ_h, and
//! logarithmic Mahler measures.
//!
//! Convolution convention: (h·w)_n = Σ_j h_j w_{n−j}. In Fourier terms
//! w_n = ∫ e^{−2πi⟨n,t⟩} / h(e^{2πit}) dt.

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Exec};
use crate::laurent::{roots_1d, LaurentPoly};
use crate::window::Window;

/// Distance to the nearest integer, i.e. the metric on 𝕋 = ℝ/ℤ.
pub fn torus_dist(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// Reduction into [0, 1).
pub fn mod_one(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    PartialFractions,
    Fourier,
}

/// Truncation of w^h to the box Q_M.
#[derive(Clone, Debug, Serialize)]
pub struct HomoclinicKernel {
    #[serde(skip)]
    pub poly: LaurentPoly,
    pub radius: i64,
    pub window: Window,
    pub values: Vec<f64>,
    /// sup |h·w − δ₀| on Q_{M − r}, r the support radius of h.
    pub residual: f64,
    /// 2γ_h − Σ|h_j| for lopsided h (a lower bound for |h| on the torus).
    pub expansiveness_gap: f64,
    pub method: KernelMethod,
    /// Change under grid refinement (Fourier path only).
    pub alias_estimate: f64,
    /// Bound (partial fractions) or estimate (Fourier) of Σ_{n ∉ Q_M} |w_n|.
    pub tail_bound: f64,
}

impl HomoclinicKernel {
    /// w_n, zero outside the truncation box.
    pub fn value(&self, n: &[i64]) -> f64 {
        self.window.index_of(n).map_or(0.0, |k| self.values[k])
    }

    /// Largest |w| on the boundary shell of the box.
    pub fn boundary_max(&self) -> f64 {
        self.window
            .sites()
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| s.iter().any(|x| x.abs() == self.radius))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn interior_max(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `(site, value)` rows for CSV export.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let d = self.window.dim();
        let head: Vec<String> = (1..=d).map(|k| format!("n{k}")).collect();
        s.push_str(&head.join(","));
        s.push_str(",value\n");
        for (site, v) in self.window.sites().iter().zip(&self.values) {
            let cs: Vec<String> = site.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{},{:.17e}\n", cs.join(","), v));
        }
        s
    }
}

/// Real-valued sequence convolved with h on the interior of a window.
fn convolve_on(h: &LaurentPoly, w: &dyn Fn(&[i64]) -> f64, sites: &[Vec<i64>]) -> Vec<f64> {
    let terms: Vec<(Vec<i64>, f64)> = h.terms().map(|(e, c)| (e.clone(), c.to_f64().unwrap())).collect();
    sites
        .iter()
        .map(|n| {
            terms
                .iter()
                .map(|(j, c)| {
                    let m: Vec<i64> = n.iter().zip(j).map(|(a, b)| a - b).collect();
                    c * w(&m)
                })
                .sum()
        })
        .collect()
}

fn residual(h: &LaurentPoly, window: &Window, values: &[f64], radius: i64) -> f64 {
    let r = h.radius();
    let inner = Window::cube(h.dim(), (radius - r).max(0));
    let lookup = |n: &[i64]| window.index_of(n).map_or(0.0, |k| values[k]);
    let conv = convolve_on(h, &lookup, inner.sites());
    inner
        .sites()
        .iter()
        .zip(conv)
        .map(|(s, c)| (c - if s.iter().all(|&x| x == 0) { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

/// Solves h·w = δ₀ to within `tolerance`, growing the box up to `max_radius`.
pub fn homoclinic(h: &LaurentPoly, tolerance: f64, max_radius: i64) -> Result<HomoclinicKernel> {
    homoclinic_with(h, tolerance, max_radius, Exec::default())
}

pub fn homoclinic_with(h: &LaurentPoly, tolerance: f64, max_radius: i64, exec: Exec) -> Result<HomoclinicKernel> {
    if h.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let cert = h.expansiveness_certificate(64);
    if !cert.expansive || cert.heuristic {
        return Err(Error::NotExpansive);
    }
    let gap = match cert.method {
        crate::laurent::ExpansiveMethod::Lopsided => cert.min_modulus,
        _ => 0.0,
    };
    if h.dim() == 1 {
        if let Some(k) = partial_fractions(h, tolerance, max_radius, gap) {
            return Ok(k);
        }
    }
    fourier(h, tolerance, max_radius, gap, exec)
}

/// d = 1: expansion of 1/h in partial fractions over simple roots.
fn partial_fractions(h: &LaurentPoly, tolerance: f64, max_radius: i64, gap: f64) -> Option<HomoclinicKernel> {
    let (lo, hi) = h.exponent_bounds()?;
    let (lo, deg) = (lo[0], (hi[0] - lo[0]) as usize);
    let lead = h.coeff(&[hi[0]]).to_f64()?;
    let roots = roots_1d(h);
    for (a, ra) in roots.iter().enumerate() {
        if roots[a + 1..].iter().any(|rb| (ra - rb).norm() < 1e-6 * (1.0 + ra.norm())) {
            return None;
        }
    }
    // 1/P(z) = Σ_k c_k / (z − r_k), c_k = 1 / P'(r_k), P = lead·Π(z − r_k)
    let coefs: Vec<Complex64> = (0..deg)
        .map(|k| {
            let mut d = Complex64::new(lead, 0.0);
            for (j, rj) in roots.iter().enumerate() {
                if j != k {
                    d *= roots[k] - rj;
                }
            }
            1.0 / d
        })
        .collect();
    // coefficient of z^n in 1/P
    let p_coeff = |n: i64| -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (r, c) in roots.iter().zip(&coefs) {
            if r.norm() > 1.0 {
                if n >= 0 {
                    s -= c / r.powi(n as i32 + 1);
                }
            } else if n <= -1 {
                s += c * r.powi((-n - 1) as i32);
            }
        }
        if deg == 0 && n == 0 {
            s += 1.0 / lead;
        }
        s.re
    };
    // tail Σ_{|n|>M} |w_n| ≤ Σ_k |c_k| ρ_k^{M'} / (1 − ρ_k), ρ_k = min(|r_k|, 1/|r_k|)
    let tail = |m: i64| -> f64 {
        roots
            .iter()
            .zip(&coefs)
            .map(|(r, c)| {
                let rho = r.norm().min(1.0 / r.norm());
                let scale = if r.norm() > 1.0 { 1.0 / r.norm() } else { 1.0 };
                c.norm() * scale * rho.powi((m - lo.abs()).max(0) as i32) / (1.0 - rho)
            })
            .sum()
    };
    let mut radius = 4.max(h.radius() + 1);
    while tail(radius) > tolerance && radius < max_radius {
        radius = (radius * 2).min(max_radius);
    }
    let window = Window::cube(1, radius);
    // 1/h = z^{−lo} / P
    let values: Vec<f64> = window.sites().iter().map(|s| p_coeff(s[0] + lo)).collect();
    let res = residual(h, &window, &values, radius);
    let tb = tail(radius);
    Some(HomoclinicKernel {
        poly: h.clone(),
        radius,
        window,
        values,
        residual: res,
        expansiveness_gap: gap,
        method: KernelMethod::PartialFractions,
        alias_estimate: 0.0,
        tail_bound: tb,
    })
}

/// Inverse DFT of 1/h sampled on an L^d grid, folded onto Q_M.
fn fourier_values(h: &LaurentPoly, l: usize, window: &Window, exec: Exec) -> Vec<f64> {
    let d = h.dim();
    let total = l.pow(d as u32);
    let mut buf: Vec<Complex64> = exec.map_range(total, |idx| {
        let mut r = idx;
        let mut t = vec![0.0; d];
        for a in (0..d).rev() {
            t[a] = (r % l) as f64 / l as f64;
            r /= l;
        }
        1.0 / h.eval_torus(&t)
    });
    let fft = FftPlanner::new().plan_fft_forward(l);
    let stride = |a: usize| l.pow((d - 1 - a) as u32);
    for a in 0..d {
        let s = stride(a);
        let mut line = vec![Complex64::new(0.0, 0.0); l];
        for base in 0..total {
            if (base / s) % l != 0 {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = buf[base + k * s];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                buf[base + k * s] = *v;
            }
        }
    }
    let norm = total as f64;
    window
        .sites()
        .iter()
        .map(|n| {
            let idx = n.iter().enumerate().fold(0usize, |acc, (a, &x)| acc + (x.rem_euclid(l as i64) as usize) * stride(a));
            buf[idx].re / norm
        })
        .collect()
}

fn fourier(h: &LaurentPoly, tolerance: f64, max_radius: i64, gap: f64, exec: Exec) -> Result<HomoclinicKernel> {
    let mut radius = 4.max(h.radius() + 1);
    let mut best = f64::INFINITY;
    loop {
        let window = Window::cube(h.dim(), radius);
        let mut l = (4 * (2 * radius as usize + 1)).next_power_of_two();
        let mut values = fourier_values(h, l, &window, exec);
        let mut alias = f64::INFINITY;
        for _ in 0..6 {
            let finer = fourier_values(h, 2 * l, &window, exec);
            alias = values.iter().zip(&finer).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            values = finer;
            l *= 2;
            if alias < tolerance * 1e-2 {
                break;
            }
        }
        let res = residual(h, &window, &values, radius);
        let mut k = HomoclinicKernel {
            poly: h.clone(),
            radius,
            window,
            values,
            residual: res,
            expansiveness_gap: gap,
            method: KernelMethod::Fourier,
            alias_estimate: alias,
            tail_bound: 0.0,
        };
        let shell = k.boundary_max();
        k.tail_bound = shell * (2 * radius + 1).pow(h.dim() as u32 - 1) as f64;
        best = best.min(res.max(shell));
        if res < tolerance && shell < tolerance {
            return Ok(k);
        }
        if radius >= max_radius {
            return Err(Error::ToleranceUnreachable { tolerance, achieved: best });
        }
        radius = (radius * 2).min(max_radius);
    }
}

/// Point of 𝕋^F: one value in [0, 1) per site.
#[derive(Clone, Debug, Serialize)]
pub struct TorusWindow {
    pub window: Window,
    pub values: Vec<f64>,
}

impl TorusWindow {
    pub fn new(window: Window, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() || values.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::InvalidConfig("torus values must lie in [0, 1), one per site".into()));
        }
        Ok(TorusWindow { window, values })
    }

    pub fn value(&self, n: &[i64]) -> Option<f64> {
        self.window.index_of(n).map(|k| self.values[k])
    }
}

/// ξ restricted to a window, with the bound on the truncation error.
#[derive(Clone, Debug, Serialize)]
pub struct XiResult {
    pub torus: TorusWindow,
    /// Unreduced values of w·v.
    pub real: Vec<f64>,
    pub truncation_bound: f64,
}

/// ξ(v) = ρ(w·v) on `eval`, for finitely supported v given as site → value.
pub fn xi(v: &HashMap<Vec<i64>, i64>, kernel: &HomoclinicKernel, eval: &Window, tolerance: f64) -> Result<XiResult> {
    let mass: f64 = v.values().map(|x| x.unsigned_abs() as f64).sum();
    let bound = mass * kernel.tail_bound;
    if bound > tolerance {
        return Err(Error::ToleranceUnreachable { tolerance, achieved: bound });
    }
    let real: Vec<f64> = eval
        .sites()
        .iter()
        .map(|n| {
            v.iter()
                .map(|(m, &x)| {
                    let d: Vec<i64> = n.iter().zip(m).map(|(a, b)| a - b).collect();
                    kernel.value(&d) * x as f64
                })
                .sum()
        })
        .collect();
    let values = real.iter().map(|&x| mod_one(x)).collect();
    Ok(XiResult { torus: TorusWindow { window: eval.clone(), values }, real, truncation_bound: bound })
}

/// max over interior m of ‖Σ_n q_n x_{n+m}‖_𝕋.
pub fn check_in_xh(x: &TorusWindow, q: &LaurentPoly) -> Result<f64> {
    let terms: Vec<(Vec<i64>, f64)> = q.terms().map(|(e, c)| (e.clone(), c.to_f64().unwrap())).collect();
    let mut worst: Option<f64> = None;
    for m in x.window.sites() {
        let mut s = 0.0;
        let mut inside = true;
        for (n, c) in &terms {
            let site: Vec<i64> = n.iter().zip(m).map(|(a, b)| a + b).collect();
            match x.value(&site) {
                Some(val) => s += c * val,
                None => {
                    inside = false;
                    break;
                }
            }
        }
        if inside {
            let d = torus_dist(s);
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    worst.ok_or_else(|| Error::InvalidWindow("window is smaller than the support of the polynomial".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MahlerMethod {
    Roots,
    Grid,
}

#[derive(Clone, Debug, Serialize)]
pub struct MahlerResult {
    pub value: f64,
    pub error_estimate: f64,
    pub method: MahlerMethod,
    pub grid: usize,
    pub warning: Option<String>,
}

/// Logarithmic Mahler measure ∫ log|h(e^{2πit})| dt.
pub fn mahler(h: &LaurentPoly, tolerance: f64, max_grid: usize) -> Result<MahlerResult> {
    mahler_with(h, tolerance, max_grid, Exec::default())
}

pub fn mahler_with(h: &LaurentPoly, tolerance: f64, max_grid: usize, exec: Exec) -> Result<MahlerResult> {
    if h.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if h.dim() == 1 {
        let (_, hi) = h.exponent_bounds().expect("nonzero");
        let lead = h.coeff(&hi).to_f64().expect("finite").abs();
        let roots = roots_1d(h);
        let value = lead.ln() + roots.iter().map(|r| r.norm().ln().max(0.0)).sum::<f64>();
        return Ok(MahlerResult { value, error_estimate: 1e-12, method: MahlerMethod::Roots, grid: 0, warning: None });
    }
    let cert = h.expansiveness_certificate(64);
    let warning =
        (!cert.expansive).then(|| "h vanishes on or near the torus; the grid rule converges slowly".to_string());
    let d = h.dim() as u32;
    let mut l = 8usize;
    let mut prev = grid_mean(h, l, exec);
    loop {
        let next_l = l * 2;
        if next_l.pow(d) > max_grid.max(64).pow(d) {
            return Err(Error::ToleranceUnreachable { tolerance, achieved: f64::NAN });
        }
        let cur = grid_mean(h, next_l, exec);
        let err = (cur - prev).abs();
        if err < tolerance {
            return Ok(MahlerResult { value: cur, error_estimate: err, method: MahlerMethod::Grid, grid: next_l, warning });
        }
        if next_l >= max_grid {
            return Err(Error::ToleranceUnreachable { tolerance, achieved: err });
        }
        prev = cur;
        l = next_l;
    }
}

/// Midpoint rule on an L^d grid with a fixed summation tree.
fn grid_mean(h: &LaurentPoly, l: usize, exec: Exec) -> f64 {
    let d = h.dim();
    let rows = l.pow(d as u32 - 1);
    let partial = exec.map_range(rows, |r| {
        let mut t = vec![0.0; d];
        let mut rr = r;
        for a in (0..d - 1).rev() {
            t[a] = ((rr % l) as f64 + 0.5) / l as f64;
            rr /= l;
        }
        let vals: Vec<f64> = (0..l)
            .map(|k| {
                t[d - 1] = (k as f64 + 0.5) / l as f64;
                h.eval_torus(&t).norm().ln()
            })
            .collect();
        pairwise_sum(&vals)
    });
    pairwise_sum(&partial) / l.pow(d as u32) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;

    fn p(s: &str) -> LaurentPoly {
        parse(s).unwrap()
    }

    #[test]
    fn symmetric_kernel_closed_form() {
        let k = homoclinic(&p("5-2u-2u^-1"), 1e-12, 256).unwrap();
        assert_eq!(k.method, KernelMethod::PartialFractions);
        for n in -20..=20i64 {
            let exact = 2f64.powi(-(n.abs() as i32)) / 3.0;
            assert!((k.value(&[n]) - exact).abs() < 1e-13, "n = {n}");
        }
        assert!(k.residual < 1e-12);
    }

    #[test]
    fn one_sided_kernel() {
        let k = homoclinic(&p("2-u"), 1e-12, 256).unwrap();
        for n in -10..=20i64 {
            let exact = if n >= 0 { 2f64.powi(-(n as i32 + 1)) } else { 0.0 };
            assert!((k.value(&[n]) - exact).abs() < 1e-14, "n = {n}");
        }
        let c = homoclinic(&p("2"), 1e-12, 64).unwrap();
        assert!((c.value(&[0]) - 0.5).abs() < 1e-15 && c.value(&[1]).abs() < 1e-15);
    }

    #[test]
    fn fourier_matches_partial_fractions() {
        let h = p("-2u^-2-3u^-1+8-u-u^2");
        let a = homoclinic(&h, 1e-11, 256).unwrap();
        let b = fourier(&h, 1e-11, 256, 1.0, Exec::default()).unwrap();
        for n in -10..=10i64 {
            assert!((a.value(&[n]) - b.value(&[n])).abs() < 1e-10);
        }
    }

    #[test]
    fn two_dimensional_kernel() {
        let h = p("9-u1^2-2u1*u2-u2^2");
        let k = homoclinic(&h, 1e-10, 64).unwrap();
        assert_eq!(k.method, KernelMethod::Fourier);
        assert!(k.residual < 1e-10);
        assert!(k.boundary_max() < k.interior_max());
    }

    #[test]
    fn rejects_non_expansive() {
        assert_eq!(homoclinic(&p("2-u-u^-1"), 1e-9, 64).unwrap_err(), Error::NotExpansive);
    }

    #[test]
    fn mahler_examples() {
        let m = mahler(&p("2-u"), 1e-10, 1 << 12).unwrap();
        assert!((m.value - 2f64.ln()).abs() < 1e-12);
        let m = mahler(&p("5-2u-2u^-1"), 1e-10, 1 << 12).unwrap();
        assert!((m.value - 4f64.ln()).abs() < 1e-12);
        assert!(mahler(&p("1"), 1e-10, 16).unwrap().value.abs() < 1e-15);
        let m2 = mahler(&p("5-2u1-2u1^-1+0*u2"), 1e-10, 1 << 12);
        assert!(m2.is_ok());
        // product rule in two variables
        let a = mahler(&p("3-u1-u2"), 1e-10, 1 << 12).unwrap();
        let b = mahler(&p("3+u1+u2"), 1e-10, 1 << 12).unwrap();
        let ab = mahler(&p("9-u1^2-2u1*u2-u2^2"), 1e-10, 1 << 12).unwrap();
        assert!((a.value + b.value - ab.value).abs() < 1e-9);
        // 3 - u1 - u2 with |u1 + u2| ≤ 2 < 3: log 3 exactly
        assert!((a.value - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn torus_helpers() {
        assert!((torus_dist(0.9) - 0.1).abs() < 1e-15);
        assert!((torus_dist(-0.25) - 0.25).abs() < 1e-15);
        assert_eq!(mod_one(-1e-20), 0.0);
        assert!((mod_one(2.75) - 0.75).abs() < 1e-15);
    }
}
