//! Finite-volume sandpile engine: toppling matrices, stabilization,
//! addition and the burning test.

use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;
use crate::matrix::IntMatrix;
use crate::window::Window;

/// Which neighbour mass the burning threshold uses.
///
/// `Row` is correct for column toppling (v ↦ v − Δ e_i): site i burns once
/// v_i ≥ Σ_{j unburnt, j≠i} |Δ_ij|. `Column` is kept only for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnOrientation {
    #[default]
    Row,
    Column,
}

/// Structural checks on a candidate toppling matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    /// Positive diagonal, nonpositive off-diagonal.
    pub p1: bool,
    /// Every row sum strictly positive.
    pub p2_strict: bool,
    /// Row sums nonnegative and every row reaches a strictly dominant row
    /// along nonzero entries.
    pub weakly_chained: bool,
    pub valid: bool,
    pub failures: Vec<String>,
}

impl ValidityReport {
    pub fn of(m: &IntMatrix) -> Self {
        let n = m.rows();
        let mut failures = Vec::new();
        if !m.is_square() {
            failures.push("matrix is not square".to_string());
            return ValidityReport { p1: false, p2_strict: false, weakly_chained: false, valid: false, failures };
        }
        let mut p1 = true;
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if i == j && v <= 0 {
                    p1 = false;
                    failures.push(format!("diagonal entry ({i},{i}) = {v} is not positive"));
                } else if i != j && v > 0 {
                    p1 = false;
                    failures.push(format!("off-diagonal entry ({i},{j}) = {v} is positive"));
                }
            }
        }
        let sums = m.row_sums();
        let p2_strict = sums.iter().all(|&s| s > 0);
        let weakly_chained = sums.iter().all(|&s| s >= 0) && {
            // backwards reachability from strictly dominant rows
            let mut ok: Vec<bool> = sums.iter().map(|&s| s > 0).collect();
            let mut queue: VecDeque<usize> = (0..n).filter(|&i| ok[i]).collect();
            while let Some(j) = queue.pop_front() {
                for i in 0..n {
                    if !ok[i] && i != j && m.get(i, j) != 0 {
                        ok[i] = true;
                        queue.push_back(i);
                    }
                }
            }
            ok.iter().all(|&x| x)
        };
        if !weakly_chained {
            for (i, s) in sums.iter().enumerate().filter(|(_, &s)| s < 0) {
                failures.push(format!("row {i} has negative sum {s}"));
            }
            if sums.iter().all(|&s| s >= 0) {
                failures.push("some row cannot reach a strictly dominant row".to_string());
            }
        }
        let valid = p1 && (p2_strict || weakly_chained);
        ValidityReport { p1, p2_strict, weakly_chained, valid, failures }
    }
}

/// Toppling rule v ↦ v − Δ e_i on a window.
#[derive(Debug)]
pub struct TopplingMatrix {
    window: Arc<Window>,
    matrix: IntMatrix,
    diag: Vec<i64>,
    /// Off-diagonal nonzeros of column i as (row, value).
    cols: Vec<Vec<(usize, i64)>>,
    /// Off-diagonal nonzeros of row i as (column, value).
    rows: Vec<Vec<(usize, i64)>>,
    /// (v_max + 1) − S(v_max + 1) and its odometer; a Δ-multiple with all
    /// entries ≥ 1.
    shift: OnceLock<(Vec<i64>, Vec<i64>)>,
}

impl Clone for TopplingMatrix {
    fn clone(&self) -> Self {
        Self::build(self.window.clone(), self.matrix.clone())
    }
}

/// Result of stabilizing a configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizationResult {
    pub stable: Vec<i64>,
    pub odometer: Vec<i64>,
}

/// Recurrent representative of an integer vector, with the toppling vector
/// m such that `representative = x + Δ m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Representative {
    pub config: Vec<i64>,
    pub m: Vec<i64>,
}

impl TopplingMatrix {
    /// Δ_ij = h_{i−j} on F, for a sandpile polynomial h.
    pub fn from_poly(h: &LaurentPoly, window: &Window) -> Result<Self> {
        if h.dim() != window.dim() {
            return Err(Error::DimensionMismatch { left: h.dim(), right: window.dim() });
        }
        if !h.classify()?.sandpile {
            return Err(Error::NotSandpile(h.to_string()));
        }
        Ok(Self::build(Arc::new(window.clone()), poly_matrix(h, window)))
    }

    /// Accepts any matrix passing [`ValidityReport`].
    pub fn from_matrix(window: &Window, matrix: IntMatrix) -> Result<Self> {
        if matrix.rows() != window.len() {
            return Err(Error::InvalidModel(format!(
                "matrix has {} rows for {} sites",
                matrix.rows(),
                window.len()
            )));
        }
        let report = ValidityReport::of(&matrix);
        if !report.valid {
            return Err(Error::InvalidModel(report.failures.join("; ")));
        }
        Ok(Self::build(Arc::new(window.clone()), matrix))
    }

    fn build(window: Arc<Window>, matrix: IntMatrix) -> Self {
        let n = matrix.rows();
        let diag = (0..n).map(|i| matrix.get(i, i)).collect();
        let mut cols = vec![Vec::new(); n];
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let v = matrix.get(i, j);
                if i != j && v != 0 {
                    rows[i].push((j, v));
                    cols[j].push((i, v));
                }
            }
        }
        TopplingMatrix { window, matrix, diag, cols, rows, shift: OnceLock::new() }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn window_arc(&self) -> Arc<Window> {
        self.window.clone()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    /// Thresholds Δ_ii.
    pub fn diag(&self) -> &[i64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn v_max(&self) -> Vec<i64> {
        self.diag.iter().map(|d| d - 1).collect()
    }

    pub fn is_stable(&self, v: &[i64]) -> bool {
        v.iter().zip(&self.diag).all(|(x, d)| *x >= 0 && x < d)
    }

    fn check_len(&self, v: &[i64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::InvalidConfig(format!("{} heights for {} sites", v.len(), self.len())));
        }
        Ok(())
    }

    /// One toppling at site i.
    pub fn topple(&self, v: &[i64], i: usize) -> Result<Vec<i64>> {
        self.check_len(v)?;
        if v[i] < self.diag[i] {
            return Err(Error::StableSite(i));
        }
        let mut out = v.to_vec();
        self.apply_topple(&mut out, i, 1);
        Ok(out)
    }

    fn apply_topple(&self, v: &mut [i64], i: usize, k: i64) {
        v[i] -= k * self.diag[i];
        for &(j, a) in &self.cols[i] {
            v[j] -= k * a;
        }
    }

    /// Stabilizes with a FIFO queue of unstable sites, toppling each popped
    /// site as many times as needed at once.
    pub fn stabilize(&self, v: &[i64]) -> Result<StabilizationResult> {
        self.check_len(v)?;
        if let Some(i) = v.iter().position(|&x| x < 0) {
            return Err(Error::InvalidConfig(format!("negative height at site {i}")));
        }
        Ok(self.stabilize_unchecked(v))
    }

    fn stabilize_unchecked(&self, v: &[i64]) -> StabilizationResult {
        let n = self.len();
        let mut h = v.to_vec();
        let mut odo = vec![0i64; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if h[i] >= self.diag[i] {
                queued[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            let k = h[i] / self.diag[i];
            if k <= 0 {
                continue;
            }
            odo[i] += k;
            self.apply_topple(&mut h, i, k);
            for &(j, _) in &self.cols[i] {
                if !queued[j] && h[j] >= self.diag[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
        }
        StabilizationResult { stable: h, odometer: odo }
    }

    /// Stabilizes one toppling at a time; `choose` receives the sorted list
    /// of currently unstable sites and returns an index into it.
    pub fn stabilize_with<F>(&self, v: &[i64], mut choose: F) -> Result<StabilizationResult>
    where
        F: FnMut(&[usize]) -> usize,
    {
        self.check_len(v)?;
        if v.iter().any(|&x| x < 0) {
            return Err(Error::InvalidConfig("negative height".into()));
        }
        let mut h = v.to_vec();
        let mut odo = vec![0i64; self.len()];
        loop {
            let unstable: Vec<usize> = (0..self.len()).filter(|&i| h[i] >= self.diag[i]).collect();
            if unstable.is_empty() {
                return Ok(StabilizationResult { stable: h, odometer: odo });
            }
            let i = unstable[choose(&unstable) % unstable.len()];
            self.apply_topple(&mut h, i, 1);
            odo[i] += 1;
        }
    }

    /// u ⊕ v = S(u + v) for stable u, v.
    pub fn add(&self, u: &[i64], v: &[i64]) -> Result<Vec<i64>> {
        self.check_len(u)?;
        self.check_len(v)?;
        if !self.is_stable(u) || !self.is_stable(v) {
            return Err(Error::NotStable);
        }
        Ok(self.add_unchecked(u, v))
    }

    pub(crate) fn add_unchecked(&self, u: &[i64], v: &[i64]) -> Vec<i64> {
        let s: Vec<i64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        self.stabilize_unchecked(&s).stable
    }

    /// Δ·x.
    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        self.matrix.mul_vec(x)
    }

    /// Burning test with row-sum thresholds.
    pub fn is_recurrent_burning(&self, v: &[i64]) -> Result<bool> {
        self.is_recurrent_oriented(v, BurnOrientation::Row)
    }

    pub fn is_recurrent_oriented(&self, v: &[i64], orientation: BurnOrientation) -> Result<bool> {
        self.check_len(v)?;
        if !self.is_stable(v) {
            return Err(Error::NotStable);
        }
        Ok(self.burn_order(v, orientation).is_some())
    }

    /// The order in which sites burn, or `None` if some site never burns.
    pub fn burn_order(&self, v: &[i64], orientation: BurnOrientation) -> Option<Vec<usize>> {
        let n = self.len();
        // lines[i]: entries whose burning lowers the load of i
        let (own, incident) = match orientation {
            BurnOrientation::Row => (&self.rows, &self.cols),
            BurnOrientation::Column => (&self.cols, &self.rows),
        };
        let mut load: Vec<i64> = own.iter().map(|r| r.iter().map(|(_, a)| -a).sum()).collect();
        let mut burnt = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| v[i] >= load[i]).collect();
        let mut queued: Vec<bool> = (0..n).map(|i| v[i] >= load[i]).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(j) = queue.pop_front() {
            burnt[j] = true;
            order.push(j);
            for &(i, a) in &incident[j] {
                if burnt[i] {
                    continue;
                }
                load[i] += a;
                if !queued[i] && v[i] >= load[i] {
                    queued[i] = true;
                    queue.push_back(i);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Literal intersection over all nonempty E ⊆ F; exponential, |F| ≤ 20.
    pub fn is_recurrent_definition(&self, v: &[i64]) -> Result<bool> {
        self.is_recurrent_definition_oriented(v, BurnOrientation::Row)
    }

    pub fn is_recurrent_definition_oriented(&self, v: &[i64], orientation: BurnOrientation) -> Result<bool> {
        self.check_len(v)?;
        crate::error::guard("exhaustive subset check window", self.len() as u128, 20)?;
        if !self.is_stable(v) {
            return Err(Error::NotStable);
        }
        let n = self.len();
        let lines = match orientation {
            BurnOrientation::Row => &self.rows,
            BurnOrientation::Column => &self.cols,
        };
        for mask in 1u32..(1u32 << n) {
            let passes = (0..n).filter(|&i| mask >> i & 1 == 1).any(|i| {
                let threshold: i64 = lines[i].iter().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, a)| -a).sum();
                v[i] >= threshold
            });
            if !passes {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn recurrence_shift(&self) -> &(Vec<i64>, Vec<i64>) {
        self.shift.get_or_init(|| {
            let top: Vec<i64> = self.diag.clone();
            let r = self.stabilize_unchecked(&top);
            let d: Vec<i64> = top.iter().zip(&r.stable).map(|(a, b)| a - b).collect();
            debug_assert!(d.iter().all(|&x| x >= 1));
            (d, r.odometer)
        })
    }

    /// The unique recurrent configuration congruent to x modulo Δℤ^F.
    ///
    /// x is lifted above v_max by adding a multiple of the Δ-multiple
    /// d = (v_max+1) − S(v_max+1) ≥ 1, then stabilized.
    pub fn representative(&self, x: &[i64]) -> Result<Representative> {
        self.check_len(x)?;
        let (d, nd) = self.recurrence_shift();
        let vmax = self.v_max();
        let k = x
            .iter()
            .zip(&vmax)
            .zip(d)
            .map(|((xi, mi), di)| {
                let gap = mi - xi;
                if gap <= 0 {
                    0
                } else {
                    (gap + di - 1) / di
                }
            })
            .max()
            .unwrap_or(0);
        let y: Vec<i64> = x.iter().zip(d).map(|(xi, di)| xi + k * di).collect();
        let r = self.stabilize_unchecked(&y);
        let m = nd.iter().zip(&r.odometer).map(|(a, o)| k * a - o).collect();
        Ok(Representative { config: r.stable, m })
    }

    /// |det Δ| as u128 when it fits.
    pub fn det_abs(&self) -> Option<u128> {
        let d = self.matrix.det();
        num_traits::Signed::abs(&d).to_u128()
    }
}

/// The matrix Δ_ij = h_{i−j} on a window, without validity checks.
pub fn poly_matrix(h: &LaurentPoly, window: &Window) -> IntMatrix {
    let n = window.len();
    let mut m = IntMatrix::zeros(n, n);
    for (e, c) in h.terms() {
        let c = c.to_i64().expect("coefficient fits in i64");
        for (j, sj) in window.sites().iter().enumerate() {
            let si: Vec<i64> = sj.iter().zip(e).map(|(a, b)| a + b).collect();
            if let Some(i) = window.index_of(&si) {
                m.set(i, j, c);
            }
        }
    }
    m
}

/// A height function on a window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Config {
    pub window: Arc<Window>,
    pub heights: Vec<i64>,
}

impl Config {
    pub fn new(window: Arc<Window>, heights: Vec<i64>) -> Result<Self> {
        if heights.len() != window.len() {
            return Err(Error::InvalidConfig(format!("{} heights for {} sites", heights.len(), window.len())));
        }
        Ok(Config { window, heights })
    }

    /// Reads `{window: [[..]..], heights: [..]}`.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            window: Vec<Vec<i64>>,
            heights: Vec<i64>,
        }
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let dim = raw.window.first().map(|s| s.len()).ok_or_else(|| Error::InvalidWindow("empty window".into()))?;
        Config::new(Arc::new(Window::from_sites(dim, raw.window)?), raw.heights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;

    fn tm(h: &str, w: Window) -> TopplingMatrix {
        TopplingMatrix::from_poly(&parse(h).unwrap(), &w).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let t = tm("5-2u-2u^-1", Window::interval(1, 2));
        assert_eq!(t.matrix().to_rows(), vec![vec![5, -2], vec![-2, 5]]);
        let t = tm("5-2u-2u^-1", Window::interval(1, 3));
        assert_eq!(t.matrix().to_rows(), vec![vec![5, -2, 0], vec![-2, 5, -2], vec![0, -2, 5]]);
        let w = Window::cube(2, 1);
        let t = tm("9-u1^2-2u1*u2-u2^2", w.clone());
        let (a, b) = (w.index_of(&[0, 0]).unwrap(), w.index_of(&[-1, -1]).unwrap());
        assert_eq!(t.matrix().get(a, b), -2);
        assert_eq!(t.matrix().get(b, a), 0);
        assert!(t.diag().iter().all(|&d| d == 9));
        assert!(TopplingMatrix::from_poly(&parse("2-u-u^-1").unwrap(), &w).is_err());
    }

    #[test]
    fn single_topplings() {
        let t = tm("5-2u-2u^-1", Window::interval(1, 3));
        assert_eq!(t.topple(&[6, 0, 0], 0).unwrap(), vec![1, 2, 0]);
        assert_eq!(t.topple(&[5, 0, 0], 0).unwrap(), vec![0, 2, 0]);
        assert_eq!(t.topple(&[4, 0, 0], 0), Err(Error::StableSite(0)));
    }

    #[test]
    fn stabilization_examples() {
        let t = tm("5-2u-2u^-1", Window::interval(1, 3));
        let r = t.stabilize(&[6, 0, 0]).unwrap();
        assert_eq!(r.stable, vec![1, 2, 0]);
        assert_eq!(r.odometer, vec![1, 0, 0]);
        let r = t.stabilize(&[4, 3, 2]).unwrap();
        assert_eq!((r.stable, r.odometer), (vec![4, 3, 2], vec![0, 0, 0]));
        assert!(t.stabilize(&[-1, 0, 0]).is_err());
    }

    #[test]
    fn burning_examples() {
        let t = tm("5-2u-2u^-1", Window::interval(1, 2));
        assert!(!t.is_recurrent_burning(&[0, 0]).unwrap());
        assert!(t.is_recurrent_burning(&[2, 0]).unwrap());
        assert!(!t.is_recurrent_definition(&[1, 1]).unwrap());
        assert!(t.is_recurrent_burning(&[5, 0]).is_err());
        let t = tm("5-2u-2u^-1", Window::interval(1, 3));
        assert!(t.is_recurrent_burning(&[4, 4, 4]).unwrap());
        let t = tm("5-2u-2u^-1", Window::interval(0, 0));
        for v in 0..5 {
            assert!(t.is_recurrent_definition(&[v]).unwrap());
        }
    }

    #[test]
    fn representative_is_recurrent_and_congruent() {
        let t = tm("-2u^-2-3u^-1+8-u-u^2", Window::interval(1, 4));
        for x in [vec![0, 0, 0, 0], vec![-7, 3, 12, 0], vec![100, -50, 0, 3]] {
            let r = t.representative(&x).unwrap();
            assert!(t.is_recurrent_burning(&r.config).unwrap());
            let dm = t.apply(&r.m);
            let back: Vec<i64> = x.iter().zip(&dm).map(|(a, b)| a + b).collect();
            assert_eq!(back, r.config);
        }
    }

    #[test]
    fn validity_reports() {
        let btw = IntMatrix::from_rows(vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 1]]);
        let r = ValidityReport::of(&btw);
        assert!(r.p1 && !r.p2_strict && r.weakly_chained && r.valid);
        let critical = IntMatrix::from_rows(vec![vec![1, -1], vec![-1, 1]]);
        assert!(!ValidityReport::of(&critical).valid);
        let pos = IntMatrix::from_rows(vec![vec![3, 1], vec![0, 3]]);
        assert!(!ValidityReport::of(&pos).p1);
    }

    #[test]
    fn config_json() {
        let c = Config::from_json(&serde_json::json!({"window": [[1],[2]], "heights": [3, 4]})).unwrap();
        assert_eq!(c.heights, vec![3, 4]);
        assert!(Config::from_json(&serde_json::json!({"window": [[1]], "heights": [3, 4]})).is_err());
        assert!(Config::from_json(&serde_json::json!({"window": [[1]], "heights": [3], "x": 1})).is_err());
    }
}
