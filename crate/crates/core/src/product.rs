//! BTW-like product models with toppling matrix Δ' = Δᵍ Δᶠ.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{guard, Error, Result};
use crate::exec::Exec;
use crate::group::{self, RecurrentGroup, ENUMERATION_LIMIT};
use crate::laurent::LaurentPoly;
use crate::matrix::{IntMatrix, IntegralSolver};
use crate::toppling::{poly_matrix, StabilizationResult, TopplingMatrix, ValidityReport};
use crate::window::Window;

/// Default iteration cap for BTW stabilization.
pub const BTW_CAP: u64 = 10_000_000;

/// Δ' = Δᵍ Δᶠ on a window, together with its validity report.
#[derive(Debug, Clone)]
pub struct ProductModel {
    f: LaurentPoly,
    g: LaurentPoly,
    h: LaurentPoly,
    window: Arc<Window>,
    delta_f: IntMatrix,
    delta_g: IntMatrix,
    delta_prime: IntMatrix,
    gamma_prime: i64,
    beta: i64,
    validity: ValidityReport,
    toppling: Option<TopplingMatrix>,
}

/// Builds all matrices. An invalid Δ' is reported, not raised.
pub fn build_product_model(f: &LaurentPoly, g: &LaurentPoly, window: &Window) -> Result<ProductModel> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { left: f.dim(), right: g.dim() });
    }
    if f.dim() != window.dim() {
        return Err(Error::DimensionMismatch { left: f.dim(), right: window.dim() });
    }
    if f.is_zero() || g.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let delta_f = poly_matrix(f, window);
    let delta_g = poly_matrix(g, window);
    let delta_prime = delta_g.mul(&delta_f);
    let gamma_prime: i64 = f
        .terms()
        .map(|(k, fk)| {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            fk.to_i64().expect("small coefficient") * g.coeff_i64(&neg)
        })
        .filter(|&p| p > 0)
        .sum();
    let beta = f.l1_norm().to_i64().expect("small norm") * gamma_prime;
    let validity = ValidityReport::of(&delta_prime);
    let toppling = if validity.valid && !window.is_empty() {
        Some(TopplingMatrix::from_matrix(window, delta_prime.clone())?)
    } else {
        None
    };
    Ok(ProductModel {
        f: f.clone(),
        g: g.clone(),
        h: f.mul(g)?,
        window: Arc::new(window.clone()),
        delta_f,
        delta_g,
        delta_prime,
        gamma_prime,
        beta,
        validity,
        toppling,
    })
}

/// How W_F is enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WStrategy {
    /// Walk stable configurations of Δ' and keep integral Δᵍ-preimages.
    FilterRecurrent,
    /// Walk cofactors in [0, β)^F and keep recurrent images.
    CofactorBox,
    /// Close the generators rep(Δᵍ e_i) under ⊕.
    Generate,
    Auto,
}

/// The subgroup of Δᵍ-multiples in R'_F with matching cofactors.
#[derive(Debug, Clone, Serialize)]
pub struct WGroup {
    pub strategy: WStrategy,
    /// Elements w = Δᵍ v', sorted lexicographically.
    pub elements_w: Vec<Vec<i64>>,
    /// Cofactors v', aligned with `elements_w`.
    pub elements_v: Vec<Vec<i64>>,
    pub identity: Vec<i64>,
}

impl WGroup {
    pub fn len(&self) -> usize {
        self.elements_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements_w.is_empty()
    }
}

/// Outcome of the structural checks on an enumerated W_F.
#[derive(Debug, Clone, Serialize)]
pub struct SubgroupReport {
    pub order: usize,
    pub det_f: String,
    pub order_matches_det_f: bool,
    pub identity_in_w: bool,
    pub closed_under_generators: bool,
    pub closed_under_inverse: bool,
    pub pairs_checked: usize,
    pub closed_under_pairs: bool,
    pub cofactors_consistent: bool,
    pub cofactors_below_beta: bool,
    pub all_recurrent: bool,
}

impl SubgroupReport {
    pub fn holds(&self) -> bool {
        self.order_matches_det_f
            && self.identity_in_w
            && self.closed_under_generators
            && self.closed_under_inverse
            && self.closed_under_pairs
            && self.cofactors_consistent
            && self.cofactors_below_beta
            && self.all_recurrent
    }
}

/// π_{F°}(R'_F) against R^(h)_{F°}.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub interior_size: usize,
    pub holds: bool,
    /// `full` when R'_F was enumerated, `extension` when membership of the
    /// projection was decided through the maximal extension.
    pub method: String,
    pub projected_count: usize,
    pub direct_count: usize,
    pub mismatches: Vec<Vec<i64>>,
    pub warning: Option<String>,
}

impl ProductModel {
    pub fn f(&self) -> &LaurentPoly {
        &self.f
    }

    pub fn g(&self) -> &LaurentPoly {
        &self.g
    }

    pub fn h(&self) -> &LaurentPoly {
        &self.h
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn delta_f(&self) -> &IntMatrix {
        &self.delta_f
    }

    pub fn delta_g(&self) -> &IntMatrix {
        &self.delta_g
    }

    pub fn delta_prime(&self) -> &IntMatrix {
        &self.delta_prime
    }

    pub fn gamma_prime(&self) -> i64 {
        self.gamma_prime
    }

    pub fn beta(&self) -> i64 {
        self.beta
    }

    pub fn validity(&self) -> &ValidityReport {
        &self.validity
    }

    pub fn is_valid(&self) -> bool {
        self.toppling.is_some()
    }

    /// Δ' as a toppling matrix; fails for invalid models.
    pub fn toppling(&self) -> Result<&TopplingMatrix> {
        self.toppling
            .as_ref()
            .ok_or_else(|| Error::InvalidModel(self.validity.failures.join("; ")))
    }

    fn is_btw_unstable(&self, gv: &[i64], k: usize) -> bool {
        gv[k] >= self.delta_prime.get(k, k)
    }

    /// BTW dynamics: topple the lowest k with (Δᵍv)_k ≥ Δ'_kk by v ↦ v − Δᶠ e_k.
    pub fn btw_stabilize(&self, v: &[i64]) -> Result<StabilizationResult> {
        self.btw_stabilize_with(v, BTW_CAP, |_| 0)
    }

    /// BTW dynamics with a caller-chosen site among the unstable ones.
    pub fn btw_stabilize_with<F>(&self, v: &[i64], cap: u64, mut choose: F) -> Result<StabilizationResult>
    where
        F: FnMut(&[usize]) -> usize,
    {
        self.toppling()?;
        if v.len() != self.window.len() || v.iter().any(|&x| x < 0) {
            return Err(Error::InvalidConfig("expected a nonnegative configuration on the window".into()));
        }
        let n = v.len();
        let mut cur = v.to_vec();
        let mut gv = self.delta_g.mul_vec(&cur);
        let mut odo = vec![0i64; n];
        let mut steps = 0u64;
        loop {
            let unstable: Vec<usize> = (0..n).filter(|&k| self.is_btw_unstable(&gv, k)).collect();
            if unstable.is_empty() {
                return Ok(StabilizationResult { stable: cur, odometer: odo });
            }
            steps += 1;
            guard("BTW topplings", steps as u128, cap as u128)?;
            let k = unstable[choose(&unstable) % unstable.len()];
            for i in 0..n {
                let c = self.delta_f.get(i, k);
                if c != 0 {
                    cur[i] -= c;
                }
                gv[i] -= self.delta_prime.get(i, k);
            }
            odo[k] += 1;
        }
    }

    /// Adds one grain at each listed site in turn, stabilizing after each.
    pub fn btw_drive(&self, start: &[i64], sites: &[usize]) -> Result<Vec<i64>> {
        let mut v = start.to_vec();
        for &s in sites {
            v[s] += 1;
            v = self.btw_stabilize(&v)?.stable;
        }
        Ok(v)
    }

    fn solver_g(&self) -> Result<IntegralSolver> {
        IntegralSolver::new(&self.delta_g).ok_or_else(|| Error::InvalidModel("Δᵍ is singular".into()))
    }

    /// Some(v') with Δᵍ v' = v when v is Δ'-recurrent and v' is integral.
    pub fn w_membership(&self, v: &[i64]) -> Result<Option<Vec<i64>>> {
        let tm = self.toppling()?;
        if v.len() != tm.len() || !tm.is_stable(v) || !tm.is_recurrent_burning(v)? {
            return Ok(None);
        }
        Ok(self.solver_g()?.solve(v))
    }

    /// |det Δᶠ|, which equals |W_F|.
    pub fn det_f_abs(&self) -> u128 {
        self.delta_f.det().abs().to_u128().unwrap_or(u128::MAX)
    }

    /// Cost estimates (candidate counts) for the three strategies.
    pub fn strategy_costs(&self) -> [(WStrategy, u128); 3] {
        let n = self.window.len() as u32;
        let diag_prod = (0..self.window.len())
            .fold(1u128, |a, i| a.saturating_mul(self.delta_prime.get(i, i).max(1) as u128));
        let filter = if self.triangular_order().is_some() {
            let gdiag = (0..self.window.len())
                .fold(1u128, |a, i| a.saturating_mul(self.delta_g.get(i, i).unsigned_abs().max(1) as u128));
            (diag_prod / gdiag.max(1)).max(1)
        } else {
            diag_prod
        };
        let cofactor = (self.beta.max(1) as u128).saturating_pow(n);
        let cofactor = if self.triangular_order().is_some() { cofactor.min(filter.saturating_mul(2)) } else { cofactor };
        let generate = self.det_f_abs().saturating_mul(n.max(1) as u128);
        [(WStrategy::FilterRecurrent, filter), (WStrategy::CofactorBox, cofactor), (WStrategy::Generate, generate)]
    }

    /// Site order in which Δᵍ is lower triangular, if any.
    fn triangular_order(&self) -> Option<Vec<usize>> {
        let n = self.window.len();
        if self.delta_g.is_lower_triangular() {
            Some((0..n).collect())
        } else if self.delta_g.is_upper_triangular() {
            Some((0..n).rev().collect())
        } else {
            None
        }
    }

    pub fn enumerate_w(&self, strategy: WStrategy, exec: Exec) -> Result<WGroup> {
        let tm = self.toppling()?;
        let strategy = match strategy {
            WStrategy::Auto => {
                self.strategy_costs().iter().min_by_key(|(_, c)| *c).map(|(s, _)| *s).expect("three strategies")
            }
            s => s,
        };
        let mut pairs = match strategy {
            WStrategy::FilterRecurrent => self.w_by_filter(tm, exec)?,
            WStrategy::CofactorBox => self.w_by_cofactors(tm, exec)?,
            WStrategy::Generate => self.w_by_generation(tm)?,
            WStrategy::Auto => unreachable!(),
        };
        pairs.sort();
        let (elements_w, elements_v) = pairs.into_iter().unzip();
        Ok(WGroup { strategy, elements_w, elements_v, identity: group::identity(tm).config })
    }

    fn w_by_filter(&self, tm: &TopplingMatrix, exec: Exec) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
        let [(_, cost), _, _] = self.strategy_costs();
        guard("W_F filter candidates", cost, ENUMERATION_LIMIT)?;
        let solver = self.solver_g()?;
        match self.triangular_order() {
            Some(order) => Ok(self.triangular_dfs(tm, &order, Walk::Heights, exec)),
            None => {
                let total = group::candidate_count(tm);
                let rec = group::scan_stable(tm, total, exec, |v| tm.burn_order(v, Default::default()).is_some());
                Ok(rec.into_iter().filter_map(|w| solver.solve(&w).map(|x| (w, x))).collect())
            }
        }
    }

    fn w_by_cofactors(&self, tm: &TopplingMatrix, exec: Exec) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
        let [_, (_, cost), _] = self.strategy_costs();
        guard("W_F cofactor box", cost, ENUMERATION_LIMIT)?;
        match self.triangular_order() {
            Some(order) => Ok(self.triangular_dfs(tm, &order, Walk::Cofactors, exec)),
            None => {
                let n = self.window.len();
                let beta = self.beta as u128;
                let total = beta.pow(n as u32);
                let found = exec.map_range(total.div_ceil(1 << 12) as usize, |c| {
                    let mut out = Vec::new();
                    let lo = (c as u128) << 12;
                    for idx in lo..(lo + (1 << 12)).min(total) {
                        let mut r = idx;
                        let x: Vec<i64> = (0..n)
                            .map(|_| {
                                let d = (r % beta) as i64;
                                r /= beta;
                                d
                            })
                            .collect();
                        let w = self.delta_g.mul_vec(&x);
                        if tm.is_stable(&w) && tm.burn_order(&w, Default::default()).is_some() {
                            out.push((w, x));
                        }
                    }
                    out
                });
                Ok(found.into_iter().flatten().collect())
            }
        }
    }

    /// Depth-first walk along a triangular order of Δᵍ. Each assigned site
    /// fixes one height and one cofactor; partial assignments must stay
    /// recurrent on the assigned sub-window.
    fn triangular_dfs(
        &self,
        tm: &TopplingMatrix,
        order: &[usize],
        walk: Walk,
        exec: Exec,
    ) -> Vec<(Vec<i64>, Vec<i64>)> {
        let n = order.len();
        let first = order[0];
        let first_choices: Vec<i64> = match walk {
            Walk::Heights => (0..tm.diag()[first]).collect(),
            Walk::Cofactors => (0..self.beta).collect(),
        };
        let parts = exec.map_slice(&first_choices, |&c| {
            let mut st = DfsState {
                model: self,
                tm,
                order,
                walk,
                w: vec![0; n],
                x: vec![0; n],
                assigned: vec![false; n],
                out: Vec::new(),
            };
            st.assign_and_recurse(0, c);
            st.out
        });
        parts.into_iter().flatten().collect()
    }

    fn w_by_generation(&self, tm: &TopplingMatrix) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
        let n = self.window.len();
        guard("W_F order", self.det_f_abs(), ENUMERATION_LIMIT)?;
        // generators rep(Δᵍ e_i) with cofactor e_i + Δᶠ m_i
        let gens: Vec<(Vec<i64>, Vec<i64>)> = (0..n)
            .map(|i| {
                let col: Vec<i64> = (0..n).map(|r| self.delta_g.get(r, i)).collect();
                let rep = tm.representative(&col).expect("length matches");
                let fm = self.delta_f.mul_vec(&rep.m);
                let mut x = fm;
                x[i] += 1;
                (rep.config, x)
            })
            .collect();
        let e = group::identity(tm);
        let e_cof = self.delta_f.mul_vec(&e.m);
        let mut seen: HashMap<Vec<i64>, Vec<i64>> = HashMap::new();
        seen.insert(e.config.clone(), e_cof.clone());
        let mut queue = VecDeque::from([(e.config, e_cof)]);
        while let Some((w, x)) = queue.pop_front() {
            for (gw, gx) in &gens {
                let s: Vec<i64> = w.iter().zip(gw).map(|(a, b)| a + b).collect();
                let r = tm.stabilize(&s)?;
                if seen.contains_key(&r.stable) {
                    continue;
                }
                let fo = self.delta_f.mul_vec(&r.odometer);
                let nx: Vec<i64> = x.iter().zip(gx).zip(&fo).map(|((a, b), c)| a + b - c).collect();
                seen.insert(r.stable.clone(), nx.clone());
                queue.push_back((r.stable, nx));
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Subgroup axioms, cofactor consistency and the cofactor bound β.
    pub fn check_subgroup(&self, w: &WGroup, pair_budget: usize) -> Result<SubgroupReport> {
        let tm = self.toppling()?;
        let set: HashSet<&Vec<i64>> = w.elements_w.iter().collect();
        let n = self.window.len();
        let gens: Vec<Vec<i64>> = (0..n)
            .map(|i| {
                let col: Vec<i64> = (0..n).map(|r| self.delta_g.get(r, i)).collect();
                tm.representative(&col).expect("length").config
            })
            .collect();
        let closed_under_generators =
            w.elements_w.iter().all(|u| gens.iter().all(|g| set.contains(&tm.add_unchecked(u, g))));
        let closed_under_inverse =
            w.elements_w.iter().all(|u| group::inverse(tm, u).map(|i| set.contains(&i)).unwrap_or(false));
        let m = w.len();
        let mut pairs_checked = 0;
        let mut closed_under_pairs = true;
        if m > 0 {
            let total = m * m;
            let step = (total / pair_budget.max(1)).max(1);
            let mut k = 0;
            while k < total {
                let (a, b) = (k / m, k % m);
                pairs_checked += 1;
                if !set.contains(&tm.add_unchecked(&w.elements_w[a], &w.elements_w[b])) {
                    closed_under_pairs = false;
                    break;
                }
                // odd stride so sampled pairs spread over both indices
                k += step | 1;
            }
        }
        let cofactors_consistent =
            w.elements_w.iter().zip(&w.elements_v).all(|(wi, vi)| self.delta_g.mul_vec(vi) == *wi);
        let cofactors_below_beta = w.elements_v.iter().flatten().all(|&x| 0 <= x && x < self.beta);
        let all_recurrent =
            w.elements_w.iter().all(|u| tm.is_stable(u) && tm.burn_order(u, Default::default()).is_some());
        let det_f = self.delta_f.det();
        Ok(SubgroupReport {
            order: m,
            det_f: det_f.to_string(),
            order_matches_det_f: det_f.abs().to_usize() == Some(m),
            identity_in_w: set.contains(&w.identity),
            closed_under_generators,
            closed_under_inverse,
            pairs_checked,
            closed_under_pairs,
            cofactors_consistent,
            cofactors_below_beta,
            all_recurrent,
        })
    }

    /// π_{F°}(R'_F) = R^(h)_{F°}.
    pub fn projection_check(&self, exec: Exec) -> Result<ProjectionReport> {
        let tm = self.toppling()?;
        let interior = self.window.interior(&self.f);
        if interior.is_empty() {
            return Ok(ProjectionReport {
                interior_size: 0,
                holds: true,
                method: "vacuous".into(),
                projected_count: 0,
                direct_count: 0,
                mismatches: vec![],
                warning: Some("F° is empty; the identity holds vacuously".into()),
            });
        }
        let th = TopplingMatrix::from_poly(&self.h, &interior)?;
        let direct = group::enumerate_recurrent(&th, exec)?;
        let pos: Vec<usize> =
            interior.sites().iter().map(|s| self.window.index_of(s).expect("interior ⊂ F")).collect();
        let project = |v: &[i64]| -> Vec<i64> { pos.iter().map(|&k| v[k]).collect() };
        let direct_set: BTreeSet<Vec<i64>> = direct.elements().iter().cloned().collect();
        let (projected, method): (BTreeSet<Vec<i64>>, &str) = if group::candidate_count(tm) <= ENUMERATION_LIMIT {
            let full = group::enumerate_recurrent(tm, exec)?;
            (full.elements().iter().map(|v| project(v)).collect(), "full")
        } else {
            // recurrence is upward closed on stable configurations, so p lies in
            // the projection iff its maximal extension is recurrent
            let top = tm.v_max();
            let keep = group::scan_stable(&th, group::candidate_count(&th), exec, |p| {
                let mut ext = top.clone();
                for (&k, &x) in pos.iter().zip(p) {
                    ext[k] = x;
                }
                tm.is_stable(&ext) && tm.burn_order(&ext, Default::default()).is_some()
            });
            (keep.into_iter().collect(), "extension")
        };
        let mismatches: Vec<Vec<i64>> = projected.symmetric_difference(&direct_set).take(8).cloned().collect();
        Ok(ProjectionReport {
            interior_size: interior.len(),
            holds: mismatches.is_empty(),
            method: method.into(),
            projected_count: projected.len(),
            direct_count: direct_set.len(),
            mismatches,
            warning: None,
        })
    }

    /// Δ'_ij ≥ h_{i−j}, with equality whenever supp(f) ⊆ F − j.
    pub fn entrywise_bound_holds(&self) -> bool {
        let dh = poly_matrix(&self.h, &self.window);
        let supp = self.f.support();
        (0..self.window.len()).all(|j| {
            let sj = self.window.site(j);
            let inside = supp.iter().all(|e| {
                let s: Vec<i64> = sj.iter().zip(e).map(|(a, b)| a + b).collect();
                self.window.contains(&s)
            });
            (0..self.window.len()).all(|i| {
                let (a, b) = (self.delta_prime.get(i, j), dh.get(i, j));
                a >= b && (!inside || a == b)
            })
        })
    }

    /// ‖Δ'⁻¹‖_∞, exact.
    pub fn inverse_inf_norm(&self) -> Option<BigRational> {
        self.delta_prime.inverse_inf_norm()
    }

    /// Whether u − v ∈ Δ' ℤ^F.
    pub fn differ_by_multiple(&self, u: &[i64], v: &[i64]) -> Result<bool> {
        let s = IntegralSolver::new(&self.delta_prime).ok_or(Error::Singular)?;
        let d: Vec<i64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        Ok(s.solve(&d).is_some())
    }

    /// R'_F by exhaustive scan.
    pub fn recurrent_group(&self, exec: Exec) -> Result<RecurrentGroup> {
        group::enumerate_recurrent(self.toppling()?, exec)
    }
}

#[derive(Clone, Copy)]
enum Walk {
    Heights,
    Cofactors,
}

struct DfsState<'a> {
    model: &'a ProductModel,
    tm: &'a TopplingMatrix,
    order: &'a [usize],
    walk: Walk,
    w: Vec<i64>,
    x: Vec<i64>,
    assigned: Vec<bool>,
    out: Vec<(Vec<i64>, Vec<i64>)>,
}

impl DfsState<'_> {
    fn assign_and_recurse(&mut self, depth: usize, choice: i64) {
        let site = self.order[depth];
        let g = &self.model.delta_g;
        // contributions of already assigned cofactors to row `site`
        let partial: i64 = (0..self.order.len())
            .filter(|&j| self.assigned[j] && j != site)
            .map(|j| g.get(site, j) * self.x[j])
            .sum();
        let gd = g.get(site, site);
        let (wv, xv) = match self.walk {
            Walk::Heights => {
                let num = choice - partial;
                if num % gd != 0 {
                    return;
                }
                (choice, num / gd)
            }
            Walk::Cofactors => (partial + gd * choice, choice),
        };
        if wv < 0 || wv >= self.tm.diag()[site] {
            return;
        }
        self.w[site] = wv;
        self.x[site] = xv;
        self.assigned[site] = true;
        if self.prefix_recurrent() {
            if depth + 1 == self.order.len() {
                self.out.push((self.w.clone(), self.x.clone()));
            } else {
                let range = match self.walk {
                    Walk::Heights => 0..self.tm.diag()[self.order[depth + 1]],
                    Walk::Cofactors => 0..self.model.beta,
                };
                for c in range {
                    self.assign_and_recurse(depth + 1, c);
                }
            }
        }
        self.assigned[site] = false;
    }

    /// Burning restricted to the assigned sites, a necessary condition.
    fn prefix_recurrent(&self) -> bool {
        let m = self.tm.matrix();
        let idx: Vec<usize> = (0..self.assigned.len()).filter(|&i| self.assigned[i]).collect();
        let mut burnt = vec![false; idx.len()];
        let mut left = idx.len();
        loop {
            let mut progress = false;
            for (a, &i) in idx.iter().enumerate() {
                if burnt[a] {
                    continue;
                }
                let load: i64 = idx
                    .iter()
                    .enumerate()
                    .filter(|&(b, &j)| !burnt[b] && j != i)
                    .map(|(_, &j)| -m.get(i, j))
                    .sum();
                if self.w[i] >= load {
                    burnt[a] = true;
                    left -= 1;
                    progress = true;
                }
            }
            if left == 0 {
                return true;
            }
            if !progress {
                return false;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse;

    fn model(f: &str, g: &str, w: Window) -> ProductModel {
        build_product_model(&parse(f).unwrap(), &parse(g).unwrap(), &w).unwrap()
    }

    #[test]
    fn btw_matrix_shape() {
        let m = model("1-u", "-u^-1+1", Window::interval(1, 4));
        let d = m.delta_prime();
        for i in 0..4 {
            assert_eq!(d.get(i, i), if i == 3 { 1 } else { 2 });
            for j in 0..4 {
                if i.abs_diff(j) == 1 {
                    assert_eq!(d.get(i, j), -1);
                } else if i != j {
                    assert_eq!(d.get(i, j), 0);
                }
            }
        }
        assert!(m.is_valid() && !m.validity().p2_strict);
    }

    #[test]
    fn btw_fixed_point() {
        let m = model("1-u", "-u^-1+1", Window::interval(1, 3));
        let sites: Vec<usize> = (0..60).map(|k| (k * 7 + k / 3) % 3).collect();
        let w = m.btw_drive(&[0, 0, 0], &sites).unwrap();
        assert_eq!(w, vec![2, 1, 0]);
        assert_eq!(m.delta_g().mul_vec(&w), vec![1, 1, 0]);
        let r = m.btw_stabilize(&[2, 1, 0]).unwrap();
        assert_eq!(r.odometer, vec![0, 0, 0]);
        assert_eq!(m.w_membership(&[1, 1, 0]).unwrap(), Some(vec![2, 1, 0]));
        assert_eq!(m.w_membership(&[0, 0, 0]).unwrap(), None);
        let g = m.recurrent_group(Exec::default()).unwrap();
        assert_eq!(g.elements(), &[vec![1, 1, 0]]);
    }

    #[test]
    fn invalid_factorisation_is_reported() {
        let m = model("-u^-2-2*u^-1+2-u+u^2", "1-u-u^2", Window::interval(1, 3));
        // off-diagonal signs are fine here; the row sums are what fail
        assert!(!m.is_valid());
        assert!(m.validity().p1 && !m.validity().p2_strict && !m.validity().weakly_chained);
        assert!(m.toppling().is_err());
        assert!(m.btw_stabilize(&[0, 0, 0]).is_err());
    }

    #[test]
    fn gamma_prime_and_beta() {
        let m = model("-u^-1+2", "2-u", Window::interval(1, 4));
        assert_eq!((m.gamma_prime(), m.beta()), (5, 15));
        assert_eq!(m.delta_prime().get(0, 0), 4);
        assert_eq!(m.delta_prime().get(1, 1), 5);
        // f has a negative coefficient, so Δ' may dip below Δ^h
        assert!(!m.entrywise_bound_holds());
        let m = model("3+u1+u2", "3-u1-u2", Window::cube(2, 1));
        assert_eq!((m.gamma_prime(), m.beta()), (9, 45));
        assert!(m.is_valid() && m.validity().p2_strict);
        assert!(m.entrywise_bound_holds());
    }

    #[test]
    fn strategies_agree_1d() {
        for n in 1..=5 {
            let m = model("-u^-1+2", "2-u", Window::interval(1, n));
            let a = m.enumerate_w(WStrategy::FilterRecurrent, Exec::default()).unwrap();
            let b = m.enumerate_w(WStrategy::CofactorBox, Exec::default()).unwrap();
            let c = m.enumerate_w(WStrategy::Generate, Exec::default()).unwrap();
            assert_eq!(a.elements_w, b.elements_w);
            assert_eq!(a.elements_v, b.elements_v);
            assert_eq!(a.elements_w, c.elements_w);
            assert_eq!(a.elements_v, c.elements_v);
            assert_eq!(a.len(), 1 << n);
            let rep = m.check_subgroup(&a, 10_000).unwrap();
            assert!(rep.holds(), "{rep:?}");
        }
    }

    #[test]
    fn projection_1d() {
        let m = model("-u^-1+2", "2-u", Window::interval(1, 5));
        let r = m.projection_check(Exec::default()).unwrap();
        assert!(r.holds && r.method == "full" && r.interior_size == 4);
        let tiny = model("u^-1+2+u", "2-u", Window::interval(1, 1));
        let r = tiny.projection_check(Exec::default());
        assert!(r.is_err() || r.unwrap().holds);
    }
}
