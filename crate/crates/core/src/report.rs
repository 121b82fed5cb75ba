//! The worked-example suite as a single deterministic report.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::exec::Exec;
use crate::harmonic::{homoclinic_with, mahler_with};
use crate::laurent::{parse, LaurentPoly};
use crate::product::{build_product_model, WStrategy};
use crate::subshift::{
    counts_to_csv, distinctness_check, entropy_by_counting, figure_graphs, graph_entropy, verify_figure_graphs,
    BoundaryStyle, CountRow, FigureReport, PatternModel, FIGURE_MAX_LENGTH,
};
use crate::window::Window;

#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub quantity: String,
    pub target: f64,
    pub value: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReproductionReport {
    pub passed: usize,
    pub total: usize,
    pub items: Vec<CheckItem>,
    pub entropy_table: Vec<EntropyRow>,
    pub figures: FigureReport,
    #[serde(skip)]
    pub counts: BTreeMap<String, Vec<CountRow>>,
}

fn p(s: &str) -> LaurentPoly {
    parse(s).expect("built-in polynomial")
}

fn item(name: &str, passed: bool, detail: Value) -> CheckItem {
    CheckItem { name: name.to_string(), passed, detail }
}

fn entropy_row(quantity: &str, target: f64, value: f64, tolerance: f64) -> EntropyRow {
    let relative_error = ((value - target) / target).abs();
    EntropyRow { quantity: quantity.to_string(), target, value, relative_error, tolerance, passed: relative_error <= tolerance }
}

/// Runs every worked example and collects pass/fail items.
pub fn reproduce_worked_examples(exec: Exec) -> Result<ReproductionReport> {
    let mut items = Vec::new();

    // products of the three factorization examples
    let products = [
        ("-u^-2-2u^-1+3+u", "2-u", "-2u^-2-3u^-1+8-u-u^2"),
        ("-u^-1+3+u", "u^-1+3-u", "-u^-2+11-u^2"),
        ("-u^-2-2u^-1+2-u+u^2", "1-u-u^2", "-u^-2-u^-1+5-u-u^4"),
    ];
    for (k, (f, g, h)) in products.iter().enumerate() {
        let prod = p(f).mul(&p(g))?;
        let sandpile = prod.classify()?.sandpile;
        items.push(item(
            &format!("product h{}", k + 1),
            prod == p(h) && sandpile,
            json!({ "f": f, "g": g, "fg": prod.to_string(), "expected": h, "sandpile": sandpile }),
        ));
    }

    // BTW-like dynamics on three sites
    let btw = build_product_model(&p("1-u"), &p("-u^-1+1"), &Window::interval(1, 3))?;
    let sites: Vec<usize> = (0..60).map(|k| (k * 7 + k / 3) % 3).collect();
    let w = btw.btw_drive(&[0, 0, 0], &sites)?;
    let gw = btw.delta_g().mul_vec(&w);
    let group = btw.recurrent_group(exec)?;
    items.push(item(
        "btw fixed point",
        w == [2, 1, 0] && gw == [1, 1, 0] && group.elements() == [vec![1, 1, 0]],
        json!({ "w": w, "delta_g_w": gw, "recurrent": group.elements() }),
    ));

    // finite-volume structure of the 1D product model
    let (f, g) = (p("-u^-1+2"), p("2-u"));
    let h = f.mul(&g)?;
    let mut rows = Vec::new();
    let mut ok = true;
    for n in 1..=6 {
        let m = build_product_model(&f, &g, &Window::interval(1, n))?;
        let wg = m.enumerate_w(WStrategy::Auto, exec)?;
        let sub = m.check_subgroup(&wg, 4096)?;
        let proj = m.projection_check(exec)?;
        let heights_ok = m.recurrent_group(exec)?.elements().iter().flatten().all(|&x| x < m.gamma_prime());
        ok &= sub.holds() && proj.holds && heights_ok;
        rows.push(json!({ "n": n, "order": wg.len(), "subgroup": sub.holds(), "projection": proj.holds, "heights_below_gamma_prime": heights_ok }));
    }
    items.push(item("product model structure (1D, N <= 6)", ok, Value::Array(rows)));

    // homoclinic kernel
    let kernel = homoclinic_with(&h, 1e-12, 256, exec)?;
    let max_err = (-20..=20i64)
        .map(|n| (kernel.value(&[n]) - 2f64.powi(-(n.abs() as i32)) / 3.0).abs())
        .fold(0.0, f64::max);
    items.push(item(
        "homoclinic kernel of h",
        max_err < 1e-10 && kernel.residual < 1e-9,
        json!({ "max_error": max_err, "residual": kernel.residual, "radius": kernel.radius }),
    ));

    // entropy table
    let ln4 = 4f64.ln();
    let ln2 = 2f64.ln();
    let mut table = vec![
        entropy_row("mahler(h)", ln4, mahler_with(&h, 1e-10, 1 << 12, exec)?.value, 1e-6),
        entropy_row("mahler(f)", ln2, mahler_with(&f, 1e-10, 1 << 12, exec)?.value, 1e-6),
    ];
    let graphs = figure_graphs();
    for (graph, target) in graphs.iter().zip([ln4, ln2, ln2]) {
        table.push(entropy_row(&format!("graph entropy {}", graph.name), target, graph_entropy(graph).value, 1e-9));
    }
    let r_counts = entropy_by_counting(&PatternModel::recurrent(&h)?, 12, BoundaryStyle::default(), exec)?;
    let w_counts = entropy_by_counting(&PatternModel::products(&f, &g)?, 14, BoundaryStyle::default(), exec)?;
    table.push(entropy_row("counting R_h, N = 12", ln4, r_counts.last().expect("rows").estimate, 0.05));
    table.push(entropy_row("counting W, N = 14", ln2, w_counts.last().expect("rows").estimate, 0.10));
    items.push(item("entropy table", table.iter().all(|r| r.passed), json!(table.len())));

    // figures
    let figures = verify_figure_graphs(FIGURE_MAX_LENGTH, exec)?;
    for c in &figures.checks {
        let first_bad = c.lengths.iter().find(|l| !l.equal());
        items.push(item(&format!("figure {}", c.figure), c.matches, json!({ "reference": c.reference, "first_mismatch": first_bad })));
    }

    let dist = distinctness_check(&f, &g, 1, 6, 6)?;
    items.push(item(
        "distinct collar extensions",
        dist.holds(),
        json!({ "words": dist.words, "groups": dist.groups, "pairs": dist.pairs_checked }),
    ));

    let passed = items.iter().filter(|i| i.passed).count();
    let total = items.len();
    let counts = BTreeMap::from([("counts_R_h".to_string(), r_counts), ("counts_W".to_string(), w_counts)]);
    Ok(ReproductionReport { passed, total, items, entropy_table: table, figures, counts })
}

impl ReproductionReport {
    /// File name → contents, all deterministic.
    pub fn artifacts(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        out.insert("report.json".to_string(), serde_json::to_string_pretty(self).expect("serializable") + "\n");
        let mut csv = String::from("quantity,target,value,relative_error,tolerance,passed\n");
        for r in &self.entropy_table {
            csv.push_str(&format!(
                "{},{:.12},{:.12},{:.3e},{},{}\n",
                r.quantity, r.target, r.value, r.relative_error, r.tolerance, r.passed
            ));
        }
        out.insert("entropy_table.csv".to_string(), csv);
        for (name, rows) in &self.counts {
            out.insert(format!("{name}.csv"), counts_to_csv(rows));
        }
        for g in figure_graphs() {
            out.insert(format!("graph_{}.dot", g.name), g.to_dot());
        }
        out
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.items.iter().map(|i| format!("{} {}", if i.passed { "PASS" } else { "FAIL" }, i.name)).collect()
    }
}
