//! Subcommand implementations. Each returns JSON plus named artifacts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use sandpile_core::group::enumerate_recurrent;
use sandpile_core::harmonic::{homoclinic_with, mahler_with, xi};
use sandpile_core::product::{build_product_model, WStrategy};
use sandpile_core::report::reproduce_worked_examples;
use sandpile_core::subshift::{
    counts_to_csv, entropy_by_counting, figure_graphs, graph_entropy, verify_figure_graphs, BoundaryStyle, PatternModel,
    FIGURE_MAX_LENGTH,
};
use sandpile_core::{parse, Config, Error, Exec, LaurentPoly, TopplingMatrix, Window};
use serde_json::{json, Value};

use crate::{Boundary, Kind, Strategy, SubshiftArgs};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Guard { .. }) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type Res<T> = std::result::Result<T, CliError>;

pub struct Context {
    pub tolerance: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Context {
    pub fn new(tolerance: f64, seed: u64, sequential: bool) -> Self {
        Context { tolerance, seed, exec: if sequential { Exec::Sequential } else { Exec::default() } }
    }
}

pub struct Outcome {
    pub json: Value,
    pub artifacts: BTreeMap<String, String>,
    pub out_dir: Option<PathBuf>,
}

impl Outcome {
    fn new(json: Value) -> Self {
        Outcome { json, artifacts: BTreeMap::new(), out_dir: None }
    }

    fn with(mut self, name: &str, content: String) -> Self {
        self.artifacts.insert(name.to_string(), content);
        self
    }

    /// Prints the JSON result and writes artifacts when a directory is given.
    pub fn emit(self, dir: Option<&Path>) -> Res<()> {
        let text = serde_json::to_string_pretty(&self.json).expect("serializable") + "\n";
        print!("{text}");
        if let Some(dir) = dir {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("result.json"), &text)?;
            for (name, content) in &self.artifacts {
                fs::write(dir.join(name), content)?;
            }
        }
        Ok(())
    }
}

fn poly(src: &str) -> Res<LaurentPoly> {
    Ok(parse(src)?)
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn rows_csv(rows: &[Vec<i64>]) -> String {
    rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",") + "\n").collect()
}

pub fn classify(src: &str) -> Res<Outcome> {
    let h = poly(src)?;
    let c = h.classify()?;
    Ok(Outcome::new(json!({
        "poly": h.to_string(),
        "dim": h.dim(),
        "lopsided": c.lopsided,
        "sandpile": c.sandpile,
        "simple": c.simple,
        "gamma": c.gamma(),
        "l1_norm": c.l1_norm.to_string(),
        "expansiveness": to_json(&h.expansiveness_certificate(64)),
    })))
}

fn read_heights(arg: &str) -> Res<Vec<i64>> {
    let text = if arg.trim_start().starts_with('[') { arg.to_string() } else { fs::read_to_string(arg)? };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("configuration: {e}")))
}

pub fn stabilize(src: &str, window: &str, config: &str) -> Res<Outcome> {
    let h = poly(src)?;
    let w = Window::parse_spec(window)?;
    let tm = TopplingMatrix::from_poly(&h, &w)?;
    let v = read_heights(config)?;
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch { left: v.len(), right: w.len() }.into());
    }
    let r = tm.stabilize(&v)?;
    let recurrent = tm.is_recurrent_burning(&r.stable)?;
    Ok(Outcome::new(json!({ "stable": r.stable, "odometer": r.odometer, "recurrent": recurrent })))
}

pub fn group(ctx: &Context, src: &str, window: &str, sample: bool) -> Res<Outcome> {
    let h = poly(src)?;
    let w = Window::parse_spec(window)?;
    let tm = TopplingMatrix::from_poly(&h, &w)?;
    let g = enumerate_recurrent(&tm, ctx.exec)?;
    let mut out = json!({ "summary": to_json(&g.summary()) });
    if sample {
        out["sample"] = json!(g.haar_uniform(ctx.seed));
        out["seed"] = json!(ctx.seed);
    }
    Ok(Outcome::new(out).with("recurrent.csv", rows_csv(g.elements())))
}

pub fn product(ctx: &Context, f: &str, g: &str, window: &str, strategy: Strategy) -> Res<Outcome> {
    let m = build_product_model(&poly(f)?, &poly(g)?, &Window::parse_spec(window)?)?;
    let mut out = json!({
        "h": m.h().to_string(),
        "validity": to_json(m.validity()),
        "gamma_prime": m.gamma_prime(),
        "beta": m.beta(),
        "det_f": m.det_f_abs().to_string(),
        "delta_prime": m.delta_prime().to_rows(),
    });
    if !m.is_valid() {
        return Ok(Outcome::new(out));
    }
    let strategy = match strategy {
        Strategy::Auto => WStrategy::Auto,
        Strategy::Filter => WStrategy::FilterRecurrent,
        Strategy::Cofactor => WStrategy::CofactorBox,
        Strategy::Generate => WStrategy::Generate,
    };
    let wg = m.enumerate_w(strategy, ctx.exec)?;
    out["w_order"] = json!(wg.len());
    out["strategy"] = to_json(&wg.strategy);
    out["subgroup"] = to_json(&m.check_subgroup(&wg, 4096)?);
    out["projection"] = to_json(&m.projection_check(ctx.exec)?);
    Ok(Outcome::new(out).with("w_elements.csv", rows_csv(&wg.elements_w)).with("v_cofactors.csv", rows_csv(&wg.elements_v)))
}

pub fn harmonic(ctx: &Context, src: &str, kernel: bool, mahler: bool, xi_file: Option<&Path>, max_radius: i64) -> Res<Outcome> {
    let h = poly(src)?;
    let (kernel, mahler) = if !kernel && !mahler && xi_file.is_none() { (true, true) } else { (kernel, mahler) };
    let mut out = json!({ "poly": h.to_string() });
    let mut artifacts = BTreeMap::new();
    if kernel || xi_file.is_some() {
        let k = homoclinic_with(&h, ctx.tolerance, max_radius, ctx.exec)?;
        out["kernel"] = json!({
            "method": to_json(&k.method),
            "radius": k.radius,
            "residual": k.residual,
            "tail_bound": k.tail_bound,
            "alias_estimate": k.alias_estimate,
            "expansiveness_gap": k.expansiveness_gap,
        });
        if kernel {
            artifacts.insert("kernel.csv".to_string(), k.to_csv());
        }
        if let Some(path) = xi_file {
            let text = fs::read_to_string(path)?;
            let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let cfg = Config::from_json(&value)?;
            let v: HashMap<Vec<i64>, i64> =
                cfg.window.sites().iter().cloned().zip(cfg.heights.iter().copied()).filter(|(_, x)| *x != 0).collect();
            let r = xi(&v, &k, &cfg.window, 1e-8)?;
            out["xi"] = json!({ "truncation_bound": r.truncation_bound, "values": r.torus.values });
            let mut csv = String::from("site,value\n");
            for (s, x) in cfg.window.sites().iter().zip(&r.torus.values) {
                csv.push_str(&format!("\"{s:?}\",{x:.17e}\n"));
            }
            artifacts.insert("xi.csv".to_string(), csv);
        }
    }
    if mahler {
        out["mahler"] = to_json(&mahler_with(&h, ctx.tolerance.max(1e-12), 1 << 12, ctx.exec)?);
    }
    Ok(Outcome { json: out, artifacts, out_dir: None })
}

fn need<'a>(x: Option<&'a str>, name: &str) -> Res<&'a str> {
    x.ok_or_else(|| CliError::Input(format!("--{name} is required for this kind")))
}

fn pattern_model(kind: Kind, h: Option<&str>, f: Option<&str>, g: Option<&str>) -> Res<PatternModel> {
    Ok(match kind {
        Kind::R => PatternModel::recurrent(&poly(need(h, "poly")?)?)?,
        Kind::V => PatternModel::cofactors(&poly(need(f, "f")?)?, &poly(need(g, "g")?)?)?,
        Kind::W => PatternModel::products(&poly(need(f, "f")?)?, &poly(need(g, "g")?)?)?,
    })
}

pub fn subshift(ctx: &Context, a: &SubshiftArgs) -> Res<Outcome> {
    let model = pattern_model(a.kind, a.poly.as_deref(), a.f.as_deref(), a.g.as_deref())?;
    let style = match a.boundary {
        Boundary::Free => BoundaryStyle::Free { collar: a.collar },
        Boundary::MaxHeight => BoundaryStyle::MaxHeight { collar: a.collar },
    };
    let rows = entropy_by_counting(&model, a.nmax, style, ctx.exec)?;
    let mut out = Outcome::new(json!({ "kind": to_json(&model.kind), "h": model.h.to_string(), "boundary": to_json(&style), "counts": to_json(&rows) }))
        .with("counts.csv", counts_to_csv(&rows));
    if a.figures {
        let report = verify_figure_graphs(FIGURE_MAX_LENGTH, ctx.exec)?;
        out.json["figures"] = to_json(&report);
    }
    if a.figures || a.emit_dot.is_some() {
        for g in figure_graphs() {
            let dot = g.to_dot();
            if let Some(dir) = &a.emit_dot {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("graph_{}.dot", g.name)), &dot)?;
            }
            out.artifacts.insert(format!("graph_{}.dot", g.name), dot);
        }
    }
    Ok(out)
}

pub fn cover_check(ctx: &Context, f: &str, g: &str, nmax: usize) -> Res<Outcome> {
    let (f, g) = (poly(f)?, poly(g)?);
    let h = f.mul(&g)?;
    let target = mahler_with(&f, 1e-10, 1 << 12, ctx.exec)?;
    let mh = mahler_with(&h, 1e-10, 1 << 12, ctx.exec)?;
    let w = PatternModel::products(&f, &g)?;
    let w_rows = entropy_by_counting(&w, nmax, BoundaryStyle::default(), ctx.exec)?;
    let r_rows = entropy_by_counting(&PatternModel::recurrent(&h)?, nmax, BoundaryStyle::default(), ctx.exec)?;
    let mut out = json!({
        "f": f.to_string(),
        "g": g.to_string(),
        "h": h.to_string(),
        "mahler_f": target.value,
        "mahler_h": mh.value,
        "counting_w": to_json(&w_rows),
        "counting_r": to_json(&r_rows),
    });
    let last = w_rows.last().map(|r| r.estimate).unwrap_or(f64::NAN);
    out["w_relative_gap"] = json!(((last - target.value) / target.value).abs());
    if f == parse("-u^-1+2")? && g == parse("2-u")? {
        let ent: BTreeMap<String, f64> = figure_graphs()[..3].iter().map(|gr| (gr.name.clone(), graph_entropy(gr).value)).collect();
        out["graph_entropy"] = to_json(&ent);
    }
    Ok(Outcome::new(out).with("counts_W.csv", counts_to_csv(&w_rows)).with("counts_R_h.csv", counts_to_csv(&r_rows)))
}

pub fn reproduce(ctx: &Context) -> Res<Outcome> {
    let report = reproduce_worked_examples(ctx.exec)?;
    let mut out = Outcome::new(json!({
        "passed": report.passed,
        "total": report.total,
        "summary": report.summary_lines(),
    }));
    out.artifacts = report.artifacts();
    Ok(out)
}
