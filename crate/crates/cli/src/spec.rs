//! JSON experiment specs: one command with its inputs, validated up front.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use crate::commands::{self, CliError, Context, Outcome, Res};
use crate::{Boundary, Kind, Strategy, SubshiftArgs};

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SpecCommand {
    Classify,
    Stabilize,
    Group,
    Product,
    Harmonic,
    Subshift,
    CoverCheck,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: SpecCommand,
    pub poly: Option<String>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub window: Option<String>,
    /// Heights as a JSON list.
    pub config: Option<Vec<i64>>,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub nmax: Option<usize>,
    pub kind: Option<String>,
    pub collar: Option<usize>,
    pub boundary: Option<String>,
    pub strategy: Option<String>,
    #[serde(default)]
    pub sample: bool,
    #[serde(default)]
    pub figures: bool,
    #[serde(default)]
    pub kernel: bool,
    #[serde(default)]
    pub mahler: bool,
    pub max_radius: Option<i64>,
}

fn need<'a>(x: &'a Option<String>, name: &str) -> Res<&'a str> {
    x.as_deref().ok_or_else(|| CliError::Input(format!("spec: field `{name}` is required")))
}

fn choice<T: ValueEnum>(x: &Option<String>, name: &str, default: T) -> Res<T> {
    match x {
        None => Ok(default),
        Some(s) => T::from_str(s, true).map_err(|_| CliError::Input(format!("spec: invalid `{name}` value {s:?}"))),
    }
}

pub fn run_file(base: &Context, path: &Path) -> Res<Outcome> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let spec: ExperimentSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    run(base, &spec)
}

pub fn run(base: &Context, spec: &ExperimentSpec) -> Res<Outcome> {
    let ctx = Context { tolerance: spec.tolerance.unwrap_or(base.tolerance), seed: spec.seed, exec: base.exec };
    let mut out = match spec.command {
        SpecCommand::Classify => commands::classify(need(&spec.poly, "poly")?),
        SpecCommand::Stabilize => {
            let cfg = spec.config.as_ref().ok_or_else(|| CliError::Input("spec: field `config` is required".into()))?;
            let cfg = serde_json::to_string(cfg).expect("serializable");
            commands::stabilize(need(&spec.poly, "poly")?, need(&spec.window, "window")?, &cfg)
        }
        SpecCommand::Group => commands::group(&ctx, need(&spec.poly, "poly")?, need(&spec.window, "window")?, spec.sample),
        SpecCommand::Product => commands::product(
            &ctx,
            need(&spec.f, "f")?,
            need(&spec.g, "g")?,
            need(&spec.window, "window")?,
            choice(&spec.strategy, "strategy", Strategy::Auto)?,
        ),
        SpecCommand::Harmonic => commands::harmonic(
            &ctx,
            need(&spec.poly, "poly")?,
            spec.kernel,
            spec.mahler,
            None,
            spec.max_radius.unwrap_or(256),
        ),
        SpecCommand::Subshift => {
            let args = SubshiftArgs {
                kind: choice(&spec.kind, "kind", Kind::R)?,
                poly: spec.poly.clone(),
                f: spec.f.clone(),
                g: spec.g.clone(),
                nmax: spec.nmax.unwrap_or(8),
                collar: spec.collar.unwrap_or(sandpile_core::subshift::DEFAULT_COLLAR),
                boundary: choice(&spec.boundary, "boundary", Boundary::Free)?,
                figures: spec.figures,
                emit_dot: None,
            };
            commands::subshift(&ctx, &args)
        }
        SpecCommand::CoverCheck => {
            commands::cover_check(&ctx, need(&spec.f, "f")?, need(&spec.g, "g")?, spec.nmax.unwrap_or(12))
        }
    }?;
    out.out_dir = spec.out_dir.clone();
    Ok(out)
}
