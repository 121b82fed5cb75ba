//! `sandpile`: command-line runner for the sandpile-core experiments.

mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "sandpile", version, about = "Dissipative sandpile models, their groups and symbolic covers")]
struct Cli {
    /// Directory for JSON/CSV/DOT artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Numerical tolerance for residuals and quadrature.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Seed for any random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run every data-parallel loop sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lopsidedness, sandpile class and dominant coefficient of a polynomial.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
    },
    /// Stabilize a configuration on a window.
    Stabilize {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        window: String,
        /// Heights as a JSON list, or a path to a JSON file holding one.
        #[arg(long)]
        config: String,
    },
    /// Recurrent group of a window: order, determinant, identity.
    Group {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        window: String,
        /// Also draw one Haar-uniform element with --seed.
        #[arg(long)]
        sample: bool,
    },
    /// Product model Δ' = ΔᵍΔᶠ on a window.
    Product {
        #[command(flatten)]
        fg: FactorArgs,
        #[arg(long)]
        window: String,
        #[arg(long, value_enum, default_value_t = Strategy::Auto)]
        strategy: Strategy,
    },
    /// Homoclinic kernel, Mahler measure or the map ξ.
    Harmonic {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        kernel: bool,
        #[arg(long)]
        mahler: bool,
        /// JSON configuration file (window and heights) to map under ξ.
        #[arg(long)]
        xi: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        max_radius: i64,
    },
    /// Pattern counting, entropy estimates and figure graphs.
    Subshift(SubshiftArgs),
    /// Compare mahler(f), graph entropies and counting estimates.
    CoverCheck {
        #[command(flatten)]
        fg: FactorArgs,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    /// Run the worked-example suite.
    Reproduce,
    /// Execute a JSON experiment spec.
    Run {
        spec: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct FactorArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, allow_hyphen_values = true)]
    pub g: String,
}

#[derive(Args, Debug, Clone)]
pub struct SubshiftArgs {
    #[arg(long, value_enum, default_value_t = Kind::R)]
    pub kind: Kind,
    /// h for kind r.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub nmax: usize,
    #[arg(long, default_value_t = sandpile_core::subshift::DEFAULT_COLLAR)]
    pub collar: usize,
    #[arg(long, value_enum, default_value_t = Boundary::Free)]
    pub boundary: Boundary,
    /// Verify the transcribed example graphs.
    #[arg(long)]
    pub figures: bool,
    /// Write the example graphs as DOT files into this directory.
    #[arg(long)]
    pub emit_dot: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    R,
    V,
    W,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Free,
    MaxHeight,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Filter,
    Cofactor,
    Generate,
}

fn dispatch(cli: &Cli, ctx: &commands::Context) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Classify { poly } => commands::classify(poly),
        Command::Stabilize { poly, window, config } => commands::stabilize(poly, window, config),
        Command::Group { poly, window, sample } => commands::group(ctx, poly, window, *sample),
        Command::Product { fg, window, strategy } => commands::product(ctx, &fg.f, &fg.g, window, *strategy),
        Command::Harmonic { poly, kernel, mahler, xi, max_radius } => {
            commands::harmonic(ctx, poly, *kernel, *mahler, xi.as_deref(), *max_radius)
        }
        Command::Subshift(args) => commands::subshift(ctx, args),
        Command::CoverCheck { fg, nmax } => commands::cover_check(ctx, &fg.f, &fg.g, *nmax),
        Command::Reproduce => commands::reproduce(ctx),
        Command::Run { spec } => spec::run_file(ctx, spec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = commands::Context::new(cli.tolerance, cli.seed, cli.sequential);
    let result = dispatch(&cli, &ctx).and_then(|out| {
        let dir = cli.out_dir.clone().or_else(|| out.out_dir.clone());
        out.emit(dir.as_deref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
