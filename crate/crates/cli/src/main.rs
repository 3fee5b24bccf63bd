//! `hazgrid` pipeline driver. Every subcommand writes into `--out` and
//! leaves a manifest of its inputs under `manifests/`.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser, serde::Serialize)]
#[command(
    name = "hazgrid",
    version,
    about = "Wildfire risk layers and fire-station siting"
)]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for synthetic data and randomized solver starts.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, serde::Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic lattice region into OUT/bundle.
    Synth {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        /// JSON generator settings.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Validate a region directory and copy it into OUT/bundle.
    Ingest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Hexagon layers as CSV and GeoJSON.
    Tessellate {
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Score a scenario.
    Risk {
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Site stations.
    Optimize {
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Relocate)]
        mode: ModeArg,
        /// avg, max or weighted.
        #[arg(long, default_value = "avg")]
        objective: String,
        /// Weights of the weighted objective.
        #[arg(long, requires = "alpha2")]
        alpha1: Option<f64>,
        #[arg(long, requires = "alpha1")]
        alpha2: Option<f64>,
        /// Station count for relocation; defaults to the current count.
        #[arg(long)]
        stations: Option<usize>,
        /// Stations added in add mode.
        #[arg(long, default_value_t = 0)]
        delta: usize,
        /// Every open station must also serve some other cell.
        #[arg(long)]
        serve_other: bool,
        #[arg(long, value_enum, default_value_t = CostArg::Risk)]
        cost: CostArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Marginal value of each added station.
    Sweep {
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "avg")]
        objective: String,
        #[arg(long, default_value_t = 10)]
        delta_max: usize,
        #[arg(long, default_value_t = 0.01)]
        eps_rel: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Optimal-facility curves and the density scaling exponent.
    Scaling {
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_enum, default_value_t = CurveArg::Distance)]
        curve: CurveArg,
        #[arg(long, default_value_t = 2000.0)]
        coarse_edge_m: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Where job records are kept; defaults to HAZGRID_DATA_DIR.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct RegionArgs {
    /// Region directory; defaults to OUT/bundle.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub edge_m: Option<f64>,
    /// Largest cell-center to node distance for association.
    #[arg(long)]
    pub cutoff_m: Option<f64>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// RI, RIF or RIS.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct SolverArgs {
    /// Seconds per solve.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub exact_threshold: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Relocate,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostArg {
    Risk,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveArg {
    Distance,
    Risk,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
