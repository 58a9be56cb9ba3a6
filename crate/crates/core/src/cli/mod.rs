//! The `seqpath` command line.
//!
//! Every subcommand writes its data files plus `<command>.manifest.json`
//! (input and output SHA-256 hashes, parameters, seed, tool version) into
//! `--out-dir`. Wall-clock times go to a separate
//! `<command>.manifest.time.json` so reruns leave every other file
//! byte-identical.
//!
//! `--config FILE` reads a TOML table whose keys are long flag names
//! (`out_dir = "results"` stands for `--out-dir results`); flags given on the
//! command line take precedence. Relative paths in the file are resolved
//! against the file's directory.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 the computation
//! itself failed (for example a Cox fit that does not converge).

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use manifest::{CliError, ErrorKind};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (build ", env!("SEQPATH_BUILD_HASH"), ")");

#[derive(Parser, Debug)]
#[command(name = "seqpath", version = VERSION, about = "State-sequence analysis of longitudinal categorical pathways")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Print errors as a JSON object on standard error.
    #[arg(long, global = true)]
    pub json_errors: bool,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the resolved parameters, defaults included, as TOML and exit.
    #[arg(long, global = true)]
    pub explain: bool,
    /// TOML file of flag values; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a sequence file and write the normalized wide table and alphabet.
    Ingest(IngestArgs),
    /// Transition matrix, state distribution, modal sequence and frequent sequences.
    Describe(DescribeArgs),
    /// Per-sequence entropy, turbulence and state durations.
    Indicators(IndicatorsArgs),
    /// Pairwise dissimilarity matrix.
    Dist(DistArgs),
    /// Ward clustering of a dissimilarity matrix.
    Cluster(ClusterArgs),
    /// Per-cluster covariate profile.
    Profile(ProfileArgs),
    /// Cox models of an outcome on clusters and indicator strata.
    Assoc(AssocArgs),
    /// SVG index, distribution, frequency and modal plots.
    Plot(PlotArgs),
    /// Generate a synthetic Markov cohort with outcomes.
    Simulate(SimulateArgs),
    /// Run every stage from sequences to plots.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// One row per subject, one column per position.
    Wide,
    /// `id,state,start,duration` rows.
    Spells,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SeqInput {
    /// Sequence file.
    #[arg(long)]
    pub sequences: PathBuf,
    /// Alphabet JSON; inferred in first-appearance order when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Wide)]
    pub input_format: InputFormat,
    /// Subject id column of a wide file.
    #[arg(long, default_value = "id")]
    pub id_column: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutDir {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Om,
    Hamming,
    Dhd,
    Lcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    /// Binary above `--binary-threshold` sequences, CSV otherwise.
    Auto,
    Csv,
    Binary,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DistParams {
    #[arg(long, value_enum, default_value_t = MetricKind::Om)]
    pub metric: MetricKind,
    /// Substitution costs for om/hamming: `trate`, `constant`, or a CSV file.
    /// Defaults to `trate` for om and unit costs for hamming.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<String>,
    /// Substitution cost used with `--costs constant`.
    #[arg(long, default_value_t = 2.0)]
    pub sub_cost: f64,
    #[arg(long, default_value_t = 1.0)]
    pub indel: f64,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Auto)]
    pub format: MatrixFormat,
    #[arg(long, default_value_t = 1000)]
    pub binary_threshold: usize,
    /// Random triples checked by the triangle-inequality audit of user costs.
    #[arg(long, default_value_t = 1000)]
    pub audit_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub audit_seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct KParams {
    /// Number of clusters; chosen by the best average silhouette when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiesArg {
    Efron,
    Breslow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortArg {
    Input,
    FirstState,
    Cluster,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PlotParams {
    /// File name prefix of the SVGs.
    #[arg(long, default_value = "plot")]
    pub prefix: String,
    #[arg(long, default_value_t = 800)]
    pub width: u32,
    #[arg(long, default_value_t = 500)]
    pub height: u32,
    /// Row order of index plots.
    #[arg(long, value_enum, default_value_t = SortArg::Cluster)]
    pub sort: SortArg,
    /// Sequences shown in frequency plots.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long)]
    pub no_legend: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct IngestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    /// Also write the spell representation.
    #[arg(long)]
    pub spells: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct DescribeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    /// Rows of the frequency table.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct IndicatorsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct DistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct ClusterArgs {
    /// Distance matrix (CSV or binary).
    #[arg(long)]
    pub dist: PathBuf,
    /// Sequence file supplying subject ids for a binary matrix.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequences: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    pub id_column: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub k: KParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct ProfileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    /// `id,cluster` file.
    #[arg(long)]
    pub clusters: PathBuf,
    /// Covariate CSV with an `id` column.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariates: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct AssocArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    #[arg(long)]
    pub clusters: PathBuf,
    /// `id,time,event` file.
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long, value_enum, default_value_t = TiesArg::Efron)]
    pub ties: TiesArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct PlotArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub plot: PlotParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    /// Use the published weekly treatment-coverage transition matrix (the
    /// default when no `--transition` is given).
    #[arg(long)]
    pub coverage: bool,
    /// Transition matrix CSV as written by `describe` (`from\to,<states>`).
    #[arg(long, conflicts_with = "coverage")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<PathBuf>,
    /// Alphabet JSON for `--transition`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<PathBuf>,
    /// Wide cohort whose first-position shares become the initial
    /// distribution (uniform otherwise).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_from: Option<PathBuf>,
    #[arg(long, default_value_t = 2329)]
    pub n: usize,
    #[arg(long, default_value_t = 52)]
    pub t: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Hazard ratio per cluster; its length sets the number of clusters.
    #[arg(long, value_delimiter = ',', default_value = "1,1.8,1.6")]
    pub hr: Vec<f64>,
    /// Event rate per time unit in cluster 1.
    #[arg(long, default_value_t = 0.02)]
    pub baseline_rate: f64,
    /// Administrative censoring time.
    #[arg(long, default_value_t = 104.0)]
    pub censor_time: f64,
    /// Only write sequences and alphabet.
    #[arg(long)]
    pub no_outcomes: bool,
    /// Distance settings used to find the clusters that carry the hazards.
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(args_override_self = true)]
pub struct PipelineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: SeqInput,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariates: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub k: KParams,
    #[arg(long, value_enum, default_value_t = TiesArg::Efron)]
    pub ties: TiesArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub plot: PlotParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutDir,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Describe(_) => "describe",
            Command::Indicators(_) => "indicators",
            Command::Dist(_) => "dist",
            Command::Cluster(_) => "cluster",
            Command::Profile(_) => "profile",
            Command::Assoc(_) => "assoc",
            Command::Plot(_) => "plot",
            Command::Simulate(_) => "simulate",
            Command::Pipeline(_) => "pipeline",
        }
    }

    fn parameters(&self) -> serde_json::Value {
        let v = match self {
            Command::Ingest(a) => serde_json::to_value(a),
            Command::Describe(a) => serde_json::to_value(a),
            Command::Indicators(a) => serde_json::to_value(a),
            Command::Dist(a) => serde_json::to_value(a),
            Command::Cluster(a) => serde_json::to_value(a),
            Command::Profile(a) => serde_json::to_value(a),
            Command::Assoc(a) => serde_json::to_value(a),
            Command::Plot(a) => serde_json::to_value(a),
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Pipeline(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json-errors");
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(e) => return report(&e, json),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            return report(&CliError::validation(e.render().to_string().trim_end()), json);
        }
    };
    if cli.explain {
        let mut params = cli.command.parameters();
        if let (Some(t), Some(map)) = (cli.threads, params.as_object_mut()) {
            map.insert("threads".into(), t.into());
        }
        let text = toml::to_string(&params).unwrap_or_else(|e| format!("# cannot render parameters: {e}\n"));
        print!("# seqpath {} {}\n{text}", VERSION, cli.command.name());
        return 0;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return report(&CliError::validation("--threads must be at least 1"), cli.json_errors);
        }
        // Fails harmlessly when the global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => report(&e, cli.json_errors),
    }
}

fn report(e: &CliError, json: bool) -> i32 {
    if json {
        let obj = serde_json::json!({
            "error": {
                "kind": e.kind.as_str(),
                "code": e.kind.code(),
                "message": e.message,
            }
        });
        eprintln!("{obj}");
    } else {
        eprintln!("error: {}", e.message);
    }
    e.kind.code()
}
