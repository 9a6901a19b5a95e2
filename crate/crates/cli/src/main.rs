mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Simulate the DM + Heisenberg-XY two-qubit propagator, validate and
/// re-derive its pulse-sequence decompositions, and study singlet dynamics.
///
/// Exit codes: 0 success, 1 usage or I/O error, 2 fidelity below threshold,
/// 3 optimizer did not converge.
#[derive(Parser, Debug)]
#[command(name = "dmsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fidelity profile of a decomposition against the exact propagator.
    Validate(ValidateArgs),
    /// Genetic-algorithm fidelity-profile optimization of a skeleton.
    Optimize(OptimizeArgs),
    /// Fit smooth angle surfaces to a pointwise angle table.
    Fit(FitArgs),
    /// Concurrence trajectories, method comparison and preservation runs.
    Dynamics(DynamicsArgs),
    /// Propagator period versus γ.
    Period(PeriodArgs),
}

/// Wall-clock conversion shared by commands that accept times in seconds.
/// With `--j-hz J`, a time t in seconds maps to τ = 2π·J·t, i.e. J is read
/// as an ordinary frequency in Hz.
#[derive(Args, Debug, Clone, Copy)]
pub struct Units {
    /// Coupling J in Hz; enables the `--t*` flags (τ = 2π·J·t).
    #[arg(long = "j-hz", global = true)]
    pub j_hz: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Built-in decomposition: A, B or full.
    #[arg(long, default_value = "A", conflicts_with = "sequence")]
    pub decomp: String,
    /// Sequence file to validate instead of a built-in decomposition.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Grid size as <n_gamma>x<n_tau>.
    #[arg(long, default_value = "31x31")]
    pub grid: String,
    /// γ range as lo:hi.
    #[arg(long, default_value = "0:1")]
    pub gamma_range: String,
    /// τ range as lo:hi.
    #[arg(long, default_value = "0:15")]
    pub tau_range: String,
    /// Fix γ (requires a single γ column in --grid).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fix τ (requires a single τ row in --grid).
    #[arg(long, conflicts_with = "t")]
    pub tau: Option<f64>,
    /// Fix τ from a time in seconds (needs --j-hz).
    #[arg(long, requires = "j_hz")]
    pub t: Option<f64>,
    /// Upper τ bound from a time in seconds (needs --j-hz).
    #[arg(long, requires = "j_hz", conflicts_with = "tau_range")]
    pub t_max: Option<f64>,
    /// Exit 2 if the minimum fidelity is below this value.
    #[arg(long, default_value_t = 0.999)]
    pub threshold: f64,
    /// Lower end of the heatmap color scale.
    #[arg(long, default_value_t = 0.999)]
    pub clip_min: f64,
    /// Output files, comma separated; kind chosen by extension (.csv, .svg).
    #[arg(long, value_delimiter = ',', default_value = "fidelity.csv,fidelity.svg")]
    pub out: Vec<PathBuf>,
    #[command(flatten)]
    pub units: Units,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pointwise,
    Surface,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "pointwise")]
    pub mode: Mode,
    /// Skeleton name: A or B.
    #[arg(long, default_value = "A")]
    pub skeleton: String,
    /// GA configuration JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV of nodes with a gamma,tau header (overrides --grid).
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long, default_value = "5x5")]
    pub grid: String,
    #[arg(long, default_value = "0:1")]
    pub gamma_range: String,
    #[arg(long, default_value = "0:15")]
    pub tau_range: String,
    /// Angle table (pointwise) or surface coefficients (surface).
    #[arg(long, default_value = "optimize.csv")]
    pub out: PathBuf,
    /// Optional JSON report with per-node or per-generation statistics.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Angle table with a gamma,tau,slot,angle header.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value = "A")]
    pub skeleton: String,
    /// Override a slot's form, e.g. theta2=cubic or theta1=exp2*tau.
    #[arg(long = "form", value_name = "SLOT=FORM")]
    pub forms: Vec<String>,
    /// Surface coefficients CSV.
    #[arg(long, default_value = "surfaces.csv")]
    pub out: PathBuf,
    /// Also write the fitted pulse sequence in text form.
    #[arg(long)]
    pub sequence_out: Option<PathBuf>,
    /// Grid on which the fitted sequence is checked.
    #[arg(long, default_value = "31x31")]
    pub grid: String,
    #[arg(long, default_value = "0:1")]
    pub gamma_range: String,
    #[arg(long, default_value = "0:15")]
    pub tau_range: String,
    /// Exit 2 if the fitted sequence's minimum fidelity is below this value.
    #[arg(long, default_value_t = 0.999)]
    pub threshold: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Exact,
    Decomposition,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Switch {
    On,
    Off,
}

#[derive(Args, Debug)]
pub struct DynamicsArgs {
    /// γ values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.33,0.66,0.99")]
    pub gamma: Vec<f64>,
    /// Points per trajectory, spaced uniformly over one period starting at τ = 0.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodArg,
    /// Also run the interrupted (preservation) evolution.
    #[arg(long, value_enum, default_value = "off")]
    pub preserve: Switch,
    /// Full O·U·O·U cycles in the preservation run.
    #[arg(long, default_value_t = 8)]
    pub cycles: usize,
    /// Evolution length between interrupts; defaults to one eighth of the period.
    #[arg(long, conflicts_with = "segment_t")]
    pub segment_tau: Option<f64>,
    /// Segment length in seconds (needs --j-hz).
    #[arg(long, requires = "j_hz")]
    pub segment_t: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "dynamics")]
    pub out: PathBuf,
    #[command(flatten)]
    pub units: Units,
}

#[derive(Args, Debug)]
pub struct PeriodArgs {
    /// γ values, comma separated (default: 11 points over [0, 1]).
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    /// Also fit the period cubic over the listed γ values.
    #[arg(long)]
    pub fit: bool,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Dynamics(a) => commands::dynamics(&a),
        Command::Period(a) => commands::period(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dmsim: {e}");
            ExitCode::from(e.code())
        }
    }
}
