use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "rgs", version, about = "Values, strategies and simulations for repeated games with an informed controller")]
pub struct Cli {
    /// Worker threads for the solvers and the simulator.
    #[arg(long, global = true, env = "RGS_JOBS")]
    pub jobs: Option<usize>,

    /// Write the output here instead of standard output.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Blocks {
    Cyclic,
    Growing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rules {
    /// The optimal rules of the n-stage game, repeated.
    Finite,
    /// One stationary rule built on the n-stage value.
    Stationary,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a game spec and report the structural hypotheses.
    Validate(SpecArg),
    /// Certified bounds on v_{m,n} or v_[theta] over the belief lattice.
    Value(ValueArgs),
    /// Bounds on w_{m,n} and the minimising stage weights.
    Wvalue(WvalueArgs),
    /// Tables of v_{m,n} and w_{m,n} over a window, with the inf-sup estimate.
    Uniform(UniformArgs),
    /// Serialise a strategy of player 1 or player 2.
    Strategy(StrategyArgs),
    /// Play two strategy files against each other.
    Simulate(SimulateArgs),
    /// Reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// u and cav u on a lattice, for games whose state never moves.
    Cavu(CavuArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SpecArg {
    /// Game spec in JSON.
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GridArg {
    /// Lattice spacing in l1, as a decimal or a fraction such as 1/32.
    /// Defaults to a spacing chosen from the number of states.
    #[arg(long, value_parser = parse_fraction)]
    pub grid: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ValueArgs {
    #[arg(long, required_unless_present = "theta", conflicts_with = "theta")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0, conflicts_with = "theta")]
    pub m: usize,
    /// Stage weights `t:w,...`; renormalised.
    #[arg(long)]
    pub theta: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArg,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct WvalueArgs {
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    /// Resolution of the lattice on stage weights.
    #[arg(long, default_value_t = 4)]
    pub theta_grid: usize,
    /// Largest admissible n.
    #[arg(long, default_value_t = 8)]
    pub guard: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArg,
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct UniformArgs {
    #[arg(long)]
    pub max_m: usize,
    #[arg(long)]
    pub max_n: usize,
    /// Largest n tabulated for w_{m,n}; defaults to min(max-n, 4).
    #[arg(long)]
    pub w_max_n: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub theta_grid: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArg,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct StrategyArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub player: u8,
    #[arg(long)]
    pub n: usize,
    /// Block structure of player 2's strategy.
    #[arg(long, value_enum, default_value_t = Blocks::Cyclic)]
    pub blocks: Blocks,
    /// Rule construction for player 1.
    #[arg(long, value_enum, default_value_t = Rules::Finite)]
    pub rules: Rules,
    /// Weight of the current payoff in the stationary rule; defaults to 1/(8n).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stages covered by growing blocks.
    #[arg(long, default_value_t = 1024)]
    pub horizon: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArg,
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p1: PathBuf,
    #[arg(long)]
    pub p2: PathBuf,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Additional prefix horizons to report.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<usize>,
    /// Emit the per-stage trace as CSV instead of the summary.
    #[arg(long)]
    pub trace: bool,
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CavuArgs {
    /// Subdivisions of each edge of the simplex.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
    pub spec: PathBuf,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("expected a number, got {s:?}"))?,
    };
    if v.is_finite() && v > 0.0 && v <= 2.0 {
        Ok(v)
    } else {
        Err(format!("grid spacing must lie in (0, 2], got {s}"))
    }
}
