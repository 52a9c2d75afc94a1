//! `gapcount`: batch experiments on periodic Schrödinger operators with
//! decaying perturbations.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapcount_core::Sign;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "gapcount", version, about = "Spectral counting experiments for perturbed periodic operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Band functions on a uniform torus grid.
    Bands(BandsArgs),
    /// Spectral gaps certified by the grid extrema.
    Gaps(GapsArgs),
    /// Nondegeneracy of the extremizers at a gap edge.
    Regularity(RegularityArgs),
    /// The coefficient of the large-coupling asymptotics.
    Gamma(GammaArgs),
    /// Integrability and weak-type checks at a gap edge.
    EdgeConditions(EdgeConditionsArgs),
    /// Eigenvalue counts on one box compression.
    Count(CountArgs),
    /// Counts against the predicted coefficient over several couplings.
    Asymptotics(AsymptoticsArgs),
    /// s-values of finite sections of discrete pseudodifferential operators.
    Pdo(PdoArgs),
    /// Weak-type functionals of a sequence read from a file.
    Weaklp(WeaklpArgs),
    /// Runs the acceptance checks and prints a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Sign {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EdgeArg {
    Left,
    Right,
}

#[derive(Debug, Args)]
struct GraphArg {
    /// Graph description (JSON).
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct BandsArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Points per axis.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct GapsArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct RegularityArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Gap index as listed by `gaps`.
    #[arg(long)]
    gap: usize,
    #[arg(long, value_enum)]
    edge: EdgeArg,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Output file for the JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GammaArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, value_enum)]
    sign: SignArg,
    /// Angular profile: const:<c>, cos2 or table:<path>.
    #[arg(long, default_value = "const:1")]
    theta: String,
    /// Coarsest torus grid of the Richardson triple.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Integrability exponent demanded at an edge when p = 1.
    #[arg(long, default_value_t = 1.25)]
    kappa: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct EdgeConditionsArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    gap: usize,
    #[arg(long, value_enum)]
    edge: EdgeArg,
    #[arg(long)]
    p: f64,
    /// Exponent of the integrability check; defaults to the one the
    /// coefficient evaluation demands for this p.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
    ladder: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
    weak_ladder: Vec<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PotentialArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value = "const:1")]
    theta: String,
    #[arg(long, value_enum)]
    sign: SignArg,
}

#[derive(Debug, Args)]
struct CountArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    potential: PotentialArgs,
    /// Spectral parameter; omit when walking towards an edge with --gap/--edge.
    #[arg(long, allow_negative_numbers = true, required_unless_present = "gap")]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    tau: Vec<f64>,
    /// Box radius.
    #[arg(long = "L")]
    radius: usize,
    /// Walk the ladder towards this gap's edge instead of a fixed lambda.
    #[arg(long, requires = "edge", conflicts_with = "lambda")]
    gap: Option<usize>,
    #[arg(long, value_enum)]
    edge: Option<EdgeArg>,
    #[arg(long, default_value_t = gapcount_core::counting::EDGE_LADDER_STEPS)]
    steps: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct AsymptoticsArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    potential: PotentialArgs,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    tau: Vec<f64>,
    /// Increasing box radii.
    #[arg(long = "L", value_delimiter = ',', required = true)]
    radii: Vec<usize>,
    /// Constant c of the support requirement L >= c·τ^{p/d}.
    #[arg(long, default_value_t = 10.0)]
    support_constant: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PdoArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Left torus symbol: const:<c>, exp:<t>, trig:<t>=<a>;..., half:<axis> or table:<path>.
    #[arg(long, default_value = "const:1")]
    f: String,
    #[arg(long, default_value = "const:1")]
    g: String,
    #[arg(long, default_value = "const:1")]
    theta: String,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Box radii; the s-value table is written for the last one.
    #[arg(long = "L", value_delimiter = ',', required = true)]
    radii: Vec<usize>,
    /// Torus grid per axis; 8L when omitted.
    #[arg(long)]
    grid: Option<usize>,
    /// Window `lo,hi` for the s^p n(s) estimate.
    #[arg(long, value_parser = parse_window)]
    window: Option<(f64, f64)>,
    /// s-values of the commutator of f with ΦWΦ* instead of the section.
    #[arg(long, conflicts_with_all = ["g", "cwikel_q", "window"])]
    commutator: bool,
    /// Report the Cwikel ratio of fΦW in L_q instead of the section.
    #[arg(long)]
    cwikel_q: Option<f64>,
    /// Summary rows `L,M,dp_sup,dp_inf,formula`. Without it they go to
    /// stdout, or to stderr when the s-value table is on stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct WeaklpArgs {
    /// Numbers separated by whitespace or commas; `#` starts a comment.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    p: f64,
    /// Window `lo,hi` for the s^p n(s) estimate.
    #[arg(long, value_parser = parse_window)]
    window: Option<(f64, f64)>,
    /// Per-index products `m,a_m,m^{1/p}a_m`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Run only these check numbers.
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

fn parse_window(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(',').ok_or("expected lo,hi")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if 0.0 < lo && lo <= hi {
        Ok((lo, hi))
    } else {
        Err(format!("need 0 < lo <= hi, got {lo},{hi}"))
    }
}

/// Failure modes of a run and the exit codes they map to.
pub enum Failure {
    Usage(String),
    Verification,
}

impl From<gapcount_core::Error> for Failure {
    fn from(e: gapcount_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("GAPCOUNT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("GAPCOUNT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {n} worker threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Bands(a) => commands::bands(a),
        Command::Gaps(a) => commands::gaps(a),
        Command::Regularity(a) => commands::regularity(a),
        Command::Gamma(a) => commands::gamma(a),
        Command::EdgeConditions(a) => commands::edge_conditions(a),
        Command::Count(a) => commands::count(a),
        Command::Asymptotics(a) => commands::asymptotics(a),
        Command::Pdo(a) => commands::pdo(a),
        Command::Weaklp(a) => commands::weaklp(a),
        Command::Verify(a) => commands::verify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
