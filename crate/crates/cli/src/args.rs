use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "udp-certify", version, about = "Certify regression designs and evaluate sparse-regression oracle bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalOpts,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[arg(long, global = true, env = "UDP_CERTIFY_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Skip one header line in every CSV input.
    #[arg(long, global = true)]
    pub header: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bracket the kernel distortion, optionally turning it into a UDP certificate.
    Certify(CertifyArgs),
    /// RIP constant, cone-constant estimates, and falsification searches.
    Conditions(ConditionsArgs),
    /// Fit the lasso or the Dantzig selector.
    Solve(SolveArgs),
    /// Evaluate an oracle-inequality bound for a target and certificate.
    Bound(BoundArgs),
    /// Ideal least-squares benchmark on a support, optionally with Monte Carlo.
    Ideal(IdealArgs),
    /// Run a Monte-Carlo validation experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistortionMethodArg {
    Exact,
    Search,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = DistortionMethodArg::Exact)]
    pub method: DistortionMethodArg,
    /// Target width of the certified bracket (exact method).
    #[arg(long, default_value_t = 1e-4, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, default_value_t = udp_core::distortion::DEFAULT_RESTARTS, value_parser = positive_usize)]
    pub restarts: usize,
    #[arg(long, default_value_t = udp_core::distortion::DEFAULT_SEARCH_ITERS, value_parser = positive_usize)]
    pub iters: usize,
    /// Also derive a UDP certificate (requires --kappa0).
    #[arg(long, requires = "kappa0")]
    pub to_udp: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa0: Option<f64>,
    /// Write the certificate alone to this file (implies --to-udp).
    #[arg(long, requires = "kappa0")]
    pub cert_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConditionsArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Order S for the RIP constant θ_S.
    #[arg(long = "rip-S", value_parser = positive_usize)]
    pub rip_s: Option<usize>,
    /// Order S for the restricted-eigenvalue and compatibility estimates.
    #[arg(long = "re-S", value_parser = positive_usize)]
    pub re_s: Option<usize>,
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub c0: f64,
    /// κ for the H_{S,1} falsifier.
    #[arg(long, default_value_t = 0.45, allow_negative_numbers = true)]
    pub kappa: f64,
    /// Random candidates per falsifier; 0 disables falsification.
    #[arg(long, default_value_t = 100_000)]
    pub falsify_budget: usize,
    /// Restarts of the cone-constant local search.
    #[arg(long, default_value_t = 32, value_parser = positive_usize)]
    pub restarts: usize,
    /// UDP certificate (JSON) to test with the falsifier.
    #[arg(long)]
    pub cert: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Lasso,
    Dantzig,
}

impl From<EstimatorArg> for udp_core::solvers::Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Lasso => Self::Lasso,
            EstimatorArg::Dantzig => Self::Dantzig,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long, value_enum)]
    pub method: EstimatorArg,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = udp_core::solvers::DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
    /// Sweeps (lasso) or simplex pivots (Dantzig).
    #[arg(long, default_value_t = udp_core::solvers::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaArg {
    Auto,
    Value(f64),
}

impl FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaArg::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected 'auto' or a number, got '{s}'"))?;
        if v > 0.0 && v.is_finite() {
            Ok(LambdaArg::Value(v))
        } else {
            Err(format!("lambda must be > 0, got {s}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    L1,
    Pred,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub cert: PathBuf,
    #[arg(long, value_parser = nonneg_f64)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// 'auto' picks 1.01 times the admissibility threshold.
    #[arg(long, default_value = "auto", allow_negative_numbers = true)]
    pub lambda: LambdaArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Lasso)]
    pub estimator: EstimatorArg,
    /// ℓ1 estimation bound or prediction bound.
    #[arg(long, value_enum, default_value_t = BoundKind::L1)]
    pub kind: BoundKind,
}

#[derive(Debug, Args)]
pub struct IdealArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_parser = nonneg_f64)]
    pub sigma: f64,
    /// Comma-separated column indices; defaults to the target's nonzeros.
    #[arg(long, value_delimiter = ',')]
    pub support: Option<Vec<usize>>,
    /// Monte-Carlo noise draws; omitted means no simulation.
    #[arg(long, value_parser = positive_usize)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Per-trial CSV output.
    #[arg(long)]
    pub dump_trials: Option<PathBuf>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: '{s}'"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {s}"))
    }
}

fn nonneg_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: '{s}'"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be ≥ 0, got {s}"))
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("must be ≥ 1".into()),
        Err(_) => Err(format!("not a positive integer: '{s}'")),
    }
}
