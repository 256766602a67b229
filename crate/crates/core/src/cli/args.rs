//! Command-line surface. Every subcommand is flattened into the same
//! key-value map that config files use.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "elslab", version, about = "Entire large solutions of Δu = ρ(|x|) f(u): shooting, transforms and bound checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Directory for CSV and JSON artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Multiplies the integrator tolerances.
    #[arg(long, global = true)]
    pub tol_scale: Option<f64>,
    /// Output radius of shooting runs.
    #[arg(long, global = true)]
    pub rmax: Option<f64>,
    /// Writes a summary of every check performed to this file.
    #[arg(long, global = true)]
    pub json_summary: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one initial-value problem and classify it.
    Shoot(ShootArgs),
    /// Locate the entire large solution with a given value at r0.
    ElsFind(ElsArgs),
    /// Boundary blow-up solution on a ball with constant density.
    Bbup(BbupArgs),
    /// Map a solution CSV to (t, v, V) and check t^K V.
    Transform(TransformArgs),
    /// Gap between two entire large solutions.
    UniqGap(GapArgs),
    /// Explicit bounds along solutions.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Keller-Osserman integral of a nonlinearity.
    KoCheck(KoArgs),
    /// Integrability of r ρ(r).
    HrhoCheck(HrhoArgs),
    /// Mean-curvature criterion for ellipsoidal densities over a range of α.
    EllipsoidSweep(EllipsoidArgs),
    /// Entire large solutions for shifted oscillating nonlinearities.
    NoMaximalDemo(DemoArgs),
    /// Run a key = value config file, or every *.cfg file in a directory.
    Run(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    Wbeta(WbetaArgs),
    Lower(SolutionBoundArgs),
    Gamma(GammaArgs),
    Energy(EnergyArgs),
    Fiddgr(FiddgrArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ShootArgs {
    #[arg(long)]
    pub nl: String,
    #[arg(long)]
    pub pot: String,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    #[arg(long)]
    pub u0: f64,
    #[arg(long)]
    pub du0: f64,
    /// Main CSV file name.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ElsArgs {
    #[arg(long)]
    pub nl: String,
    #[arg(long)]
    pub pot: String,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    #[arg(long)]
    pub u1: f64,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct BbupArgs {
    #[arg(long = "f", alias = "nl")]
    #[serde(rename = "nl")]
    pub f: String,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    /// Comma-separated u(0) values for the blow-up radius monotonicity check.
    #[arg(long)]
    pub u0s: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: String,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

/// Either two solution files (`--a`, `--b`) or a nonlinearity, potential
/// and two start values (`--u1`, `--u2`).
#[derive(Debug, Args, Serialize)]
pub struct GapArgs {
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long)]
    pub nl: Option<String>,
    #[arg(long)]
    pub pot: Option<String>,
    #[arg(long)]
    pub u1: Option<f64>,
    #[arg(long)]
    pub u2: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    #[arg(long)]
    pub report_radius: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct WbetaArgs {
    #[arg(long)]
    pub nl: String,
    #[arg(long)]
    pub pot: String,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    /// Limit at infinity; `inf` for w_∞.
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub r_lo: Option<f64>,
    #[arg(long)]
    pub r_hi: Option<f64>,
    #[arg(long)]
    pub per_decade: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

/// The solution comes from `--in`, or is computed from `--u1`.
#[derive(Debug, Args, Serialize)]
pub struct SolutionBoundArgs {
    #[arg(long)]
    pub nl: String,
    #[arg(long)]
    pub pot: Option<String>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<String>,
    #[arg(long)]
    pub u1: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct GammaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub solution: SolutionBoundArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnergyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub solution: SolutionBoundArgs,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub radius: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FiddgrArgs {
    #[arg(long)]
    pub nl: String,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct KoArgs {
    #[arg(long)]
    pub nl: String,
    #[arg(long)]
    pub lower: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct HrhoArgs {
    #[arg(long)]
    pub pot: String,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EllipsoidArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct DemoArgs {
    /// Base nonlinearity before shifting.
    #[arg(long)]
    pub nl: Option<String>,
    #[arg(long)]
    pub pot: Option<String>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    /// Comma-separated shifts, `3pi` style allowed.
    #[arg(long)]
    pub tk: Option<String>,
    #[arg(long)]
    pub u1: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
}

/// Non-null fields of `args` as strings, plus the experiment name.
pub fn to_map<T: Serialize>(experiment: &str, args: &T) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("experiment".to_string(), experiment.to_string());
    if let Ok(serde_json::Value::Object(obj)) = serde_json::to_value(args) {
        for (k, v) in obj {
            match v {
                serde_json::Value::Null => {}
                serde_json::Value::String(s) => {
                    map.insert(k, s);
                }
                other => {
                    map.insert(k, other.to_string());
                }
            }
        }
    }
    map
}

impl Command {
    /// The key-value form of a direct subcommand; `None` for `run`.
    pub fn to_map(&self) -> Option<BTreeMap<String, String>> {
        Some(match self {
            Command::Shoot(a) => to_map("shoot", a),
            Command::ElsFind(a) => to_map("els-find", a),
            Command::Bbup(a) => to_map("bbup", a),
            Command::Transform(a) => to_map("transform", a),
            Command::UniqGap(a) => to_map("uniq-gap", a),
            Command::Bounds(BoundsCommand::Wbeta(a)) => to_map("bounds:wbeta", a),
            Command::Bounds(BoundsCommand::Lower(a)) => to_map("bounds:lower", a),
            Command::Bounds(BoundsCommand::Gamma(a)) => to_map("bounds:gamma", a),
            Command::Bounds(BoundsCommand::Energy(a)) => to_map("bounds:energy", a),
            Command::Bounds(BoundsCommand::Fiddgr(a)) => to_map("bounds:fiddgr", a),
            Command::KoCheck(a) => to_map("ko-check", a),
            Command::HrhoCheck(a) => to_map("hrho-check", a),
            Command::EllipsoidSweep(a) => to_map("ellipsoid-sweep", a),
            Command::NoMaximalDemo(a) => to_map("no-maximal-demo", a),
            Command::Run(_) => return None,
        })
    }
}
