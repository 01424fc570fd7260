use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corereg::simulation::Setting;
use corereg::{Estimator, EstimatorKind, Kernel};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "corereg",
    version,
    about = "Concurrent object regression for distributions, correlation matrices and scalars"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Fit the local estimator at query points.
    FitLocal(FitLocalArgs),
    /// Fit the partially global estimator at query points.
    FitGlobal(FitGlobalArgs),
    /// Select bandwidths by leave-one-subject-out cross-validation.
    Cv(CvArgs),
    /// Monte Carlo integrated squared error on simulated distribution data.
    Simulate(SimulateArgs),
    /// Write one simulated panel as CSV.
    Generate(GenerateArgs),
    /// Goodness-of-fit curve over time.
    Gof(GofArgs),
    /// Out-of-sample root mean squared prediction error on a subject split.
    Rmpe(RmpeArgs),
    /// Two-group permutation test on fitted surfaces.
    Permtest(PermtestArgs),
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::FitLocal(a) => &a.output,
            Command::FitGlobal(a) => &a.output,
            Command::Cv(a) => &a.output,
            Command::Simulate(a) => &a.output,
            Command::Generate(a) => &a.output,
            Command::Gof(a) => &a.output,
            Command::Rmpe(a) => &a.output,
            Command::Permtest(a) => &a.output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Euclidean,
    Wasserstein,
    Correlation,
}

/// `lo:hi:n`, `n` equally spaced points including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|k| self.lo + k as f64 * step).collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected lo:hi:n, found {s:?}");
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(bad());
        }
        Ok(GridSpec { lo, hi, n })
    }
}

/// `lo:hi` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("expected lo:hi, found {s:?}");
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = a.trim().parse().map_err(|_| bad())?;
        let hi: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad());
        }
        Ok(RangeSpec { lo, hi })
    }
}

impl RangeSpec {
    pub fn pair(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Directory for output files.
    #[arg(long, default_value = "corereg-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Seed for every random draw of the command.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Long-format panel CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Metric space of the responses.
    #[arg(long, value_enum)]
    pub space: SpaceKind,
    #[arg(long, default_value = "gaussian")]
    pub kernel: Kernel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QueryArgs {
    /// CSV of query points with columns x (or x1..xp) and t.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Covariate grid for a scalar covariate.
    #[arg(long, default_value = "0:1:11")]
    pub x_grid: GridSpec,
    #[arg(long, default_value = "0:1:11")]
    pub t_grid: GridSpec,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimatorArgs {
    /// local, global or time_only.
    #[arg(long, default_value = "global")]
    pub estimator: EstimatorKind,
    /// Time bandwidth of the global and time-only estimators.
    #[arg(long)]
    pub h: Option<f64>,
    /// Covariate bandwidth of the local estimator.
    #[arg(long)]
    pub h1: Option<f64>,
    /// Time bandwidth of the local estimator.
    #[arg(long)]
    pub h2: Option<f64>,
}

impl EstimatorArgs {
    pub fn estimator(&self) -> Result<Estimator> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--{name} is required for the {} estimator", self.estimator)))
        };
        let e = match self.estimator {
            EstimatorKind::Local => Estimator::Local {
                h1: need(self.h1, "h1")?,
                h2: need(self.h2, "h2")?,
            },
            EstimatorKind::Global => Estimator::Global { h: need(self.h, "h")? },
            EstimatorKind::TimeOnly => Estimator::TimeOnly { h: need(self.h, "h")? },
        };
        e.check()?;
        Ok(e)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitLocalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub h1: f64,
    #[arg(long)]
    pub h2: f64,
    #[command(flatten)]
    pub queries: QueryArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitGlobalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub queries: QueryArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "global")]
    pub estimator: EstimatorKind,
    /// Candidate bandwidths (comma separated); both axes for the local estimator.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    /// Separate time-bandwidth candidates for the local estimator.
    #[arg(long, value_delimiter = ',')]
    pub grid_h2: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value = "I")]
    pub setting: Setting,
    /// Number of subjects.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Observations per subject (the minimum when --ni-max is set).
    #[arg(long, default_value_t = 10)]
    pub ni: usize,
    /// Draw observations per subject uniformly from ni..=ni-max.
    #[arg(long)]
    pub ni_max: Option<usize>,
    /// Quantile grid size.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub nu1: f64,
    #[arg(long, default_value_t = 0.25)]
    pub nu2: f64,
    /// Constant added to the mean location surface.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value = "gaussian")]
    pub kernel: Kernel,
    /// Midpoint-rule nodes per axis for the ISE.
    #[arg(long, default_value_t = 25)]
    pub quad_points: usize,
    #[arg(long, default_value = "0:1")]
    pub x_range: RangeSpec,
    #[arg(long, default_value = "0:1")]
    pub t_range: RangeSpec,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GofArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Number of time bins.
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value = "0:1")]
    pub t_range: RangeSpec,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RmpeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Seed of the train/test subject split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Fraction of subjects used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PermtestArgs {
    #[arg(long)]
    pub input_a: PathBuf,
    #[arg(long)]
    pub input_b: PathBuf,
    #[arg(long, value_enum)]
    pub space: SpaceKind,
    #[arg(long, default_value = "gaussian")]
    pub kernel: Kernel,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Number of permutations.
    #[arg(long = "B", visible_alias = "b", default_value_t = 199)]
    pub permutations: usize,
    #[arg(long, default_value_t = 10)]
    pub quad_points: usize,
    #[arg(long, default_value = "0:1")]
    pub x_range: RangeSpec,
    #[arg(long, default_value = "0:1")]
    pub t_range: RangeSpec,
    #[command(flatten)]
    pub output: OutputArgs,
}
