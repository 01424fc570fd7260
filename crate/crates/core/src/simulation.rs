//! Synthetic distribution-valued panels and the Monte Carlo ISE harness.
//!
//! Responses are one-dimensional distributions stored as quantile functions.
//! At `(X, T) = (x, t)`, with `T ~ Unif(0, 1)` and `X ~ Beta(2, 2)`:
//!
//! * Setting I: `Q = mu + sigma Phi^{-1}`, `mu ~ N(zeta(x, t), nu1)`,
//!   `sigma ~ Gamma` with mean `eta(x, t)` and variance `nu2`.
//! * Setting II: `Q = T_k(mu + 0.1 Phi^{-1})` with `mu` as above and a
//!   random transport map `T_k(a) = a - sin(k a) / |k|`, `k` uniform on
//!   `{-2, -1, 1, 2}`.
//!
//! In both settings the conditional Fréchet mean is known in closed form and
//! serves as the truth for the integrated squared error.
//!
//! Replicate `r` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `r`,
//! so replicates are independent of evaluation order and thread count.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric::{quantile_levels, ObjectSpace, QuantileObject, Wasserstein};
use crate::panel::{PanelBuilder, SparsePanel};
use crate::par;
use crate::quadrature::MidpointGrid;
use crate::regression::Estimator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    I,
    II,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::I => "I",
            Setting::II => "II",
        })
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(Setting::I),
            "II" | "ii" | "2" => Ok(Setting::II),
            other => Err(Error::contract(format!("unknown simulation setting {other:?}"))),
        }
    }
}

/// Number of observation times per subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsPerSubject {
    Fixed(usize),
    /// Uniform on `min..=max`.
    Uniform { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub setting: Setting,
    /// Number of subjects.
    pub n: usize,
    pub obs_per_subject: ObsPerSubject,
    pub seed: u64,
    /// Quantile grid size `m`.
    pub grid_size: usize,
    /// Variance of the location parameter.
    pub nu1: f64,
    /// Variance of the Setting I scale parameter.
    pub nu2: f64,
    /// Fixed scale of Setting II.
    pub sigma: f64,
    /// Constant added to `zeta`; zero reproduces the standard settings.
    pub location_shift: f64,
}

impl SimConfig {
    pub fn new(setting: Setting, n: usize, obs: usize, seed: u64) -> Self {
        SimConfig {
            setting,
            n,
            obs_per_subject: ObsPerSubject::Fixed(obs),
            seed,
            grid_size: 100,
            nu1: 0.1,
            nu2: 0.25,
            sigma: 0.1,
            location_shift: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::contract("simulation needs n >= 1 subjects"));
        }
        match self.obs_per_subject {
            ObsPerSubject::Fixed(k) if k == 0 => {
                return Err(Error::contract("each subject needs at least one observation"))
            }
            ObsPerSubject::Uniform { min, max } if min == 0 || max < min => {
                return Err(Error::contract("observation count range must satisfy 1 <= min <= max"))
            }
            _ => {}
        }
        if self.grid_size < 2 {
            return Err(Error::contract("quantile grid needs at least 2 levels"));
        }
        if !(self.nu1 > 0.0 && self.nu2 > 0.0 && self.sigma > 0.0) {
            return Err(Error::contract("nu1, nu2 and sigma must be positive"));
        }
        if !self.location_shift.is_finite() {
            return Err(Error::contract("location shift must be finite"));
        }
        Ok(())
    }
}

/// Mean location `0.1 + 0.2 x + 0.5 t^2`.
pub fn zeta(x: f64, t: f64) -> f64 {
    0.1 + 0.2 * x + 0.5 * t * t
}

/// Mean scale `0.6 + 0.2 x + 0.2 sin(10 pi t)`; at least 0.4 on `[0, 1]^2`.
pub fn eta(x: f64, t: f64) -> f64 {
    0.6 + 0.2 * x + 0.2 * (10.0 * PI * t).sin()
}

/// Transport map `T_k(a) = a - sin(k a) / |k|`; nondecreasing for `k != 0`.
pub fn transport(k: i32, a: f64) -> f64 {
    let kf = k as f64;
    a - (kf * a).sin() / kf.abs()
}

/// Standard normal quantiles at the midpoint levels.
pub fn normal_scores(m: usize) -> Vec<f64> {
    let z = StdNormal::new(0.0, 1.0).expect("standard normal");
    quantile_levels(m).into_iter().map(|u| z.inverse_cdf(u)).collect()
}

/// True regression surface `(x, t) -> Q(m(x, t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    setting: Setting,
    sigma: f64,
    shift: f64,
    scores: Vec<f64>,
}

impl Truth {
    pub fn new(cfg: &SimConfig) -> Self {
        Truth {
            setting: cfg.setting,
            sigma: cfg.sigma,
            shift: cfg.location_shift,
            scores: normal_scores(cfg.grid_size),
        }
    }

    pub fn location(&self, x: f64, t: f64) -> f64 {
        zeta(x, t) + self.shift
    }

    pub fn scale(&self, x: f64, t: f64) -> f64 {
        match self.setting {
            Setting::I => eta(x, t),
            Setting::II => self.sigma,
        }
    }

    pub fn quantile(&self, x: f64, t: f64) -> QuantileObject {
        let (mu, s) = (self.location(x, t), self.scale(x, t));
        QuantileObject::new(self.scores.iter().map(|z| mu + s * z).collect())
            .expect("location-scale quantiles are monotone")
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub panel: SparsePanel<QuantileObject>,
    pub truth: Truth,
}

/// Draws one response at `(x, t)`.
pub fn draw_response<R: Rng + ?Sized>(cfg: &SimConfig, truth: &Truth, x: f64, t: f64, rng: &mut R) -> Result<QuantileObject> {
    let loc = Normal::new(truth.location(x, t), cfg.nu1.sqrt())
        .map_err(|e| Error::contract(format!("location distribution: {e}")))?;
    let mu = loc.sample(rng);
    let values: Vec<f64> = match cfg.setting {
        Setting::I => {
            let e = eta(x, t);
            let gamma = Gamma::new(e * e / cfg.nu2, cfg.nu2 / e)
                .map_err(|err| Error::contract(format!("scale distribution: {err}")))?;
            let sigma = gamma.sample(rng);
            truth.scores.iter().map(|z| mu + sigma * z).collect()
        }
        Setting::II => {
            const MAPS: [i32; 4] = [-2, -1, 1, 2];
            let k = MAPS[rng.random_range(0..MAPS.len())];
            truth
                .scores
                .iter()
                .map(|z| transport(k, mu + cfg.sigma * z))
                .collect()
        }
    };
    QuantileObject::new(values)
}

/// Random generator for replicate `rep`.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

pub fn generate_panel_with_rng<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<SimulatedPanel> {
    cfg.check()?;
    let truth = Truth::new(cfg);
    let beta = Beta::new(2.0, 2.0).expect("Beta(2, 2)");
    let mut builder = PanelBuilder::new(1);
    let width = cfg.n.to_string().len();
    for i in 0..cfg.n {
        let ni = match cfg.obs_per_subject {
            ObsPerSubject::Fixed(k) => k,
            ObsPerSubject::Uniform { min, max } => rng.random_range(min..=max),
        };
        let id = format!("s{i:0width$}");
        for _ in 0..ni {
            let t: f64 = rng.random();
            let x = beta.sample(rng);
            let y = draw_response(cfg, &truth, x, t, rng)?;
            builder.push(&id, t, &[x], y)?;
        }
    }
    Ok(SimulatedPanel {
        panel: builder.build()?,
        truth,
    })
}

/// Panel for replicate `rep` of `cfg`.
pub fn generate_replicate(cfg: &SimConfig, rep: u64) -> Result<SimulatedPanel> {
    generate_panel_with_rng(cfg, &mut replicate_rng(cfg.seed, rep))
}

/// Panel for replicate 0 of `cfg`.
pub fn generate_panel(cfg: &SimConfig) -> Result<SimulatedPanel> {
    generate_replicate(cfg, 0)
}

/// Integrated squared Wasserstein error `int int d_W^2(fit, truth) dt dx` by
/// the midpoint rule. A failing fit is reported with its node.
pub fn ise<F, T>(fit_fn: F, truth_fn: T, grid: &MidpointGrid) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<QuantileObject> + Sync + Send,
    T: Fn(f64, f64) -> QuantileObject + Sync + Send,
{
    grid.check()?;
    let nodes = grid.nodes();
    let values: Vec<Result<f64>> = par::map_indexed(nodes.len(), |k| {
        let (x, t) = nodes[k];
        let wrap = |e: Error| Error::Node {
            x,
            t,
            source: Box::new(e),
        };
        let fit = fit_fn(x, t).map_err(wrap)?;
        Wasserstein.squared_distance(&fit, &truth_fn(x, t)).map_err(wrap)
    });
    let mut total = 0.0;
    for v in values {
        total += v?;
    }
    Ok(total * grid.cell_area())
}

/// Five-number summary plus mean of the successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub reps: usize,
    pub failures: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (`p` in `[0, 1]`).
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Summary {
    pub fn from_values(values: &[Option<f64>]) -> Self {
        let mut ok: Vec<f64> = values.iter().flatten().copied().collect();
        ok.sort_by(f64::total_cmp);
        let mean = if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().sum::<f64>() / ok.len() as f64
        };
        Summary {
            reps: values.len(),
            failures: values.len() - ok.len(),
            mean,
            min: ok.first().copied().unwrap_or(f64::NAN),
            q1: sorted_quantile(&ok, 0.25),
            median: sorted_quantile(&ok, 0.5),
            q3: sorted_quantile(&ok, 0.75),
            max: ok.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepFailure {
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub estimator: Estimator,
    /// Per-replicate ISE; `None` where the replicate failed.
    pub ise: Vec<Option<f64>>,
    pub failures: Vec<RepFailure>,
    pub summary: Summary,
}

/// ISE of `estimator` over `reps` independent replicates of `cfg`.
pub fn run_monte_carlo(
    cfg: &SimConfig,
    reps: usize,
    estimator: Estimator,
    kernel: Kernel,
    grid: &MidpointGrid,
) -> Result<MonteCarloResult> {
    if reps == 0 {
        return Err(Error::contract("Monte Carlo needs reps >= 1"));
    }
    cfg.check()?;
    estimator.check()?;
    grid.check()?;
    let outcomes: Vec<Result<f64>> = par::map_indexed(reps, |r| {
        let sim = generate_replicate(cfg, r as u64)?;
        replicate_ise(&sim, estimator, kernel, grid)
    });
    let mut ise = Vec::with_capacity(reps);
    let mut failures = Vec::new();
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => ise.push(Some(v)),
            Err(e) => {
                ise.push(None);
                failures.push(RepFailure {
                    rep,
                    error: e.to_string(),
                });
            }
        }
    }
    let summary = Summary::from_values(&ise);
    Ok(MonteCarloResult {
        estimator,
        ise,
        failures,
        summary,
    })
}

/// ISE of one fitted replicate against its truth.
pub fn replicate_ise(
    sim: &SimulatedPanel,
    estimator: Estimator,
    kernel: Kernel,
    grid: &MidpointGrid,
) -> Result<f64> {
    ise(
        |x, t| {
            estimator
                .predict(&sim.panel, kernel, &Wasserstein, &[x], t)
                .map(|f| f.object)
        },
        |x, t| sim.truth.quantile(x, t),
        grid,
    )
}
