//! The two concurrent object regression estimators.
//!
//! Both estimators build per-observation weights `s_il` at a query point and
//! return the weighted Fréchet mean of the responses. Weights are averaged
//! with the double average `(1/n) sum_i (1/n_i) sum_l`, under which they sum
//! to one.

mod global;
mod local;

pub use global::{fit_global, global_moments, global_weights, time_only_weights, GlobalMoments};
pub use local::{fit_local, local_moments, local_weights, LocalMoments};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, Kernel};
use crate::metric::{FrechetMean, ObjectSpace};
use crate::panel::SparsePanel;
use crate::par;

/// Ratio below which a moment determinant is treated as singular. The
/// determinants are normalized by the product of the diagonal moments, so
/// the ratio lies in [0, 1].
pub const SINGULARITY_RATIO: f64 = 1e-12;

/// Largest tolerated drift of the panel-averaged weights away from one
/// before the design is reported as numerically singular.
const WEIGHT_DRIFT_TOL: f64 = 1e-6;

/// Estimator choice together with its bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum Estimator {
    /// Local linear in both covariate (`h1`) and time (`h2`); scalar covariate.
    Local { h1: f64, h2: f64 },
    /// Globally linear in the covariate, local linear in time.
    Global { h: f64 },
    /// Local linear in time only; the covariate is ignored.
    TimeOnly { h: f64 },
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Local { .. } => EstimatorKind::Local,
            Estimator::Global { .. } => EstimatorKind::Global,
            Estimator::TimeOnly { .. } => EstimatorKind::TimeOnly,
        }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            Estimator::Local { h1, h2 } => {
                check_bandwidth(h1)?;
                check_bandwidth(h2)
            }
            Estimator::Global { h } | Estimator::TimeOnly { h } => check_bandwidth(h),
        }
    }

    /// Weights `s_il` for the query `(x, t)`.
    pub fn weights<O>(&self, panel: &SparsePanel<O>, kernel: Kernel, x: &[f64], t: f64) -> Result<WeightVector> {
        match *self {
            Estimator::Local { h1, h2 } => {
                if x.len() != 1 {
                    return Err(Error::Dimension {
                        expected: 1,
                        found: x.len(),
                    });
                }
                let m = local_moments(panel, x[0], t, h1, h2, kernel)?;
                Ok(local_weights(&m, panel, kernel))
            }
            Estimator::Global { h } => {
                let m = global_moments(panel, t, h, kernel)?;
                global_weights(&m, panel, x, kernel)
            }
            Estimator::TimeOnly { h } => time_only_weights(panel, x, t, h, kernel),
        }
    }

    /// Fitted object at `(x, t)` without the objective value.
    pub fn predict<S: ObjectSpace>(
        &self,
        panel: &SparsePanel<S::Object>,
        kernel: Kernel,
        space: &S,
        x: &[f64],
        t: f64,
    ) -> Result<FrechetMean<S::Object>> {
        let w = self.weights(panel, kernel, x, t)?;
        frechet_step(panel, &w, space)
    }

    /// Full fit at `(x, t)` including weights and objective value.
    pub fn fit<S: ObjectSpace>(
        &self,
        panel: &SparsePanel<S::Object>,
        kernel: Kernel,
        space: &S,
        x: &[f64],
        t: f64,
    ) -> Result<FitResult<S::Object>> {
        let w = self.weights(panel, kernel, x, t)?;
        fit_weighted(panel, w, space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Local,
    Global,
    TimeOnly,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Local => "local",
            EstimatorKind::Global => "global",
            EstimatorKind::TimeOnly => "time_only",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "local" | "nonparametric" => Ok(EstimatorKind::Local),
            "global" | "partially_global" | "partially-global" => Ok(EstimatorKind::Global),
            "time_only" | "time-only" | "time" => Ok(EstimatorKind::TimeOnly),
            other => Err(Error::contract(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Per-observation weights at one query point, aligned with panel order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub x: Vec<f64>,
    pub t: f64,
    pub estimator: Estimator,
}

impl WeightVector {
    /// `(1/n) sum_i (1/n_i) sum_l s_il`.
    pub fn panel_average<O>(&self, panel: &SparsePanel<O>) -> f64 {
        self.weights
            .iter()
            .zip(panel.obs_scales())
            .map(|(w, s)| w * s)
            .sum()
    }
}

/// Fitted object at a query point with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<O> {
    pub object: O,
    pub x: Vec<f64>,
    pub t: f64,
    pub weights: WeightVector,
    /// Weighted Fréchet function `(1/n) sum_i (1/n_i) sum_l s_il d^2(Y_il, w)`
    /// at the fitted object.
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// A query point `(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub x: Vec<f64>,
    pub t: f64,
}

impl Query {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Query { x, t }
    }

    pub fn scalar(x: f64, t: f64) -> Self {
        Query { x: vec![x], t }
    }
}

fn frechet_step<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    w: &WeightVector,
    space: &S,
) -> Result<FrechetMean<S::Object>> {
    let avg = w.panel_average(panel);
    if !avg.is_finite() || (avg - 1.0).abs() > WEIGHT_DRIFT_TOL {
        return Err(Error::SingularDesign {
            x: w.x.clone(),
            t: w.t,
            detail: "weights lost their normalization (ill-conditioned design)",
        });
    }
    // Rescale from the double average to a plain mean over the N objects.
    let factor = panel.n_obs() as f64 / avg;
    let fw: Vec<f64> = w
        .weights
        .iter()
        .zip(panel.obs_scales())
        .map(|(w, s)| w * s * factor)
        .collect();
    space.frechet_mean(panel.responses(), &fw)
}

/// Weighted Fréchet mean of the panel responses under precomputed weights.
pub fn fit_weighted<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    weights: WeightVector,
    space: &S,
) -> Result<FitResult<S::Object>> {
    let mean = frechet_step(panel, &weights, space)?;
    let mut objective = 0.0;
    for (j, (&w, &s)) in weights.weights.iter().zip(panel.obs_scales()).enumerate() {
        if w != 0.0 {
            objective += w * s * space.squared_distance(panel.response(j), &mean.object)?;
        }
    }
    Ok(FitResult {
        object: mean.object,
        x: weights.x.clone(),
        t: weights.t,
        weights,
        objective,
        iterations: mean.iterations,
        residual: mean.residual,
    })
}

/// Fits every query independently (in parallel with the `parallel` feature).
pub fn fit_batch<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    estimator: Estimator,
    kernel: Kernel,
    space: &S,
    queries: &[Query],
) -> Vec<Result<FitResult<S::Object>>> {
    par::map_indexed(queries.len(), |k| {
        let q = &queries[k];
        estimator.fit(panel, kernel, space, &q.x, q.t)
    })
}

/// Predictions on the tensor grid `xs x ts`, x-major. Time moments of the
/// global and time-only estimators are computed once per time node.
pub fn predict_grid<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    estimator: Estimator,
    kernel: Kernel,
    space: &S,
    xs: &[Vec<f64>],
    ts: &[f64],
) -> Vec<Result<S::Object>> {
    let mut out: Vec<Option<Result<S::Object>>> = (0..xs.len() * ts.len()).map(|_| None).collect();
    for (b, &t) in ts.iter().enumerate() {
        let global = match estimator {
            Estimator::Global { h } => Some(global_moments(panel, t, h, kernel)),
            _ => None,
        };
        for (a, x) in xs.iter().enumerate() {
            let w = match &global {
                Some(Ok(m)) => global_weights(m, panel, x, kernel),
                Some(Err(e)) => Err(e.clone()),
                None => estimator.weights(panel, kernel, x, t),
            };
            let fit = w.and_then(|w| frechet_step(panel, &w, space)).map(|m| m.object);
            out[a * ts.len() + b] = Some(fit);
        }
    }
    out.into_iter().map(|r| r.expect("every node visited")).collect()
}
