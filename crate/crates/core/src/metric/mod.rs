//! Object spaces: a metric plus a weighted Fréchet mean solver.
//!
//! Every implemented space has a squared distance that is quadratic in the
//! object representation, so the weighted Fréchet mean is the metric
//! projection of the weighted average onto the feasible set. No space uses a
//! generic iterative search over objects.

mod correlation;
mod euclidean;
mod wasserstein;

pub use correlation::{nearest_correlation, CorrMatrixObject, Correlation, NearestCorrelation};
pub use euclidean::{Euclidean, EuclideanObject};
pub use wasserstein::{pava, quantile_levels, QuantileObject, Wasserstein};

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on the mean of Fréchet weights.
pub const WEIGHT_MEAN_TOL: f64 = 1e-8;

/// Minimizer of a weighted Fréchet function plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetMean<O> {
    pub object: O,
    /// Solver iterations; zero for closed-form projections.
    pub iterations: usize,
    /// Last convergence residual; zero for closed-form projections.
    pub residual: f64,
}

impl<O> FrechetMean<O> {
    pub(crate) fn exact(object: O) -> Self {
        FrechetMean {
            object,
            iterations: 0,
            residual: 0.0,
        }
    }
}

/// A metric space of response objects with a weighted Fréchet mean solver.
///
/// `frechet_mean` minimizes `sum_i w_i d^2(Y_i, w)` over the space. Weights
/// must average to one and may be negative.
pub trait ObjectSpace: Send + Sync {
    type Object: Clone + Send + Sync + fmt::Debug;

    fn name(&self) -> &'static str;

    fn distance(&self, a: &Self::Object, b: &Self::Object) -> Result<f64>;

    fn squared_distance(&self, a: &Self::Object, b: &Self::Object) -> Result<f64> {
        self.distance(a, b).map(|d| d * d)
    }

    fn frechet_mean(
        &self,
        objects: &[Self::Object],
        weights: &[f64],
    ) -> Result<FrechetMean<Self::Object>>;

    /// Checks the space invariants of a single object.
    fn validate(&self, object: &Self::Object) -> Result<()>;
}

pub(crate) fn check_weights(n_objects: usize, weights: &[f64]) -> Result<()> {
    if n_objects == 0 {
        return Err(Error::EmptyInput("no objects to average"));
    }
    if weights.len() != n_objects {
        return Err(Error::Dimension {
            expected: n_objects,
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::contract("non-finite Fréchet weight"));
    }
    let mean = weights.iter().sum::<f64>() / n_objects as f64;
    if (mean - 1.0).abs() > WEIGHT_MEAN_TOL {
        return Err(Error::contract(format!(
            "Fréchet weights must average to 1, got {mean}"
        )));
    }
    Ok(())
}
