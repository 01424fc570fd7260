//! Concurrent object regression.
//!
//! Time-varying regression for responses in a metric space (one-dimensional
//! distributions under the 2-Wasserstein metric, correlation matrices under
//! the Frobenius metric, and real scalars) on a real covariate observed
//! together with the response at sparse, irregular times.
//!
//! Two estimators are provided, both weighted Fréchet means of the responses:
//!
//! * [`regression::fit_local`]: weights that are local linear in both the
//!   covariate and time;
//! * [`regression::fit_global`]: weights that are globally linear in the
//!   covariate and local linear in time (a varying-coefficient analogue).
//!
//! Around them sit bandwidth selection by leave-one-subject-out
//! cross-validation ([`selection`]), a simulation harness for
//! Wasserstein-valued responses ([`simulation`]) and real-data diagnostics
//! ([`inference`]).

pub mod error;
pub mod inference;
pub mod kernel;
pub mod metric;
pub mod panel;
pub mod par;
pub mod quadrature;
pub mod regression;
pub mod selection;
pub mod simulation;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use metric::{
    CorrMatrixObject, Correlation, Euclidean, EuclideanObject, FrechetMean, ObjectSpace,
    QuantileObject, Wasserstein,
};
pub use panel::{PanelBuilder, SparsePanel};
pub use regression::{Estimator, EstimatorKind, FitResult, Query, WeightVector};
