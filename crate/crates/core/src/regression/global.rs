use nalgebra::{DMatrix, DVector};

use super::{fit_weighted, Estimator, FitResult, WeightVector, SINGULARITY_RATIO};
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, Kernel};
use crate::metric::ObjectSpace;
use crate::panel::SparsePanel;

/// Moments of the partially global design at time `t0`.
///
/// `xbar` is the kernel-weighted covariate mean at `t0`,
/// `sum K_h(T - t0) X / sum K_h(T - t0)` under the double average. Centering
/// at this mean makes the covariate part of the weights average to exactly
/// zero, so the full weights average to one for every design.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMoments {
    pub t0: f64,
    pub h: f64,
    /// `mu_0j` for `j = 0, 1, 2`.
    pub mu0: [f64; 3],
    /// `mu_02 mu_00 - mu_01^2`.
    pub sigma0_sq: f64,
    pub xbar: Vec<f64>,
    /// Kernel-weighted covariance of the centered covariates (`p x p`).
    pub sigma20: DMatrix<f64>,
    sigma20_inv: DMatrix<f64>,
}

impl GlobalMoments {
    pub fn sigma20_inverse(&self) -> &DMatrix<f64> {
        &self.sigma20_inv
    }
}

struct TimeMoments {
    mu0: [f64; 3],
    sigma0_sq: f64,
}

fn time_moments<O>(panel: &SparsePanel<O>, t0: f64, h: f64, kernel: Kernel) -> Result<TimeMoments> {
    check_bandwidth(h)?;
    let mut mu0 = [0.0; 3];
    for j in 0..panel.n_obs() {
        let dt = panel.time(j) - t0;
        let k = kernel.scaled(dt, h) * panel.obs_scale(j);
        mu0[0] += k;
        mu0[1] += k * dt;
        mu0[2] += k * dt * dt;
    }
    let sigma0_sq = mu0[2] * mu0[0] - mu0[1] * mu0[1];
    if !(sigma0_sq.is_finite() && sigma0_sq > SINGULARITY_RATIO * mu0[2] * mu0[0]) {
        return Err(Error::SingularDesign {
            x: Vec::new(),
            t: t0,
            detail: "time moments are singular (observed times do not spread around the query)",
        });
    }
    Ok(TimeMoments { mu0, sigma0_sq })
}

pub fn global_moments<O>(panel: &SparsePanel<O>, t0: f64, h: f64, kernel: Kernel) -> Result<GlobalMoments> {
    let tm = time_moments(panel, t0, h, kernel)?;
    let p = panel.dim_x();

    let mut kx = vec![0.0; p];
    for j in 0..panel.n_obs() {
        let k = kernel.scaled(panel.time(j) - t0, h) * panel.obs_scale(j);
        for (acc, x) in kx.iter_mut().zip(panel.covariate(j)) {
            *acc += k * x;
        }
    }
    let xbar: Vec<f64> = kx.iter().map(|v| v / tm.mu0[0]).collect();

    let mut sigma20 = DMatrix::<f64>::zeros(p, p);
    let mut centered = vec![0.0; p];
    for j in 0..panel.n_obs() {
        let k = kernel.scaled(panel.time(j) - t0, h) * panel.obs_scale(j);
        if k == 0.0 {
            continue;
        }
        for (c, (x, m)) in centered.iter_mut().zip(panel.covariate(j).iter().zip(&xbar)) {
            *c = x - m;
        }
        for a in 0..p {
            for b in 0..p {
                sigma20[(a, b)] += k * centered[a] * centered[b];
            }
        }
    }

    let singular = || Error::SingularDesign {
        x: Vec::new(),
        t: t0,
        detail: "covariate second-moment matrix is singular near the query time",
    };
    let diag_prod: f64 = (0..p).map(|a| sigma20[(a, a)]).product();
    let det = sigma20.determinant();
    if !(det.is_finite() && det > SINGULARITY_RATIO * diag_prod) {
        return Err(singular());
    }
    let sigma20_inv = sigma20.clone().cholesky().ok_or_else(singular)?.inverse();

    Ok(GlobalMoments {
        t0,
        h,
        mu0: tm.mu0,
        sigma0_sq: tm.sigma0_sq,
        xbar,
        sigma20,
        sigma20_inv,
    })
}

/// `s_il = K_h(T_il - t0) [(X_il - xbar)^T Sigma20^{-1} (x - xbar)
///        + (mu_02 - (T_il - t0) mu_01) / sigma0^2]`.
pub fn global_weights<O>(
    m: &GlobalMoments,
    panel: &SparsePanel<O>,
    x: &[f64],
    kernel: Kernel,
) -> Result<WeightVector> {
    if x.len() != panel.dim_x() {
        return Err(Error::Dimension {
            expected: panel.dim_x(),
            found: x.len(),
        });
    }
    let offset = DVector::from_iterator(x.len(), x.iter().zip(&m.xbar).map(|(a, b)| a - b));
    let direction = &m.sigma20_inv * offset;
    let weights = (0..panel.n_obs())
        .map(|j| {
            let dt = panel.time(j) - m.t0;
            let k = kernel.scaled(dt, m.h);
            if k == 0.0 {
                return 0.0;
            }
            let s1: f64 = panel
                .covariate(j)
                .iter()
                .zip(&m.xbar)
                .zip(direction.iter())
                .map(|((xj, xb), d)| (xj - xb) * d)
                .sum();
            let s2 = (m.mu0[2] - dt * m.mu0[1]) / m.sigma0_sq;
            k * (s1 + s2)
        })
        .collect();
    Ok(WeightVector {
        weights,
        x: x.to_vec(),
        t: m.t0,
        estimator: Estimator::Global { h: m.h },
    })
}

/// Time-local weights `K_h(T_il - t0) (mu_02 - (T_il - t0) mu_01) / sigma0^2`:
/// the partially global weights with the covariate part removed.
pub fn time_only_weights<O>(
    panel: &SparsePanel<O>,
    x: &[f64],
    t0: f64,
    h: f64,
    kernel: Kernel,
) -> Result<WeightVector> {
    let tm = time_moments(panel, t0, h, kernel)?;
    let weights = (0..panel.n_obs())
        .map(|j| {
            let dt = panel.time(j) - t0;
            kernel.scaled(dt, h) * (tm.mu0[2] - dt * tm.mu0[1]) / tm.sigma0_sq
        })
        .collect();
    Ok(WeightVector {
        weights,
        x: x.to_vec(),
        t: t0,
        estimator: Estimator::TimeOnly { h },
    })
}

/// Partially global fit at `(x, t0)`.
pub fn fit_global<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    x: &[f64],
    t0: f64,
    h: f64,
    kernel: Kernel,
    space: &S,
) -> Result<FitResult<S::Object>> {
    let m = global_moments(panel, t0, h, kernel)?;
    fit_weighted(panel, global_weights(&m, panel, x, kernel)?, space)
}
