use super::{fit_weighted, Estimator, FitResult, WeightVector, SINGULARITY_RATIO};
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, Kernel};
use crate::metric::ObjectSpace;
use crate::panel::SparsePanel;

/// Kernel moments of the local linear design at `(x0, t0)`.
///
/// `mu_jk` is the double-averaged `K_{h1,h2}(X - x0, T - t0) (X - x0)^j (T - t0)^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMoments {
    pub x0: f64,
    pub t0: f64,
    pub h1: f64,
    pub h2: f64,
    pub mu00: f64,
    pub mu10: f64,
    pub mu01: f64,
    pub mu20: f64,
    pub mu11: f64,
    pub mu02: f64,
    /// Determinant of the 3x3 moment matrix.
    pub sigma0_sq: f64,
    pub nu: [f64; 3],
}

impl LocalMoments {
    /// Determinant of `[[mu00, mu10, mu01], [mu10, mu20, mu11], [mu01, mu11, mu02]]`
    /// by cofactor expansion along the first row.
    pub fn determinant(&self) -> f64 {
        self.mu00 * (self.mu20 * self.mu02 - self.mu11 * self.mu11)
            + self.mu10 * (self.mu01 * self.mu11 - self.mu02 * self.mu10)
            + self.mu01 * (self.mu10 * self.mu11 - self.mu20 * self.mu01)
    }
}

pub fn local_moments<O>(
    panel: &SparsePanel<O>,
    x0: f64,
    t0: f64,
    h1: f64,
    h2: f64,
    kernel: Kernel,
) -> Result<LocalMoments> {
    check_bandwidth(h1)?;
    check_bandwidth(h2)?;
    if panel.dim_x() != 1 {
        return Err(Error::contract(format!(
            "the local estimator needs a scalar covariate, panel has {}",
            panel.dim_x()
        )));
    }
    let mut m = accumulate(panel, x0, t0, h1, h2, kernel);
    m.sigma0_sq = m.determinant();
    let scale = m.mu00 * m.mu20 * m.mu02;
    if !(m.sigma0_sq.is_finite() && m.sigma0_sq > SINGULARITY_RATIO * scale) {
        return Err(Error::SingularDesign {
            x: vec![x0],
            t: t0,
            detail: "local moment matrix is singular (too few observations near the query)",
        });
    }
    let s = m.sigma0_sq;
    m.nu = [
        (m.mu20 * m.mu02 - m.mu11 * m.mu11) / s,
        (m.mu01 * m.mu11 - m.mu02 * m.mu10) / s,
        (m.mu10 * m.mu11 - m.mu20 * m.mu01) / s,
    ];
    Ok(m)
}

/// Raw moments without the singularity check; `sigma0_sq` and `nu` are left zero.
fn accumulate<O>(panel: &SparsePanel<O>, x0: f64, t0: f64, h1: f64, h2: f64, kernel: Kernel) -> LocalMoments {
    let (mut mu00, mut mu10, mut mu01, mut mu20, mut mu11, mut mu02) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..panel.n_obs() {
        let dx = panel.covariate(j)[0] - x0;
        let dt = panel.time(j) - t0;
        let k = kernel.scaled_bivariate(dx, dt, h1, h2) * panel.obs_scale(j);
        if k == 0.0 {
            continue;
        }
        mu00 += k;
        mu10 += k * dx;
        mu01 += k * dt;
        mu20 += k * dx * dx;
        mu11 += k * dx * dt;
        mu02 += k * dt * dt;
    }
    LocalMoments {
        x0,
        t0,
        h1,
        h2,
        mu00,
        mu10,
        mu01,
        mu20,
        mu11,
        mu02,
        sigma0_sq: 0.0,
        nu: [0.0; 3],
    }
}

/// `s_il = K_{h1,h2}(X_il - x0, T_il - t0) [nu1 + nu2 (X_il - x0) + nu3 (T_il - t0)]`.
pub fn local_weights<O>(m: &LocalMoments, panel: &SparsePanel<O>, kernel: Kernel) -> WeightVector {
    let weights = (0..panel.n_obs())
        .map(|j| {
            let dx = panel.covariate(j)[0] - m.x0;
            let dt = panel.time(j) - m.t0;
            let k = kernel.scaled_bivariate(dx, dt, m.h1, m.h2);
            if k == 0.0 {
                0.0
            } else {
                k * (m.nu[0] + m.nu[1] * dx + m.nu[2] * dt)
            }
        })
        .collect();
    WeightVector {
        weights,
        x: vec![m.x0],
        t: m.t0,
        estimator: Estimator::Local { h1: m.h1, h2: m.h2 },
    }
}

/// Nonparametric fit at `(x0, t0)`.
pub fn fit_local<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    x0: f64,
    t0: f64,
    h1: f64,
    h2: f64,
    kernel: Kernel,
    space: &S,
) -> Result<FitResult<S::Object>> {
    let m = local_moments(panel, x0, t0, h1, h2, kernel)?;
    fit_weighted(panel, local_weights(&m, panel, kernel), space)
}
