use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Symmetric univariate smoothing kernel. Bivariate kernels are products.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Unscaled density `K(u)`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width outside which the kernel is zero (infinite for Gaussian).
    pub fn support_radius(self) -> f64 {
        match self {
            Kernel::Gaussian => f64::INFINITY,
            Kernel::Epanechnikov => 1.0,
        }
    }

    /// `K_h(u) = K(u / h) / h`.
    pub fn eval_scaled_univariate(self, u: f64, h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        Ok(self.scaled(u, h))
    }

    /// `K_{h1,h2}(u, v) = K(u / h1) K(v / h2) / (h1 h2)`.
    pub fn eval_scaled_bivariate(self, u: f64, v: f64, h1: f64, h2: f64) -> Result<f64> {
        check_bandwidth(h1)?;
        check_bandwidth(h2)?;
        Ok(self.scaled_bivariate(u, v, h1, h2))
    }

    #[inline]
    pub(crate) fn scaled(self, u: f64, h: f64) -> f64 {
        self.eval(u / h) / h
    }

    #[inline]
    pub(crate) fn scaled_bivariate(self, u: f64, v: f64, h1: f64, h2: f64) -> f64 {
        self.eval(u / h1) * self.eval(v / h2) / (h1 * h2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Epanechnikov => "epanechnikov",
        }
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("bandwidth must be positive and finite, got {h}")))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Kernel::Gaussian),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            other => Err(Error::contract(format!("unknown kernel family {other:?}"))),
        }
    }
}
