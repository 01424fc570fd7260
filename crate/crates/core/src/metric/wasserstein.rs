use serde::{Deserialize, Serialize};

use super::{check_weights, FrechetMean, ObjectSpace};
use crate::error::{check_dim, Error, Result};

/// Midpoint quantile levels `(k - 1/2) / m`, `k = 1..=m`.
pub fn quantile_levels(m: usize) -> Vec<f64> {
    (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect()
}

/// A one-dimensional distribution stored as its quantile function on the
/// midpoint grid of [`quantile_levels`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileObject {
    values: Vec<f64>,
    support: Option<(f64, f64)>,
}

impl QuantileObject {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let q = QuantileObject {
            values,
            support: None,
        };
        q.check()?;
        Ok(q)
    }

    pub fn with_support(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidObject(format!(
                "support bounds [{lo}, {hi}] are not ordered"
            )));
        }
        let q = QuantileObject {
            values,
            support: Some((lo, hi)),
        };
        q.check()?;
        Ok(q)
    }

    /// Tabulates `quantile` at the `m` midpoint levels.
    pub fn from_quantile_fn(m: usize, quantile: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(quantile_levels(m).into_iter().map(quantile).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Location shift by `c`. Fails if the result leaves the support.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v + c).collect();
        let q = QuantileObject {
            values,
            support: self.support,
        };
        q.check()?;
        Ok(q)
    }

    fn check(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::InvalidObject(format!(
                "quantile grid needs at least 2 levels, got {}",
                self.values.len()
            )));
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidObject(format!(
                "non-finite quantile value at level {k}"
            )));
        }
        if let Some(k) = self.values.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidObject(format!(
                "quantile function decreases between levels {k} and {}",
                k + 1
            )));
        }
        if let Some((lo, hi)) = self.support {
            let first = self.values[0];
            let last = self.values[self.values.len() - 1];
            if first < lo || last > hi {
                return Err(Error::InvalidObject(format!(
                    "quantile values [{first}, {last}] leave support [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// L2 projection onto nondecreasing vectors (pool adjacent violators,
/// equal weights). Monotone input is returned bit-for-bit.
pub fn pava(y: &[f64]) -> Vec<f64> {
    // (block sum, block length)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        let mut sum = v;
        let mut len = 1usize;
        while let Some(&(psum, plen)) = blocks.last() {
            if psum / plen as f64 > sum / len as f64 {
                sum += psum;
                len += plen;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, len));
    }
    let mut out = Vec::with_capacity(y.len());
    for (sum, len) in blocks {
        let mean = sum / len as f64;
        out.extend(std::iter::repeat_n(mean, len));
    }
    out
}

/// Distributions on the real line under the 2-Wasserstein metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Wasserstein;

impl ObjectSpace for Wasserstein {
    type Object = QuantileObject;

    fn name(&self) -> &'static str {
        "wasserstein"
    }

    fn distance(&self, a: &QuantileObject, b: &QuantileObject) -> Result<f64> {
        self.squared_distance(a, b).map(f64::sqrt)
    }

    fn squared_distance(&self, a: &QuantileObject, b: &QuantileObject) -> Result<f64> {
        check_dim(a.grid_size(), b.grid_size())?;
        let ss: f64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        Ok(ss / a.grid_size() as f64)
    }

    fn frechet_mean(
        &self,
        objects: &[QuantileObject],
        weights: &[f64],
    ) -> Result<FrechetMean<QuantileObject>> {
        check_weights(objects.len(), weights)?;
        let m = objects[0].grid_size();
        let support = objects[0].support;
        let mut avg = vec![0.0; m];
        for (q, &w) in objects.iter().zip(weights) {
            check_dim(m, q.grid_size())?;
            if q.support != support {
                return Err(Error::contract("quantile objects have different supports"));
            }
            if w == 0.0 {
                continue;
            }
            for (a, v) in avg.iter_mut().zip(&q.values) {
                *a += w * v;
            }
        }
        let n = objects.len() as f64;
        avg.iter_mut().for_each(|a| *a /= n);

        let mut values = pava(&avg);
        if let Some((lo, hi)) = support {
            values.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
        Ok(FrechetMean::exact(QuantileObject { values, support }))
    }

    fn validate(&self, object: &QuantileObject) -> Result<()> {
        object.check()
    }
}
