use serde::{Deserialize, Serialize};

use super::{check_weights, FrechetMean, ObjectSpace};
use crate::error::{Error, Result};

/// A real scalar response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanObject(pub f64);

/// The real line with `d(a, b) = |a - b|`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Euclidean;

impl ObjectSpace for Euclidean {
    type Object = EuclideanObject;

    fn name(&self) -> &'static str {
        "euclidean"
    }

    fn distance(&self, a: &EuclideanObject, b: &EuclideanObject) -> Result<f64> {
        Ok((a.0 - b.0).abs())
    }

    fn squared_distance(&self, a: &EuclideanObject, b: &EuclideanObject) -> Result<f64> {
        let d = a.0 - b.0;
        Ok(d * d)
    }

    fn frechet_mean(
        &self,
        objects: &[EuclideanObject],
        weights: &[f64],
    ) -> Result<FrechetMean<EuclideanObject>> {
        check_weights(objects.len(), weights)?;
        let sum: f64 = objects.iter().zip(weights).map(|(y, w)| w * y.0).sum();
        Ok(FrechetMean::exact(EuclideanObject(sum / objects.len() as f64)))
    }

    fn validate(&self, object: &EuclideanObject) -> Result<()> {
        if object.0.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidObject(format!("non-finite scalar {}", object.0)))
        }
    }
}
