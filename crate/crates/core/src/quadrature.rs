use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product midpoint rule on `[x_lo, x_hi] x [t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidpointGrid {
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    pub x_points: usize,
    pub t_points: usize,
}

impl MidpointGrid {
    pub fn new(x_range: (f64, f64), t_range: (f64, f64), points: usize) -> Result<Self> {
        let g = MidpointGrid {
            x_range,
            t_range,
            x_points: points,
            t_points: points,
        };
        g.check()?;
        Ok(g)
    }

    pub fn unit(points: usize) -> Result<Self> {
        Self::new((0.0, 1.0), (0.0, 1.0), points)
    }

    pub fn check(&self) -> Result<()> {
        if self.x_points < 2 || self.t_points < 2 {
            return Err(Error::contract("quadrature needs at least 2 points per axis"));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.x_range) || !ok(self.t_range) {
            return Err(Error::contract("quadrature ranges must be finite with lo < hi"));
        }
        Ok(())
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        midpoints(self.x_range, self.x_points)
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        midpoints(self.t_range, self.t_points)
    }

    /// All `(x, t)` nodes, x-major.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let ts = self.t_nodes();
        self.x_nodes()
            .into_iter()
            .flat_map(|x| ts.iter().map(move |&t| (x, t)))
            .collect()
    }

    pub fn cell_area(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.x_points as f64
            * (self.t_range.1 - self.t_range.0) / self.t_points as f64
    }

    pub fn area(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) * (self.t_range.1 - self.t_range.0)
    }
}

/// Midpoints of `n` equal cells covering `[lo, hi]`.
pub fn midpoints((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|k| lo + (k as f64 + 0.5) * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights() {
        let g = MidpointGrid::new((0.0, 2.0), (1.0, 2.0), 4).unwrap();
        assert_eq!(g.x_nodes(), vec![0.25, 0.75, 1.25, 1.75]);
        assert_eq!(g.nodes().len(), 16);
        assert_eq!(g.nodes()[1], (0.25, 1.375));
        assert!((g.cell_area() * 16.0 - g.area()).abs() < 1e-15);
        assert!(MidpointGrid::unit(1).is_err());
        assert!(MidpointGrid::new((1.0, 0.0), (0.0, 1.0), 3).is_err());
    }
}
