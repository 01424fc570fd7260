use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_weights, FrechetMean, ObjectSpace};
use crate::error::{check_dim, Error, Result};

/// Smallest eigenvalue accepted as positive semi-definite.
pub const PSD_TOL: f64 = 1e-8;

/// Tolerance on symmetry and the unit diagonal when validating input matrices.
const ENTRY_TOL: f64 = 1e-8;

/// A symmetric positive semi-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrixObject {
    entries: DMatrix<f64>,
}

impl CorrMatrixObject {
    /// Validates `entries` and stores a canonical copy (exactly symmetric,
    /// exactly unit diagonal, entries clamped to [-1, 1]).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let v = entries.nrows();
        if v == 0 || entries.ncols() != v {
            return Err(Error::InvalidObject(format!(
                "correlation matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for q in 0..v {
            if (entries[(q, q)] - 1.0).abs() > ENTRY_TOL {
                return Err(Error::InvalidObject(format!(
                    "diagonal entry ({q},{q}) = {} is not 1",
                    entries[(q, q)]
                )));
            }
            for r in 0..v {
                let e = entries[(q, r)];
                if !e.is_finite() || e.abs() > 1.0 + ENTRY_TOL {
                    return Err(Error::InvalidObject(format!(
                        "entry ({q},{r}) = {e} outside [-1, 1]"
                    )));
                }
                if (e - entries[(r, q)]).abs() > ENTRY_TOL {
                    return Err(Error::InvalidObject(format!(
                        "matrix is not symmetric at ({q},{r})"
                    )));
                }
            }
        }
        let obj = Self::canonical(entries);
        let min_eig = obj.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidObject(format!(
                "matrix is not positive semi-definite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(obj)
    }

    pub fn identity(dim: usize) -> Self {
        CorrMatrixObject {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    fn canonical(mut m: DMatrix<f64>) -> Self {
        let v = m.nrows();
        for q in 0..v {
            m[(q, q)] = 1.0;
            for r in (q + 1)..v {
                let e = (0.5 * (m[(q, r)] + m[(r, q)])).clamp(-1.0, 1.0);
                m[(q, r)] = e;
                m[(r, q)] = e;
            }
        }
        CorrMatrixObject { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of a nearest-correlation-matrix projection.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCorrelation {
    pub matrix: CorrMatrixObject,
    pub iterations: usize,
    pub residual: f64,
}

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    symmetrize(&mut out);
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for q in 0..n {
        for r in (q + 1)..n {
            let e = 0.5 * (m[(q, r)] + m[(r, q)]);
            m[(q, r)] = e;
            m[(r, q)] = e;
        }
    }
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .all(|&l| l >= 0.0)
}

/// Frobenius projection of the symmetric matrix `a` onto the correlation
/// matrices, by alternating projections between the PSD cone and the
/// unit-diagonal set with Dykstra's correction on the cone step.
///
/// Stops when both the change of the unit-diagonal iterate and its gap to
/// the PSD iterate fall below `tol` (Frobenius norm). The returned matrix is
/// the final PSD iterate rescaled to unit diagonal, so it is exactly feasible.
pub fn nearest_correlation(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<NearestCorrelation> {
    let v = a.nrows();
    if v == 0 || a.ncols() != v {
        return Err(Error::contract("nearest correlation needs a square nonempty matrix"));
    }
    if a.iter().any(|e| !e.is_finite()) {
        return Err(Error::contract("nearest correlation input has non-finite entries"));
    }
    let mut y = a.clone();
    symmetrize(&mut y);
    for q in 0..v {
        y[(q, q)] = 1.0;
    }
    if is_psd(&y) {
        return Ok(NearestCorrelation {
            matrix: CorrMatrixObject::canonical(y),
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut correction = DMatrix::zeros(v, v);
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let r = &y - &correction;
        let x = project_psd(&r);
        correction = &x - &r;
        let mut y_next = x.clone();
        for q in 0..v {
            y_next[(q, q)] = 1.0;
        }
        let change = (&y_next - &y).norm();
        let gap = (&y_next - &x).norm();
        residual = change.max(gap);
        y = y_next;
        if residual < tol {
            return Ok(NearestCorrelation {
                matrix: rescale_to_unit_diagonal(x),
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual,
    })
}

fn rescale_to_unit_diagonal(mut x: DMatrix<f64>) -> CorrMatrixObject {
    let v = x.nrows();
    let scale: Vec<f64> = (0..v)
        .map(|q| {
            let d = x[(q, q)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for q in 0..v {
        for r in 0..v {
            x[(q, r)] *= scale[q] * scale[r];
        }
    }
    CorrMatrixObject::canonical(x)
}

/// Correlation matrices under the Frobenius metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Correlation {
    fn default() -> Self {
        Correlation {
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

impl ObjectSpace for Correlation {
    type Object = CorrMatrixObject;

    fn name(&self) -> &'static str {
        "correlation"
    }

    fn distance(&self, a: &CorrMatrixObject, b: &CorrMatrixObject) -> Result<f64> {
        self.squared_distance(a, b).map(f64::sqrt)
    }

    fn squared_distance(&self, a: &CorrMatrixObject, b: &CorrMatrixObject) -> Result<f64> {
        check_dim(a.dim(), b.dim())?;
        Ok(a.entries
            .iter()
            .zip(b.entries.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum())
    }

    fn frechet_mean(
        &self,
        objects: &[CorrMatrixObject],
        weights: &[f64],
    ) -> Result<FrechetMean<CorrMatrixObject>> {
        check_weights(objects.len(), weights)?;
        let v = objects[0].dim();
        let mut avg = DMatrix::zeros(v, v);
        for (c, &w) in objects.iter().zip(weights) {
            check_dim(v, c.dim())?;
            if w != 0.0 {
                avg += &c.entries * w;
            }
        }
        avg /= objects.len() as f64;
        let ncm = nearest_correlation(&avg, self.tol, self.max_iter)?;
        Ok(FrechetMean {
            object: ncm.matrix,
            iterations: ncm.iterations,
            residual: ncm.residual,
        })
    }

    fn validate(&self, object: &CorrMatrixObject) -> Result<()> {
        let min_eig = object.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidObject(format!(
                "matrix is not positive semi-definite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }
}
