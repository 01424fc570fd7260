//! Diagnostics for fitted models: Pearson correlation objects from signal
//! matrices, goodness-of-fit curves over time, out-of-sample prediction error
//! and a two-group permutation test on fitted surfaces.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric::{CorrMatrixObject, ObjectSpace};
use crate::panel::SparsePanel;
use crate::par;
use crate::quadrature::{midpoints, MidpointGrid};
use crate::regression::{predict_grid, Estimator};
use crate::simulation::replicate_rng;

/// A `K x V` matrix of `K` time samples on `V` signals.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    data: DMatrix<f64>,
}

impl SignalMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::contract("signal matrix needs at least 2 time samples"));
        }
        if data.ncols() == 0 {
            return Err(Error::EmptyInput("signal matrix has no columns"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("signal matrix has non-finite entries"));
        }
        Ok(SignalMatrix { data })
    }

    /// Builds from row-major data with `samples` rows.
    pub fn from_row_slice(samples: usize, signals: usize, data: &[f64]) -> Result<Self> {
        if data.len() != samples * signals {
            return Err(Error::Dimension {
                expected: samples * signals,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(samples, signals, data))
    }

    pub fn samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn signals(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Pearson correlation matrix of the columns of `s`.
///
/// Columns are centered and scaled to unit norm, so the result is a Gram
/// matrix with exactly unit diagonal.
pub fn pearson_object(s: &SignalMatrix) -> Result<CorrMatrixObject> {
    let (k, v) = (s.samples(), s.signals());
    let mut z = s.data.clone();
    for c in 0..v {
        let mut col = z.column_mut(c);
        let mean = col.sum() / k as f64;
        let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        // Below this the centered column is rounding noise.
        if norm == 0.0 || norm <= 8.0 * f64::EPSILON * scale * (k as f64).sqrt() {
            return Err(Error::DegenerateSignal { column: c });
        }
        col /= norm;
    }
    let mut c = z.transpose() * &z;
    for q in 0..v {
        c[(q, q)] = 1.0;
        for r in (q + 1)..v {
            let e = c[(q, r)].clamp(-1.0, 1.0);
            c[(q, r)] = e;
            c[(r, q)] = e;
        }
    }
    CorrMatrixObject::new(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofPoint {
    /// Bin midpoint.
    pub t: f64,
    /// Mean squared distance of the observations in the bin; `None` if empty.
    pub mse: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofCurve {
    pub points: Vec<GofPoint>,
    pub bin_width: f64,
    /// Midpoint-rule integral of the curve over the non-empty bins.
    pub integrated_deviance: f64,
    pub empty_bins: usize,
    /// Observations whose fit failed with a singular design.
    pub skipped_fits: usize,
    /// Observations with a time outside the grid range.
    pub outside_range: usize,
}

/// Goodness of fit over time.
///
/// Each observation is paired with the fit at its own `(X_il, T_il)`; the
/// squared distances are averaged within `bins` equal bins on `t_range`.
pub fn gof_curve<S, F>(
    panel: &SparsePanel<S::Object>,
    fit: F,
    space: &S,
    t_range: (f64, f64),
    bins: usize,
) -> Result<GofCurve>
where
    S: ObjectSpace,
    F: Fn(&[f64], f64) -> Result<S::Object> + Sync + Send,
{
    if bins == 0 {
        return Err(Error::contract("goodness-of-fit grid needs at least one bin"));
    }
    let (lo, hi) = t_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::contract("time range must be finite with lo < hi"));
    }
    let width = (hi - lo) / bins as f64;
    let dists: Vec<Result<Option<f64>>> = par::map_indexed(panel.n_obs(), |j| {
        match fit(panel.covariate(j), panel.time(j)) {
            Ok(o) => space.squared_distance(panel.response(j), &o).map(Some),
            Err(Error::SingularDesign { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    let (mut skipped_fits, mut outside_range) = (0, 0);
    for (j, d) in dists.into_iter().enumerate() {
        let t = panel.time(j);
        if !(lo..=hi).contains(&t) {
            outside_range += 1;
            continue;
        }
        let Some(d) = d? else {
            skipped_fits += 1;
            continue;
        };
        let b = (((t - lo) / width) as usize).min(bins - 1);
        sums[b] += d;
        counts[b] += 1;
    }
    let points: Vec<GofPoint> = midpoints(t_range, bins)
        .into_iter()
        .enumerate()
        .map(|(b, t)| GofPoint {
            t,
            mse: (counts[b] > 0).then(|| sums[b] / counts[b] as f64),
            count: counts[b],
        })
        .collect();
    let integrated_deviance = points.iter().filter_map(|p| p.mse).sum::<f64>() * width;
    let empty_bins = counts.iter().filter(|&&c| c == 0).count();
    Ok(GofCurve {
        points,
        bin_width: width,
        integrated_deviance,
        empty_bins,
        skipped_fits,
        outside_range,
    })
}

/// In-sample goodness of fit of `estimator` on `panel`.
pub fn gof_curve_estimator<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    estimator: Estimator,
    kernel: Kernel,
    space: &S,
    t_range: (f64, f64),
    bins: usize,
) -> Result<GofCurve> {
    estimator.check()?;
    gof_curve(
        panel,
        |x, t| estimator.predict(panel, kernel, space, x, t).map(|m| m.object),
        space,
        t_range,
        bins,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmpeResult {
    pub rmpe: f64,
    /// Test subjects with at least one usable prediction.
    pub subjects_used: usize,
    pub evaluated_points: usize,
    /// Test points whose prediction failed with a singular design.
    pub failed_points: usize,
}

/// Root mean squared prediction error of a model fitted on `train` at the
/// observation points of `test`:
/// `[(1/n_test) sum_i (1/n_i) sum_l d^2(Y_il, fit(X_il, T_il))]^{1/2}`.
/// Failed points are dropped from their subject's average.
pub fn rmpe<S: ObjectSpace>(
    train: &SparsePanel<S::Object>,
    test: &SparsePanel<S::Object>,
    estimator: Estimator,
    kernel: Kernel,
    space: &S,
) -> Result<RmpeResult> {
    estimator.check()?;
    if let Some(id) = test.subject_ids().iter().find(|id| train.subject_ids().contains(id)) {
        return Err(Error::contract(format!("subject {id:?} is in both train and test")));
    }
    let per_subject: Vec<Result<(Option<f64>, usize, usize)>> = par::map_indexed(test.n_subjects(), |i| {
        let (mut sum, mut used, mut failed) = (0.0, 0, 0);
        for j in test.subject_range(i) {
            match estimator.predict(train, kernel, space, test.covariate(j), test.time(j)) {
                Ok(m) => {
                    sum += space.squared_distance(test.response(j), &m.object)?;
                    used += 1;
                }
                Err(Error::SingularDesign { .. }) => failed += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(((used > 0).then(|| sum / used as f64), used, failed))
    });
    let (mut total, mut subjects_used, mut evaluated_points, mut failed_points) = (0.0, 0, 0, 0);
    for r in per_subject {
        let (mean, used, failed) = r?;
        if let Some(m) = mean {
            total += m;
            subjects_used += 1;
        }
        evaluated_points += used;
        failed_points += failed;
    }
    if subjects_used == 0 {
        return Err(Error::SelectionFailure(
            "no test point could be predicted (singular design everywhere)".into(),
        ));
    }
    Ok(RmpeResult {
        rmpe: (total / subjects_used as f64).sqrt(),
        subjects_used,
        evaluated_points,
        failed_points,
    })
}

/// Random subject-level split; `train_frac` of the subjects (rounded, at
/// least one on each side) go to the training panel.
pub fn split_subjects<O: Clone>(
    panel: &SparsePanel<O>,
    train_frac: f64,
    seed: u64,
) -> Result<(SparsePanel<O>, SparsePanel<O>)> {
    let n = panel.n_subjects();
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::contract("train fraction must lie in (0, 1)"));
    }
    if n < 2 {
        return Err(Error::contract("splitting needs at least 2 subjects"));
    }
    let n_train = ((train_frac * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut replicate_rng(seed, 0));
    let (train, test) = idx.split_at(n_train);
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((panel.select_subjects(&train)?, panel.select_subjects(&test)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationResult {
    pub observed: f64,
    /// Statistic for each permutation, in permutation order.
    pub permuted: Vec<f64>,
    /// `(1 + #{permuted >= observed}) / (B + 1)`.
    pub p_value: f64,
    pub group_sizes: (usize, usize),
    /// Grid nodes left out because some fit was singular there.
    pub skipped_nodes: Vec<(f64, f64)>,
    pub total_nodes: usize,
    /// Observation count of the first group minus its original count, per
    /// permutation.
    pub obs_count_drift: Vec<i64>,
}

/// Relative slack when comparing a permuted statistic with the observed one,
/// so that re-orderings of the same split count as ties.
const TIE_RTOL: f64 = 1e-9;

/// Per-node distances between the two groups' fitted surfaces; `None` where a
/// fit is singular.
fn node_distances<S: ObjectSpace>(
    a: &SparsePanel<S::Object>,
    b: &SparsePanel<S::Object>,
    estimator: Estimator,
    kernel: Kernel,
    space: &S,
    xs: &[Vec<f64>],
    ts: &[f64],
) -> Result<Vec<Option<f64>>> {
    let fa = predict_grid(a, estimator, kernel, space, xs, ts);
    let fb = predict_grid(b, estimator, kernel, space, xs, ts);
    fa.into_iter()
        .zip(fb)
        .map(|(u, v)| match (u, v) {
            (Ok(u), Ok(v)) => space.distance(&u, &v).map(Some),
            (Err(e), _) | (_, Err(e)) if e.kind() != "singular_design" => Err(e),
            _ => Ok(None),
        })
        .collect()
}

/// Orders the two groups canonically so that the result does not depend on
/// which group is passed first.
fn canonical_pair<'p, O>(a: &'p SparsePanel<O>, b: &'p SparsePanel<O>) -> (&'p SparsePanel<O>, &'p SparsePanel<O>) {
    let key = |p: &SparsePanel<O>| {
        (
            p.n_subjects(),
            p.n_obs(),
            p.subject_ids().to_vec(),
            p.times().iter().map(|t| t.to_bits()).collect::<Vec<_>>(),
            (0..p.n_obs())
                .flat_map(|j| p.covariate(j).iter().map(|v| v.to_bits()))
                .collect::<Vec<_>>(),
        )
    };
    if key(b) < key(a) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Two-group permutation test on the integrated distance between the fitted
/// surfaces, `sum_nodes d(fit_A, fit_B) dx dt` over `grid`.
///
/// Subjects are pooled and reassigned at random to groups of the original
/// sizes; permutation `b` draws from stream `b` of `seed`. Nodes where any
/// observed or permuted fit is singular are dropped from every statistic.
pub fn permutation_test<S: ObjectSpace>(
    panel_a: &SparsePanel<S::Object>,
    panel_b: &SparsePanel<S::Object>,
    estimator: Estimator,
    kernel: Kernel,
    space: &S,
    grid: &MidpointGrid,
    permutations: usize,
    seed: u64,
) -> Result<PermutationResult> {
    estimator.check()?;
    grid.check()?;
    if permutations == 0 {
        return Err(Error::contract("permutation test needs B >= 1"));
    }
    if panel_a.dim_x() != panel_b.dim_x() {
        return Err(Error::contract("groups have different covariate dimensions"));
    }
    let (first, second) = canonical_pair(panel_a, panel_b);
    let pool = SparsePanel::concat(first, second)?;
    let n_first = first.n_subjects();

    let xs: Vec<Vec<f64>> = grid.x_nodes().into_iter().map(|x| vec![x; pool.dim_x()]).collect();
    let ts = grid.t_nodes();
    let observed = node_distances(first, second, estimator, kernel, space, &xs, &ts)?;

    let perms: Vec<Result<(Vec<Option<f64>>, i64)>> = par::map_indexed(permutations, |b| {
        let mut idx: Vec<usize> = (0..pool.n_subjects()).collect();
        idx.shuffle(&mut replicate_rng(seed, b as u64));
        let (ga, gb) = idx.split_at(n_first);
        let pa = pool.select_subjects(ga)?;
        let pb = pool.select_subjects(gb)?;
        let drift = pa.n_obs() as i64 - first.n_obs() as i64;
        Ok((node_distances(&pa, &pb, estimator, kernel, space, &xs, &ts)?, drift))
    });
    let mut perm_nodes = Vec::with_capacity(permutations);
    let mut obs_count_drift = Vec::with_capacity(permutations);
    for r in perms {
        let (d, drift) = r?;
        perm_nodes.push(d);
        obs_count_drift.push(drift);
    }

    let active: Vec<bool> = (0..observed.len())
        .map(|k| observed[k].is_some() && perm_nodes.iter().all(|d| d[k].is_some()))
        .collect();
    if !active.iter().any(|&a| a) {
        return Err(Error::SelectionFailure(
            "every quadrature node has a singular fit".into(),
        ));
    }
    let nodes = grid.nodes();
    let skipped_nodes = nodes
        .iter()
        .zip(&active)
        .filter(|(_, &a)| !a)
        .map(|(n, _)| *n)
        .collect();
    let area = grid.cell_area();
    let statistic = |d: &[Option<f64>]| -> f64 {
        d.iter()
            .zip(&active)
            .filter(|(_, &a)| a)
            .map(|(v, _)| v.expect("active node"))
            .sum::<f64>()
            * area
    };
    let observed = statistic(&observed);
    let permuted: Vec<f64> = perm_nodes.iter().map(|d| statistic(d)).collect();
    let exceed = permuted
        .iter()
        .filter(|&&s| s >= observed - TIE_RTOL * observed.abs())
        .count();
    Ok(PermutationResult {
        observed,
        p_value: (1 + exceed) as f64 / (permutations + 1) as f64,
        permuted,
        group_sizes: (panel_a.n_subjects(), panel_b.n_subjects()),
        skipped_nodes,
        total_nodes: nodes.len(),
        obs_count_drift,
    })
}
