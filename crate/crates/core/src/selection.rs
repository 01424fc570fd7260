//! Bandwidth selection by leave-one-subject-out cross-validation.
//!
//! For each candidate and each subject `i`, the estimator is refit on the
//! panel without subject `i` and evaluated at subject `i`'s own observation
//! points. The score is `(1/n) sum_i (1/n_i) sum_l d^2(Y_il, fit_{-i}(X_il, T_il))`.
//! Points where the reduced design is singular are skipped and counted; a
//! subject with no usable point is a skipped fold.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric::ObjectSpace;
use crate::panel::SparsePanel;
use crate::par;
use crate::regression::Estimator;

/// A candidate is disqualified when more than this fraction of folds skip.
pub const MAX_SKIPPED_FOLD_FRACTION: f64 = 0.2;

/// Scores closer than this (relative) are treated as tied.
const TIE_RTOL: f64 = 1e-9;
/// Scores below this are treated as zero when comparing.
const TIE_ATOL: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCandidate {
    pub estimator: Estimator,
    /// Mean squared object distance over evaluated folds, if any.
    pub score: Option<f64>,
    pub evaluated_folds: usize,
    pub skipped_folds: usize,
    pub skipped_points: usize,
    pub disqualified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvGrid {
    pub candidates: Vec<CvCandidate>,
    /// Index of the selected candidate.
    pub selected: usize,
}

impl CvGrid {
    pub fn selected(&self) -> &CvCandidate {
        &self.candidates[self.selected]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct FoldOutcome {
    /// `(1/n_i') sum_l d^2` over the usable points of the fold.
    mean_sq: Option<f64>,
    skipped_points: usize,
}

fn bandwidth_key(e: &Estimator) -> (f64, f64) {
    match *e {
        Estimator::Local { h1, h2 } => (h1, h2),
        Estimator::Global { h } | Estimator::TimeOnly { h } => (h, 0.0),
    }
}

fn tied(a: f64, b: f64) -> bool {
    let big = a.abs().max(b.abs());
    big < TIE_ATOL || (a - b).abs() <= TIE_RTOL * big
}

fn evaluate_fold<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    fold: usize,
    candidates: &[Estimator],
    kernel: Kernel,
    space: &S,
) -> Result<Vec<FoldOutcome>> {
    let reduced = panel.without_subject(fold)?;
    let range = panel.subject_range(fold);
    let mut out = Vec::with_capacity(candidates.len());
    for est in candidates {
        let mut sum = 0.0;
        let mut used = 0usize;
        let mut skipped = 0usize;
        for j in range.clone() {
            match est.predict(&reduced, kernel, space, panel.covariate(j), panel.time(j)) {
                Ok(fit) => {
                    sum += space.squared_distance(panel.response(j), &fit.object)?;
                    used += 1;
                }
                Err(Error::SingularDesign { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        out.push(FoldOutcome {
            mean_sq: (used > 0).then(|| sum / used as f64),
            skipped_points: skipped,
        });
    }
    Ok(out)
}

/// Scores every candidate and selects the minimizer. Ties go to the smallest
/// first bandwidth, then the smallest second bandwidth.
pub fn cv_select<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    candidates: &[Estimator],
    kernel: Kernel,
    space: &S,
) -> Result<CvGrid> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("bandwidth grid is empty"));
    }
    for c in candidates {
        c.check()?;
    }
    let n = panel.n_subjects();
    if n < 2 {
        return Err(Error::contract("cross-validation needs at least 2 subjects"));
    }

    let folds: Vec<Result<Vec<FoldOutcome>>> =
        par::map_indexed(n, |i| evaluate_fold(panel, i, candidates, kernel, space));
    let folds: Vec<Vec<FoldOutcome>> = folds.into_iter().collect::<Result<_>>()?;

    let scored: Vec<CvCandidate> = candidates
        .iter()
        .enumerate()
        .map(|(c, est)| {
            let mut sum = 0.0;
            let mut evaluated = 0usize;
            let mut skipped_points = 0usize;
            for fold in &folds {
                skipped_points += fold[c].skipped_points;
                if let Some(v) = fold[c].mean_sq {
                    sum += v;
                    evaluated += 1;
                }
            }
            let skipped_folds = n - evaluated;
            let disqualified =
                evaluated == 0 || skipped_folds as f64 > MAX_SKIPPED_FOLD_FRACTION * n as f64;
            CvCandidate {
                estimator: *est,
                score: (evaluated > 0).then(|| sum / evaluated as f64),
                evaluated_folds: evaluated,
                skipped_folds,
                skipped_points,
                disqualified,
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (c, cand) in scored.iter().enumerate() {
        if cand.disqualified {
            continue;
        }
        let score = cand.score.expect("qualified candidates have a score");
        best = match best {
            None => Some(c),
            Some(b) => {
                let bs = scored[b].score.expect("qualified candidates have a score");
                let better = if tied(score, bs) {
                    bandwidth_key(&cand.estimator) < bandwidth_key(&scored[b].estimator)
                } else {
                    score < bs
                };
                Some(if better { c } else { b })
            }
        };
    }
    let selected = best.ok_or_else(|| {
        Error::SelectionFailure(format!(
            "all {} candidates were disqualified by singular folds",
            scored.len()
        ))
    })?;
    Ok(CvGrid {
        candidates: scored,
        selected,
    })
}

/// Cross-validated choice of `(h1, h2)` for the local estimator.
pub fn cv_select_local<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    grid: &[(f64, f64)],
    kernel: Kernel,
    space: &S,
) -> Result<(f64, f64, CvGrid)> {
    let candidates: Vec<Estimator> = grid.iter().map(|&(h1, h2)| Estimator::Local { h1, h2 }).collect();
    let cv = cv_select(panel, &candidates, kernel, space)?;
    match cv.selected().estimator {
        Estimator::Local { h1, h2 } => Ok((h1, h2, cv)),
        _ => unreachable!("local grid yields local candidates"),
    }
}

/// Cross-validated choice of `h` for the partially global estimator.
pub fn cv_select_global<S: ObjectSpace>(
    panel: &SparsePanel<S::Object>,
    grid: &[f64],
    kernel: Kernel,
    space: &S,
) -> Result<(f64, CvGrid)> {
    let candidates: Vec<Estimator> = grid.iter().map(|&h| Estimator::Global { h }).collect();
    let cv = cv_select(panel, &candidates, kernel, space)?;
    match cv.selected().estimator {
        Estimator::Global { h } => Ok((h, cv)),
        _ => unreachable!("global grid yields global candidates"),
    }
}

/// Product grid `{h1} x {h2}`.
pub fn product_grid(h1: &[f64], h2: &[f64]) -> Vec<(f64, f64)> {
    h1.iter().flat_map(|&a| h2.iter().map(move |&b| (a, b))).collect()
}
