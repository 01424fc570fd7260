use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::metric::ObjectSpace;

/// Longitudinal observations `(T_il, X_il, Y_il)`, `l = 1..n_i`, grouped by
/// subject. Storage is flat in subject order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePanel<O> {
    subject_ids: Vec<String>,
    offsets: Vec<usize>,
    times: Vec<f64>,
    covariates: Vec<f64>,
    dim_x: usize,
    responses: Vec<O>,
    obs_scale: Vec<f64>,
}

/// Accumulates rows in any order; rows of a subject keep their input order.
#[derive(Debug, Clone)]
pub struct PanelBuilder<O> {
    dim_x: usize,
    index: HashMap<String, usize>,
    subjects: Vec<(String, Vec<(f64, Vec<f64>, O)>)>,
}

impl<O> PanelBuilder<O> {
    pub fn new(dim_x: usize) -> Self {
        PanelBuilder {
            dim_x,
            index: HashMap::new(),
            subjects: Vec::new(),
        }
    }

    pub fn push(&mut self, subject: &str, t: f64, x: &[f64], y: O) -> Result<()> {
        if x.len() != self.dim_x {
            return Err(Error::Dimension {
                expected: self.dim_x,
                found: x.len(),
            });
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite time or covariate for subject {subject:?}"
            )));
        }
        let slot = match self.index.get(subject) {
            Some(&i) => i,
            None => {
                self.index.insert(subject.to_owned(), self.subjects.len());
                self.subjects.push((subject.to_owned(), Vec::new()));
                self.subjects.len() - 1
            }
        };
        self.subjects[slot].1.push((t, x.to_vec(), y));
        Ok(())
    }

    pub fn build(self) -> Result<SparsePanel<O>> {
        if self.dim_x == 0 {
            return Err(Error::contract("covariate dimension must be at least 1"));
        }
        if self.subjects.is_empty() {
            return Err(Error::EmptyInput("panel has no subjects"));
        }
        let n_obs: usize = self.subjects.iter().map(|s| s.1.len()).sum();
        let mut panel = SparsePanel {
            subject_ids: Vec::with_capacity(self.subjects.len()),
            offsets: vec![0],
            times: Vec::with_capacity(n_obs),
            covariates: Vec::with_capacity(n_obs * self.dim_x),
            dim_x: self.dim_x,
            responses: Vec::with_capacity(n_obs),
            obs_scale: Vec::with_capacity(n_obs),
        };
        for (id, rows) in self.subjects {
            panel.subject_ids.push(id);
            for (t, x, y) in rows {
                panel.times.push(t);
                panel.covariates.extend(x);
                panel.responses.push(y);
            }
            panel.offsets.push(panel.times.len());
        }
        panel.fill_scale();
        Ok(panel)
    }
}

impl<O> SparsePanel<O> {
    fn fill_scale(&mut self) {
        let n = self.n_subjects() as f64;
        self.obs_scale.clear();
        for i in 0..self.n_subjects() {
            let r = self.subject_range(i);
            let s = 1.0 / (n * r.len() as f64);
            self.obs_scale.extend(std::iter::repeat_n(s, r.len()));
        }
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    /// Total number of observations `N`.
    pub fn n_obs(&self) -> usize {
        self.times.len()
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn subject_id(&self, i: usize) -> &str {
        &self.subject_ids[i]
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    /// Observation indices of subject `i`.
    pub fn subject_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn obs_count(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn covariate(&self, j: usize) -> &[f64] {
        &self.covariates[j * self.dim_x..(j + 1) * self.dim_x]
    }

    pub fn responses(&self) -> &[O] {
        &self.responses
    }

    pub fn response(&self, j: usize) -> &O {
        &self.responses[j]
    }

    /// `1 / (n * n_i)` for observation `j`: its factor in the double average
    /// `(1/n) sum_i (1/n_i) sum_l`.
    pub fn obs_scale(&self, j: usize) -> f64 {
        self.obs_scale[j]
    }

    pub fn obs_scales(&self) -> &[f64] {
        &self.obs_scale
    }

    /// Checks every response against the space invariants.
    pub fn validate<S: ObjectSpace<Object = O>>(&self, space: &S) -> Result<()> {
        for (j, y) in self.responses.iter().enumerate() {
            space.validate(y).map_err(|e| {
                Error::InvalidObject(format!("observation {j}: {e}"))
            })?;
        }
        Ok(())
    }

    pub fn map_responses<P>(&self, mut f: impl FnMut(&O) -> P) -> SparsePanel<P> {
        SparsePanel {
            subject_ids: self.subject_ids.clone(),
            offsets: self.offsets.clone(),
            times: self.times.clone(),
            covariates: self.covariates.clone(),
            dim_x: self.dim_x,
            responses: self.responses.iter().map(&mut f).collect(),
            obs_scale: self.obs_scale.clone(),
        }
    }
}

impl<O: Clone> SparsePanel<O> {
    /// New panel holding the listed subjects in the given order.
    pub fn select_subjects(&self, subjects: &[usize]) -> Result<SparsePanel<O>> {
        Self::concat_selection(&[(self, subjects)])
    }

    pub fn without_subject(&self, i: usize) -> Result<SparsePanel<O>> {
        let keep: Vec<usize> = (0..self.n_subjects()).filter(|&k| k != i).collect();
        self.select_subjects(&keep)
    }

    /// Subjects of `a` followed by subjects of `b`.
    pub fn concat(a: &SparsePanel<O>, b: &SparsePanel<O>) -> Result<SparsePanel<O>> {
        let all_a: Vec<usize> = (0..a.n_subjects()).collect();
        let all_b: Vec<usize> = (0..b.n_subjects()).collect();
        Self::concat_selection(&[(a, &all_a), (b, &all_b)])
    }

    pub(crate) fn concat_selection(parts: &[(&SparsePanel<O>, &[usize])]) -> Result<SparsePanel<O>> {
        let dim_x = parts.first().map(|p| p.0.dim_x).unwrap_or(0);
        if parts.iter().any(|p| p.0.dim_x != dim_x) {
            return Err(Error::contract("panels have different covariate dimensions"));
        }
        let mut out = SparsePanel {
            subject_ids: Vec::new(),
            offsets: vec![0],
            times: Vec::new(),
            covariates: Vec::new(),
            dim_x,
            responses: Vec::new(),
            obs_scale: Vec::new(),
        };
        for (panel, subjects) in parts {
            for &i in subjects.iter() {
                if i >= panel.n_subjects() {
                    return Err(Error::contract(format!("subject index {i} out of range")));
                }
                out.subject_ids.push(panel.subject_ids[i].clone());
                let r = panel.subject_range(i);
                out.times.extend_from_slice(&panel.times[r.clone()]);
                out.covariates
                    .extend_from_slice(&panel.covariates[r.start * dim_x..r.end * dim_x]);
                out.responses.extend_from_slice(&panel.responses[r]);
                out.offsets.push(out.times.len());
            }
        }
        if out.subject_ids.is_empty() {
            return Err(Error::EmptyInput("panel has no subjects"));
        }
        out.fill_scale();
        Ok(out)
    }
}
