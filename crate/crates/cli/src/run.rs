//! Command dispatch and output files.
//!
//! Every output is rendered in memory first and written only after the whole
//! command succeeded; a failed write removes the files written so far.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use corereg::inference::{gof_curve_estimator, permutation_test, rmpe, split_subjects};
use corereg::quadrature::MidpointGrid;
use corereg::regression::fit_batch;
use corereg::selection::{cv_select, product_grid};
use corereg::simulation::{generate_panel, run_monte_carlo, ObsPerSubject, SimConfig};
use corereg::{
    Correlation, Estimator, EstimatorKind, Euclidean, ObjectSpace, Query, SparsePanel,
    Wasserstein,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::*;
use crate::error::{CliError, Result};
use crate::io::{covariate_columns, csv_write_error, fmt_f64, load_panel, load_queries, panel_to_csv, CsvObject};

/// Provenance recorded at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(cmd: &Command) -> Result<Self> {
        let name = match cmd {
            Command::FitLocal(_) => "fit-local",
            Command::FitGlobal(_) => "fit-global",
            Command::Cv(_) => "cv",
            Command::Simulate(_) => "simulate",
            Command::Generate(_) => "generate",
            Command::Gof(_) => "gof",
            Command::Rmpe(_) => "rmpe",
            Command::Permtest(_) => "permtest",
        };
        Ok(Meta {
            version: env!("CARGO_PKG_VERSION"),
            command: name,
            config_hash: config_hash(cmd)?,
            seed: cmd.output().seed,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# corereg {}\n# command: {}\n# config_hash: {}\n# seed: {}\n",
            self.version, self.command, self.config_hash, self.seed
        )
    }
}

/// SHA-256 of the resolved configuration (the output directory excluded).
pub fn config_hash(cmd: &Command) -> Result<String> {
    let bytes = serde_json::to_vec(cmd).map_err(|e| CliError::Usage(format!("config encoding: {e}")))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        write!(hex, "{b:02x}").expect("write to string");
    }
    Ok(hex)
}

/// A rendered output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn csv_artifact(meta: &Meta, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<Artifact> {
    let mut w = csv::Writer::from_writer(meta.csv_header().into_bytes());
    w.write_record(header).map_err(csv_write_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_write_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))?;
    Ok(Artifact {
        name: name.into(),
        bytes,
    })
}

fn json_artifact(meta: &Meta, name: &str, body: Value) -> Result<Artifact> {
    let mut v = json!({ "meta": meta });
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, body) {
        dst.extend(src);
    }
    let mut bytes = serde_json::to_vec_pretty(&v).map_err(|e| CliError::Usage(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(Artifact {
        name: name.into(),
        bytes,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `artifacts` into `dir`; on failure removes what was written.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        if let Err(e) = std::fs::write(&path, &a.bytes) {
            let _ = std::fs::remove_file(&path);
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(CliError::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// Runs the command and writes its outputs; returns the written paths.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let artifacts = execute(&cli.command)?;
    write_artifacts(&cli.command.output().out, &artifacts)
}

macro_rules! with_space {
    ($kind:expr, $s:ident => $body:expr) => {
        match $kind {
            SpaceKind::Euclidean => {
                let $s = &Euclidean;
                $body
            }
            SpaceKind::Wasserstein => {
                let $s = &Wasserstein;
                $body
            }
            SpaceKind::Correlation => {
                let $s = &Correlation::default();
                $body
            }
        }
    };
}

/// Renders the outputs of `cmd` without touching the file system (except
/// for reading inputs).
pub fn execute(cmd: &Command) -> Result<Vec<Artifact>> {
    let meta = Meta::new(cmd)?;
    match cmd {
        Command::FitLocal(a) => {
            let est = Estimator::Local { h1: a.h1, h2: a.h2 };
            with_space!(a.data.space, s => fit_command(s, &a.data, est, &a.queries, &meta))
        }
        Command::FitGlobal(a) => {
            let est = Estimator::Global { h: a.h };
            with_space!(a.data.space, s => fit_command(s, &a.data, est, &a.queries, &meta))
        }
        Command::Cv(a) => with_space!(a.data.space, s => cv_command(s, a, &meta)),
        Command::Simulate(a) => simulate_command(a, &meta),
        Command::Generate(a) => {
            let cfg = sim_config(&a.sim, a.output.seed)?;
            let sim = generate_panel(&cfg)?;
            let mut bytes = meta.csv_header().into_bytes();
            bytes.extend(panel_to_csv(&sim.panel)?);
            Ok(vec![Artifact {
                name: "panel.csv".into(),
                bytes,
            }])
        }
        Command::Gof(a) => with_space!(a.data.space, s => gof_command(s, a, &meta)),
        Command::Rmpe(a) => with_space!(a.data.space, s => rmpe_command(s, a, &meta)),
        Command::Permtest(a) => with_space!(a.space, s => permtest_command(s, a, &meta)),
    }
}

fn load<S: ObjectSpace>(space: &S, path: &Path) -> Result<SparsePanel<S::Object>>
where
    S::Object: CsvObject,
{
    let panel = load_panel::<S::Object>(path)?;
    panel.validate(space)?;
    Ok(panel)
}

fn queries_for(args: &QueryArgs, dim_x: usize) -> Result<Vec<Query>> {
    if let Some(path) = &args.queries {
        let q = load_queries(path)?;
        if let Some(bad) = q.iter().find(|q| q.x.len() != dim_x) {
            return Err(corereg::Error::Dimension {
                expected: dim_x,
                found: bad.x.len(),
            }
            .into());
        }
        return Ok(q);
    }
    if dim_x != 1 {
        return Err(CliError::Usage(
            "vector covariates need query points from --queries".into(),
        ));
    }
    let ts = args.t_grid.points();
    Ok(args
        .x_grid
        .points()
        .into_iter()
        .flat_map(|x| ts.iter().map(move |&t| Query::scalar(x, t)))
        .collect())
}

fn fit_command<S: ObjectSpace>(
    space: &S,
    data: &DataArgs,
    est: Estimator,
    queries: &QueryArgs,
    meta: &Meta,
) -> Result<Vec<Artifact>>
where
    S::Object: CsvObject,
{
    est.check()?;
    let panel = load(space, &data.input)?;
    let queries = queries_for(queries, panel.dim_x())?;
    let fits = fit_batch(&panel, est, data.kernel, space, &queries);
    let payload = match fits.iter().find_map(|f| f.as_ref().ok()) {
        Some(f) => f.object.column_names(),
        None => {
            let err = fits.into_iter().next().expect("at least one query").unwrap_err();
            return Err(err.into());
        }
    };
    let mut header = covariate_columns(panel.dim_x());
    header.extend(["t", "status", "objective"].map(String::from));
    header.extend(payload.iter().cloned());
    let rows: Vec<Vec<String>> = queries
        .iter()
        .zip(&fits)
        .map(|(q, f)| {
            let mut row: Vec<String> = q.x.iter().map(|&v| fmt_f64(v)).collect();
            row.push(fmt_f64(q.t));
            match f {
                Ok(f) => {
                    row.push("ok".into());
                    row.push(fmt_f64(f.objective));
                    row.extend(f.object.values().into_iter().map(fmt_f64));
                }
                Err(e) => {
                    row.push(e.kind().into());
                    row.push(String::new());
                    row.extend(payload.iter().map(|_| String::new()));
                }
            }
            row
        })
        .collect();
    Ok(vec![csv_artifact(meta, "fits.csv", &header, &rows)?])
}

fn cv_command<S: ObjectSpace>(space: &S, a: &CvArgs, meta: &Meta) -> Result<Vec<Artifact>>
where
    S::Object: CsvObject,
{
    let panel = load(space, &a.data.input)?;
    let candidates: Vec<Estimator> = match a.estimator {
        EstimatorKind::Local => {
            let h2 = a.grid_h2.as_deref().unwrap_or(&a.grid);
            product_grid(&a.grid, h2)
                .into_iter()
                .map(|(h1, h2)| Estimator::Local { h1, h2 })
                .collect()
        }
        EstimatorKind::Global => a.grid.iter().map(|&h| Estimator::Global { h }).collect(),
        EstimatorKind::TimeOnly => a.grid.iter().map(|&h| Estimator::TimeOnly { h }).collect(),
    };
    let grid = cv_select(&panel, &candidates, a.data.kernel, space)?;
    let header: Vec<String> = [
        "h1", "h2", "h", "score", "evaluated_folds", "skipped_folds", "skipped_points", "disqualified", "selected",
    ]
    .map(String::from)
    .to_vec();
    let rows = grid
        .candidates
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (h1, h2, h) = match c.estimator {
                Estimator::Local { h1, h2 } => (Some(h1), Some(h2), None),
                Estimator::Global { h } | Estimator::TimeOnly { h } => (None, None, Some(h)),
            };
            vec![
                opt(h1),
                opt(h2),
                opt(h),
                opt(c.score),
                c.evaluated_folds.to_string(),
                c.skipped_folds.to_string(),
                c.skipped_points.to_string(),
                c.disqualified.to_string(),
                (k == grid.selected).to_string(),
            ]
        })
        .collect::<Vec<_>>();
    let body = json!({ "selected": grid.selected(), "candidates": grid.candidates });
    Ok(vec![
        csv_artifact(meta, "cv.csv", &header, &rows)?,
        json_artifact(meta, "cv.json", body)?,
    ])
}

fn sim_config(a: &SimArgs, seed: u64) -> Result<SimConfig> {
    let mut cfg = SimConfig::new(a.setting, a.n, a.ni, seed);
    if let Some(max) = a.ni_max {
        cfg.obs_per_subject = ObsPerSubject::Uniform { min: a.ni, max };
    }
    cfg.grid_size = a.m;
    cfg.nu1 = a.nu1;
    cfg.nu2 = a.nu2;
    cfg.location_shift = a.shift;
    cfg.check()?;
    Ok(cfg)
}

fn simulate_command(a: &SimulateArgs, meta: &Meta) -> Result<Vec<Artifact>> {
    let cfg = sim_config(&a.sim, a.output.seed)?;
    let est = a.estimator.estimator()?;
    let grid = MidpointGrid {
        x_range: a.x_range.pair(),
        t_range: a.t_range.pair(),
        x_points: a.quad_points,
        t_points: a.quad_points,
    };
    grid.check()?;
    let mc = run_monte_carlo(&cfg, a.reps, est, a.kernel, &grid)?;
    let header = ["rep", "ise", "status"].map(String::from).to_vec();
    let rows = mc
        .ise
        .iter()
        .enumerate()
        .map(|(r, v)| vec![r.to_string(), opt(*v), if v.is_some() { "ok" } else { "failed" }.into()])
        .collect::<Vec<_>>();
    let body = json!({
        "simulation": cfg,
        "estimator": est,
        "kernel": a.kernel,
        "quadrature": grid,
        "summary": mc.summary,
        "failures": mc.failures,
    });
    Ok(vec![
        csv_artifact(meta, "ise.csv", &header, &rows)?,
        json_artifact(meta, "summary.json", body)?,
    ])
}

fn gof_command<S: ObjectSpace>(space: &S, a: &GofArgs, meta: &Meta) -> Result<Vec<Artifact>>
where
    S::Object: CsvObject,
{
    let panel = load(space, &a.data.input)?;
    let est = a.estimator.estimator()?;
    let g = gof_curve_estimator(&panel, est, a.data.kernel, space, a.t_range.pair(), a.bins)?;
    let header = ["t", "mse", "count"].map(String::from).to_vec();
    let rows = g
        .points
        .iter()
        .map(|p| vec![fmt_f64(p.t), opt(p.mse), p.count.to_string()])
        .collect::<Vec<_>>();
    let body = json!({
        "estimator": est,
        "integrated_deviance": g.integrated_deviance,
        "bin_width": g.bin_width,
        "empty_bins": g.empty_bins,
        "skipped_fits": g.skipped_fits,
        "outside_range": g.outside_range,
    });
    Ok(vec![
        csv_artifact(meta, "gof.csv", &header, &rows)?,
        json_artifact(meta, "gof.json", body)?,
    ])
}

fn rmpe_command<S: ObjectSpace>(space: &S, a: &RmpeArgs, meta: &Meta) -> Result<Vec<Artifact>>
where
    S::Object: CsvObject,
{
    let panel = load(space, &a.data.input)?;
    let est = a.estimator.estimator()?;
    let (train, test) = split_subjects(&panel, a.train_frac, a.split_seed)?;
    let r = rmpe(&train, &test, est, a.data.kernel, space)?;
    let body = json!({
        "estimator": est,
        "train_subjects": train.n_subjects(),
        "test_subjects": test.n_subjects(),
        "test_ids": test.subject_ids(),
        "result": r,
    });
    Ok(vec![json_artifact(meta, "rmpe.json", body)?])
}

fn permtest_command<S: ObjectSpace>(space: &S, a: &PermtestArgs, meta: &Meta) -> Result<Vec<Artifact>>
where
    S::Object: CsvObject,
{
    let pa = load(space, &a.input_a)?;
    let pb = load(space, &a.input_b)?;
    let est = a.estimator.estimator()?;
    let grid = MidpointGrid {
        x_range: a.x_range.pair(),
        t_range: a.t_range.pair(),
        x_points: a.quad_points,
        t_points: a.quad_points,
    };
    let r = permutation_test(&pa, &pb, est, a.kernel, space, &grid, a.permutations, a.output.seed)?;
    let header = ["permutation", "statistic", "obs_count_drift"].map(String::from).to_vec();
    let rows = r
        .permuted
        .iter()
        .zip(&r.obs_count_drift)
        .enumerate()
        .map(|(b, (s, d))| vec![b.to_string(), fmt_f64(*s), d.to_string()])
        .collect::<Vec<_>>();
    let body = json!({
        "estimator": est,
        "kernel": a.kernel,
        "observed": r.observed,
        "p_value": r.p_value,
        "permutations": a.permutations,
        "group_sizes": r.group_sizes,
        "total_nodes": r.total_nodes,
        "skipped_nodes": r.skipped_nodes,
    });
    Ok(vec![
        csv_artifact(meta, "permutations.csv", &header, &rows)?,
        json_artifact(meta, "permtest.json", body)?,
    ])
}
