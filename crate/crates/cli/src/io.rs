//! Long-format panel CSV files and object serialization.
//!
//! A panel file has a header `subject_id, t, x` (or `x1..xp`) followed by the
//! response payload: `y` for scalars, `q_001..q_m` for quantile functions and
//! `c_1_1..c_V_V` for correlation matrices. Lines starting with `#` are
//! comments.

use std::collections::HashSet;
use std::path::Path;

use corereg::metric::{CorrMatrixObject, EuclideanObject, QuantileObject};
use corereg::{PanelBuilder, SparsePanel};
use nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// Tolerance on symmetry and the unit diagonal of correlation payloads.
pub const CORR_PAYLOAD_TOL: f64 = 1e-6;

/// An object that can be stored as a fixed set of numeric CSV columns.
pub trait CsvObject: Sized {
    /// Checks that `names` form this object's payload and returns its size
    /// parameter (1, `m` or `V`).
    fn layout(names: &[String]) -> std::result::Result<usize, String>;
    fn parse(values: &[f64], size: usize) -> std::result::Result<Self, String>;
    fn column_names(&self) -> Vec<String>;
    fn values(&self) -> Vec<f64>;
}

impl CsvObject for EuclideanObject {
    fn layout(names: &[String]) -> std::result::Result<usize, String> {
        match names {
            [y] if y == "y" => Ok(1),
            _ => Err("scalar payload must be a single column `y`".into()),
        }
    }

    fn parse(values: &[f64], _: usize) -> std::result::Result<Self, String> {
        Ok(EuclideanObject(values[0]))
    }

    fn column_names(&self) -> Vec<String> {
        vec!["y".into()]
    }

    fn values(&self) -> Vec<f64> {
        vec![self.0]
    }
}

pub fn quantile_column(k: usize, m: usize) -> String {
    let width = m.to_string().len().max(3);
    format!("q_{k:0width$}")
}

impl CsvObject for QuantileObject {
    fn layout(names: &[String]) -> std::result::Result<usize, String> {
        let m = names.len();
        if m < 2 {
            return Err("quantile payload needs at least 2 columns q_001..q_m".into());
        }
        for (k, name) in names.iter().enumerate() {
            let want = quantile_column(k + 1, m);
            if *name != want {
                return Err(format!("expected quantile column {want}, found {name}"));
            }
        }
        Ok(m)
    }

    fn parse(values: &[f64], _: usize) -> std::result::Result<Self, String> {
        QuantileObject::new(values.to_vec()).map_err(|e| e.to_string())
    }

    fn column_names(&self) -> Vec<String> {
        let m = self.grid_size();
        (1..=m).map(|k| quantile_column(k, m)).collect()
    }

    fn values(&self) -> Vec<f64> {
        self.values().to_vec()
    }
}

fn corr_columns(v: usize) -> Vec<String> {
    (1..=v)
        .flat_map(|q| (1..=v).map(move |r| format!("c_{q}_{r}")))
        .collect()
}

impl CsvObject for CorrMatrixObject {
    fn layout(names: &[String]) -> std::result::Result<usize, String> {
        let v = (names.len() as f64).sqrt().round() as usize;
        if v == 0 || v * v != names.len() {
            return Err(format!("correlation payload needs V^2 columns, found {}", names.len()));
        }
        for (want, name) in corr_columns(v).iter().zip(names) {
            if want != name {
                return Err(format!("expected correlation column {want}, found {name}"));
            }
        }
        Ok(v)
    }

    fn parse(values: &[f64], v: usize) -> std::result::Result<Self, String> {
        let mut m = DMatrix::from_row_slice(v, v, values);
        for q in 0..v {
            if (m[(q, q)] - 1.0).abs() > CORR_PAYLOAD_TOL {
                return Err(format!("diagonal entry c_{0}_{0} = {1} is not 1", q + 1, m[(q, q)]));
            }
            for r in (q + 1)..v {
                let (a, b) = (m[(q, r)], m[(r, q)]);
                if (a - b).abs() > CORR_PAYLOAD_TOL {
                    return Err(format!("matrix is not symmetric at c_{}_{}", q + 1, r + 1));
                }
                m[(q, r)] = 0.5 * (a + b);
                m[(r, q)] = 0.5 * (a + b);
            }
            m[(q, q)] = 1.0;
        }
        CorrMatrixObject::new(m).map_err(|e| e.to_string())
    }

    fn column_names(&self) -> Vec<String> {
        corr_columns(self.dim())
    }

    fn values(&self) -> Vec<f64> {
        let e = self.entries();
        (0..self.dim())
            .flat_map(|q| (0..self.dim()).map(move |r| e[(q, r)]))
            .collect()
    }
}

/// Names of the covariate columns for dimension `p`.
pub fn covariate_columns(p: usize) -> Vec<String> {
    if p == 1 {
        vec!["x".into()]
    } else {
        (1..=p).map(|j| format!("x{j}")).collect()
    }
}

/// Number of leading covariate columns in `names` (`x` or `x1, x2, ...`).
fn covariate_count(names: &[String]) -> usize {
    if names.first().map(String::as_str) == Some("x") {
        return 1;
    }
    names
        .iter()
        .enumerate()
        .take_while(|(j, n)| **n == format!("x{}", j + 1))
        .count()
}

pub fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse {
            path: path.to_path_buf(),
            row: 0,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

pub fn parse_number(path: &Path, row: usize, column: &str, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Parse {
            path: path.to_path_buf(),
            row,
            column: column.to_string(),
            message: format!("expected a finite number, found {s:?}"),
        }),
    }
}

/// Reads a long-format panel file.
pub fn load_panel<O: CsvObject>(path: &Path) -> Result<SparsePanel<O>> {
    let mut rdr = csv_reader(path)?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let header_err = |column: &str, message: String| CliError::Parse {
        path: path.to_path_buf(),
        row: 0,
        column: column.to_string(),
        message,
    };
    let mut seen = HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(header_err(dup, "duplicate column".into()));
    }
    if names.len() < 3 || names[0] != "subject_id" || names[1] != "t" {
        return Err(header_err(
            names.first().map(String::as_str).unwrap_or(""),
            "header must start with subject_id, t".into(),
        ));
    }
    let p = covariate_count(&names[2..]);
    if p == 0 {
        return Err(header_err(&names[2], "expected covariate column x or x1..xp".into()));
    }
    let payload = &names[2 + p..];
    let size = O::layout(payload).map_err(|m| {
        header_err(payload.first().map(String::as_str).unwrap_or(""), m)
    })?;

    let mut builder = PanelBuilder::new(p);
    let mut x = vec![0.0; p];
    let mut values = vec![0.0; payload.len()];
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if rec.len() != names.len() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                row,
                column: "subject_id".into(),
                message: "empty subject id".into(),
            });
        }
        let t = parse_number(path, row, "t", &rec[1])?;
        for j in 0..p {
            x[j] = parse_number(path, row, &names[2 + j], &rec[2 + j])?;
        }
        for (k, v) in values.iter_mut().enumerate() {
            let c = 2 + p + k;
            *v = parse_number(path, row, &names[c], &rec[c])?;
        }
        let y = O::parse(&values, size).map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            row,
            column: payload[0].clone(),
            message,
        })?;
        builder.push(id, t, &x, y).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
    }
    builder.build().map_err(CliError::from)
}

/// Serializes a panel (rows grouped by subject) to CSV text.
pub fn panel_to_csv<O: CsvObject>(panel: &SparsePanel<O>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["subject_id".to_string(), "t".to_string()];
    header.extend(covariate_columns(panel.dim_x()));
    header.extend(panel.response(0).column_names());
    w.write_record(&header).map_err(csv_write_error)?;
    for i in 0..panel.n_subjects() {
        for j in panel.subject_range(i) {
            let mut rec = vec![panel.subject_id(i).to_string(), fmt_f64(panel.time(j))];
            rec.extend(panel.covariate(j).iter().map(|&v| fmt_f64(v)));
            rec.extend(panel.response(j).values().into_iter().map(fmt_f64));
            w.write_record(&rec).map_err(csv_write_error)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))
}

pub fn save_panel<O: CsvObject>(panel: &SparsePanel<O>, path: &Path) -> Result<()> {
    let bytes = panel_to_csv(panel)?;
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn csv_write_error(e: csv::Error) -> CliError {
    CliError::Usage(format!("csv write failed: {e}"))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Quantile vector as a single text row.
pub fn quantile_row(q: &QuantileObject) -> String {
    q.values().iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

/// Correlation matrix as `V` comma-separated rows.
pub fn correlation_block(c: &CorrMatrixObject) -> String {
    let e = c.entries();
    (0..c.dim())
        .map(|q| (0..c.dim()).map(|r| fmt_f64(e[(q, r)])).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reads query points from a CSV with columns `x` (or `x1..xp`) and `t`.
pub fn load_queries(path: &Path) -> Result<Vec<corereg::Query>> {
    let mut rdr = csv_reader(path)?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let p = covariate_count(&names);
    if p == 0 || names.len() != p + 1 || names[p] != "t" {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            row: 0,
            column: names.first().cloned().unwrap_or_default(),
            message: "query header must be x (or x1..xp) followed by t".into(),
        });
    }
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let x = (0..p)
            .map(|j| parse_number(path, row, &names[j], &rec[j]))
            .collect::<Result<Vec<f64>>>()?;
        let t = parse_number(path, row, "t", &rec[p])?;
        out.push(corereg::Query::new(x, t));
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{}: no query rows", path.display())));
    }
    Ok(out)
}
