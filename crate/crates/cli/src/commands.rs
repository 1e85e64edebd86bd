// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use hypobridge::bridge::{bridge_law, sample_bridge};
use hypobridge::fluct::{convergence_report, ConvergenceReport, FluctuationLaw};
use hypobridge::gramian::gramian;
use hypobridge::matcore::cond_one;
use hypobridge::model::{principal_part, u_blocks};
use hypobridge::presets::preset;
use hypobridge::{Matrix, ModelSpec};
use log::info;
use serde::Serialize;

use crate::error::CliError;
use crate::modelfile::ModelFile;

/// A resolved model with coordinate labels.
#[derive(Clone, Debug)]
pub struct Source {
    pub name: String,
    pub spec: ModelSpec,
    pub labels: Vec<String>,
}

impl Source {
    pub fn from_preset(name: &str, rank_tol: Option<f64>) -> Result<Self, CliError> {
        let p = preset::<f64>(name)?;
        let spec = match rank_tol {
            Some(tol) => ModelSpec::with_rank_tol(p.spec().a().clone(), p.spec().b().clone(), tol)?,
            None => p.into_spec(),
        };
        Ok(Self::new(name.to_string(), spec, None))
    }

    pub fn from_file(path: &Path, rank_tol: Option<f64>) -> Result<Self, CliError> {
        let file = ModelFile::load(path)?;
        let spec = file.to_spec(rank_tol)?;
        Ok(Self::new(path.display().to_string(), spec, file.labels))
    }

    fn new(name: String, spec: ModelSpec, labels: Option<Vec<String>>) -> Self {
        let labels = labels.unwrap_or_else(|| (1..=spec.dim()).map(|i| format!("x{i}")).collect());
        Source { name, spec, labels }
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

#[derive(Clone, Debug, Serialize)]
pub struct Conditioning {
    /// 1-norm condition number of `V`.
    pub v: f64,
    /// Same after diagonal equilibration, which is what the inverse sees.
    pub v_equilibrated: f64,
    /// 1-norm condition number of the controllability Gramian at ε = t = 1.
    pub gramian_unit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub source: String,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    /// Adapted orthonormal basis, one column per basis vector.
    pub basis: Vec<Vec<f64>>,
    pub u_blocks: Vec<Vec<Vec<f64>>>,
    /// Principal part of `A` in the adapted basis.
    pub principal_part: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    #[serde(rename = "V_inv")]
    pub v_inv: Vec<Vec<f64>>,
    pub condition: Conditioning,
}

pub fn analyze(src: &Source) -> Result<Analysis, CliError> {
    let spec = &src.spec;
    let filt = spec.filtration()?;
    let u = u_blocks(spec, &filt);
    let law = FluctuationLaw::new(u.clone())?;
    let gamma = gramian(spec, 1.0, 1.0)?.gamma;
    Ok(Analysis {
        source: src.name.clone(),
        d: spec.dim(),
        m: spec.inputs(),
        n: filt.n(),
        dims: filt.dims().to_vec(),
        labels: src.labels.clone(),
        basis: rows(filt.basis()),
        u_blocks: u.blocks().iter().map(rows).collect(),
        principal_part: rows(&principal_part(spec, &filt)),
        v: rows(&law.v),
        v_inv: rows(&law.v_inv),
        condition: Conditioning { v: law.v_raw_cond, v_equilibrated: law.v_cond, gramian_unit: cond_one(&gamma)? },
    })
}

#[derive(Clone, Debug)]
pub struct BridgeOptions {
    pub eps: f64,
    /// Start point; zero when absent.
    pub x: Option<Vec<f64>>,
    /// End point; zero when absent.
    pub y: Option<Vec<f64>>,
    pub grid: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub jitter: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BridgeSummary {
    pub eps: f64,
    pub grid_points: usize,
    pub paths: usize,
    pub seed: u64,
    pub files: Vec<PathBuf>,
}

pub const MEAN_CSV: &str = "mean.csv";
pub const COVARIANCE_CSV: &str = "covariance.csv";
pub const PATHS_CSV: &str = "paths.csv";
pub const REPORT_JSON: &str = "report.json";
pub const ERRORS_CSV: &str = "errors.csv";

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

struct Csv {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Csv {
    fn create(dir: &Path, name: &str) -> Result<Self, CliError> {
        let path = dir.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        Ok(Csv { path, writer })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| csv_error(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn endpoint(what: &str, v: &Option<Vec<f64>>, d: usize) -> Result<Vec<f64>, CliError> {
    match v {
        None => Ok(vec![0.0; d]),
        Some(v) if v.len() == d => Ok(v.clone()),
        Some(v) => Err(CliError::Usage(format!("--{what} has {} entries but the model has d = {d}", v.len()))),
    }
}

/// Writes the mean path, the joint covariance and sampled paths. A grid time
/// of 0 is kept in `mean.csv` and `paths.csv` (where the state is `x`) but is
/// not part of the covariance, which vanishes there.
pub fn bridge(src: &Source, opts: &BridgeOptions, out: &Path) -> Result<BridgeSummary, CliError> {
    if !(opts.eps > 0.0 && opts.eps.is_finite()) {
        return Err(CliError::Usage(format!("--eps must be positive, got {}", opts.eps)));
    }
    let d = src.spec.dim();
    let x = endpoint("x", &opts.x, d)?;
    let y = endpoint("y", &opts.y, d)?;
    let has_zero = opts.grid.first() == Some(&0.0);
    let law_grid: Vec<f64> = opts.grid.iter().copied().filter(|&t| t > 0.0).collect();
    if law_grid.is_empty() {
        return Err(CliError::Usage("grid needs at least one time in (0, 1]".into()));
    }
    let law = bridge_law(&src.spec, opts.eps, &x, &y, &law_grid)?;
    let paths = sample_bridge(&law, opts.paths, opts.seed, opts.jitter)?;
    ensure_dir(out)?;
    let header = |lead: &[&str]| lead.iter().map(|s| s.to_string()).chain(src.labels.iter().cloned()).collect::<Vec<_>>();

    let mut mean = Csv::create(out, MEAN_CSV)?;
    mean.row(header(&["t"]))?;
    if has_zero {
        mean.row(std::iter::once(num(0.0)).chain(x.iter().map(|&v| num(v))))?;
    }
    for (t, m) in law.grid.iter().zip(&law.mean_path) {
        mean.row(std::iter::once(num(*t)).chain(m.iter().map(|&v| num(v))))?;
    }

    let mut cov = Csv::create(out, COVARIANCE_CSV)?;
    cov.row(["s", "t", "row", "col", "value"])?;
    for (i, &s) in law.grid.iter().enumerate() {
        for (j, &t) in law.grid.iter().enumerate() {
            let blk = law.cov_block(i, j);
            for (a, la) in src.labels.iter().enumerate() {
                for (b, lb) in src.labels.iter().enumerate() {
                    cov.row([num(s), num(t), la.clone(), lb.clone(), num(blk[(a, b)])])?;
                }
            }
        }
    }

    let mut sampled = Csv::create(out, PATHS_CSV)?;
    sampled.row(header(&["path", "t"]))?;
    for k in 0..paths.n_paths {
        if has_zero {
            sampled.row([k.to_string(), num(0.0)].into_iter().chain(x.iter().map(|&v| num(v))))?;
        }
        for (j, &t) in law.grid.iter().enumerate() {
            sampled.row([k.to_string(), num(t)].into_iter().chain(paths.state(k, j).iter().map(|&v| num(v))))?;
        }
    }

    let files = vec![mean.finish()?, cov.finish()?, sampled.finish()?];
    info!("bridge: {} paths on {} grid points written to {}", opts.paths, opts.grid.len(), out.display());
    Ok(BridgeSummary { eps: opts.eps, grid_points: opts.grid.len(), paths: opts.paths, seed: opts.seed, files })
}

pub const DEFAULT_EPS_LIST: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Runs the convergence report and writes `report.json` plus the grid × grid
/// covariance errors for every ε to `errors.csv`.
pub fn converge(src: &Source, eps_list: &[f64], grid: &[f64], out: &Path) -> Result<ConvergenceReport, CliError> {
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(CliError::Usage("every eps must be positive".into()));
    }
    let report = convergence_report(&src.spec, eps_list, grid)?;
    ensure_dir(out)?;
    let json_path = out.join(REPORT_JSON);
    let mut json = serde_json::to_string_pretty(&report).expect("reports always serialize");
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| CliError::io(&json_path, e))?;

    let mut errors = Csv::create(out, ERRORS_CSV)?;
    errors.row(["eps", "s", "t", "error"])?;
    for table in &report.tables {
        for (i, row) in table.errors.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                errors.row([num(table.eps), num(report.grid[i]), num(report.grid[j]), num(*e)])?;
            }
        }
    }
    errors.finish()?;
    info!("converge: {} eps values, cov slope {:?}", eps_list.len(), report.cov_slope);
    Ok(report)
}
