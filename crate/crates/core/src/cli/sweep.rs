//! One-parameter sweeps with per-point result files for resumption.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analytic::ExactOptions;
use crate::config::{NetworkConfig, NetworkParams, SimParams};
use crate::error::{Error, Result};
use crate::sim::SimOptions;

use super::output::{ensure_dir, fmt_f64, write_csv, PointEntry, RunManifest};
use super::point::{evaluate, Method, PointResult, RESULT_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Xi,
    AccessP,
    Lambda,
    LinkDistance,
    ThetaDb,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Xi => "xi",
            SweepParam::AccessP => "access_p",
            SweepParam::Lambda => "lambda",
            SweepParam::LinkDistance => "link_distance_m",
            SweepParam::ThetaDb => "theta_db",
        }
    }

    pub fn apply(self, p: &mut NetworkParams, v: f64) {
        match self {
            SweepParam::Xi => p.xi = v,
            SweepParam::AccessP => p.access_p = v,
            SweepParam::Lambda => p.lambda_per_m2 = v,
            SweepParam::LinkDistance => p.link_distance_m = v,
            SweepParam::ThetaDb => p.theta_db = v,
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(SweepParam::Xi),
            "access_p" | "p" => Ok(SweepParam::AccessP),
            "lambda" | "lambda_per_m2" => Ok(SweepParam::Lambda),
            "link_distance_m" | "r" => Ok(SweepParam::LinkDistance),
            "theta_db" => Ok(SweepParam::ThetaDb),
            other => Err(Error::validation(
                "param",
                format!("unknown parameter `{other}` (xi, access_p, lambda, link_distance_m, theta_db)"),
            )),
        }
    }
}

/// Parse `start:stop:step` (stop included) or a comma-separated list.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::validation("values", format!("`{t}` is not a number")))
    };
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::validation("values", "range must be START:STOP:STEP"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::validation(
                "values",
                format!("need finite START <= STOP and STEP > 0, got {s}"),
            ));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // round away accumulated binary noise
        (0..n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(Error::validation("values", "no values given"));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
}

impl SweepSpec {
    /// Validated configuration for every value.
    pub fn points(&self, base: &NetworkConfig) -> Result<Vec<NetworkConfig>> {
        if self.methods.is_empty() {
            return Err(Error::validation("method", "select at least one method"));
        }
        self.values
            .iter()
            .map(|&v| base.with(|q| self.param.apply(q, v)))
            .collect()
    }
}

pub const SWEEP_FILE: &str = "sweep.csv";
const POINT_DIR: &str = "points";

fn sweep_header() -> Vec<&'static str> {
    let mut h = vec!["param", "value"];
    h.extend(RESULT_HEADER);
    h
}

/// Key of a point's cached result: configuration plus every setting that
/// changes the method's output.
pub fn point_key(cfg: &NetworkConfig, method: Method, sim: &SimParams, opts: &SimOptions, exact: &ExactOptions) -> String {
    let settings = match method {
        Method::Sim => format!("{}|{opts:?}", serde_json::to_string(sim).expect("sim params serialize")),
        Method::Analytic(crate::analytic::PredictMethod::ExactMeta) => format!("{exact:?}"),
        Method::Analytic(_) => String::new(),
    };
    let text = format!("{}|{}|{}|{settings}", cfg.config_hash(), method, env!("CARGO_PKG_VERSION"));
    Sha256::digest(text.as_bytes())[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn read_cached(path: &Path, width: usize) -> Option<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).ok()?;
    let rec = rdr.records().next()?.ok()?;
    (rec.len() == width).then(|| rec.iter().map(str::to_string).collect())
}

fn write_point(path: &Path, row: &[String]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    write_csv(&tmp, &sweep_header(), &[row.to_vec()])?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<Vec<String>>,
    pub manifest: RunManifest,
    /// First failing point's error, if any.
    pub first_error: Option<Error>,
    pub output: PathBuf,
}

/// Record, status and error of one evaluated point.
type PointOutcome = (Vec<String>, String, Option<Error>);

struct Task {
    index: usize,
    value: f64,
    cfg: NetworkConfig,
    method: Method,
    key: String,
}

/// Run every (value, method) pair, skipping points whose result file
/// already exists. Failed points are marked and the sweep continues.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    base: &NetworkConfig,
    spec: &SweepSpec,
    sim: &SimParams,
    opts: &SimOptions,
    exact: &ExactOptions,
    workers: usize,
    out: &Path,
) -> Result<SweepOutcome> {
    let cfgs = spec.points(base)?;
    sim.validate()?;
    let point_dir = out.join(POINT_DIR);
    ensure_dir(&point_dir)?;

    let mut tasks = Vec::new();
    for (vi, cfg) in cfgs.into_iter().enumerate() {
        for &method in &spec.methods {
            let key = point_key(&cfg, method, sim, opts, exact);
            tasks.push(Task {
                index: tasks.len(),
                value: spec.values[vi],
                cfg: cfg.clone(),
                method,
                key,
            });
        }
    }

    let width = sweep_header().len();
    let run = |t: &Task, inner_workers: usize| -> (Vec<String>, String, Option<Error>) {
        let path = point_dir.join(format!("{}.csv", t.key));
        if let Some(row) = read_cached(&path, width) {
            return (row, "cached".into(), None);
        }
        let (res, err) = match evaluate(&t.cfg, t.method, sim, opts, exact, inner_workers) {
            Ok(r) => (r, None),
            Err(e) => (PointResult::empty(&t.cfg, t.method, "failed"), Some(e)),
        };
        let mut row = vec![spec.param.as_str().to_string(), fmt_f64(t.value)];
        row.extend(res.record(&t.cfg));
        if err.is_none() {
            if let Err(e) = write_point(&path, &row) {
                return (row, "failed".into(), Some(e));
            }
        }
        let status = if err.is_some() { "failed" } else { "done" };
        (row, status.into(), err)
    };

    // analytic points in parallel, simulations one at a time with the
    // pool spread over realizations
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::validation("workers", e.to_string()))?;
    let analytic: Vec<_> = pool.install(|| {
        tasks
            .par_iter()
            .filter(|t| t.method != Method::Sim)
            .map(|t| (t.index, run(t, 1)))
            .collect()
    });
    let mut results: Vec<Option<PointOutcome>> = (0..tasks.len()).map(|_| None).collect();
    for (i, r) in analytic {
        results[i] = Some(r);
    }
    for t in tasks.iter().filter(|t| t.method == Method::Sim) {
        results[t.index] = Some(run(t, workers));
    }

    let mut manifest = RunManifest::new("sweep", base.config_hash(), sim.seed);
    let mut rows = Vec::with_capacity(tasks.len());
    let mut first_error = None;
    for (t, r) in tasks.iter().zip(results) {
        let (row, status, err) = r.expect("every task ran");
        manifest.points.push(PointEntry {
            index: t.index,
            key: t.key.clone(),
            config_hash: t.cfg.config_hash(),
            method: t.method.to_string(),
            status,
            error: err.as_ref().map(|e| e.to_string()),
        });
        if first_error.is_none() {
            first_error = err;
        }
        rows.push(row);
    }
    let output = out.join(SWEEP_FILE);
    write_csv(&output, &sweep_header(), &rows)?;
    manifest.outputs.push(output.clone());
    Ok(SweepOutcome {
        rows,
        manifest,
        first_error,
        output,
    })
}
