//! CSV and manifest writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{LinkReport, SimResults};

/// Shortest round-trip decimal, or `inf`/`-inf`/`nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_f64)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write `rows` under `header` to `path`.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Csv(csv::Error::from(std::io::Error::other(format!("{other:?}")))),
        })?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub const SIM_LINKS_HEADER: [&str; 9] = [
    "realization",
    "link_id",
    "avg_aoi",
    "peak_aoi",
    "mu_hat",
    "activity",
    "attempts",
    "resets",
    "queue_slope",
];

pub fn link_row(l: &LinkReport) -> Vec<String> {
    vec![
        l.realization.to_string(),
        l.link_id.to_string(),
        fmt_f64(l.avg_aoi),
        fmt_opt(l.peak_aoi),
        fmt_opt(l.mu_hat),
        fmt_f64(l.activity),
        l.attempts.to_string(),
        l.resets.to_string(),
        fmt_f64(l.queue_slope),
    ]
}

pub const SIM_SUMMARY_HEADER: [&str; 28] = [
    "config_hash",
    "lambda",
    "r",
    "xi",
    "p",
    "theta_db",
    "discipline",
    "seed",
    "realizations",
    "slots",
    "warmup",
    "links",
    "avg_aoi",
    "avg_aoi_hw",
    "peak_aoi",
    "peak_aoi_hw",
    "stable_avg_aoi",
    "stable_avg_aoi_hw",
    "stable_peak_aoi",
    "stable_peak_aoi_hw",
    "stable_links",
    "mu_mean",
    "mean_activity",
    "excluded_mu",
    "median_queue_slope",
    "aborted_realizations",
    "resamples",
    "unstable",
];

pub fn summary_row(cfg: &crate::config::NetworkConfig, r: &SimResults) -> Vec<String> {
    let p = cfg.params();
    // an unstable run has no stationary age
    let aoi = |x: f64| if r.unstable { "inf".to_string() } else { fmt_f64(x) };
    vec![
        cfg.config_hash(),
        fmt_f64(p.lambda_per_m2),
        fmt_f64(p.link_distance_m),
        fmt_f64(p.xi),
        fmt_f64(p.access_p),
        fmt_f64(p.theta_db),
        p.discipline.to_string(),
        r.seed.to_string(),
        r.realizations.to_string(),
        r.slots.to_string(),
        r.warmup.to_string(),
        r.links.len().to_string(),
        aoi(r.network_avg_aoi.mean),
        fmt_f64(r.network_avg_aoi.half_width),
        aoi(r.network_peak_aoi.mean),
        fmt_f64(r.network_peak_aoi.half_width),
        aoi(r.stable_avg_aoi.mean),
        fmt_f64(r.stable_avg_aoi.half_width),
        aoi(r.stable_peak_aoi.mean),
        fmt_f64(r.stable_peak_aoi.half_width),
        r.stable_links.to_string(),
        fmt_f64(r.mu_mean),
        fmt_f64(r.mean_activity),
        r.excluded_mu.to_string(),
        fmt_f64(r.median_queue_slope),
        r.aborted_realizations.to_string(),
        r.resamples.to_string(),
        r.unstable.to_string(),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointEntry {
    pub index: usize,
    pub key: String,
    pub config_hash: String,
    pub method: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub points: Vec<PointEntry>,
    pub outputs: Vec<PathBuf>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            config_hash,
            code_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            started_unix: unix_now(),
            finished_unix: 0,
            points: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}
