//! Evaluation of a single configuration point by simulation or analysis.

use std::fmt;
use std::str::FromStr;

use crate::analytic::{
    aoi_predict_with, beta_meta, critical_xi, exact_meta_cdf, solve_ps, uniform_grid, ExactOptions, MetaDistribution,
    PredictMethod, PredictOptions,
};
use crate::config::{Discipline, NetworkConfig, SimParams};
use crate::error::{Error, Result};
use crate::sim::{simulate, SimOptions, SimResults};

use super::output::fmt_f64;

/// One way of evaluating a configuration point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sim,
    Analytic(PredictMethod),
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sim => "sim",
            Method::Analytic(m) => m.as_str(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" => Ok(Method::Sim),
            other => other.parse().map(Method::Analytic).map_err(|_| {
                Error::validation(
                    "method",
                    format!("unknown method `{other}` (sim, beta, exact, mean)"),
                )
            }),
        }
    }
}

pub const RESULT_HEADER: [&str; 26] = [
    "config_hash",
    "lambda",
    "r",
    "xi",
    "p",
    "theta_db",
    "method",
    "status",
    "p_s",
    "xi_c",
    "c1",
    "c2",
    "beta_a",
    "beta_b",
    "avg_fcfs",
    "peak_fcfs",
    "avg_lcfs",
    "peak_lcfs",
    "avg_fcfs_hw",
    "peak_fcfs_hw",
    "avg_lcfs_hw",
    "peak_lcfs_hw",
    "unstable_mass",
    "iterations",
    "residual",
    "ks_to_beta",
];

/// Metrics of one configuration point. Fields that a method does not
/// produce are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub config_hash: String,
    pub method: Method,
    /// `ok`, `unstable` or `failed`.
    pub status: String,
    pub p_s: f64,
    pub xi_c: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub avg_fcfs: f64,
    pub peak_fcfs: f64,
    pub avg_lcfs: f64,
    pub peak_lcfs: f64,
    pub avg_fcfs_hw: f64,
    pub peak_fcfs_hw: f64,
    pub avg_lcfs_hw: f64,
    pub peak_lcfs_hw: f64,
    /// Analytic: meta-distribution mass excluded from the FCFS averages.
    /// Simulation: share of links outside the stable-link aggregate.
    pub unstable_mass: f64,
    pub iterations: f64,
    pub residual: f64,
    /// Kolmogorov distance between the exact and Beta meta distributions.
    pub ks_to_beta: f64,
}

impl PointResult {
    pub fn empty(cfg: &NetworkConfig, method: Method, status: &str) -> Self {
        let n = f64::NAN;
        PointResult {
            config_hash: cfg.config_hash(),
            method,
            status: status.into(),
            p_s: n,
            xi_c: n,
            c1: n,
            c2: n,
            beta_a: n,
            beta_b: n,
            avg_fcfs: n,
            peak_fcfs: n,
            avg_lcfs: n,
            peak_lcfs: n,
            avg_fcfs_hw: n,
            peak_fcfs_hw: n,
            avg_lcfs_hw: n,
            peak_lcfs_hw: n,
            unstable_mass: n,
            iterations: n,
            residual: n,
            ks_to_beta: n,
        }
    }

    pub fn record(&self, cfg: &NetworkConfig) -> Vec<String> {
        let p = cfg.params();
        let mut out = vec![
            self.config_hash.clone(),
            fmt_f64(p.lambda_per_m2),
            fmt_f64(p.link_distance_m),
            fmt_f64(p.xi),
            fmt_f64(p.access_p),
            fmt_f64(p.theta_db),
            self.method.to_string(),
            self.status.clone(),
        ];
        out.extend(
            [
                self.p_s,
                self.xi_c,
                self.c1,
                self.c2,
                self.beta_a,
                self.beta_b,
                self.avg_fcfs,
                self.peak_fcfs,
                self.avg_lcfs,
                self.peak_lcfs,
                self.avg_fcfs_hw,
                self.peak_fcfs_hw,
                self.avg_lcfs_hw,
                self.peak_lcfs_hw,
                self.unstable_mass,
                self.iterations,
                self.residual,
                self.ks_to_beta,
            ]
            .map(fmt_f64),
        );
        out
    }
}

/// Grid used for Kolmogorov distances between meta distributions.
pub fn ks_grid() -> Vec<f64> {
    uniform_grid(1001)
}

/// Analytic evaluation of `cfg`. Points at or beyond the critical rate
/// are reported with status `unstable` and infinite AoI.
pub fn analyze_point(cfg: &NetworkConfig, method: PredictMethod, exact: &ExactOptions) -> Result<PointResult> {
    let mut row = PointResult::empty(cfg, Method::Analytic(method), "ok");
    let stab = critical_xi(cfg)?;
    row.xi_c = stab.xi_c;
    let ps = solve_ps(cfg)?;
    row.p_s = ps.p_s;
    if cfg.xi() >= stab.xi_c {
        row.status = "unstable".into();
        row.avg_fcfs = f64::INFINITY;
        row.peak_fcfs = f64::INFINITY;
        row.avg_lcfs = f64::INFINITY;
        row.peak_lcfs = f64::INFINITY;
        return Ok(row);
    }
    let meta: MetaDistribution = match method {
        PredictMethod::MeanApprox => {
            row.c1 = ps.p_s;
            row.iterations = ps.iterations as f64;
            row.residual = ps.residual;
            MetaDistribution::degenerate(ps.p_s)
        }
        PredictMethod::BetaMeta => {
            let m = beta_meta(cfg)?;
            row.beta_a = m.shape_a;
            row.beta_b = m.shape_b;
            m
        }
        PredictMethod::ExactMeta => {
            let m = exact_meta_cdf(cfg, exact)?;
            let b = beta_meta(cfg)?;
            row.beta_a = b.shape_a;
            row.beta_b = b.shape_b;
            row.ks_to_beta = m.kolmogorov_distance(&b, &ks_grid());
            m
        }
    };
    if method != PredictMethod::MeanApprox {
        row.c1 = meta.c1;
        row.c2 = meta.c2;
        row.iterations = meta.iterations_used as f64;
        row.residual = meta.converged_residual;
    }
    let a = aoi_predict_with(cfg, &meta, method, stab.xi_c, &PredictOptions::default())?;
    row.avg_fcfs = a.avg_fcfs;
    row.peak_fcfs = a.peak_fcfs;
    row.avg_lcfs = a.avg_lcfs;
    row.peak_lcfs = a.peak_lcfs;
    row.unstable_mass = a.unstable_mass;
    Ok(row)
}

/// Simulation results for the same deployment under both disciplines.
#[derive(Debug, Clone)]
pub struct SimPair {
    pub fcfs: SimResults,
    pub lcfs: SimResults,
}

pub fn simulate_both(cfg: &NetworkConfig, sim: &SimParams, opts: &SimOptions, workers: usize) -> Result<SimPair> {
    let fcfs = simulate(&cfg.with(|q| q.discipline = Discipline::Fcfs)?, sim, opts, workers)?;
    let lcfs = simulate(&cfg.with(|q| q.discipline = Discipline::LcfsPr)?, sim, opts, workers)?;
    Ok(SimPair { fcfs, lcfs })
}

/// FCFS figures use the stable-link aggregate, LCFS-PR the network
/// average. A run flagged unstable reports infinite AoI.
pub fn sim_point(cfg: &NetworkConfig, pair: &SimPair) -> PointResult {
    let mut row = PointResult::empty(cfg, Method::Sim, "ok");
    let mus = pair.fcfs.mu_samples();
    if !mus.is_empty() {
        let n = mus.len() as f64;
        row.c1 = mus.iter().sum::<f64>() / n;
        row.c2 = mus.iter().map(|m| m * m).sum::<f64>() / n;
    }
    let (f, l) = (&pair.fcfs, &pair.lcfs);
    let inf_if = |unstable: bool, x: f64| if unstable { f64::INFINITY } else { x };
    row.avg_fcfs = inf_if(f.unstable, f.stable_avg_aoi.mean);
    row.peak_fcfs = inf_if(f.unstable, f.stable_peak_aoi.mean);
    row.avg_lcfs = inf_if(l.unstable, l.network_avg_aoi.mean);
    row.peak_lcfs = inf_if(l.unstable, l.network_peak_aoi.mean);
    row.avg_fcfs_hw = f.stable_avg_aoi.half_width;
    row.peak_fcfs_hw = f.stable_peak_aoi.half_width;
    row.avg_lcfs_hw = l.network_avg_aoi.half_width;
    row.peak_lcfs_hw = l.network_peak_aoi.half_width;
    if !f.links.is_empty() {
        row.unstable_mass = 1.0 - f.stable_links as f64 / f.links.len() as f64;
    }
    row.residual = f.median_queue_slope;
    if f.unstable || l.unstable {
        row.status = "unstable".into();
    }
    row
}

pub fn evaluate(
    cfg: &NetworkConfig,
    method: Method,
    sim: &SimParams,
    opts: &SimOptions,
    exact: &ExactOptions,
    workers: usize,
) -> Result<PointResult> {
    match method {
        Method::Sim => Ok(sim_point(cfg, &simulate_both(cfg, sim, opts, workers)?)),
        Method::Analytic(m) => analyze_point(cfg, m, exact),
    }
}
