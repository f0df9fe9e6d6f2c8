//! Slot-level Monte Carlo simulation of the network.

pub mod engine;
pub mod link;

use rayon::prelude::*;

use crate::config::{NetworkConfig, SimParams};
use crate::error::{Error, Result};
use crate::rng::RngContract;

pub use engine::{
    run_on_deployment, run_realization, FadingMode, LinkReport, PeakSampler, RealizationOutcome,
    SimOptions, Simulation, MIN_ATTEMPTS, MIN_RESETS,
};
pub use link::{Delivery, LinkState};

/// Median per-link queue slope (packets/slot) above which a run is labelled
/// unstable.
pub const SLOPE_THRESHOLD: f64 = 1e-3;

/// Default minimum service margin p·μ̂ − ξ for the stable-link FCFS aggregate.
pub const DEFAULT_SERVICE_MARGIN: f64 = 0.01;

/// Grid of the empirical success-probability CDF.
pub fn mu_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Mean and 95% half-width over per-realization means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    fn nan() -> Self {
        Estimate {
            mean: f64::NAN,
            half_width: f64::NAN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimResults {
    pub seed: u64,
    pub slots: u64,
    pub warmup: u64,
    pub realizations: u32,
    pub links: Vec<LinkReport>,
    /// Mean of per-link average AoI over all links.
    pub network_avg_aoi: Estimate,
    /// Mean of per-link peak AoI over links with enough resets.
    pub network_peak_aoi: Estimate,
    /// Same aggregates restricted to links whose measured service margin
    /// p·μ̂ − ξ is at least `service_margin`.
    pub stable_avg_aoi: Estimate,
    pub stable_peak_aoi: Estimate,
    pub stable_links: usize,
    pub service_margin: f64,
    /// (u, F(u)) of pooled μ̂.
    pub mu_cdf: Vec<(f64, f64)>,
    pub mu_mean: f64,
    pub mean_activity: f64,
    pub excluded_mu: usize,
    pub excluded_peak: usize,
    pub median_queue_slope: f64,
    pub aborted_realizations: u32,
    pub resamples: u32,
    pub unstable: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pooled mean over links, with the half-width taken across realization means.
fn pooled(groups: &[Vec<f64>]) -> Estimate {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    if all.is_empty() {
        return Estimate::nan();
    }
    let per: Vec<f64> = groups.iter().filter(|g| !g.is_empty()).map(|g| mean(g)).collect();
    let half_width = if per.len() >= 2 {
        let m = mean(&per);
        let var = per.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (per.len() - 1) as f64;
        1.96 * (var / per.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    Estimate {
        mean: mean(&all),
        half_width,
    }
}

/// Empirical CDF of `samples` on `grid`.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> Vec<(f64, f64)> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    grid.iter()
        .map(|&u| {
            let k = s.partition_point(|&x| x <= u + 1e-12);
            (u, if s.is_empty() { f64::NAN } else { k as f64 / s.len() as f64 })
        })
        .collect()
}

impl SimResults {
    pub fn aggregate(
        cfg: &NetworkConfig,
        sim: &SimParams,
        outcomes: Vec<RealizationOutcome>,
        service_margin: f64,
    ) -> Self {
        let p = cfg.access_p();
        let xi = cfg.xi();
        let r = outcomes.len();
        let mut avg = vec![Vec::new(); r];
        let mut peak = vec![Vec::new(); r];
        let mut s_avg = vec![Vec::new(); r];
        let mut s_peak = vec![Vec::new(); r];
        let mut mus = Vec::new();
        let mut slopes = Vec::new();
        let mut activity = Vec::new();
        let (mut excluded_mu, mut excluded_peak, mut stable_links) = (0, 0, 0);
        let mut links = Vec::new();
        let mut aborted = 0;
        let mut resamples = 0;
        for (k, o) in outcomes.into_iter().enumerate() {
            aborted += o.aborted_at.is_some() as u32;
            resamples += o.resamples;
            for l in &o.links {
                avg[k].push(l.avg_aoi);
                activity.push(l.activity);
                slopes.push(l.queue_slope);
                match l.peak_aoi {
                    Some(v) => peak[k].push(v),
                    None => excluded_peak += 1,
                }
                match l.mu_hat {
                    Some(m) => {
                        mus.push(m);
                        if p * m - xi >= service_margin {
                            stable_links += 1;
                            s_avg[k].push(l.avg_aoi);
                            if let Some(v) = l.peak_aoi {
                                s_peak[k].push(v);
                            }
                        }
                    }
                    None => excluded_mu += 1,
                }
            }
            links.extend(o.links);
        }
        let median_queue_slope = median(&slopes);
        let unstable = aborted > 0 || median_queue_slope > SLOPE_THRESHOLD;
        SimResults {
            seed: sim.seed,
            slots: sim.slots,
            warmup: sim.warmup(),
            realizations: r as u32,
            links,
            network_avg_aoi: pooled(&avg),
            network_peak_aoi: pooled(&peak),
            stable_avg_aoi: pooled(&s_avg),
            stable_peak_aoi: pooled(&s_peak),
            stable_links,
            service_margin,
            mu_cdf: empirical_cdf(&mus, &mu_grid()),
            mu_mean: if mus.is_empty() { f64::NAN } else { mean(&mus) },
            mean_activity: if activity.is_empty() { f64::NAN } else { mean(&activity) },
            excluded_mu,
            excluded_peak,
            median_queue_slope,
            aborted_realizations: aborted,
            resamples,
            unstable,
        }
    }

    /// Pooled μ̂ values of links with enough attempts.
    pub fn mu_samples(&self) -> Vec<f64> {
        self.links.iter().filter_map(|l| l.mu_hat).collect()
    }
}

/// Run `sim.realizations` independent realizations on a pool of `workers`
/// threads. Output does not depend on `workers`.
pub fn run_outcomes(
    cfg: &NetworkConfig,
    sim: &SimParams,
    opts: &SimOptions,
    workers: usize,
) -> Result<Vec<RealizationOutcome>> {
    sim.validate()?;
    let rng = RngContract::new(sim.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::validation("workers", e.to_string()))?;
    pool.install(|| {
        (0..sim.realizations)
            .into_par_iter()
            .map(|k| run_realization(cfg, sim, opts, &rng, k))
            .collect()
    })
}

pub fn simulate(
    cfg: &NetworkConfig,
    sim: &SimParams,
    opts: &SimOptions,
    workers: usize,
) -> Result<SimResults> {
    let outcomes = run_outcomes(cfg, sim, opts, workers)?;
    Ok(SimResults::aggregate(cfg, sim, outcomes, DEFAULT_SERVICE_MARGIN))
}

/// Pooled empirical CDF of per-link success probability.
pub fn estimate_mu_cdf(
    cfg: &NetworkConfig,
    sim: &SimParams,
    opts: &SimOptions,
    workers: usize,
) -> Result<Vec<(f64, f64)>> {
    Ok(simulate(cfg, sim, opts, workers)?.mu_cdf)
}

#[derive(Debug, Clone)]
pub struct StabilityProbe {
    pub slopes: Vec<f64>,
    pub median_slope: f64,
    pub unstable: bool,
}

/// Queue-growth diagnostic: per-link least-squares queue slope over the
/// second half of the run.
pub fn stability_probe(
    cfg: &NetworkConfig,
    sim: &SimParams,
    opts: &SimOptions,
    workers: usize,
) -> Result<StabilityProbe> {
    let outcomes = run_outcomes(cfg, sim, opts, workers)?;
    let aborted = outcomes.iter().any(|o| o.aborted_at.is_some());
    let slopes: Vec<f64> = outcomes
        .iter()
        .flat_map(|o| o.links.iter().map(|l| l.queue_slope))
        .collect();
    let median_slope = median(&slopes);
    Ok(StabilityProbe {
        unstable: aborted || median_slope > SLOPE_THRESHOLD,
        slopes,
        median_slope,
    })
}
