//! Figure-ready data: simulation and analysis side by side.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::{beta_meta, critical_xi, exact_meta_cdf, ExactOptions, PredictMethod};
use crate::config::{NetworkConfig, SimParams};
use crate::error::{Error, Result};
use crate::sim::{mu_grid, simulate, SimOptions};

use super::output::{fmt_f64, write_csv, PointEntry, RunManifest};
use super::point::{analyze_point, sim_point, simulate_both, Method, PointResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Cdf,
    Stability,
    AoiVsXi,
    AoiVsP,
    AoiVsLambda,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Cdf,
        Figure::Stability,
        Figure::AoiVsXi,
        Figure::AoiVsP,
        Figure::AoiVsLambda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Cdf => "cdf",
            Figure::Stability => "stability",
            Figure::AoiVsXi => "aoi_vs_xi",
            Figure::AoiVsP => "aoi_vs_p",
            Figure::AoiVsLambda => "aoi_vs_lambda",
        }
    }

    pub fn file_name(self) -> String {
        format!("fig_{}.csv", self.as_str())
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Link distances of the stability figure, m.
pub fn stability_distances() -> Vec<f64> {
    (1..=20).map(|k| 5.0 * k as f64).collect()
}

/// Access probabilities of the stability figure.
pub const STABILITY_P: [f64; 3] = [0.3, 0.6, 1.0];

/// Update rates of the CDF figure, evaluated at r = 25 m.
pub const CDF_XI: [f64; 3] = [0.1, 0.3, 0.5];
pub const CDF_DISTANCE: f64 = 25.0;

pub fn xi_values() -> Vec<f64> {
    (1..=11).map(|k| (k as f64 * 0.05 * 100.0).round() / 100.0).collect()
}

pub fn p_values() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

/// (λ, ξ) curves of the access-probability figure. In the dense case the
/// rate is lowered to 0.1 because ξ = 0.3 exceeds the critical rate for
/// every p at λ = 2e-3.
pub const AOI_VS_P_CURVES: [(f64, f64); 4] = [(1e-4, 0.1), (1e-4, 0.3), (1e-4, 0.6), (2e-3, 0.1)];

pub fn lambda_values() -> Vec<f64> {
    vec![1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3]
}

/// Update rate of the density figure, kept below the critical rate at
/// λ = 1e-3.
pub const AOI_VS_LAMBDA_XI: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct FigureSettings {
    pub method: PredictMethod,
    pub sim: SimParams,
    pub sim_opts: SimOptions,
    pub exact: ExactOptions,
    pub workers: usize,
    pub skip_sim: bool,
}

#[derive(Debug)]
pub struct FigureOutput {
    pub path: PathBuf,
    pub manifest: RunManifest,
}

const AOI_COLUMNS: [&str; 14] = [
    "avg_fcfs_sim",
    "peak_fcfs_sim",
    "avg_lcfs_sim",
    "peak_lcfs_sim",
    "avg_fcfs_ana",
    "peak_fcfs_ana",
    "avg_lcfs_ana",
    "peak_lcfs_ana",
    "avg_fcfs_sim_hw",
    "peak_fcfs_sim_hw",
    "avg_lcfs_sim_hw",
    "peak_lcfs_sim_hw",
    "xi_c",
    "config_hash",
];

struct Recorder<'a> {
    manifest: RunManifest,
    settings: &'a FigureSettings,
}

impl Recorder<'_> {
    fn entry(&mut self, cfg: &NetworkConfig, method: &str, status: &str, err: Option<&Error>) {
        if let Some(e) = err {
            eprintln!("warning: {method} at {}: {e}", cfg.config_hash());
        }
        let index = self.manifest.points.len();
        self.manifest.points.push(PointEntry {
            index,
            key: format!("{index}"),
            config_hash: cfg.config_hash(),
            method: method.into(),
            status: status.into(),
            error: err.map(|e| e.to_string()),
        });
    }

    fn analytic(&mut self, cfg: &NetworkConfig) -> PointResult {
        let m = self.settings.method;
        match analyze_point(cfg, m, &self.settings.exact) {
            Ok(r) => {
                self.entry(cfg, m.as_str(), &r.status, None);
                r
            }
            Err(e) => {
                self.entry(cfg, m.as_str(), "failed", Some(&e));
                PointResult::empty(cfg, Method::Analytic(m), "failed")
            }
        }
    }

    fn simulated(&mut self, cfg: &NetworkConfig) -> PointResult {
        if self.settings.skip_sim {
            return PointResult::empty(cfg, Method::Sim, "skipped");
        }
        let s = self.settings;
        match simulate_both(cfg, &s.sim, &s.sim_opts, s.workers) {
            Ok(pair) => {
                let r = sim_point(cfg, &pair);
                self.entry(cfg, "sim", &r.status, None);
                r
            }
            Err(e) => {
                self.entry(cfg, "sim", "failed", Some(&e));
                PointResult::empty(cfg, Method::Sim, "failed")
            }
        }
    }

    fn aoi_row(&mut self, cfg: &NetworkConfig, lead: Vec<String>) -> Vec<String> {
        let ana = self.analytic(cfg);
        let sim = self.simulated(cfg);
        let mut row = lead;
        row.extend(
            [
                sim.avg_fcfs,
                sim.peak_fcfs,
                sim.avg_lcfs,
                sim.peak_lcfs,
                ana.avg_fcfs,
                ana.peak_fcfs,
                ana.avg_lcfs,
                ana.peak_lcfs,
                sim.avg_fcfs_hw,
                sim.peak_fcfs_hw,
                sim.avg_lcfs_hw,
                sim.peak_lcfs_hw,
                ana.xi_c,
            ]
            .map(fmt_f64),
        );
        row.push(cfg.config_hash());
        row
    }
}

fn header(lead: &[&'static str]) -> Vec<&'static str> {
    let mut h = lead.to_vec();
    h.extend(AOI_COLUMNS);
    h
}

/// Compute the data behind `fig` from `base` and write `fig_<name>.csv`.
pub fn run_figure(fig: Figure, base: &NetworkConfig, settings: &FigureSettings, out: &Path) -> Result<FigureOutput> {
    settings.sim.validate()?;
    let mut rec = Recorder {
        manifest: RunManifest::new(&format!("figure {fig}"), base.config_hash(), settings.sim.seed),
        settings,
    };
    let (head, rows): (Vec<&str>, Vec<Vec<String>>) = match fig {
        Figure::Cdf => {
            let grid = mu_grid();
            let mut rows = Vec::new();
            for xi in CDF_XI {
                let cfg = base.with(|q| {
                    q.xi = xi;
                    q.link_distance_m = CDF_DISTANCE;
                })?;
                let f_sim = if settings.skip_sim {
                    vec![f64::NAN; grid.len()]
                } else {
                    match simulate(&cfg, &settings.sim, &settings.sim_opts, settings.workers) {
                        Ok(r) => {
                            rec.entry(&cfg, "sim", "done", None);
                            r.mu_cdf.iter().map(|c| c.1).collect()
                        }
                        Err(e) => {
                            rec.entry(&cfg, "sim", "failed", Some(&e));
                            vec![f64::NAN; grid.len()]
                        }
                    }
                };
                let beta = beta_meta(&cfg);
                rec.entry(&cfg, "beta_meta", if beta.is_ok() { "done" } else { "failed" }, beta.as_ref().err());
                let exact = exact_meta_cdf(&cfg, &settings.exact);
                rec.entry(&cfg, "exact_meta", if exact.is_ok() { "done" } else { "failed" }, exact.as_ref().err());
                for (i, &u) in grid.iter().enumerate() {
                    rows.push(vec![
                        fmt_f64(u),
                        fmt_f64(f_sim[i]),
                        fmt_f64(beta.as_ref().map_or(f64::NAN, |m| m.cdf(u))),
                        fmt_f64(exact.as_ref().map_or(f64::NAN, |m| m.cdf(u))),
                        fmt_f64(xi),
                    ]);
                }
            }
            (vec!["u", "F_sim", "F_beta", "F_exact", "xi"], rows)
        }
        Figure::Stability => {
            let mut rows = Vec::new();
            for p in STABILITY_P {
                for r in stability_distances() {
                    let cfg = base.with(|q| {
                        q.access_p = p;
                        q.link_distance_m = r;
                    })?;
                    let s = critical_xi(&cfg)?;
                    rec.entry(&cfg, "stability", "done", None);
                    rows.push(vec![fmt_f64(r), fmt_f64(p), fmt_f64(s.xi_c), fmt_f64(s.p_s)]);
                }
            }
            (vec!["r_m", "p", "xi_c", "p_s_at_xi_c"], rows)
        }
        Figure::AoiVsXi => {
            let mut rows = Vec::new();
            for xi in xi_values() {
                let cfg = base.with(|q| q.xi = xi)?;
                rows.push(rec.aoi_row(&cfg, vec![fmt_f64(xi)]));
            }
            (header(&["xi"]), rows)
        }
        Figure::AoiVsP => {
            let mut rows = Vec::new();
            for (lambda, xi) in AOI_VS_P_CURVES {
                for p in p_values() {
                    let cfg = base.with(|q| {
                        q.lambda_per_m2 = lambda;
                        q.xi = xi;
                        q.access_p = p;
                    })?;
                    rows.push(rec.aoi_row(&cfg, vec![fmt_f64(lambda), fmt_f64(xi), fmt_f64(p)]));
                }
            }
            (header(&["lambda", "xi", "p"]), rows)
        }
        Figure::AoiVsLambda => {
            let mut rows = Vec::new();
            for lambda in lambda_values() {
                let cfg = base.with(|q| {
                    q.lambda_per_m2 = lambda;
                    q.xi = AOI_VS_LAMBDA_XI;
                })?;
                rows.push(rec.aoi_row(&cfg, vec![fmt_f64(lambda), fmt_f64(AOI_VS_LAMBDA_XI)]));
            }
            (header(&["lambda", "xi"]), rows)
        }
    };
    let path = out.join(fig.file_name());
    write_csv(&path, &head, &rows)?;
    let mut manifest = rec.manifest;
    manifest.outputs.push(path.clone());
    Ok(FigureOutput { path, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.as_str().parse::<Figure>().unwrap(), f);
        }
        let e = "fig9".parse::<Figure>().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("aoi_vs_lambda"));
    }

    #[test]
    fn sweep_grids() {
        assert_eq!(xi_values().len(), 11);
        assert_eq!(xi_values()[2], 0.15);
        assert_eq!(p_values()[9], 1.0);
        assert_eq!(stability_distances().last(), Some(&100.0));
    }

    #[test]
    fn density_rate_is_stable_everywhere() {
        for lambda in lambda_values() {
            let cfg = NetworkConfig::default()
                .with(|q| {
                    q.lambda_per_m2 = lambda;
                    q.xi = AOI_VS_LAMBDA_XI;
                })
                .unwrap();
            assert!(critical_xi(&cfg).unwrap().xi_c > AOI_VS_LAMBDA_XI);
        }
    }
}
