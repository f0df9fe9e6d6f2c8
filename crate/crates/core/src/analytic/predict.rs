//! Network-level AoI: the single-link expressions averaged over the meta
//! distribution of the success probability.

use std::fmt;
use std::str::FromStr;

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::sim::DEFAULT_SERVICE_MARGIN;

use super::conditional::{cond_aoi_fcfs, cond_aoi_lcfs};
use super::meta::{MetaDistribution, MetaKind};
use super::stability::{critical_xi, solve_ps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictMethod {
    ExactMeta,
    #[default]
    BetaMeta,
    MeanApprox,
}

impl PredictMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictMethod::ExactMeta => "exact_meta",
            PredictMethod::BetaMeta => "beta_meta",
            PredictMethod::MeanApprox => "mean_approx",
        }
    }
}

impl fmt::Display for PredictMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PredictMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_meta" | "exact" => Ok(PredictMethod::ExactMeta),
            "beta_meta" | "beta" => Ok(PredictMethod::BetaMeta),
            "mean_approx" | "mean" => Ok(PredictMethod::MeanApprox),
            other => Err(Error::validation(
                "method",
                format!("unknown method `{other}` (exact_meta, beta_meta, mean_approx)"),
            )),
        }
    }
}

/// Which factor enters the LCFS-PR peak-age excess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LcfsPeakForm {
    /// 1/(1 − (1−ξ)(1−p t)) − 1, from deconditioning the single-link result.
    #[default]
    Lemma2,
    /// 1/(1 − (1−ξ)(1−ξ t)) − 1.
    PrintedTheorem4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictOptions {
    /// FCFS averages are taken over links with p·t − ξ ≥ margin. Zero asks
    /// for the strict average, which is infinite whenever F(ξ/p) > 1e-9.
    pub fcfs_margin: f64,
    pub lcfs_peak: LcfsPeakForm,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            fcfs_margin: DEFAULT_SERVICE_MARGIN,
            lcfs_peak: LcfsPeakForm::Lemma2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiPrediction {
    pub avg_fcfs: f64,
    pub peak_fcfs: f64,
    pub avg_lcfs: f64,
    pub peak_lcfs: f64,
    pub method: PredictMethod,
    /// Meta-distribution mass excluded from the FCFS averages.
    pub unstable_mass: f64,
}

/// Mass below ξ/p above which the strict FCFS average is reported infinite.
const STRICT_MASS: f64 = 1e-9;

fn lcfs_excess(xi: f64, p: f64, t: f64, form: LcfsPeakForm) -> f64 {
    let inner = match form {
        LcfsPeakForm::Lemma2 => p * t,
        LcfsPeakForm::PrintedTheorem4 => xi * t,
    };
    1.0 / (1.0 - (1.0 - xi) * (1.0 - inner)) - 1.0
}

fn fcfs_avg(xi: f64, s: f64) -> f64 {
    1.0 / xi + (1.0 - xi) / (s - xi) + xi / s - xi / (s * s) - 1.0
}

fn fcfs_peak(xi: f64, s: f64) -> f64 {
    1.0 / xi + (1.0 - xi) / (s - xi)
}

/// AoI averaged over `meta`. Checks ξ < ξ_c first.
pub fn aoi_predict(cfg: &NetworkConfig, meta: &MetaDistribution, method: PredictMethod) -> Result<AoiPrediction> {
    let xi_c = critical_xi(cfg)?.xi_c;
    aoi_predict_with(cfg, meta, method, xi_c, &PredictOptions::default())
}

/// As [`aoi_predict`] with a precomputed critical rate. `meta` is ignored by
/// the mean approximation.
pub fn aoi_predict_with(
    cfg: &NetworkConfig,
    meta: &MetaDistribution,
    method: PredictMethod,
    xi_c: f64,
    opts: &PredictOptions,
) -> Result<AoiPrediction> {
    let xi = cfg.xi();
    let p = cfg.access_p();
    if xi >= xi_c {
        return Err(Error::Unstable { xi, xi_c });
    }
    if method == PredictMethod::MeanApprox {
        return mean_approx(cfg, opts);
    }

    // FCFS over the links that clear the service margin
    let t0 = (xi + opts.fcfs_margin.max(0.0)) / p;
    let (avg_fcfs, peak_fcfs, unstable_mass) = if opts.fcfs_margin <= 0.0 {
        let mass = meta.cdf(xi / p);
        if mass > STRICT_MASS {
            (f64::INFINITY, f64::INFINITY, mass)
        } else {
            let avg = meta.expect(xi / p, |t| fcfs_avg(xi, p * t));
            let peak = meta.expect(xi / p, |t| fcfs_peak(xi, p * t));
            (avg, peak, mass)
        }
    } else if t0 >= 1.0 {
        (f64::INFINITY, f64::INFINITY, 1.0)
    } else {
        let mass = meta.cdf(t0);
        let keep = 1.0 - mass;
        if keep <= 0.0 {
            (f64::INFINITY, f64::INFINITY, 1.0)
        } else {
            let avg = meta.expect(t0, |t| fcfs_avg(xi, p * t)) / keep;
            let peak = meta.expect(t0, |t| fcfs_peak(xi, p * t)) / keep;
            (avg, peak, mass)
        }
    };

    // LCFS-PR over every link
    let inv_mean = match meta.kind {
        MetaKind::Beta => {
            let (a, b) = (meta.shape_a, meta.shape_b);
            if a <= 1.0 {
                f64::INFINITY
            } else {
                (a + b - 1.0) / (a - 1.0)
            }
        }
        _ => meta.expect(0.0, |t| 1.0 / t),
    };
    let avg_lcfs = 1.0 / xi + inv_mean / p - 1.0;
    let peak_lcfs = avg_lcfs + meta.expect(0.0, |t| lcfs_excess(xi, p, t, opts.lcfs_peak));

    Ok(AoiPrediction {
        avg_fcfs,
        peak_fcfs,
        avg_lcfs,
        peak_lcfs,
        method,
        unstable_mass,
    })
}

/// Single-link formulas with the success probability set to p_s.
fn mean_approx(cfg: &NetworkConfig, opts: &PredictOptions) -> Result<AoiPrediction> {
    let xi = cfg.xi();
    let p = cfg.access_p();
    let ps = solve_ps(cfg)?.p_s;
    let service = p * ps;
    let f = cond_aoi_fcfs(xi, service)?;
    let l = cond_aoi_lcfs(xi, service)?;
    Ok(AoiPrediction {
        avg_fcfs: f.avg,
        peak_fcfs: f.peak,
        avg_lcfs: l.avg,
        peak_lcfs: l.avg + lcfs_excess(xi, p, ps, opts.lcfs_peak),
        method: PredictMethod::MeanApprox,
        unstable_mass: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::meta::beta_meta;
    use crate::config::NetworkParams;
    use approx::assert_relative_eq;

    fn cfg(edit: impl FnOnce(&mut NetworkParams)) -> NetworkConfig {
        let mut p = NetworkParams::default();
        edit(&mut p);
        p.validate().unwrap()
    }

    #[test]
    fn degenerate_collapses_to_single_link() {
        let c = NetworkConfig::default();
        let m = MetaDistribution::degenerate(1.0);
        let a = aoi_predict_with(&c, &m, PredictMethod::BetaMeta, 0.6, &PredictOptions::default()).unwrap();
        assert_relative_eq!(a.avg_fcfs, 13.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(a.peak_fcfs, 17.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(a.avg_lcfs, 4.0, max_relative = 1e-12);
        assert_relative_eq!(a.peak_lcfs, 4.0 + 1.0 / 0.72 - 1.0, max_relative = 1e-12);
        assert_eq!(a.unstable_mass, 0.0);
    }

    #[test]
    fn above_critical_rate_is_error() {
        let c = NetworkConfig::default();
        let m = MetaDistribution::degenerate(1.0);
        let e = aoi_predict_with(&c, &m, PredictMethod::BetaMeta, 0.2, &PredictOptions::default());
        assert!(matches!(e, Err(Error::Unstable { .. })));
    }

    #[test]
    fn strict_margin_reports_infinite_fcfs() {
        let c = cfg(|p| p.link_distance_m = 25.0);
        let m = beta_meta(&c).unwrap();
        let opts = PredictOptions {
            fcfs_margin: 0.0,
            ..Default::default()
        };
        let a = aoi_predict_with(&c, &m, PredictMethod::BetaMeta, 0.6, &opts).unwrap();
        assert!(a.avg_fcfs.is_infinite());
        assert!(a.unstable_mass > 1e-9);
        assert!(a.avg_lcfs.is_finite());
    }

    #[test]
    fn invariants_at_defaults() {
        let c = NetworkConfig::default();
        let m = beta_meta(&c).unwrap();
        for method in [PredictMethod::BetaMeta, PredictMethod::MeanApprox] {
            let a = aoi_predict(&c, &m, method).unwrap();
            let floor = 1.0 / c.xi() - 2.0;
            for v in [a.avg_fcfs, a.peak_fcfs, a.avg_lcfs, a.peak_lcfs] {
                assert!(v.is_finite() && v >= floor, "{method}: {v}");
            }
            assert!(a.peak_fcfs >= a.avg_fcfs - 1.0);
            assert!(a.peak_lcfs >= a.avg_lcfs);
            assert!(a.avg_lcfs <= a.avg_fcfs);
        }
    }

    #[test]
    fn beta_and_mean_approx_agree_roughly() {
        let c = NetworkConfig::default();
        let m = beta_meta(&c).unwrap();
        let b = aoi_predict(&c, &m, PredictMethod::BetaMeta).unwrap();
        let a = aoi_predict(&c, &m, PredictMethod::MeanApprox).unwrap();
        assert!((b.avg_lcfs - a.avg_lcfs).abs() / a.avg_lcfs < 0.1);
    }

    #[test]
    fn printed_peak_form_differs() {
        let c = NetworkConfig::default();
        let m = beta_meta(&c).unwrap();
        let xi_c = critical_xi(&c).unwrap().xi_c;
        let lemma = aoi_predict_with(&c, &m, PredictMethod::BetaMeta, xi_c, &PredictOptions::default()).unwrap();
        let printed = aoi_predict_with(
            &c,
            &m,
            PredictMethod::BetaMeta,
            xi_c,
            &PredictOptions {
                lcfs_peak: LcfsPeakForm::PrintedTheorem4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(lemma.avg_lcfs, printed.avg_lcfs);
        // ξ < p, so the printed form has the larger excess
        assert!(printed.peak_lcfs > lemma.peak_lcfs);
    }

    #[test]
    fn sparse_limit_disciplines_coincide() {
        let c = cfg(|p| {
            p.lambda_per_m2 = 1e-6;
            p.access_p = 1.0;
            p.theta_db = -60.0;
        });
        let m = beta_meta(&c).unwrap();
        let a = aoi_predict(&c, &m, PredictMethod::BetaMeta).unwrap();
        // with service probability 1 both disciplines give 1/ξ
        let f = cond_aoi_fcfs(0.3, 1.0).unwrap();
        let l = cond_aoi_lcfs(0.3, 1.0).unwrap();
        assert_relative_eq!(a.avg_fcfs, f.avg, max_relative = 1e-4);
        assert_relative_eq!(a.avg_lcfs, l.avg, max_relative = 1e-4);
        assert!((f.avg - l.avg).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [PredictMethod::ExactMeta, PredictMethod::BetaMeta, PredictMethod::MeanApprox] {
            assert_eq!(m.as_str().parse::<PredictMethod>().unwrap(), m);
        }
        assert!("bogus".parse::<PredictMethod>().is_err());
    }
}
