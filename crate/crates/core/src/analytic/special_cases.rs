//! Closed forms for limiting regimes and the throughput slope in p.

use std::f64::consts::PI;

use crate::config::NetworkConfig;
use crate::error::Result;
use crate::numerics::special::power_law_integral;

use super::stability::solve_ps;

/// λπr²θ^δ ∫₀^∞ dv/(1 + v^{α/2}), the dominant-system load per unit p.
fn dominant_load(cfg: &NetworkConfig) -> f64 {
    cfg.lambda() * PI * cfg.link_distance().powi(2) * cfg.theta().powf(cfg.delta()) * power_law_integral(cfg.alpha())
}

/// Throughput-maximizing access probability when every interferer is
/// backlogged.
pub fn dominant_opt_p(cfg: &NetworkConfig) -> f64 {
    let load = dominant_load(cfg);
    if load <= 1.0 {
        1.0
    } else {
        1.0 / load
    }
}

/// p·E[μ] with every interferer backlogged.
pub fn dominant_throughput(cfg: &NetworkConfig, p: f64) -> f64 {
    p * (-cfg.noise_exponent() - p * dominant_load(cfg)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseAoi {
    pub avg_fcfs: f64,
    pub peak_fcfs: f64,
    pub avg_lcfs: f64,
    pub peak_lcfs: f64,
}

/// AoI as λ → 0, where the success probability is the noise-only one.
/// FCFS values are infinite when ξ ≥ p·e^{−θr^α/ρ}.
pub fn sparse_aoi(cfg: &NetworkConfig) -> SparseAoi {
    let xi = cfg.xi();
    let p = cfg.access_p();
    let e = cfg.noise_exponent().exp();
    let s = p / e;
    let (avg_fcfs, peak_fcfs) = if xi < s {
        let peak = 1.0 / xi + (1.0 - xi) / (s - xi);
        (peak + xi * e / p - xi * e * e / (p * p) - 1.0, peak)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let avg_lcfs = 1.0 / xi + e / p - 1.0;
    SparseAoi {
        avg_fcfs,
        peak_fcfs,
        avg_lcfs,
        peak_lcfs: avg_lcfs + 1.0 / (1.0 - (1.0 - xi) * (1.0 - s)) - 1.0,
    }
}

/// p·p_s at access probability `p`, other parameters from `cfg`.
pub fn throughput(cfg: &NetworkConfig, p: f64) -> Result<f64> {
    let c = cfg.with(|q| q.access_p = p)?;
    Ok(p * solve_ps(&c)?.p_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputSlope {
    /// ∂(p·p_s)/∂p by finite differences.
    pub derivative: f64,
    /// (1 − p·λπr²θ^δ∫dv/(1+v^{α/2}))·p_s, a lower bound on the derivative.
    pub lower_bound: f64,
    pub sign: i8,
}

/// Slope of p·p_s in p. A negative sign below p = 1 marks an interior
/// throughput optimum.
pub fn throughput_derivative(cfg: &NetworkConfig, p: f64) -> Result<ThroughputSlope> {
    let h = 1e-4;
    let (lo, hi) = ((p - h).max(1e-6), (p + h).min(1.0));
    let derivative = (throughput(cfg, hi)? - throughput(cfg, lo)?) / (hi - lo);
    let ps = solve_ps(&cfg.with(|q| q.access_p = p)?)?.p_s;
    let lower_bound = (1.0 - p * dominant_load(cfg)) * ps;
    let sign = if derivative > 0.0 {
        1
    } else if derivative < 0.0 {
        -1
    } else {
        0
    };
    Ok(ThroughputSlope {
        derivative,
        lower_bound,
        sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkParams;
    use crate::numerics::quadrature::adaptive_composite;
    use approx::assert_relative_eq;

    fn cfg(edit: impl FnOnce(&mut NetworkParams)) -> NetworkConfig {
        let mut p = NetworkParams::default();
        edit(&mut p);
        p.validate().unwrap()
    }

    #[test]
    fn power_law_integral_numeric_cross_check() {
        for alpha in [3.0, 3.8, 4.5] {
            let h = alpha / 2.0;
            let q = 1.0 / (h - 1.0);
            let (head, _, ok1) = adaptive_composite(&[0.0, 1.0], 1e-12, 4096, |v: f64| 1.0 / (1.0 + v.powf(h)));
            // v = s^{−q} on (0, 1] maps the tail to a smooth integrand
            let (tail, _, ok2) = adaptive_composite(&[0.0, 1.0], 1e-12, 4096, |s: f64| q / (1.0 + s.powf(q * h)));
            assert!(ok1 && ok2);
            let num = head + tail;
            assert_relative_eq!(num, power_law_integral(alpha), max_relative = 1e-6);
        }
    }

    #[test]
    fn light_load_clamps_to_one() {
        assert_eq!(dominant_opt_p(&NetworkConfig::default()), 1.0);
    }

    #[test]
    fn dominant_optimum_maximizes_throughput() {
        let c = cfg(|p| p.lambda_per_m2 = 2e-3);
        let p_star = dominant_opt_p(&c);
        assert!(p_star > 0.0 && p_star < 1.0);
        let t = dominant_throughput(&c, p_star);
        for dp in [-0.05, -0.01, 0.01, 0.05] {
            assert!(dominant_throughput(&c, (p_star + dp).clamp(1e-3, 1.0)) <= t + 1e-15);
        }
    }

    #[test]
    fn sparse_matches_single_link() {
        let c = NetworkConfig::default();
        let s = sparse_aoi(&c);
        let q = c.noise_success();
        let f = crate::analytic::conditional::cond_aoi_fcfs(0.3, 0.6 * q).unwrap();
        let l = crate::analytic::conditional::cond_aoi_lcfs(0.3, 0.6 * q).unwrap();
        assert_relative_eq!(s.avg_fcfs, f.avg, max_relative = 1e-12);
        assert_relative_eq!(s.peak_fcfs, f.peak, max_relative = 1e-12);
        assert_relative_eq!(s.avg_lcfs, l.avg, max_relative = 1e-12);
        assert_relative_eq!(s.peak_lcfs, l.peak, max_relative = 1e-12);
    }

    #[test]
    fn sparse_aoi_decreases_in_p() {
        let mut prev = f64::INFINITY;
        for k in 4..=10 {
            let s = sparse_aoi(&cfg(|p| p.access_p = k as f64 / 10.0));
            assert!(s.avg_fcfs < prev);
            prev = s.avg_fcfs;
        }
    }

    #[test]
    fn sparse_throughput_is_nondecreasing() {
        let c = NetworkConfig::default();
        let mut prev = 0.0;
        for k in 1..=10 {
            let t = throughput(&c, k as f64 / 10.0).unwrap();
            assert!(t >= prev - 1e-12);
            prev = t;
        }
        let s = throughput_derivative(&c, 0.9).unwrap();
        assert_eq!(s.sign, 1);
        assert!(s.derivative >= s.lower_bound - 1e-6);
    }

    #[test]
    fn dense_throughput_has_interior_optimum() {
        let c = cfg(|p| p.lambda_per_m2 = 2e-3);
        let ts: Vec<f64> = (1..=20).map(|k| throughput(&c, k as f64 / 20.0).unwrap()).collect();
        let best = ts.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(best > 0 && best < ts.len() - 1, "argmax index {best}");
        assert_eq!(throughput_derivative(&c, 1.0).unwrap().sign, -1);
    }
}
