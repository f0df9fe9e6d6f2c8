//! Success probability under queue interaction and the stable region.

use crate::config::NetworkConfig;
use crate::error::Result;
use crate::numerics::quadrature::adaptive_composite;
use crate::numerics::special::power_law_integral;

use super::grid::InterferenceGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsMethod {
    /// Full double integral over interferer position.
    #[default]
    Full,
    /// Single-integral approximation with the angular structure collapsed.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsSolution {
    pub p_s: f64,
    /// |g(p_s) − p_s|.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityResult {
    pub p_s: f64,
    pub xi_c: f64,
    pub residual: f64,
}

/// Right-hand side g(x) of the success-probability fixed point, x = p_s.
pub struct PsMap<'a> {
    cfg: &'a NetworkConfig,
    grid: &'a InterferenceGrid,
    /// ⟨1/(1+D)⟩ per radial node.
    k_mean: Vec<f64>,
    /// 1/D per grid point (row-major like the grid).
    inv_d: Vec<Vec<f64>>,
}

impl<'a> PsMap<'a> {
    pub fn new(cfg: &'a NetworkConfig, grid: &'a InterferenceGrid) -> Self {
        let n = grid.n_radial();
        let k_mean = (0..n).map(|i| grid.angle_mean(i, |d| 1.0 / (1.0 + d))).collect();
        let inv_d = (0..n)
            .map(|i| grid.d_row(i).iter().map(|&d| 1.0 / d).collect())
            .collect();
        PsMap {
            cfg,
            grid,
            k_mean,
            inv_d,
        }
    }

    /// Z(v) = ⟨min{(ξ/x)(1 + 1/D), p}⟩ at radial node `i`.
    fn z_mean(&self, i: usize, x: f64, xi: f64, p: f64) -> f64 {
        let c = xi / x;
        let row = &self.inv_d[i];
        row.iter().map(|&id| (c * (1.0 + id)).min(p)).sum::<f64>() / row.len() as f64
    }

    /// Interference exponent at p_s = x for arrival rate `xi`.
    pub fn exponent(&self, x: f64, xi: f64) -> f64 {
        let p = self.cfg.access_p();
        let lr2 = self.cfg.lambda() * self.cfg.link_distance().powi(2);
        if lr2 == 0.0 || self.cfg.theta() == 0.0 {
            return 0.0;
        }
        let integral = self
            .grid
            .radial_integral(|i| self.z_mean(i, x, xi, p) * self.k_mean[i]);
        2.0 * std::f64::consts::PI * lr2 * integral
    }

    pub fn g(&self, x: f64, xi: f64) -> f64 {
        (-self.cfg.noise_exponent() - self.exponent(x, xi)).exp()
    }
}

/// Fast-method right-hand side. With u* where (ξ/x)(1+u^{−α/2}) = p,
/// the outer piece integrates in closed form since
/// (1 + u^{−α/2})/(1 + u^{α/2}) = u^{−α/2}.
fn g_fast(cfg: &NetworkConfig, x: f64, xi: f64) -> f64 {
    let alpha = cfg.alpha();
    let p = cfg.access_p();
    let pre = cfg.lambda() * std::f64::consts::PI * cfg.link_distance().powi(2) * cfg.theta().powf(cfg.delta());
    let c = xi / x;
    let integral = if p <= c {
        p * power_law_integral(alpha)
    } else {
        let u_star = (p / c - 1.0).powf(-2.0 / alpha);
        let h = alpha / 2.0;
        // u = u*·s² on s ∈ [0, 1] smooths the u^{α/2} cusp at the origin
        let (inner, _, _) = adaptive_composite(&[0.0, 1.0], 1e-12, 512, |s| {
            let u = u_star * s * s;
            2.0 * u_star * s / (1.0 + u.powf(h))
        });
        p * inner + c * u_star.powf(1.0 - h) / (h - 1.0)
    };
    (-cfg.noise_exponent() - pre * integral).exp()
}

const BISECTION_WIDTH: f64 = 1e-13;

fn bisect_fixed_point(mut g: impl FnMut(f64) -> f64) -> PsSolution {
    // g is nondecreasing in x with g(0+) > 0 and g(1) ≤ 1, so g(x) − x has a
    // single sign change on (0, 1].
    let g1 = g(1.0);
    if g1 >= 1.0 {
        return PsSolution {
            p_s: 1.0,
            residual: (g1 - 1.0).abs(),
            iterations: 1,
        };
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut it = 1;
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        it += 1;
        if mid == 0.0 || g(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p_s = 0.5 * (lo + hi);
    PsSolution {
        p_s,
        residual: (g(p_s) - p_s).abs(),
        iterations: it,
    }
}

pub fn solve_ps_with(cfg: &NetworkConfig, grid: &InterferenceGrid, method: PsMethod) -> PsSolution {
    let xi = cfg.xi();
    match method {
        PsMethod::Full => {
            let map = PsMap::new(cfg, grid);
            bisect_fixed_point(|x| map.g(x, xi))
        }
        PsMethod::Fast => bisect_fixed_point(|x| g_fast(cfg, x, xi)),
    }
}

pub fn solve_ps(cfg: &NetworkConfig) -> Result<PsSolution> {
    let grid = InterferenceGrid::with_defaults(cfg.alpha(), cfg.theta());
    Ok(solve_ps_with(cfg, &grid, PsMethod::Full))
}

/// Largest ξ with ξ ≤ p·p_s(ξ), by bisection on ξ − p·p_s(ξ).
pub fn critical_xi_with(cfg: &NetworkConfig, grid: &InterferenceGrid, method: PsMethod) -> StabilityResult {
    let p = cfg.access_p();
    let map = PsMap::new(cfg, grid);
    let ps_at = |xi: f64| match method {
        PsMethod::Full => bisect_fixed_point(|x| map.g(x, xi)),
        PsMethod::Fast => bisect_fixed_point(|x| g_fast(cfg, x, xi)),
    };
    let top = ps_at(p);
    if p <= p * top.p_s {
        return StabilityResult {
            p_s: top.p_s,
            xi_c: p,
            residual: top.residual,
        };
    }
    let mut lo = 0.0f64;
    let mut hi = p;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if mid <= p * ps_at(mid).p_s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = ps_at(lo.max(f64::MIN_POSITIVE));
    StabilityResult {
        p_s: s.p_s,
        xi_c: lo.max(1e-12),
        residual: s.residual,
    }
}

pub fn critical_xi(cfg: &NetworkConfig) -> Result<StabilityResult> {
    let grid = InterferenceGrid::with_defaults(cfg.alpha(), cfg.theta());
    Ok(critical_xi_with(cfg, &grid, PsMethod::Full))
}
