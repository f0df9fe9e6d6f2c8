//! Distribution of the per-link success probability (the meta distribution)
//! and its Beta approximation.

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::special::{beta as beta_fn, beta_inc, ln_beta};

use super::grid::{h_of_d, InterferenceGrid, DEFAULT_ANGLE_NODES, DEFAULT_RADIAL_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaKind {
    Beta,
    Tabulated,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaDistribution {
    pub kind: MetaKind,
    /// κ, the matched mean.
    pub beta_kappa: f64,
    /// β, the matched second shape parameter.
    pub beta_beta: f64,
    pub shape_a: f64,
    pub shape_b: f64,
    /// (u, F(u)) for the tabulated kind.
    pub cdf_grid: Vec<(f64, f64)>,
    pub c1: f64,
    pub c2: f64,
    pub iterations_used: usize,
    pub converged_residual: f64,
}

/// Beta parameters solving mean = c1, second moment = c2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaShape {
    pub kappa: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
}

/// Relative variance below which the distribution is treated as a point mass.
const DEGENERATE_VARIANCE: f64 = 1e-14;

/// Match a Beta distribution to the first two moments. Returns `None` when
/// the variance c2 − c1² is (numerically) nonpositive.
pub fn moment_match(c1: f64, c2: f64) -> Result<Option<BetaShape>> {
    if !(c1 > 0.0 && c1 <= 1.0) || !(c2 > 0.0 && c2 <= c1 * (1.0 + 1e-12)) {
        return Err(Error::validation(
            "moments",
            format!("need 0 < c2 <= c1 <= 1, got c1 = {c1}, c2 = {c2}"),
        ));
    }
    let var = c2 - c1 * c1;
    if var <= DEGENERATE_VARIANCE * c1 * c1 || c1 >= 1.0 {
        return Ok(None);
    }
    if var >= c1 * (1.0 - c1) {
        return Err(Error::validation(
            "moments",
            format!("variance {var} too large for a Beta law with mean {c1}"),
        ));
    }
    let beta = (1.0 - c1) * (c1 - c2) / var;
    let a = c1 * beta / (1.0 - c1);
    Ok(Some(BetaShape {
        kappa: c1,
        beta,
        a,
        b: beta,
    }))
}

/// E[min(h/X, 1)^k] for X ~ Beta(a, b): F(h) + ∫_h^1 (h/t)^k F(dt).
pub fn beta_e_k(a: f64, b: f64, h: f64, k: u32) -> f64 {
    if h >= 1.0 {
        return 1.0;
    }
    if h <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let f = beta_inc(a, b, h);
    if a > kf + 1e-9 {
        let ratio = (ln_beta(a - kf, b) - ln_beta(a, b)).exp();
        f + h.powi(k as i32) * ratio * (1.0 - beta_inc(a - kf, b, h))
    } else {
        // 1 − t = (1 − h)·w^{1/b} removes the endpoint singularity at t = 1
        let gl = GaussLegendre::new(64);
        let lb = ln_beta(a, b);
        let tail: f64 = gl
            .mapped(0.0, 1.0)
            .map(|(w, wt)| {
                let t = 1.0 - (1.0 - h) * w.powf(1.0 / b);
                let ln = (a - 1.0) * t.ln() + b * (1.0 - h).ln() - lb - b.ln() - kf * t.ln();
                wt * ln.exp()
            })
            .sum();
        f + h.powi(k as i32) * tail
    }
}

/// E[min(h/X, 1)^k] for X ≡ m.
fn point_e_k(m: f64, h: f64, k: u32) -> f64 {
    if m <= h {
        1.0
    } else {
        (h / m).powi(k as i32)
    }
}

impl MetaDistribution {
    pub fn degenerate(m: f64) -> Self {
        MetaDistribution {
            kind: MetaKind::Degenerate,
            beta_kappa: m,
            beta_beta: f64::NAN,
            shape_a: f64::NAN,
            shape_b: f64::NAN,
            cdf_grid: Vec::new(),
            c1: m,
            c2: m * m,
            iterations_used: 0,
            converged_residual: 0.0,
        }
    }

    /// Beta law with the given moments, or a point mass if the variance
    /// vanishes.
    pub fn from_moments(c1: f64, c2: f64) -> Result<Self> {
        Ok(match moment_match(c1, c2)? {
            Some(s) => MetaDistribution {
                kind: MetaKind::Beta,
                beta_kappa: s.kappa,
                beta_beta: s.beta,
                shape_a: s.a,
                shape_b: s.b,
                cdf_grid: Vec::new(),
                c1,
                c2,
                iterations_used: 0,
                converged_residual: 0.0,
            },
            None => Self::degenerate(c1),
        })
    }

    pub fn tabulated(cdf_grid: Vec<(f64, f64)>) -> Self {
        let mut m = MetaDistribution {
            kind: MetaKind::Tabulated,
            beta_kappa: f64::NAN,
            beta_beta: f64::NAN,
            shape_a: f64::NAN,
            shape_b: f64::NAN,
            cdf_grid,
            c1: 0.0,
            c2: 0.0,
            iterations_used: 0,
            converged_residual: 0.0,
        };
        m.c1 = m.expect(0.0, |t| t);
        m.c2 = m.expect(0.0, |t| t * t);
        m
    }

    pub fn cdf(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match self.kind {
            MetaKind::Beta => beta_inc(self.shape_a, self.shape_b, u),
            MetaKind::Degenerate => (u >= self.c1) as u8 as f64,
            MetaKind::Tabulated => {
                let g = &self.cdf_grid;
                let k = g.partition_point(|&(x, _)| x <= u);
                if k == 0 {
                    return 0.0;
                }
                if k >= g.len() {
                    return g[g.len() - 1].1;
                }
                let (x0, f0) = g[k - 1];
                let (x1, f1) = g[k];
                f0 + (f1 - f0) * (u - x0) / (x1 - x0)
            }
        }
    }

    /// Density for the Beta kind.
    pub fn pdf(&self, t: f64) -> f64 {
        match self.kind {
            MetaKind::Beta => crate::numerics::special::beta_pdf(self.shape_a, self.shape_b, t),
            _ => f64::NAN,
        }
    }

    /// E[min(h/X, 1)^k].
    pub fn e_k(&self, h: f64, k: u32) -> f64 {
        match self.kind {
            MetaKind::Beta => beta_e_k(self.shape_a, self.shape_b, h, k),
            MetaKind::Degenerate => point_e_k(self.c1, h, k),
            MetaKind::Tabulated => {
                if h >= 1.0 {
                    return 1.0;
                }
                self.cdf(h) + self.expect(h, |t| (h / t).powi(k as i32))
            }
        }
    }

    /// ∫_{(lo, 1]} g(t) F(dt).
    pub fn expect(&self, lo: f64, g: impl Fn(f64) -> f64) -> f64 {
        match self.kind {
            MetaKind::Degenerate => {
                if self.c1 > lo {
                    g(self.c1)
                } else {
                    0.0
                }
            }
            MetaKind::Beta => beta_expect(self.shape_a, self.shape_b, lo, &g),
            MetaKind::Tabulated => {
                let grid = &self.cdf_grid;
                let mut acc = 0.0;
                for w in grid.windows(2) {
                    let (x0, f0) = w[0];
                    let (x1, f1) = w[1];
                    if x1 <= lo || f1 <= f0 {
                        continue;
                    }
                    let a = x0.max(lo);
                    let frac = (x1 - a) / (x1 - x0);
                    acc += (f1 - f0) * frac * g(0.5 * (a + x1));
                }
                acc
            }
        }
    }

    /// sup_u |F(u) − G(u)| over `grid`.
    pub fn kolmogorov_distance(&self, other: &MetaDistribution, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&u| (self.cdf(u) - other.cdf(u)).abs())
            .fold(0.0, f64::max)
    }

    pub fn tabulate(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        grid.iter().map(|&u| (u, self.cdf(u))).collect()
    }
}

/// ∫_lo^1 g(t) Beta(a, b)(dt) with endpoint maps that absorb the t^{a−1}
/// and (1 − t)^{b−1} singularities and sinh clustering at `lo`.
pub fn beta_expect(a: f64, b: f64, lo: f64, g: &dyn Fn(f64) -> f64) -> f64 {
    if lo >= 1.0 {
        return 0.0;
    }
    let lb = ln_beta(a, b);
    let lo = lo.max(0.0);
    let mid = if lo == 0.0 { 0.5 } else { lo + 0.5 * (1.0 - lo) };
    let ln_pdf = |t: f64| (a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - lb;
    // upper piece; 1 − t = (1 − mid)·w^{1/b} absorbs (1 − t)^{b−1} when b < 1
    let upper = |w: f64| {
        if b >= 1.0 {
            let t = mid + (1.0 - mid) * w;
            if t >= 1.0 {
                return 0.0;
            }
            return g(t) * ln_pdf(t).exp() * (1.0 - mid);
        }
        let t = 1.0 - (1.0 - mid) * w.powf(1.0 / b);
        if t <= 0.0 {
            return 0.0;
        }
        let ln = (a - 1.0) * t.ln() + b * (1.0 - mid).ln() - lb - b.ln();
        g(t) * ln.exp()
    };
    let lower = |s: f64| -> f64 {
        if lo == 0.0 {
            if a >= 1.0 {
                let t = mid * s;
                if t <= 0.0 {
                    return 0.0;
                }
                return g(t) * ln_pdf(t).exp() * mid;
            }
            // t = mid·s^{1/a} absorbs t^{a−1}
            let t = mid * s.powf(1.0 / a);
            if t <= 0.0 {
                return 0.0;
            }
            let ln = a * mid.ln() + (b - 1.0) * (1.0 - t).ln() - lb - a.ln();
            g(t) * ln.exp()
        } else {
            // t = lo + (mid − lo)·sinh(c s)/sinh(c) clusters nodes at lo
            let c = 6.0;
            let span = mid - lo;
            let t = lo + span * (c * s).sinh() / c.sinh();
            let dt = span * c * (c * s).cosh() / c.sinh();
            g(t) * ln_pdf(t).exp() * dt
        }
    };
    adaptive_unit(&upper) + adaptive_unit(&lower)
}

/// Gauss–Legendre on [0, 1] doubling nodes until relative change < 1e-10.
fn adaptive_unit(f: &dyn Fn(f64) -> f64) -> f64 {
    let edges = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut n = 16;
    let mut prev = GaussLegendre::new(n).composite(&edges, f);
    while n < 1024 {
        n *= 2;
        let cur = GaussLegendre::new(n).composite(&edges, f);
        if (cur - prev).abs() <= 1e-10 * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaOptions {
    /// Stop when both η values move by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub radial_nodes: usize,
    pub angle_nodes: usize,
}

impl Default for MetaOptions {
    fn default() -> Self {
        MetaOptions {
            tol: 1e-6,
            max_iter: 50,
            radial_nodes: DEFAULT_RADIAL_NODES,
            angle_nodes: DEFAULT_ANGLE_NODES,
        }
    }
}

/// Per-grid quantities shared by the fixed-point solvers.
pub(crate) struct MomentKernel {
    pub grid: InterferenceGrid,
    /// ⟨(p/(1+D))^k⟩ per radial node, k = 1, 2.
    pub a_k: [Vec<f64>; 2],
    /// H_θ per grid point.
    pub h: Vec<f64>,
    /// 2πλr².
    pub scale: f64,
    pub noise: f64,
}

impl MomentKernel {
    pub fn new(cfg: &NetworkConfig, radial_nodes: usize, angle_nodes: usize) -> Self {
        let grid = InterferenceGrid::new(cfg.alpha(), cfg.theta(), radial_nodes, angle_nodes);
        let p = cfg.access_p();
        let xi = cfg.xi();
        let n = grid.n_radial();
        let a1 = (0..n).map(|i| grid.angle_mean(i, |d| p / (1.0 + d))).collect();
        let a2 = (0..n).map(|i| grid.angle_mean(i, |d| (p / (1.0 + d)).powi(2))).collect();
        let h = (0..n)
            .flat_map(|i| grid.d_row(i).iter().map(|&d| h_of_d(d, p, xi)).collect::<Vec<_>>())
            .collect();
        MomentKernel {
            scale: 2.0 * std::f64::consts::PI * cfg.lambda() * cfg.link_distance().powi(2),
            noise: cfg.noise_exponent(),
            grid,
            a_k: [a1, a2],
            h,
        }
    }

    pub fn h_row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_phi;
        &self.h[i * n..(i + 1) * n]
    }

    /// η_k = ∫ v A_k(v) ⟨E_k(H)⟩ dv for k = 1, 2 given an E_k evaluator.
    pub fn eta(&self, e_k: impl Fn(f64, u32) -> f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let kk = k as u32 + 1;
            *o = self.grid.radial_integral(|i| {
                let row = self.h_row(i);
                let b = row.iter().map(|&h| e_k(h, kk)).sum::<f64>() / row.len() as f64;
                self.a_k[k][i] * b
            });
        }
        out
    }

    pub fn moments(&self, eta: [f64; 2]) -> (f64, f64) {
        let c1 = (-self.noise - self.scale * eta[0]).exp();
        let c2 = (-2.0 * self.noise - self.scale * (2.0 * eta[0] - eta[1])).exp();
        (c1, c2)
    }
}

/// Starting point of the η iteration: ξ^k p^k θ^δ B(δ, k − δ)/α.
pub fn initial_eta(cfg: &NetworkConfig, k: u32) -> f64 {
    let d = cfg.delta();
    let kf = k as f64;
    (cfg.xi() * cfg.access_p()).powi(k as i32) * cfg.theta().powf(d) * beta_fn(d, kf - d) / cfg.alpha()
}

pub fn beta_meta(cfg: &NetworkConfig) -> Result<MetaDistribution> {
    beta_meta_with(cfg, &MetaOptions::default())
}

/// Picard iteration on (η₁, η₂), moment-matching a Beta law at every step.
pub fn beta_meta_with(cfg: &NetworkConfig, opts: &MetaOptions) -> Result<MetaDistribution> {
    if cfg.lambda() == 0.0 || cfg.theta() == 0.0 {
        return Ok(MetaDistribution::degenerate(cfg.noise_success()));
    }
    let kernel = MomentKernel::new(cfg, opts.radial_nodes, opts.angle_nodes);
    let mut eta = [initial_eta(cfg, 1), initial_eta(cfg, 2)];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (c1, c2) = kernel.moments(eta);
        let current = MetaDistribution::from_moments(c1, c2)?;
        let next = kernel.eta(|h, k| current.e_k(h, k));
        residual = (next[0] - eta[0]).abs().max((next[1] - eta[1]).abs());
        eta = next;
        if residual < opts.tol {
            let (c1, c2) = kernel.moments(eta);
            let mut out = MetaDistribution::from_moments(c1, c2)?;
            out.iterations_used = it;
            out.converged_residual = residual;
            return Ok(out);
        }
    }
    Err(Error::NonConvergence {
        what: "Beta meta-distribution iteration",
        iterations: opts.max_iter,
        residual,
        hint: "",
    })
}
