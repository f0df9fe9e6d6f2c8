//! Meta distribution from its characteristic function (Gil-Pelaez inversion).
//!
//! Conditioned on the interferer layout, the log success probability is a
//! sum of independent per-interferer terms, so ln μ is compound Poisson on
//! the plane:
//!
//! ln E[μ^{jω}] = −jω·N − 2πλr² ∫ (1 − e^{−jωL}) dν(L),
//! L = −ln(1 − x·min(H/t, 1)),
//!
//! where x = p/(1 + D) is the interferer's channel factor, H its activity
//! bound and t ~ F its own success probability. Jumps below a cutoff are
//! replaced by a Gaussian with the same mean and variance; the atom where no
//! large jump occurs is inverted in closed form and the remainder by
//! Gil-Pelaez on a uniform midpoint grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

use super::grid::{DEFAULT_ANGLE_NODES, DEFAULT_RADIAL_NODES};
use super::meta::{initial_eta, MetaDistribution, MetaKind, MomentKernel};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOptions {
    /// Points of the uniform u grid on [0, 1].
    pub u_points: usize,
    /// First and last ω cutoffs of the doubling sequence.
    pub omega_start: f64,
    pub omega_max: f64,
    /// Sup-norm change between successive ω doublings that counts as
    /// converged.
    pub inversion_tol: f64,
    /// Picard stop rule on η.
    pub tol: f64,
    pub max_iter: usize,
    /// Bins of the interferer activity factor min(H/t, 1).
    pub y_bins: usize,
    /// Minimum lattice size of the jump measure.
    pub jump_bins: usize,
    /// Jumps below this size enter the Gaussian component.
    pub small_jump: f64,
    pub radial_nodes: usize,
    pub angle_nodes: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            u_points: 1001,
            omega_start: 64.0,
            omega_max: 16384.0,
            inversion_tol: 1e-4,
            tol: 1e-6,
            max_iter: 50,
            y_bins: 400,
            jump_bins: 8192,
            small_jump: 3e-3,
            radial_nodes: DEFAULT_RADIAL_NODES,
            angle_nodes: DEFAULT_ANGLE_NODES,
        }
    }
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Σ_{k=1}^{K} C(s, k)(−1)^{k+1} z^k with complex s, the truncated expansion
/// of 1 − (1 − z)^s.
pub fn binomial_series(s: Complex64, z: f64, terms: usize) -> Complex64 {
    let mut coef = Complex64::new(1.0, 0.0);
    let mut zk = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=terms {
        coef = coef * (s - (k - 1) as f64) / k as f64;
        zk *= -z;
        acc -= coef * zk;
    }
    acc
}

/// Midpoint-rule Gil-Pelaez inversion of a (possibly defective) law of X on
/// (0, 1] from samples `m[k] = E[X^{jω_k}; continuous part]` at
/// ω_k = (k + ½)h. Returns P(X ≤ u) − atoms for each u; `mass` is the total
/// mass of the inverted part.
fn invert_midpoint(m: &[Complex64], h: f64, mass: f64, u_grid: &[f64]) -> Vec<f64> {
    u_grid
        .iter()
        .map(|&u| {
            if u <= 0.0 {
                return 0.0;
            }
            if u >= 1.0 {
                return mass;
            }
            let lu = u.ln();
            let step = Complex64::from_polar(1.0, -h * lu);
            let mut z = Complex64::from_polar(1.0, -0.5 * h * lu);
            let mut acc = 0.0;
            for (k, mk) in m.iter().enumerate() {
                if k % 512 == 0 {
                    z = Complex64::from_polar(1.0, -(k as f64 + 0.5) * h * lu);
                }
                acc += (z * mk).im / (k as f64 + 0.5);
                z *= step;
            }
            0.5 * mass - acc / PI
        })
        .collect()
}

/// Gil-Pelaez inversion with a fixed cutoff: F(u) = P(X ≤ u) for X on (0, 1]
/// given `cf(ω) = E[X^{jω}]`. `h` must satisfy 2π/h ≫ the spread of ln X.
pub fn gil_pelaez_fixed(cf: impl Fn(f64) -> Complex64, u_grid: &[f64], h: f64, omega: f64) -> Vec<f64> {
    let k = (omega / h).ceil() as usize;
    let m: Vec<Complex64> = (0..k).map(|i| cf((i as f64 + 0.5) * h)).collect();
    invert_midpoint(&m, h, 1.0, u_grid)
}

fn monotonize(f: &mut [f64]) {
    let mut run = 0.0f64;
    for v in f.iter_mut() {
        *v = v.clamp(0.0, 1.0).max(run);
        run = *v;
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function, Chebyshev fit with relative error < 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Jump measure of −ln μ: Gaussian part for small jumps plus a lattice of
/// large-jump weights.
struct JumpMeasure {
    /// Deterministic shift: noise term plus small-jump mean.
    shift: f64,
    /// Small-jump variance.
    var: f64,
    /// Lattice spacing and weights at bΔ.
    delta: f64,
    weights: Vec<f64>,
    /// Total large-jump mass.
    mass: f64,
    l_max: f64,
}

impl JumpMeasure {
    fn build(kernel: &MomentKernel, p: f64, f: &MetaDistribution, opts: &ExactOptions) -> Self {
        let grid = &kernel.grid;
        let n_phi = grid.n_phi;
        let inv_n = 1.0 / n_phi as f64;
        let cells: Vec<(f64, f64, f64)> = f
            .cdf_grid
            .windows(2)
            .filter(|w| w[1].1 > w[0].1)
            .map(|w| (w[0].0, w[1].0, w[1].1 - w[0].1))
            .collect();

        let x_max = (0..grid.n_radial())
            .flat_map(|i| grid.d_row(i).iter())
            .fold(0.0f64, |m, &d| m.max(p / (1.0 + d)));
        let l_max = -(-x_max).ln_1p();
        let bins = opts
            .jump_bins
            .max((l_max * opts.omega_max / 0.5).ceil() as usize)
            .max(1);
        let delta = l_max / bins as f64;
        let mut weights = vec![0.0; bins + 2];
        let (mut s1, mut s2) = (0.0, 0.0);

        let ny = opts.y_bins;
        let mut y_mass = vec![0.0; ny + 1];
        let mut y_sum = vec![0.0; ny + 1];
        for i in 0..grid.n_radial() {
            y_mass.iter_mut().for_each(|v| *v = 0.0);
            y_sum.iter_mut().for_each(|v| *v = 0.0);
            // distribution of y = min(H/t, 1) at this radius; bin ny holds y = 1
            for &h in kernel.h_row(i) {
                if h >= 1.0 {
                    y_mass[ny] += inv_n;
                    y_sum[ny] += inv_n;
                    continue;
                }
                let at_one = f.cdf(h) * inv_n;
                y_mass[ny] += at_one;
                y_sum[ny] += at_one;
                for &(t0, t1, df) in &cells {
                    if t1 <= h {
                        continue;
                    }
                    let a = t0.max(h);
                    let w = df * (t1 - a) / (t1 - t0) * inv_n;
                    let y = h / (0.5 * (a + t1));
                    let b = ((y * ny as f64) as usize).min(ny - 1);
                    y_mass[b] += w;
                    y_sum[b] += w * y;
                }
            }
            let base = kernel.scale * grid.wv[i] * grid.v[i] * inv_n;
            for &d in grid.d_row(i) {
                let x = p / (1.0 + d);
                for b in 0..=ny {
                    let m = y_mass[b];
                    if m == 0.0 {
                        continue;
                    }
                    let y = y_sum[b] / m;
                    let l = -(-x * y).ln_1p();
                    let w = base * m;
                    if l < opts.small_jump {
                        s1 += w * l;
                        s2 += w * l * l;
                    } else {
                        let pos = l / delta;
                        let k = (pos as usize).min(bins);
                        let fr = pos - k as f64;
                        weights[k] += w * (1.0 - fr);
                        weights[k + 1] += w * fr;
                    }
                }
            }
        }
        let mass = weights.iter().sum();
        JumpMeasure {
            shift: kernel.noise + s1,
            var: s2,
            delta,
            weights,
            mass,
            l_max,
        }
    }

    fn mean_sd(&self) -> (f64, f64) {
        let (m1, m2) = self
            .weights
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(a, b), (k, &w)| {
                let l = k as f64 * self.delta;
                (a + w * l, b + w * l * l)
            });
        (self.shift + m1, (self.var + m2).sqrt())
    }

    /// Samples of E[μ^{jω}; at least one large jump] at ω_k = (k + ½)h for
    /// k < `count`, with h = 2π/(NΔ).
    fn continuous_cf(&self, n_fft: usize, count: usize) -> (f64, Vec<Complex64>) {
        let h = 2.0 * PI / (n_fft as f64 * self.delta);
        let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
        for (b, &w) in self.weights.iter().enumerate() {
            // half-bin phase turns the DFT into midpoint frequencies
            buf[b % n_fft] += Complex64::from_polar(w, PI * b as f64 / n_fft as f64);
        }
        FftPlanner::new().plan_fft_inverse(n_fft).process(&mut buf);
        let atom = (-self.mass).exp();
        let out = (0..count)
            .map(|k| {
                let w = (k as f64 + 0.5) * h;
                // E[e^{−jωY}] for Y = −ln μ is the conjugate of Y's CF
                let c = buf[k];
                let jumps = atom * (c.exp() - 1.0);
                let gauss = Complex64::from_polar((-0.5 * self.var * w * w).exp(), w * self.shift);
                (gauss * jumps).conj()
            })
            .collect();
        (h, out)
    }

    /// P(μ ≤ u) on `u_grid`, doubling the ω cutoff until successive results
    /// agree to `inversion_tol`.
    fn invert(&self, u_grid: &[f64], opts: &ExactOptions) -> Result<Vec<f64>> {
        let (mean, sd) = self.mean_sd();
        let y_min = u_grid
            .iter()
            .copied()
            .filter(|&u| u > 0.0)
            .fold(1.0f64, f64::min)
            .ln()
            .abs();
        let span = (2.0 * (mean + 12.0 * sd + self.l_max)).max(2.0 * y_min + 8.0).max(32.0);
        let n_fft = ((span / self.delta).ceil() as usize).next_power_of_two().max(self.weights.len().next_power_of_two());
        let h = 2.0 * PI / (n_fft as f64 * self.delta);
        let k_max = ((opts.omega_max / h).ceil() as usize).min(n_fft / 2);
        let (h, cf) = self.continuous_cf(n_fft, k_max);
        let atom = (-self.mass).exp();
        let sd_g = self.var.sqrt();
        let atom_cdf = |u: f64| -> f64 {
            // P(shift + G ≥ −ln u) for the no-large-jump atom
            if u <= 0.0 {
                return 0.0;
            }
            if u >= 1.0 {
                return 1.0;
            }
            let y = -u.ln();
            if sd_g == 0.0 {
                (self.shift >= y) as u8 as f64
            } else {
                1.0 - normal_cdf((y - self.shift) / sd_g)
            }
        };
        let mut omega = opts.omega_start.min(opts.omega_max);
        let mut prev: Option<Vec<f64>> = None;
        let mut last_diff = f64::INFINITY;
        loop {
            let k = ((omega / h).ceil() as usize).min(k_max);
            let cont = invert_midpoint(&cf[..k], h, 1.0 - atom, u_grid);
            let f: Vec<f64> = u_grid
                .iter()
                .zip(&cont)
                .map(|(&u, &c)| atom * atom_cdf(u) + c)
                .collect();
            if let Some(p) = &prev {
                last_diff = p.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if last_diff < opts.inversion_tol {
                    let mut f = f;
                    monotonize(&mut f);
                    if let Some(l) = f.last_mut() {
                        *l = 1.0;
                    }
                    return Ok(f);
                }
            }
            if omega >= opts.omega_max || k == k_max {
                return Err(Error::NonConvergence {
                    what: "Gil-Pelaez inversion",
                    iterations: (omega / opts.omega_start).log2() as usize + 1,
                    residual: last_diff,
                    hint: "; raise omega_max or use the Beta method",
                });
            }
            prev = Some(f);
            omega *= 2.0;
        }
    }
}

/// One fixed-point step: the meta distribution seen by a typical link when
/// interferers draw their success probabilities from `interferers`.
pub fn exact_step(
    cfg: &NetworkConfig,
    interferers: &MetaDistribution,
    opts: &ExactOptions,
) -> Result<MetaDistribution> {
    let u_grid = uniform_grid(opts.u_points);
    let kernel = MomentKernel::new(cfg, opts.radial_nodes, opts.angle_nodes);
    step(&kernel, cfg.access_p(), interferers, &u_grid, opts)
}

fn step(
    kernel: &MomentKernel,
    p: f64,
    interferers: &MetaDistribution,
    u_grid: &[f64],
    opts: &ExactOptions,
) -> Result<MetaDistribution> {
    let tab;
    let f = if interferers.kind == MetaKind::Tabulated {
        interferers
    } else {
        tab = MetaDistribution::tabulated(interferers.tabulate(u_grid));
        &tab
    };
    let measure = JumpMeasure::build(kernel, p, f, opts);
    let cdf = measure.invert(u_grid, opts)?;
    Ok(MetaDistribution::tabulated(u_grid.iter().copied().zip(cdf).collect()))
}

pub fn exact_meta_cdf(cfg: &NetworkConfig, opts: &ExactOptions) -> Result<MetaDistribution> {
    if opts.u_points < 3 {
        return Err(Error::validation("u_points", "need at least 3 grid points"));
    }
    if cfg.lambda() == 0.0 || cfg.theta() == 0.0 {
        return Ok(MetaDistribution::degenerate(cfg.noise_success()));
    }
    let u_grid = uniform_grid(opts.u_points);
    let kernel = MomentKernel::new(cfg, opts.radial_nodes, opts.angle_nodes);
    let p = cfg.access_p();

    let mut eta_prev = [initial_eta(cfg, 1), initial_eta(cfg, 2)];
    let (c1, c2) = kernel.moments(eta_prev);
    let start = MetaDistribution::from_moments(c1, c2)?;
    let mut current = MetaDistribution::tabulated(start.tabulate(&u_grid));
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let eta = kernel.eta(|h, k| current.e_k(h, k));
        residual = (eta[0] - eta_prev[0]).abs().max((eta[1] - eta_prev[1]).abs());
        let next = step(&kernel, p, &current, &u_grid, opts)?;
        if residual < opts.tol {
            let (c1, c2) = kernel.moments(eta);
            let mut out = next;
            out.c1 = c1;
            out.c2 = c2;
            out.iterations_used = it;
            out.converged_residual = residual;
            return Ok(out);
        }
        eta_prev = eta;
        current = next;
    }
    Err(Error::NonConvergence {
        what: "exact meta-distribution iteration",
        iterations: opts.max_iter,
        residual,
        hint: "",
    })
}
