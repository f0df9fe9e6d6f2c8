//! Quadrature grid over the normalized interferer position (v, φ).
//!
//! An interferer at normalized distance v = ‖x‖/r from the transmitter and
//! angle φ sits at distance r·(1 + v² − 2v cos φ)^{1/2} from the receiver.
//! `D(v, φ) = (1 + v² − 2v cos φ)^{α/2} / θ`.

use crate::numerics::quadrature::{periodic_nodes, GaussLegendre};

/// Radial panel breakpoints; the cusp of the angular average at v = 1 sits on
/// a breakpoint.
const PANELS: [f64; 8] = [0.0, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0, 4.0];

pub const DEFAULT_RADIAL_NODES: usize = 24;
pub const DEFAULT_ANGLE_NODES: usize = 256;

#[derive(Debug, Clone)]
pub struct InterferenceGrid {
    pub alpha: f64,
    pub theta: f64,
    /// Radial nodes and weights; the weights include the tail Jacobian but
    /// not the area factor v.
    pub v: Vec<f64>,
    pub wv: Vec<f64>,
    pub n_phi: usize,
    /// D(v_i, φ_k) at index i·n_phi + k.
    d: Vec<f64>,
}

impl InterferenceGrid {
    pub fn new(alpha: f64, theta: f64, radial_nodes: usize, angle_nodes: usize) -> Self {
        let gl = GaussLegendre::new(radial_nodes);
        let mut v = Vec::new();
        let mut wv = Vec::new();
        for e in PANELS.windows(2) {
            for (x, w) in gl.mapped(e[0], e[1]) {
                v.push(x);
                wv.push(w);
            }
        }
        // v = V0·s^{−1/(α−2)} on s ∈ (0, 1]: v^{1−α} dv becomes constant in s
        let v0 = *PANELS.last().unwrap();
        let q = 1.0 / (alpha - 2.0);
        let tail = GaussLegendre::new(2 * radial_nodes);
        for (s, w) in tail.mapped(0.0, 1.0) {
            v.push(v0 * s.powf(-q));
            wv.push(w * v0 * q * s.powf(-q - 1.0));
        }
        let phis = periodic_nodes(angle_nodes);
        let mut d = Vec::with_capacity(v.len() * angle_nodes);
        for &x in &v {
            for &phi in &phis {
                let dist2 = (1.0 + x * x - 2.0 * x * phi.cos()).max(0.0);
                d.push(dist2.powf(alpha / 2.0) / theta);
            }
        }
        InterferenceGrid {
            alpha,
            theta,
            v,
            wv,
            n_phi: angle_nodes,
            d,
        }
    }

    pub fn with_defaults(alpha: f64, theta: f64) -> Self {
        Self::new(alpha, theta, DEFAULT_RADIAL_NODES, DEFAULT_ANGLE_NODES)
    }

    pub fn n_radial(&self) -> usize {
        self.v.len()
    }

    /// D values at radial node `i` over the angular grid.
    pub fn d_row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n_phi..(i + 1) * self.n_phi]
    }

    /// Angular mean of `g(D)` at radial node `i`.
    pub fn angle_mean(&self, i: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.d_row(i).iter().map(|&d| g(d)).sum::<f64>() / self.n_phi as f64
    }

    /// ∫₀^∞ v·f(i) dv, `f` indexed by radial node.
    pub fn radial_integral(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        (0..self.v.len()).map(|i| self.wv[i] * self.v[i] * f(i)).sum()
    }
}

/// H_θ(x, y, z) with the given ξ, θ and α.
pub fn h_theta(x: f64, y: f64, z: f64, xi: f64, theta: f64, alpha: f64) -> f64 {
    let dist = (1.0 + x * x - 2.0 * x * y.cos()).max(0.0).powf(alpha / 2.0) / theta;
    let den = 1.0 - z + dist;
    debug_assert!(den >= 0.0, "negative denominator in H_theta");
    xi / z + xi / den
}

/// H_θ as a function of precomputed D.
pub fn h_of_d(d: f64, p: f64, xi: f64) -> f64 {
    xi / p + xi / (1.0 - p + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::power_law_integral;
    use approx::assert_relative_eq;

    #[test]
    fn h_theta_direct_substitution() {
        assert_relative_eq!(h_theta(0.0, 0.0, 1.0, 0.3, 1.0, 3.8), 0.6, max_relative = 1e-15);
    }

    #[test]
    fn h_theta_far_limit() {
        assert_relative_eq!(h_theta(1e6, 0.3, 0.6, 0.3, 1.0, 3.8), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn h_theta_colocated() {
        let v = h_theta(1.0, 0.0, 0.6, 0.3, 1.0, 3.8);
        assert_relative_eq!(v, 0.3 / 0.6 + 0.3 / 0.4, max_relative = 1e-15);
        assert!(h_theta(1.0, 0.0, 1.0, 0.3, 1.0, 3.8).is_infinite());
    }

    #[test]
    fn dominant_integral_closed_form() {
        // ∫ v ⟨1/(1+D)⟩ dv = θ^δ/2 · πδ/sin(πδ)
        for &(alpha, theta) in &[(3.8, 1.0), (3.0, 10.0), (4.0, 0.1)] {
            let g = InterferenceGrid::with_defaults(alpha, theta);
            let val = g.radial_integral(|i| g.angle_mean(i, |d| 1.0 / (1.0 + d)));
            let delta = 2.0 / alpha;
            let expect = theta.powf(delta) / 2.0 * power_law_integral(alpha);
            assert_relative_eq!(val, expect, max_relative = 1e-6);
        }
    }

    #[test]
    fn doubling_nodes_changes_little() {
        let a = InterferenceGrid::new(3.8, 1.0, 24, 256);
        let b = InterferenceGrid::new(3.8, 1.0, 48, 512);
        let f = |g: &InterferenceGrid| g.radial_integral(|i| g.angle_mean(i, |d| (0.6 / (1.0 + d)).powi(2)));
        assert_relative_eq!(f(&a), f(&b), max_relative = 1e-6);
    }
}
