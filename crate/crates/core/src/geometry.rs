//! Poisson bipolar deployments on a square torus.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::rng::{Purpose, RngContract};

/// Resampling attempts before an empty deployment becomes an error.
pub const MAX_RESAMPLES: u32 = 64;

/// Share of mean interference power allowed to originate beyond the culling
/// radius, relative to the power from beyond the link distance.
pub const CULLING_FRACTION: f64 = 1e-3;

pub type Point = [f64; 2];

/// Signed minimum-image displacement `a − b` on a torus of side `side`.
pub fn torus_delta(a: Point, b: Point, side: f64) -> Point {
    let mut dx = a[0] - b[0];
    let mut dy = a[1] - b[1];
    dx -= side * (dx / side).round();
    dy -= side * (dy / side).round();
    [dx, dy]
}

pub fn torus_distance(a: Point, b: Point, side: f64) -> f64 {
    let [dx, dy] = torus_delta(a, b, side);
    dx.hypot(dy)
}

fn wrap(x: f64, side: f64) -> f64 {
    let w = x.rem_euclid(side);
    if w >= side {
        0.0
    } else {
        w
    }
}

/// Radius R with ∫_R^∞ x^{1−α} dx = `fraction` · ∫_r^∞ x^{1−α} dx.
pub fn default_culling_radius(link_distance: f64, alpha: f64) -> f64 {
    link_distance * CULLING_FRACTION.powf(1.0 / (2.0 - alpha))
}

/// Interferer weights seen by one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub tx: u32,
    /// ‖X_tx − y_rx‖^{−α}
    pub gain: f64,
}

/// One spatial realization.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub tx_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
    pub region_side: f64,
    pub link_distance: f64,
    pub alpha: f64,
    /// Empty draws discarded before this one.
    pub resamples: u32,
    culling_radius: f64,
    offsets: Vec<usize>,
    couplings: Vec<Coupling>,
}

impl Deployment {
    /// Build from explicit positions (used by tests and tools).
    pub fn from_positions(
        tx_positions: Vec<Point>,
        rx_positions: Vec<Point>,
        region_side: f64,
        link_distance: f64,
        alpha: f64,
    ) -> Self {
        assert_eq!(tx_positions.len(), rx_positions.len());
        Deployment {
            tx_positions,
            rx_positions,
            region_side,
            link_distance,
            alpha,
            resamples: 0,
            culling_radius: 0.0,
            offsets: Vec::new(),
            couplings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_positions.is_empty()
    }

    pub fn culling_radius(&self) -> f64 {
        self.culling_radius
    }

    pub fn has_pathloss(&self) -> bool {
        !self.offsets.is_empty()
    }

    /// Signal entry first, then interferers by decreasing gain.
    pub fn pathloss_to_rx(&self, rx: usize) -> &[Coupling] {
        &self.couplings[self.offsets[rx]..self.offsets[rx + 1]]
    }

    pub fn signal_gain(&self, rx: usize) -> f64 {
        self.pathloss_to_rx(rx)[0].gain
    }

    pub fn interferers(&self, rx: usize) -> &[Coupling] {
        &self.pathloss_to_rx(rx)[1..]
    }

    /// Fill the interferer tables. `culling_radius = ∞` keeps every pair.
    pub fn build_pathloss(&mut self, culling_radius: f64) -> Result<()> {
        if culling_radius.is_nan() || culling_radius <= self.link_distance {
            return Err(Error::validation(
                "culling_radius_m",
                format!(
                    "culling radius {culling_radius} must exceed the link distance {}",
                    self.link_distance
                ),
            ));
        }
        let n = self.len();
        let side = self.region_side;
        let alpha = self.alpha;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut couplings = Vec::new();
        offsets.push(0);
        let mut row = Vec::new();
        for (i, &y) in self.rx_positions.iter().enumerate() {
            row.clear();
            for (j, &x) in self.tx_positions.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = torus_distance(x, y, side);
                if d <= culling_radius {
                    row.push(Coupling {
                        tx: j as u32,
                        gain: d.powf(-alpha),
                    });
                }
            }
            row.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.tx.cmp(&b.tx)));
            let own = torus_distance(self.tx_positions[i], y, side);
            couplings.push(Coupling {
                tx: i as u32,
                gain: own.powf(-alpha),
            });
            couplings.extend_from_slice(&row);
            offsets.push(couplings.len());
        }
        self.offsets = offsets;
        self.couplings = couplings;
        self.culling_radius = culling_radius;
        Ok(())
    }

    /// Debug dump with columns (link_id, tx_x, tx_y, rx_x, rx_y).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["link_id", "tx_x", "tx_y", "rx_x", "rx_y"])?;
        for (i, (t, r)) in self.tx_positions.iter().zip(&self.rx_positions).enumerate() {
            w.write_record([
                i.to_string(),
                t[0].to_string(),
                t[1].to_string(),
                r[0].to_string(),
                r[1].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Draw one realization's positions. Empty draws are resampled from the next
/// geometry sub-stream and counted in [`Deployment::resamples`].
pub fn sample_deployment(
    config: &NetworkConfig,
    rng: &RngContract,
    realization: u32,
) -> Result<Deployment> {
    let side = config.region_side();
    let mean = config.lambda() * config.region_area();
    if mean <= 0.0 {
        return Err(Error::EmptyDeployment { attempts: 0, mean });
    }
    let poisson = Poisson::new(mean).map_err(|e| Error::validation("lambda_per_m2", e.to_string()))?;
    let r = config.link_distance();
    for attempt in 0..MAX_RESAMPLES {
        let mut g = rng.for_link(realization, attempt, Purpose::Geometry);
        let n = poisson.sample(&mut g) as usize;
        if n == 0 {
            continue;
        }
        let mut tx = Vec::with_capacity(n);
        let mut rx = Vec::with_capacity(n);
        for _ in 0..n {
            let x = [g.random::<f64>() * side, g.random::<f64>() * side];
            let phi = g.random::<f64>() * 2.0 * PI;
            let y = [wrap(x[0] + r * phi.cos(), side), wrap(x[1] + r * phi.sin(), side)];
            tx.push(x);
            rx.push(y);
        }
        let mut d = Deployment::from_positions(tx, rx, side, r, config.alpha());
        d.resamples = attempt;
        return Ok(d);
    }
    Err(Error::EmptyDeployment {
        attempts: MAX_RESAMPLES,
        mean,
    })
}
