//! Age of a single Geo/Geo/1 link with fixed per-slot service probability.
//!
//! `service` is the per-slot departure probability p·μ of a backlogged link.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiPair {
    pub avg: f64,
    pub peak: f64,
}

fn check_unit(field: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::validation(field, format!("must lie in (0, 1], got {v}")));
    }
    Ok(())
}

/// Average and peak age under FCFS. Requires `xi < service`.
pub fn cond_aoi_fcfs(xi: f64, service: f64) -> Result<AoiPair> {
    check_unit("xi", xi)?;
    check_unit("service", service)?;
    if xi >= service {
        return Err(Error::UnstableQueue { xi, service });
    }
    let peak = 1.0 / xi + (1.0 - xi) / (service - xi);
    let avg = peak + xi / service - xi / (service * service) - 1.0;
    Ok(AoiPair { avg, peak })
}

/// Average and peak age under LCFS with preemption. Defined for every
/// `xi, service ∈ (0, 1]`; see [`in_stable_region`] for the queue condition.
pub fn cond_aoi_lcfs(xi: f64, service: f64) -> Result<AoiPair> {
    check_unit("xi", xi)?;
    check_unit("service", service)?;
    let avg = 1.0 / xi + 1.0 / service - 1.0;
    let peak = avg + lcfs_peak_excess(xi, service);
    Ok(AoiPair { avg, peak })
}

/// Peak minus average age under LCFS-PR: 1/(1 − (1−ξ)(1−s)) − 1.
pub fn lcfs_peak_excess(xi: f64, service: f64) -> f64 {
    1.0 / (1.0 - (1.0 - xi) * (1.0 - service)) - 1.0
}

pub fn in_stable_region(xi: f64, service: f64) -> bool {
    xi < service
}

/// Probability that the queue is non-empty in steady state.
pub fn activity_prob(xi: f64, service: f64) -> f64 {
    if service <= xi {
        1.0
    } else {
        xi / service
    }
}
