//! Reference implementations used by the acceptance checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct QueueStats {
    pub avg_aoi: f64,
    pub peak_aoi: f64,
    pub busy: f64,
}

/// Discrete-time single queue with Bernoulli(xi) arrivals and Bernoulli(s)
/// service. Per slot: a packet may arrive (stamped with the slot index),
/// then the packet in service leaves with probability s. The age becomes
/// t − stamp + 1 when a fresher packet leaves and grows by one otherwise.
/// Peaks are the ages just before each age-lowering departure.
pub fn geo_geo_1(xi: f64, s: f64, lcfs: bool, slots: u64, warmup: u64, seed: u64) -> QueueStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stamps: Vec<u64> = Vec::new();
    let mut head = 0usize;
    let mut age: u64 = 0;
    let mut newest_seen: Option<u64> = None;
    let (mut area, mut peaks, mut n_peaks, mut busy, mut counted) = (0u128, 0u128, 0u64, 0u64, 0u64);
    for t in 0..slots {
        if rng.random::<f64>() < xi {
            stamps.push(t);
        }
        let waiting = stamps.len() - head;
        let measure = t >= warmup;
        if measure && waiting > 0 {
            busy += 1;
        }
        let mut reset = false;
        if waiting > 0 && rng.random::<f64>() < s {
            let stamp = if lcfs {
                stamps.pop().unwrap()
            } else {
                head += 1;
                stamps[head - 1]
            };
            if newest_seen.is_none_or(|n| stamp > n) {
                if measure {
                    peaks += age as u128;
                    n_peaks += 1;
                }
                newest_seen = Some(stamp);
                age = t - stamp + 1;
                reset = true;
            }
        }
        if !reset {
            age += 1;
        }
        if head > 4096 && head * 2 > stamps.len() {
            stamps.drain(..head);
            head = 0;
        }
        if measure {
            area += age as u128;
            counted += 1;
        }
    }
    QueueStats {
        avg_aoi: area as f64 / counted as f64,
        peak_aoi: peaks as f64 / n_peaks as f64,
        busy: busy as f64 / counted as f64,
    }
}

/// Kolmogorov distance between the empirical law of `samples` and a
/// continuous CDF.
pub fn ks_to_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // ties share one jump of the empirical CDF
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    d
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
