//! Slot loop for one deployment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::{Discipline, NetworkConfig, SimParams};
use crate::error::Result;
use crate::geometry::{default_culling_radius, sample_deployment, Deployment};
use crate::rng::{Purpose, RngContract};

use super::link::{Delivery, LinkState};

/// How the per-slot SINR test draws its randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingMode {
    /// One Exp(1) power fade per active (transmitter, receiver) pair and slot.
    #[default]
    Explicit,
    /// A single Exp(1) variate per receiver compared against
    /// θσ²/(P g₀) + Σ ln(1 + θ g_j/g₀) over the active interferers. Given the
    /// active set this has exactly the success probability of `Explicit`
    /// but costs one draw instead of one per interferer.
    Integrated,
}

/// Which deliveries contribute peak-age samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakSampler {
    /// Only deliveries that reset the age.
    #[default]
    Resetting,
    /// Every delivery, including stale LCFS-PR packets.
    AllDeliveries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub fading: FadingMode,
    pub peak_sampler: PeakSampler,
    /// Every gated link transmits whether or not its queue holds a packet.
    pub saturate: bool,
    /// Keep per-link delivery logs.
    pub trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            fading: FadingMode::Explicit,
            peak_sampler: PeakSampler::Resetting,
            saturate: false,
            trace: false,
        }
    }
}

/// Ordinary least-squares slope accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct SlopeFit {
    n: f64,
    st: f64,
    sq: f64,
    stt: f64,
    stq: f64,
}

impl SlopeFit {
    fn push(&mut self, t: f64, q: f64) {
        self.n += 1.0;
        self.st += t;
        self.sq += q;
        self.stt += t * t;
        self.stq += t * q;
    }

    fn slope(&self) -> f64 {
        let den = self.n * self.stt - self.st * self.st;
        if self.n < 2.0 || den == 0.0 {
            return 0.0;
        }
        (self.n * self.stq - self.st * self.sq) / den
    }
}

#[derive(Debug, Clone, Default)]
struct Accum {
    aoi_sum: u128,
    slots: u64,
    peak_sum: u128,
    resets: u64,
    peak_all_sum: u128,
    deliveries: u64,
    attempts: u64,
    successes: u64,
    busy: u64,
    slope: SlopeFit,
}

/// Measurement-window statistics of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub realization: u32,
    pub link_id: u32,
    pub avg_aoi: f64,
    /// Mean of the sampled peaks; `None` with fewer than
    /// [`MIN_RESETS`] samples.
    pub peak_aoi: Option<f64>,
    /// Successes over attempts; `None` with fewer than [`MIN_ATTEMPTS`]
    /// attempts.
    pub mu_hat: Option<f64>,
    pub activity: f64,
    pub attempts: u64,
    pub successes: u64,
    pub resets: u64,
    pub peak_samples: u64,
    pub queue_slope: f64,
    pub arrivals: u64,
    pub departures: u64,
    pub final_queue: u64,
}

pub const MIN_ATTEMPTS: u64 = 100;
pub const MIN_RESETS: u64 = 10;

/// Result of running one deployment.
#[derive(Debug, Clone)]
pub struct RealizationOutcome {
    pub realization: u32,
    pub n_links: usize,
    pub resamples: u32,
    /// Slot at which a queue exceeded the cap, if any.
    pub aborted_at: Option<u64>,
    pub links: Vec<LinkReport>,
    pub logs: Vec<Vec<Delivery>>,
}

/// Network state advanced one slot at a time.
pub struct Simulation<'a> {
    cfg: &'a NetworkConfig,
    dep: &'a Deployment,
    opts: SimOptions,
    discipline: Discipline,
    links: Vec<LinkState>,
    arrival: Vec<ChaCha8Rng>,
    access: Vec<ChaCha8Rng>,
    fading: Vec<ChaCha8Rng>,
    active: Vec<bool>,
    /// ln(1 + θ g_j/g₀) aligned with each receiver's interferer list.
    log_factors: Vec<Vec<f64>>,
    /// Suffix sums of `log_factors`, bounding what the remaining interferers
    /// can still add.
    log_tails: Vec<Vec<f64>>,
    noise_terms: Vec<f64>,
    acc: Vec<Accum>,
    warmup: u64,
    slope_from: u64,
    queue_cap: usize,
    next_slot: u64,
    aborted_at: Option<u64>,
}

impl<'a> Simulation<'a> {
    /// `dep` must already carry pathloss tables.
    pub fn new(
        cfg: &'a NetworkConfig,
        dep: &'a Deployment,
        opts: SimOptions,
        rng: &RngContract,
        realization: u32,
        sim: &SimParams,
    ) -> Self {
        assert!(dep.has_pathloss(), "deployment has no pathloss tables");
        let n = dep.len();
        let theta = cfg.theta();
        let stream = |i: usize, p: Purpose| rng.for_link(realization, i as u32, p);
        let (log_factors, noise_terms) = if opts.fading == FadingMode::Integrated {
            (0..n)
                .map(|i| {
                    let g0 = dep.signal_gain(i);
                    let lf = dep
                        .interferers(i)
                        .iter()
                        .map(|c| (theta * c.gain / g0).ln_1p())
                        .collect();
                    (lf, theta / (cfg.rho() * g0))
                })
                .unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        let log_tails = log_factors
            .iter()
            .map(|lf: &Vec<f64>| {
                let mut tail = vec![0.0; lf.len() + 1];
                for k in (0..lf.len()).rev() {
                    tail[k] = tail[k + 1] + lf[k];
                }
                tail
            })
            .collect();
        let warmup = sim.warmup();
        Simulation {
            cfg,
            dep,
            discipline: cfg.discipline(),
            links: (0..n).map(|_| LinkState::new(opts.trace)).collect(),
            arrival: (0..n).map(|i| stream(i, Purpose::Arrival)).collect(),
            access: (0..n).map(|i| stream(i, Purpose::Access)).collect(),
            fading: (0..n).map(|i| stream(i, Purpose::Fading)).collect(),
            active: vec![false; n],
            log_factors,
            log_tails,
            noise_terms,
            acc: vec![Accum::default(); n],
            warmup,
            slope_from: (sim.slots / 2).max(warmup),
            queue_cap: sim.queue_cap,
            next_slot: 0,
            aborted_at: None,
            opts,
        }
    }

    pub fn links(&self) -> &[LinkState] {
        &self.links
    }

    pub fn aborted_at(&self) -> Option<u64> {
        self.aborted_at
    }

    fn decode(&mut self, i: usize) -> bool {
        let theta = self.cfg.theta();
        if theta == 0.0 {
            return true;
        }
        let interferers = self.dep.interferers(i);
        let rng = &mut self.fading[i];
        match self.opts.fading {
            FadingMode::Explicit => {
                let h0: f64 = Exp1.sample(rng);
                let budget = h0 * self.dep.signal_gain(i) / theta - 1.0 / self.cfg.rho();
                if budget <= 0.0 {
                    return false;
                }
                let mut sum = 0.0;
                for c in interferers {
                    if self.active[c.tx as usize] {
                        let h: f64 = Exp1.sample(rng);
                        sum += h * c.gain;
                        if sum >= budget {
                            return false;
                        }
                    }
                }
                true
            }
            FadingMode::Integrated => {
                let e: f64 = Exp1.sample(rng);
                let mut sum = self.noise_terms[i];
                if sum >= e {
                    return false;
                }
                let tails = &self.log_tails[i];
                for (k, (c, lf)) in interferers.iter().zip(&self.log_factors[i]).enumerate() {
                    if sum + tails[k] < e {
                        return true;
                    }
                    if self.active[c.tx as usize] {
                        sum += lf;
                        if sum >= e {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Advance one slot. Returns false once a queue has exceeded the cap.
    pub fn step(&mut self) -> bool {
        if self.aborted_at.is_some() {
            return false;
        }
        let t = self.next_slot;
        self.next_slot += 1;
        let xi = self.cfg.xi();
        let p = self.cfg.access_p();
        let measuring = t >= self.warmup;
        let n = self.links.len();

        for i in 0..n {
            if self.arrival[i].random_bool(xi) {
                self.links[i].arrive(t);
            }
            let gate = self.access[i].random_bool(p);
            let nonempty = !self.links[i].queue.is_empty();
            let active = gate && (nonempty || self.opts.saturate);
            self.active[i] = active;
            let link = &mut self.links[i];
            link.active_now = active;
            link.elapsed_slots += 1;
            if nonempty {
                link.busy_slots += 1;
            }
            if measuring && nonempty {
                self.acc[i].busy += 1;
            }
        }

        for i in 0..n {
            let mut delivered = None;
            if self.active[i] {
                let ok = self.decode(i);
                if measuring {
                    self.acc[i].attempts += 1;
                    self.acc[i].successes += ok as u64;
                }
                if ok {
                    delivered = self.links[i].deliver(self.discipline, t);
                }
            }
            if delivered.is_none() {
                self.links[i].age();
            }
            let link = &self.links[i];
            if link.queue.len() > self.queue_cap {
                self.aborted_at = Some(t);
            }
            if measuring {
                let a = &mut self.acc[i];
                a.slots += 1;
                a.aoi_sum += link.aoi as u128;
                if let Some(d) = delivered {
                    a.deliveries += 1;
                    a.peak_all_sum += d.age_before as u128;
                    if d.caused_reset {
                        a.resets += 1;
                        a.peak_sum += d.age_before as u128;
                    }
                }
                if t >= self.slope_from {
                    a.slope.push(t as f64, link.queue.len() as f64);
                }
            }
        }
        self.aborted_at.is_none()
    }

    /// Run until `slots` slots have elapsed or a queue exceeds the cap.
    pub fn run(&mut self, slots: u64) {
        while self.next_slot < slots {
            if !self.step() {
                break;
            }
        }
    }

    pub fn reports(&self, realization: u32) -> Vec<LinkReport> {
        self.acc
            .iter()
            .zip(&self.links)
            .enumerate()
            .map(|(i, (a, l))| {
                let (peak_sum, samples) = match self.opts.peak_sampler {
                    PeakSampler::Resetting => (a.peak_sum, a.resets),
                    PeakSampler::AllDeliveries => (a.peak_all_sum, a.deliveries),
                };
                LinkReport {
                    realization,
                    link_id: i as u32,
                    avg_aoi: if a.slots > 0 {
                        a.aoi_sum as f64 / a.slots as f64
                    } else {
                        f64::NAN
                    },
                    peak_aoi: (samples >= MIN_RESETS).then(|| peak_sum as f64 / samples as f64),
                    mu_hat: (a.attempts >= MIN_ATTEMPTS)
                        .then(|| a.successes as f64 / a.attempts as f64),
                    activity: if a.slots > 0 {
                        a.busy as f64 / a.slots as f64
                    } else {
                        f64::NAN
                    },
                    attempts: a.attempts,
                    successes: a.successes,
                    resets: a.resets,
                    peak_samples: samples,
                    queue_slope: a.slope.slope(),
                    arrivals: l.arrivals,
                    departures: l.departures,
                    final_queue: l.queue.len() as u64,
                }
            })
            .collect()
    }

    pub fn into_logs(self) -> Vec<Vec<Delivery>> {
        self.links
            .into_iter()
            .map(|l| l.delivery_log.unwrap_or_default())
            .collect()
    }
}

/// Sample a deployment, build its tables and run the slot loop.
pub fn run_realization(
    cfg: &NetworkConfig,
    sim: &SimParams,
    opts: &SimOptions,
    rng: &RngContract,
    realization: u32,
) -> Result<RealizationOutcome> {
    let mut dep = sample_deployment(cfg, rng, realization)?;
    let culling = sim
        .culling_radius_m
        .unwrap_or_else(|| default_culling_radius(cfg.link_distance(), cfg.alpha()));
    dep.build_pathloss(culling)?;
    Ok(run_on_deployment(cfg, &dep, sim, opts, rng, realization))
}

pub fn run_on_deployment(
    cfg: &NetworkConfig,
    dep: &Deployment,
    sim: &SimParams,
    opts: &SimOptions,
    rng: &RngContract,
    realization: u32,
) -> RealizationOutcome {
    let mut s = Simulation::new(cfg, dep, opts.clone(), rng, realization, sim);
    s.run(sim.slots);
    let links = s.reports(realization);
    let aborted_at = s.aborted_at();
    RealizationOutcome {
        realization,
        n_links: dep.len(),
        resamples: dep.resamples,
        aborted_at,
        links,
        logs: if opts.trace { s.into_logs() } else { Vec::new() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkParams;

    fn single_link(cfg: &NetworkConfig) -> Deployment {
        let mut d = Deployment::from_positions(
            vec![[10.0, 10.0]],
            vec![[10.0 + cfg.link_distance(), 10.0]],
            cfg.region_side(),
            cfg.link_distance(),
            cfg.alpha(),
        );
        d.build_pathloss(f64::INFINITY).unwrap();
        d
    }

    fn params(slots: u64, warmup: u64) -> SimParams {
        SimParams {
            slots,
            warmup_slots: Some(warmup),
            realizations: 1,
            ..Default::default()
        }
    }

    #[test]
    fn isolated_link_success_rate_is_noise_limited() {
        // Push the link far enough out that noise alone causes visible outage.
        let cfg = NetworkParams {
            link_distance_m: 800.0,
            xi: 1.0,
            access_p: 1.0,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let dep = single_link(&cfg);
        let out = run_on_deployment(&cfg, &dep, &params(200_000, 0), &SimOptions::default(), &RngContract::new(1), 0);
        let mu = out.links[0].mu_hat.unwrap();
        let expect = cfg.noise_success();
        // binomial sd ≈ sqrt(0.25/2e5) ≈ 1.1e-3
        assert!((mu - expect).abs() < 5e-3, "mu {mu} vs {expect}");
    }

    #[test]
    fn zero_threshold_always_delivers() {
        let cfg = NetworkParams {
            theta_db: f64::NEG_INFINITY,
            xi: 1.0,
            access_p: 1.0,
            discipline: Discipline::LcfsPr,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let dep = single_link(&cfg);
        let out = run_on_deployment(&cfg, &dep, &params(1000, 10), &SimOptions::default(), &RngContract::new(1), 0);
        let l = &out.links[0];
        assert_eq!(l.mu_hat, Some(1.0));
        assert_eq!(l.avg_aoi, 1.0);
        assert_eq!(l.peak_aoi, Some(1.0));
    }

    #[test]
    fn age_sample_path_identity_holds_on_traces() {
        for discipline in [Discipline::Fcfs, Discipline::LcfsPr] {
            let cfg = NetworkParams {
                lambda_per_m2: 2e-4,
                area_km2: 0.1,
                xi: 0.4,
                discipline,
                ..Default::default()
            }
            .validate()
            .unwrap();
            let rng = RngContract::new(77);
            let mut dep = sample_deployment(&cfg, &rng, 0).unwrap();
            dep.build_pathloss(f64::INFINITY).unwrap();
            let opts = SimOptions {
                trace: true,
                ..Default::default()
            };
            let sim = params(3000, 0);
            let mut s = Simulation::new(&cfg, &dep, opts, &rng, 0, &sim);
            let mut ages = vec![Vec::new(); dep.len()];
            let mut queue_lens: Vec<Vec<usize>> = vec![vec![0]; dep.len()];
            for _ in 0..sim.slots {
                s.step();
                for (i, l) in s.links().iter().enumerate() {
                    ages[i].push(l.aoi);
                    queue_lens[i].push(l.queue.len());
                }
            }
            let links: Vec<_> = s.links().to_vec();
            for (i, l) in links.iter().enumerate() {
                let log = l.delivery_log.as_ref().unwrap();
                let resets: Vec<_> = log.iter().filter(|d| d.caused_reset).collect();
                for w in resets.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    for t in a.slot..b.slot {
                        assert_eq!(ages[i][t as usize], t - a.generated + 1);
                    }
                    assert_eq!(ages[i][b.slot as usize], b.slot - b.generated + 1);
                }
                for w in ages[i].windows(2) {
                    assert!(w[1] == w[0] + 1 || w[1] <= w[0], "age jumped by more than 1");
                }
                for w in queue_lens[i].windows(2) {
                    assert!((w[1] as i64 - w[0] as i64).abs() <= 1);
                }
                if discipline == Discipline::Fcfs {
                    for w in log.windows(2) {
                        assert!(w[1].generated >= w[0].generated);
                    }
                }
                assert_eq!(l.arrivals, l.departures + l.queue.len() as u64);
                assert!(ages[i].iter().all(|&a| a >= 1));
            }
        }
    }

    #[test]
    fn lcfs_sends_newest_packet() {
        let cfg = NetworkParams {
            lambda_per_m2: 3e-4,
            area_km2: 0.05,
            xi: 0.7,
            discipline: Discipline::LcfsPr,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let rng = RngContract::new(5);
        let mut dep = sample_deployment(&cfg, &rng, 0).unwrap();
        dep.build_pathloss(f64::INFINITY).unwrap();
        let opts = SimOptions {
            trace: true,
            ..Default::default()
        };
        let sim = params(2000, 0);
        let mut s = Simulation::new(&cfg, &dep, opts, &rng, 0, &sim);
        for t in 0..sim.slots {
            let before: Vec<(Vec<u64>, u64)> = s
                .links()
                .iter()
                .map(|l| (l.queue.iter().copied().collect(), l.arrivals))
                .collect();
            s.step();
            for (i, l) in s.links().iter().enumerate() {
                let log = l.delivery_log.as_ref().unwrap();
                if let Some(d) = log.last().filter(|d| d.slot == t) {
                    let (mut cand, arrivals) = before[i].clone();
                    if l.arrivals > arrivals {
                        cand.push(t);
                    }
                    assert_eq!(d.generated, *cand.iter().max().unwrap());
                }
            }
        }
    }

    #[test]
    fn saturated_outcomes_do_not_depend_on_discipline() {
        let base = NetworkParams {
            lambda_per_m2: 2e-4,
            area_km2: 0.2,
            xi: 0.2,
            ..Default::default()
        };
        let rng = RngContract::new(12);
        let opts = SimOptions {
            saturate: true,
            ..Default::default()
        };
        let sim = params(2000, 0);
        let mut results = Vec::new();
        for d in [Discipline::Fcfs, Discipline::LcfsPr] {
            let cfg = NetworkParams { discipline: d, ..base.clone() }.validate().unwrap();
            let out = run_realization(&cfg, &sim, &opts, &rng, 0).unwrap();
            results.push(out.links.iter().map(|l| (l.attempts, l.successes)).collect::<Vec<_>>());
        }
        assert_eq!(results[0], results[1]);
    }

    #[test]
    fn integrated_fading_matches_explicit_in_distribution() {
        let cfg = NetworkParams {
            lambda_per_m2: 1e-4,
            area_km2: 1.0,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let sim = params(6000, 1000);
        let rng = RngContract::new(3);
        let mean_mu = |fading| {
            let opts = SimOptions {
                fading,
                saturate: true,
                ..Default::default()
            };
            let out = run_realization(&cfg, &sim, &opts, &rng, 0).unwrap();
            let (s, a) = out.links.iter().fold((0, 0), |(s, a), l| (s + l.successes, a + l.attempts));
            s as f64 / a as f64
        };
        let e = mean_mu(FadingMode::Explicit);
        let i = mean_mu(FadingMode::Integrated);
        assert!((e - i).abs() < 0.01, "explicit {e} integrated {i}");
    }
}
