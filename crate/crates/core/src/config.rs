//! Network and simulation parameters.
//!
//! [`NetworkParams`] mirrors the configuration file (dB / dBm / km²).
//! [`NetworkConfig`] is the validated, linear-unit form used everywhere else;
//! it can only be obtained through [`NetworkParams::validate`] and is
//! immutable afterwards.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Discipline {
    #[default]
    #[serde(rename = "fcfs")]
    Fcfs,
    #[serde(rename = "lcfs_pr")]
    LcfsPr,
}

impl Discipline {
    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::Fcfs => "fcfs",
            Discipline::LcfsPr => "lcfs_pr",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Discipline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fcfs" => Ok(Discipline::Fcfs),
            "lcfs_pr" | "lcfs-pr" => Ok(Discipline::LcfsPr),
            other => Err(Error::validation(
                "discipline",
                format!("expected \"fcfs\" or \"lcfs_pr\", got \"{other}\""),
            )),
        }
    }
}

/// Raw network parameters in configuration-file units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    pub lambda_per_m2: f64,
    pub link_distance_m: f64,
    pub alpha: f64,
    pub theta_db: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub access_p: f64,
    pub xi: f64,
    pub discipline: Discipline,
    pub area_km2: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            lambda_per_m2: 1e-4,
            link_distance_m: 15.0,
            alpha: 3.8,
            theta_db: 0.0,
            tx_power_dbm: 17.0,
            noise_dbm: -90.0,
            access_p: 0.6,
            xi: 0.3,
            discipline: Discipline::Fcfs,
            area_km2: 5.0,
        }
    }
}

fn check_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_nan() || v.is_infinite() {
        return Err(Error::validation(field, format!("must be finite, got {v}")));
    }
    Ok(())
}

impl NetworkParams {
    pub fn validate(&self) -> Result<NetworkConfig> {
        check_finite("lambda_per_m2", self.lambda_per_m2)?;
        // lambda = 0 is the interference-free limit used by the analytic
        // solvers; geometry refuses to sample it.
        if self.lambda_per_m2 < 0.0 {
            return Err(Error::validation(
                "lambda_per_m2",
                format!("density must be nonnegative, got {}", self.lambda_per_m2),
            ));
        }
        check_finite("link_distance_m", self.link_distance_m)?;
        if self.link_distance_m <= 0.0 {
            return Err(Error::validation(
                "link_distance_m",
                format!("link distance must be positive, got {}", self.link_distance_m),
            ));
        }
        check_finite("alpha", self.alpha)?;
        if self.alpha <= 2.0 {
            return Err(Error::validation(
                "alpha",
                format!("alpha must exceed 2, got {}", self.alpha),
            ));
        }
        if self.theta_db.is_nan() || self.theta_db == f64::INFINITY {
            return Err(Error::validation(
                "theta_db",
                format!("threshold must be a finite dB value or -inf, got {}", self.theta_db),
            ));
        }
        check_finite("tx_power_dbm", self.tx_power_dbm)?;
        check_finite("noise_dbm", self.noise_dbm)?;
        if !(self.access_p > 0.0 && self.access_p <= 1.0) {
            return Err(Error::validation(
                "access_p",
                format!("access probability must lie in (0, 1], got {}", self.access_p),
            ));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::validation(
                "xi",
                format!("update frequency must lie in (0, 1], got {}", self.xi),
            ));
        }
        check_finite("area_km2", self.area_km2)?;
        if self.area_km2 <= 0.0 {
            return Err(Error::validation(
                "area_km2",
                format!("region area must be positive, got {}", self.area_km2),
            ));
        }

        let tx_power = dbm_to_watts(self.tx_power_dbm);
        let noise_power = dbm_to_watts(self.noise_dbm);
        Ok(NetworkConfig {
            params: self.clone(),
            lambda: self.lambda_per_m2,
            link_distance: self.link_distance_m,
            alpha: self.alpha,
            theta: db_to_linear(self.theta_db),
            tx_power,
            noise_power,
            rho: tx_power / noise_power,
            access_p: self.access_p,
            xi: self.xi,
            discipline: self.discipline,
            region_area: self.area_km2 * 1e6,
            delta: 2.0 / self.alpha,
        })
    }
}

/// Validated network configuration in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    params: NetworkParams,
    lambda: f64,
    link_distance: f64,
    alpha: f64,
    theta: f64,
    tx_power: f64,
    noise_power: f64,
    rho: f64,
    access_p: f64,
    xi: f64,
    discipline: Discipline,
    region_area: f64,
    delta: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkParams::default()
            .validate()
            .expect("default parameters are valid")
    }
}

impl NetworkConfig {
    pub fn params(&self) -> &NetworkParams {
        &self.params
    }
    /// Pair density, pairs per m².
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// Transmitter-to-receiver distance r, m.
    pub fn link_distance(&self) -> f64 {
        self.link_distance
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// SINR threshold, linear.
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
    /// SNR scale ρ = P_tx / σ².
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn access_p(&self) -> f64 {
        self.access_p
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn discipline(&self) -> Discipline {
        self.discipline
    }
    /// Square region area, m².
    pub fn region_area(&self) -> f64 {
        self.region_area
    }
    pub fn region_side(&self) -> f64 {
        self.region_area.sqrt()
    }
    /// δ = 2/α.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// θ r^α / ρ, the noise-limited outage exponent.
    pub fn noise_exponent(&self) -> f64 {
        self.theta * self.link_distance.powf(self.alpha) / self.rho
    }

    /// Success probability of an interference-free link, exp(−θ r^α / ρ).
    pub fn noise_success(&self) -> f64 {
        (-self.noise_exponent()).exp()
    }

    /// Re-validate after editing the raw parameters.
    pub fn with(&self, edit: impl FnOnce(&mut NetworkParams)) -> Result<NetworkConfig> {
        let mut p = self.params.clone();
        edit(&mut p);
        p.validate()
    }

    /// Stable short hash of the network parameters, shared by every output
    /// row produced for this configuration point.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.params).expect("params serialize");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Simulation control parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub slots: u64,
    /// Defaults to 20% of `slots`, at least 2000, when absent.
    pub warmup_slots: Option<u64>,
    pub realizations: u32,
    pub seed: u64,
    /// Interference culling radius, m. Defaults to the radius beyond which
    /// less than 0.1% of the mean interference power originates.
    pub culling_radius_m: Option<f64>,
    /// Queue length at which a realization is aborted as unstable.
    pub queue_cap: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            slots: 20_000,
            warmup_slots: None,
            realizations: 200,
            seed: 1,
            culling_radius_m: None,
            queue_cap: 1_000_000,
        }
    }
}

impl SimParams {
    pub fn warmup(&self) -> u64 {
        match self.warmup_slots {
            Some(w) => w,
            None => {
                let w = (self.slots / 5).max(2000);
                if w < self.slots {
                    w
                } else {
                    self.slots / 5
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::validation("slots", "must be positive"));
        }
        if self.warmup() >= self.slots {
            return Err(Error::validation(
                "warmup_slots",
                format!(
                    "warmup ({}) must be smaller than slots ({})",
                    self.warmup(),
                    self.slots
                ),
            ));
        }
        if self.realizations == 0 {
            return Err(Error::validation("realizations", "must be positive"));
        }
        if self.queue_cap == 0 {
            return Err(Error::validation("queue_cap", "must be positive"));
        }
        if let Some(r) = self.culling_radius_m {
            if r.is_nan() || r <= 0.0 {
                return Err(Error::validation(
                    "culling_radius_m",
                    format!("must be positive, got {r}"),
                ));
            }
        }
        Ok(())
    }
}

/// Contents of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub network: NetworkParams,
    pub simulation: SimParams,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text)?;
        cfg.simulation.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_db_threshold_is_unity() {
        let cfg = NetworkParams::default().validate().unwrap();
        assert_eq!(cfg.theta(), 1.0);
    }

    #[test]
    fn default_snr_scale() {
        let cfg = NetworkConfig::default();
        assert_relative_eq!(cfg.rho(), 10f64.powf(10.7), max_relative = 1e-12);
        assert_relative_eq!(cfg.rho(), 5.0119e10, max_relative = 1e-4);
        assert_eq!(cfg.rho(), cfg.tx_power() / cfg.noise_power());
        assert_eq!(cfg.delta(), 2.0 / cfg.alpha());
    }

    #[test]
    fn alpha_two_rejected() {
        let p = NetworkParams {
            alpha: 2.0,
            ..Default::default()
        };
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("alpha must exceed 2"), "{err}");
    }

    #[test]
    fn field_specific_rejections() {
        let cases: Vec<(NetworkParams, &str)> = vec![
            (NetworkParams { access_p: 0.0, ..Default::default() }, "access_p"),
            (NetworkParams { access_p: 1.1, ..Default::default() }, "access_p"),
            (NetworkParams { xi: 0.0, ..Default::default() }, "xi"),
            (NetworkParams { xi: 1.5, ..Default::default() }, "xi"),
            (NetworkParams { lambda_per_m2: -1.0, ..Default::default() }, "lambda_per_m2"),
            (NetworkParams { link_distance_m: 0.0, ..Default::default() }, "link_distance_m"),
            (NetworkParams { area_km2: 0.0, ..Default::default() }, "area_km2"),
        ];
        for (p, field) in cases {
            match p.validate() {
                Err(Error::Validation { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected validation error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn warmup_default_rule() {
        let s = SimParams { slots: 20_000, ..Default::default() };
        assert_eq!(s.warmup(), 4000);
        let s = SimParams { slots: 5_000, ..Default::default() };
        assert_eq!(s.warmup(), 2000);
        let s = SimParams { slots: 1_000, ..Default::default() };
        assert_eq!(s.warmup(), 200);
    }

    #[test]
    fn config_file_round_trip() {
        let text = r#"
[network]
lambda_per_m2 = 1e-4
link_distance_m = 25.0
alpha = 3.8
theta_db = 0.0
tx_power_dbm = 17.0
noise_dbm = -90.0
access_p = 0.6
xi = 0.3
discipline = "lcfs_pr"
area_km2 = 5.0

[simulation]
slots = 20000
warmup_slots = 4000
realizations = 200
seed = 7
"#;
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.network.discipline, Discipline::LcfsPr);
        assert_eq!(cfg.network.link_distance_m, 25.0);
        assert_eq!(cfg.simulation.seed, 7);
        let again = ConfigFile::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ConfigFile::parse("[network]\nlamda = 1.0\n").is_err());
    }

    #[test]
    fn hash_tracks_network_params() {
        let a = NetworkConfig::default();
        let b = a.with(|p| p.xi = 0.2).unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), NetworkConfig::default().config_hash());
    }

    proptest! {
        #[test]
        fn db_round_trip(x in 1e-12f64..1e12) {
            let back = db_to_linear(linear_to_db(x));
            prop_assert!(((back - x) / x).abs() < 1e-12);
            let y = linear_to_db(x);
            prop_assert!((linear_to_db(db_to_linear(y)) - y).abs() <= 1e-12 * y.abs().max(1.0));
        }

        #[test]
        fn dbm_round_trip(dbm in -150.0f64..60.0) {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }

        #[test]
        fn derived_fields_recompute_exactly(
            alpha in 2.01f64..6.0, tx in -10.0f64..40.0, noise in -120.0f64..-60.0
        ) {
            let cfg = NetworkParams { alpha, tx_power_dbm: tx, noise_dbm: noise, ..Default::default() }
                .validate().unwrap();
            prop_assert_eq!(cfg.delta(), 2.0 / cfg.alpha());
            prop_assert_eq!(cfg.rho(), cfg.tx_power() / cfg.noise_power());
        }
    }
}
