//! C interface to the spatial-aoi solver and simulator.
//!
//! Functions return an [`SaStatus`]; on failure a description is available
//! from [`sa_last_error_message`] on the same thread. Configurations are
//! opaque handles created by [`sa_config_new`] or [`sa_config_from_toml`]
//! and released with [`sa_config_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spatial_aoi::analytic::{
    aoi_predict_with, beta_meta, cond_aoi_fcfs, cond_aoi_lcfs, critical_xi, exact_meta_cdf, solve_ps, ExactOptions,
    MetaDistribution, PredictMethod, PredictOptions,
};
use spatial_aoi::config::ConfigFile;
use spatial_aoi::sim::{simulate, FadingMode, SimOptions};
use spatial_aoi::{Discipline, Error, NetworkParams, SimParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaStatus {
    Ok = 0,
    Validation = 2,
    Numerical = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaDiscipline {
    Fcfs = 0,
    LcfsPr = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaMethod {
    BetaMeta = 0,
    ExactMeta = 1,
    MeanApprox = 2,
}

/// Network and simulation parameters.
#[derive(Debug, Clone, Default)]
pub struct SaConfig {
    network: NetworkParams,
    sim: SimParams,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaAoiPair {
    pub avg: f64,
    pub peak: f64,
}

/// Analytical prediction. AoI fields are infinite beyond the critical
/// rate; fields a method does not produce are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaPrediction {
    pub p_s: f64,
    pub xi_c: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub avg_fcfs: f64,
    pub peak_fcfs: f64,
    pub avg_lcfs: f64,
    pub peak_lcfs: f64,
    pub iterations: u32,
}

/// Network-level simulation aggregates.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaSimSummary {
    pub links: u64,
    pub avg_aoi: f64,
    pub avg_aoi_hw: f64,
    pub peak_aoi: f64,
    pub peak_aoi_hw: f64,
    pub stable_avg_aoi: f64,
    pub stable_peak_aoi: f64,
    pub mu_mean: f64,
    pub mean_activity: f64,
    pub median_queue_slope: f64,
    pub unstable: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SaStatus {
    match e.exit_code() {
        2 => SaStatus::Validation,
        3 => SaStatus::Numerical,
        _ => SaStatus::Io,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SaStatus, String)>) -> SaStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SaStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SaStatus, String) {
    (SaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn config_ref<'a>(cfg: *const SaConfig) -> Result<&'a SaConfig, (SaStatus, String)> {
    cfg.as_ref().ok_or_else(|| null("config"))
}

/// Message describing the last failure on this thread, or an empty
/// string. Valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn sa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Configuration with default parameters. Never null.
#[no_mangle]
pub extern "C" fn sa_config_new() -> *mut SaConfig {
    Box::into_raw(Box::default())
}

/// Parse a TOML configuration into `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_config_from_toml(text: *const c_char, out: *mut *mut SaConfig) -> SaStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (SaStatus::Validation, "config text is not UTF-8".to_string()))?;
        let file = ConfigFile::parse(s).map_err(lib)?;
        file.network.validate().map_err(lib)?;
        *out = Box::into_raw(Box::new(SaConfig {
            network: file.network,
            sim: file.simulation,
        }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sa_config_free(cfg: *mut SaConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Set a numeric network parameter by its configuration-file name. The
/// configuration is left unchanged if the new value is invalid.
///
/// # Safety
/// `cfg` must be a valid handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sa_config_set(cfg: *mut SaConfig, name: *const c_char, value: f64) -> SaStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_string_lossy();
        let mut next = cfg.network.clone();
        let slot = match name.as_ref() {
            "lambda_per_m2" => &mut next.lambda_per_m2,
            "link_distance_m" => &mut next.link_distance_m,
            "alpha" => &mut next.alpha,
            "theta_db" => &mut next.theta_db,
            "tx_power_dbm" => &mut next.tx_power_dbm,
            "noise_dbm" => &mut next.noise_dbm,
            "access_p" => &mut next.access_p,
            "xi" => &mut next.xi,
            "area_km2" => &mut next.area_km2,
            other => return Err((SaStatus::Validation, format!("unknown parameter `{other}`"))),
        };
        *slot = value;
        next.validate().map_err(lib)?;
        cfg.network = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn sa_config_set_discipline(cfg: *mut SaConfig, discipline: SaDiscipline) -> SaStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        cfg.network.discipline = match discipline {
            SaDiscipline::Fcfs => Discipline::Fcfs,
            SaDiscipline::LcfsPr => Discipline::LcfsPr,
        };
        Ok(())
    })
}

/// Simulation size and seed. The warm-up follows the default rule.
///
/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn sa_config_set_sim(cfg: *mut SaConfig, realizations: u32, slots: u64, seed: u64) -> SaStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        let next = SimParams {
            realizations,
            slots,
            seed,
            ..cfg.sim.clone()
        };
        next.validate().map_err(lib)?;
        cfg.sim = next;
        Ok(())
    })
}

/// Success probability of the typical active link.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_solve_ps(cfg: *const SaConfig, out: *mut f64) -> SaStatus {
    guard(|| {
        let c = config_ref(cfg)?.network.validate().map_err(lib)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = solve_ps(&c).map_err(lib)?.p_s;
        Ok(())
    })
}

/// Largest stable update rate.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_critical_xi(cfg: *const SaConfig, out: *mut f64) -> SaStatus {
    guard(|| {
        let c = config_ref(cfg)?.network.validate().map_err(lib)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = critical_xi(&c).map_err(lib)?.xi_c;
        Ok(())
    })
}

/// Single-link AoI for update rate `xi` and per-slot service probability
/// `service`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_cond_aoi(xi: f64, service: f64, discipline: SaDiscipline, out: *mut SaAoiPair) -> SaStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let pair = match discipline {
            SaDiscipline::Fcfs => cond_aoi_fcfs(xi, service),
            SaDiscipline::LcfsPr => cond_aoi_lcfs(xi, service),
        }
        .map_err(lib)?;
        *out = SaAoiPair {
            avg: pair.avg,
            peak: pair.peak,
        };
        Ok(())
    })
}

/// Network AoI by the chosen method. Rates at or beyond the critical rate
/// succeed with infinite AoI fields.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_analyze(cfg: *const SaConfig, method: SaMethod, out: *mut SaPrediction) -> SaStatus {
    guard(|| {
        let c = config_ref(cfg)?.network.validate().map_err(lib)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let xi_c = critical_xi(&c).map_err(lib)?.xi_c;
        let ps = solve_ps(&c).map_err(lib)?;
        let nan = f64::NAN;
        let mut r = SaPrediction {
            p_s: ps.p_s,
            xi_c,
            c1: nan,
            c2: nan,
            beta_a: nan,
            beta_b: nan,
            avg_fcfs: f64::INFINITY,
            peak_fcfs: f64::INFINITY,
            avg_lcfs: f64::INFINITY,
            peak_lcfs: f64::INFINITY,
            iterations: 0,
        };
        if c.xi() < xi_c {
            let (pm, meta) = match method {
                SaMethod::BetaMeta => (PredictMethod::BetaMeta, beta_meta(&c).map_err(lib)?),
                SaMethod::ExactMeta => (
                    PredictMethod::ExactMeta,
                    exact_meta_cdf(&c, &ExactOptions::default()).map_err(lib)?,
                ),
                SaMethod::MeanApprox => (PredictMethod::MeanApprox, MetaDistribution::degenerate(ps.p_s)),
            };
            if method == SaMethod::MeanApprox {
                r.c1 = ps.p_s;
                r.iterations = ps.iterations as u32;
            } else {
                r.c1 = meta.c1;
                r.c2 = meta.c2;
                r.beta_a = meta.shape_a;
                r.beta_b = meta.shape_b;
                r.iterations = meta.iterations_used as u32;
            }
            let a = aoi_predict_with(&c, &meta, pm, xi_c, &PredictOptions::default()).map_err(lib)?;
            r.avg_fcfs = a.avg_fcfs;
            r.peak_fcfs = a.peak_fcfs;
            r.avg_lcfs = a.avg_lcfs;
            r.peak_lcfs = a.peak_lcfs;
        }
        *out = r;
        Ok(())
    })
}

/// Monte Carlo simulation of the configured network on `workers` threads.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_simulate(
    cfg: *const SaConfig,
    workers: u32,
    integrated_fading: bool,
    out: *mut SaSimSummary,
) -> SaStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        let c = cfg.network.validate().map_err(lib)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let opts = SimOptions {
            fading: if integrated_fading {
                FadingMode::Integrated
            } else {
                FadingMode::Explicit
            },
            ..SimOptions::default()
        };
        let r = simulate(&c, &cfg.sim, &opts, workers.max(1) as usize).map_err(lib)?;
        *out = SaSimSummary {
            links: r.links.len() as u64,
            avg_aoi: r.network_avg_aoi.mean,
            avg_aoi_hw: r.network_avg_aoi.half_width,
            peak_aoi: r.network_peak_aoi.mean,
            peak_aoi_hw: r.network_peak_aoi.half_width,
            stable_avg_aoi: r.stable_avg_aoi.mean,
            stable_peak_aoi: r.stable_peak_aoi.mean,
            mu_mean: r.mu_mean,
            mean_activity: r.mean_activity,
            median_queue_slope: r.median_queue_slope,
            unstable: r.unstable,
        };
        Ok(())
    })
}
