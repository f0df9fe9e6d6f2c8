use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use spatial_aoi_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sa_last_error_message()) }.to_string_lossy().into_owned()
}

struct Cfg(*mut SaConfig);

impl Cfg {
    fn new() -> Self {
        Cfg(sa_config_new())
    }
    fn set(&self, name: &str, v: f64) -> SaStatus {
        let n = CString::new(name).unwrap();
        unsafe { sa_config_set(self.0, n.as_ptr(), v) }
    }
}

impl Drop for Cfg {
    fn drop(&mut self) {
        unsafe { sa_config_free(self.0) }
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(sa_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn analyze_defaults() {
    let c = Cfg::new();
    let mut p = SaPrediction::default();
    assert_eq!(unsafe { sa_analyze(c.0, SaMethod::BetaMeta, &mut p) }, SaStatus::Ok);
    assert!(p.p_s > 0.0 && p.p_s < 1.0);
    assert!(p.iterations <= 10);
    assert!(p.avg_lcfs.is_finite() && p.avg_fcfs > p.avg_lcfs);

    let mut ps = 0.0;
    let mut xi_c = 0.0;
    unsafe {
        assert_eq!(sa_solve_ps(c.0, &mut ps), SaStatus::Ok);
        assert_eq!(sa_critical_xi(c.0, &mut xi_c), SaStatus::Ok);
    }
    assert_eq!(ps, p.p_s);
    assert_eq!(xi_c, p.xi_c);

    let mut m = SaPrediction::default();
    assert_eq!(unsafe { sa_analyze(c.0, SaMethod::MeanApprox, &mut m) }, SaStatus::Ok);
    assert_eq!(m.c1, m.p_s);
    assert!(m.beta_a.is_nan());
}

#[test]
fn beyond_critical_rate_is_infinite() {
    let c = Cfg::new();
    assert_eq!(c.set("xi", 0.65), SaStatus::Ok);
    let mut p = SaPrediction::default();
    assert_eq!(unsafe { sa_analyze(c.0, SaMethod::BetaMeta, &mut p) }, SaStatus::Ok);
    assert!(p.avg_fcfs.is_infinite() && p.peak_lcfs.is_infinite());
}

#[test]
fn invalid_values_are_rejected_and_leave_config_unchanged() {
    let c = Cfg::new();
    assert_eq!(c.set("xi", 1.5), SaStatus::Validation);
    assert!(last_error().contains("xi"));
    assert_eq!(c.set("bogus", 1.0), SaStatus::Validation);
    let mut p = SaPrediction::default();
    assert_eq!(unsafe { sa_analyze(c.0, SaMethod::MeanApprox, &mut p) }, SaStatus::Ok);
    assert!(last_error().is_empty());

    assert_eq!(unsafe { sa_analyze(ptr::null(), SaMethod::MeanApprox, &mut p) }, SaStatus::NullPointer);
    assert_eq!(unsafe { sa_analyze(c.0, SaMethod::MeanApprox, ptr::null_mut()) }, SaStatus::NullPointer);
    assert_eq!(unsafe { sa_config_set_sim(c.0, 0, 100, 1) }, SaStatus::Validation);
}

#[test]
fn toml_config() {
    let text = CString::new("[network]\nxi = 0.2\naccess_p = 0.5\n").unwrap();
    let mut raw = ptr::null_mut();
    assert_eq!(unsafe { sa_config_from_toml(text.as_ptr(), &mut raw) }, SaStatus::Ok);
    let c = Cfg(raw);
    let d = Cfg::new();
    assert_eq!(d.set("xi", 0.2), SaStatus::Ok);
    assert_eq!(d.set("access_p", 0.5), SaStatus::Ok);
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        sa_solve_ps(c.0, &mut a);
        sa_solve_ps(d.0, &mut b);
    }
    assert_eq!(a, b);

    let bad = CString::new("[network]\nxi = \"x\"\n").unwrap();
    let mut raw = ptr::null_mut();
    assert_ne!(unsafe { sa_config_from_toml(bad.as_ptr(), &mut raw) }, SaStatus::Ok);
    assert!(raw.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn conditional_aoi_closed_forms() {
    let mut a = SaAoiPair::default();
    // one packet per slot, always served: the age is one after every slot
    assert_eq!(unsafe { sa_cond_aoi(1.0, 1.0, SaDiscipline::LcfsPr, &mut a) }, SaStatus::Ok);
    assert!((a.avg - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { sa_cond_aoi(0.5, 0.4, SaDiscipline::Fcfs, &mut a) }, SaStatus::Numerical);
    assert!(!last_error().is_empty());
}

#[test]
fn simulate_is_reproducible_across_workers() {
    let c = Cfg::new();
    unsafe {
        assert_eq!(sa_config_set_sim(c.0, 2, 3000, 5), SaStatus::Ok);
        assert_eq!(sa_config_set_discipline(c.0, SaDiscipline::LcfsPr), SaStatus::Ok);
    }
    let (mut a, mut b) = (SaSimSummary::default(), SaSimSummary::default());
    unsafe {
        assert_eq!(sa_simulate(c.0, 1, true, &mut a), SaStatus::Ok);
        assert_eq!(sa_simulate(c.0, 2, true, &mut b), SaStatus::Ok);
    }
    assert!(a.links > 0 && !a.unstable);
    assert_eq!(a, b);
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spatial_aoi.h")).unwrap();
    for name in [
        "SPATIAL_AOI_H",
        "typedef struct SaConfig SaConfig",
        "SA_STATUS_NULL_POINTER = 5",
        "sa_config_new(void)",
        "sa_config_free(SaConfig *cfg)",
        "sa_analyze(",
        "sa_solve_ps(",
        "sa_critical_xi(",
        "sa_cond_aoi(",
        "sa_simulate(",
        "sa_last_error_message(void)",
        "sa_version(void)",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// Compile and run a small C program against the static library when a C
/// compiler is available.
#[test]
fn c_program_links_and_runs() {
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libspatial_aoi_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "spatial_aoi.h"
int main(void) {
    SaConfig *cfg = sa_config_new();
    SaPrediction p;
    if (sa_analyze(cfg, SA_METHOD_BETA_META, &p) != SA_STATUS_OK) return 1;
    if (sa_config_set(cfg, "alpha", 1.0) != SA_STATUS_VALIDATION) return 2;
    if (sa_analyze(NULL, SA_METHOD_BETA_META, &p) != SA_STATUS_NULL_POINTER) return 3;
    printf("%.6f %s\n", p.p_s, sa_version());
    sa_config_free(cfg);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let line = String::from_utf8(run.stdout).unwrap();
    assert!(line.starts_with("0.9"), "{line}");
}
