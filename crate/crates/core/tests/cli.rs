use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatial-aoi"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("AOI_WORKERS").output().expect("binary runs")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn analyze_writes_one_row_with_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = run(&["analyze", "--method", "beta", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("analytic.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "config_hash,lambda,r,xi,p,theta_db,method,status,p_s,xi_c,c1,c2,beta_a,beta_b,avg_fcfs,peak_fcfs,\
         avg_lcfs,peak_lcfs,avg_fcfs_hw,peak_fcfs_hw,avg_lcfs_hw,peak_lcfs_hw,unstable_mass,iterations,residual,ks_to_beta"
    );
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells[6], "beta_meta");
    let iterations: f64 = cells[23].parse().unwrap();
    assert!(iterations <= 10.0);
    for c in &cells[8..] {
        assert!(c.parse::<f64>().is_ok(), "cell {c}");
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad = write_config(d, "[network]\nxi = 1.5\n");
    let o = run(&["analyze", "--config", &bad, "--out", d.join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("xi"));

    let o = run(&["figure", "fig9", "--out", d.join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aoi_vs_lambda"));

    let missing = d.join("nope.toml");
    let o = run(&["analyze", "--config", missing.to_str().unwrap(), "--out", d.join("z").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    // output directory blocked by a plain file
    let blocker = d.join("blocker");
    fs::write(&blocker, "").unwrap();
    let o = run(&["analyze", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let o = run(&["sweep", "--param", "alpha", "--values", "3:4:1", "--out", d.join("w").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_flags_instability() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sim = |out: &Path, extra: &[&str]| {
        let mut args = vec![
            "simulate",
            "--realizations",
            "3",
            "--slots",
            "6000",
            "--fading",
            "integrated",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    sim(&d.join("a"), &["--workers", "1"]);
    sim(&d.join("b"), &["--workers", "3"]);
    for f in ["sim_links.csv", "sim_summary.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap());
    }
    let summary = read(&d.join("a/sim_summary.csv"));
    assert!(summary.trim_end().ends_with("false"));

    // 1.2 times the critical rate at the defaults
    let cfg = write_config(d, "[network]\nxi = 0.671\n");
    sim(&d.join("u"), &["--config", &cfg, "--workers", "2"]);
    let summary = read(&d.join("u/sim_summary.csv"));
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("unstable"), "true");
    assert_eq!(col("avg_aoi"), "inf");
    assert_eq!(col("peak_aoi"), "inf");
}

#[test]
fn sweep_counts_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let args = [
        "sweep",
        "--param",
        "xi",
        "--values",
        "0.05:0.60:0.05",
        "--method",
        "beta,mean",
        "--out",
        out.to_str().unwrap(),
    ];
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(out.join("sweep.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 12 * 2);
    assert!(text.lines().last().unwrap().contains(",unstable,"));

    // drop one point and rerun: the rest is reused, output unchanged
    let points: Vec<_> = fs::read_dir(out.join("points")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(points.len(), 24);
    fs::remove_file(&points[3]).unwrap();
    let o = run(&args);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("23 reused"));
    assert_eq!(fs::read(out.join("sweep.csv")).unwrap(), first);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["points"].as_array().unwrap().len(), 24);
}

#[test]
fn sim_and_analytic_rows_share_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = run(&[
        "sweep",
        "--param",
        "access_p",
        "--values",
        "0.5,0.8",
        "--method",
        "sim,mean",
        "--realizations",
        "2",
        "--slots",
        "4000",
        "--fading",
        "integrated",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("sweep.csv"));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][2], rows[1][2]);
    assert_eq!(rows[2][2], rows[3][2]);
    assert_ne!(rows[0][2], rows[2][2]);
    assert_eq!(rows[0][8], "sim");
}

#[test]
fn analytic_figures_have_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    let o = run(&["figure", "aoi_vs_lambda", "--skip-sim", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("fig_aoi_vs_lambda.csv"));
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("lambda,xi,avg_fcfs_sim,peak_fcfs_sim,avg_lcfs_sim,peak_lcfs_sim,avg_fcfs_ana"));
    assert_eq!(text.lines().count(), 1 + 7);

    let o = run(&["figure", "stability", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = read(&out.join("fig_stability.csv"));
    assert!(text.starts_with("r_m,p,xi_c,"));
    for line in text.lines().skip(1) {
        for c in line.split(',') {
            assert!(c.parse::<f64>().is_ok(), "cell {c}");
        }
    }
}
