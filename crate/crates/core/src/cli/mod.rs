//! Command-line front end: simulate, analyze, sweep and figure.

pub mod figures;
pub mod output;
pub mod point;
pub mod sweep;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{ExactOptions, PredictMethod};
use crate::config::{ConfigFile, NetworkConfig, SimParams};
use crate::error::Result;
use crate::sim::{run_outcomes, FadingMode, SimOptions, SimResults, DEFAULT_SERVICE_MARGIN};

use figures::{run_figure, Figure, FigureSettings};
use output::{ensure_dir, link_row, summary_row, write_csv, PointEntry, RunManifest, SIM_LINKS_HEADER, SIM_SUMMARY_HEADER};
use point::{analyze_point, Method, RESULT_HEADER};
use sweep::{parse_values, run_sweep, SweepParam, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "spatial-aoi", version, about = "Age of information in Poisson bipolar networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo simulation of the configured network.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Analytical AoI for the configured network.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// beta, exact or mean.
        #[arg(long, default_value = "beta")]
        method: String,
    },
    /// Sweep one parameter over a range of values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// xi, access_p, lambda, link_distance_m or theta_db.
        #[arg(long)]
        param: String,
        /// START:STOP:STEP (inclusive) or a comma-separated list.
        #[arg(long)]
        values: String,
        /// Comma-separated subset of sim, beta, exact, mean.
        #[arg(long, default_value = "beta", value_delimiter = ',')]
        method: Vec<String>,
    },
    /// Data for one of the standard plots.
    Figure {
        /// cdf, stability, aoi_vs_xi, aoi_vs_p or aoi_vs_lambda.
        name: String,
        #[command(flatten)]
        common: Common,
        /// Analytical method for the analytic columns.
        #[arg(long, default_value = "beta")]
        method: String,
        /// Leave the simulation columns as nan.
        #[arg(long)]
        skip_sim: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FadingArg {
    Explicit,
    Integrated,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub realizations: Option<u32>,
    #[arg(long)]
    pub slots: Option<u64>,
    /// Worker threads [default: available cores].
    #[arg(long, env = "AOI_WORKERS")]
    pub workers: Option<usize>,
    /// How the simulator draws fading.
    #[arg(long, value_enum, default_value = "explicit")]
    pub fading: FadingArg,
}

/// Inputs resolved from a config file and command-line overrides.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub network: NetworkConfig,
    pub sim: SimParams,
    pub sim_opts: SimOptions,
    pub workers: usize,
    pub out: PathBuf,
}

impl Common {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let network = file.network.validate()?;
        let mut sim = file.simulation;
        if let Some(s) = self.seed {
            sim.seed = s;
        }
        if let Some(r) = self.realizations {
            sim.realizations = r;
        }
        if let Some(s) = self.slots {
            sim.slots = s;
        }
        sim.validate()?;
        let workers = match self.workers {
            Some(0) => return Err(crate::Error::validation("workers", "must be positive")),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let sim_opts = SimOptions {
            fading: match self.fading {
                FadingArg::Explicit => FadingMode::Explicit,
                FadingArg::Integrated => FadingMode::Integrated,
            },
            ..SimOptions::default()
        };
        ensure_dir(&self.out)?;
        Ok(Resolved {
            network,
            sim,
            sim_opts,
            workers,
            out: self.out.clone(),
        })
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => cmd_simulate(&common.resolve()?).map(|_| ()),
        Command::Analyze { common, method } => cmd_analyze(&common.resolve()?, method.parse()?),
        Command::Sweep {
            common,
            param,
            values,
            method,
        } => {
            let spec = SweepSpec {
                param: param.parse()?,
                values: parse_values(&values)?,
                methods: method.iter().map(|m| m.trim().parse()).collect::<Result<_>>()?,
            };
            cmd_sweep(&common.resolve()?, &spec)
        }
        Command::Figure {
            name,
            common,
            method,
            skip_sim,
        } => {
            let fig: Figure = name.parse()?;
            cmd_figure(&common.resolve()?, fig, method.parse()?, skip_sim)
        }
    }
}

/// Writes sim_links.csv, sim_summary.csv and manifest.json.
pub fn cmd_simulate(r: &Resolved) -> Result<SimResults> {
    let mut manifest = RunManifest::new("simulate", r.network.config_hash(), r.sim.seed);
    let outcomes = run_outcomes(&r.network, &r.sim, &r.sim_opts, r.workers)?;
    let res = SimResults::aggregate(&r.network, &r.sim, outcomes, DEFAULT_SERVICE_MARGIN);
    let links = r.out.join("sim_links.csv");
    write_csv(&links, &SIM_LINKS_HEADER, &res.links.iter().map(link_row).collect::<Vec<_>>())?;
    let summary = r.out.join("sim_summary.csv");
    write_csv(&summary, &SIM_SUMMARY_HEADER, &[summary_row(&r.network, &res)])?;
    manifest.points.push(PointEntry {
        index: 0,
        key: r.network.config_hash(),
        config_hash: r.network.config_hash(),
        method: "sim".into(),
        status: if res.unstable { "unstable" } else { "done" }.into(),
        error: None,
    });
    manifest.outputs = vec![links, summary];
    manifest.write(&r.out)?;
    println!(
        "{} links over {} realizations: avg AoI {} (stable links {}), unstable={}",
        res.links.len(),
        res.realizations,
        output::fmt_f64(res.network_avg_aoi.mean),
        output::fmt_f64(res.stable_avg_aoi.mean),
        res.unstable
    );
    Ok(res)
}

/// Writes analytic.csv with one row and manifest.json.
pub fn cmd_analyze(r: &Resolved, method: PredictMethod) -> Result<()> {
    let mut manifest = RunManifest::new("analyze", r.network.config_hash(), r.sim.seed);
    let row = analyze_point(&r.network, method, &ExactOptions::default())?;
    let path = r.out.join("analytic.csv");
    write_csv(&path, &RESULT_HEADER, &[row.record(&r.network)])?;
    manifest.points.push(PointEntry {
        index: 0,
        key: r.network.config_hash(),
        config_hash: r.network.config_hash(),
        method: method.to_string(),
        status: row.status.clone(),
        error: None,
    });
    manifest.outputs.push(path);
    manifest.write(&r.out)?;
    println!(
        "{method}: p_s {} xi_c {} avg fcfs {} lcfs {} (iterations {})",
        output::fmt_f64(row.p_s),
        output::fmt_f64(row.xi_c),
        output::fmt_f64(row.avg_fcfs),
        output::fmt_f64(row.avg_lcfs),
        output::fmt_f64(row.iterations)
    );
    if method == PredictMethod::ExactMeta {
        println!("Kolmogorov distance to Beta approximation: {}", output::fmt_f64(row.ks_to_beta));
    }
    Ok(())
}

pub fn cmd_sweep(r: &Resolved, spec: &SweepSpec) -> Result<()> {
    let outcome = run_sweep(
        &r.network,
        spec,
        &r.sim,
        &r.sim_opts,
        &ExactOptions::default(),
        r.workers,
        &r.out,
    )?;
    let failed = outcome.manifest.points.iter().filter(|p| p.status == "failed").count();
    let cached = outcome.manifest.points.iter().filter(|p| p.status == "cached").count();
    outcome.manifest.write(&r.out)?;
    println!(
        "{} rows written to {} ({cached} reused, {failed} failed)",
        outcome.rows.len(),
        outcome.output.display()
    );
    match outcome.first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn cmd_figure(r: &Resolved, fig: Figure, method: PredictMethod, skip_sim: bool) -> Result<()> {
    let settings = FigureSettings {
        method,
        sim: r.sim.clone(),
        sim_opts: r.sim_opts.clone(),
        exact: ExactOptions::default(),
        workers: r.workers,
        skip_sim,
    };
    let out = run_figure(fig, &r.network, &settings, &r.out)?;
    out.manifest.write(&r.out)?;
    println!("wrote {}", out.path.display());
    Ok(())
}

/// Sweep specification from command-line strings.
pub fn sweep_spec(param: &str, values: &str, methods: &[&str]) -> Result<SweepSpec> {
    Ok(SweepSpec {
        param: param.parse::<SweepParam>()?,
        values: parse_values(values)?,
        methods: methods.iter().map(|m| m.parse::<Method>()).collect::<Result<_>>()?,
    })
}

/// Path of the manifest written into `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.json")
}
