//! `wavelab` experiment runner.
//!
//! Exit codes: 0 all checks pass, 2 a tolerance check failed, 3 configuration
//! or dependency error, 4 numerical abort.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, Outcome};
use config::RunConfig;

/// Environment variable naming the default artifact root.
const ARTIFACT_ROOT: &str = "WAVELAB_ARTIFACTS";

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Water-wave solvers, ray tracing and dispersive measurements")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Zakharov evolution and transport-identity residuals.
    Simulate(Common),
    /// Flat and curved Dirichlet-to-Neumann oracles.
    DtnTest(Common),
    /// Ray bundles, geometry reports and the F1 scan.
    Flow(Staged),
    /// Frame, matching, packet residual and orthogonality scans.
    Parametrix(Staged),
    /// Strichartz, local smoothing and overlap scans.
    Strichartz(Common),
    /// Consolidated JSON summary of the checks in several artifacts.
    Report {
        dirs: Vec<PathBuf>,
        /// Also write the summary to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config; a run manifest is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory (default: $WAVELAB_ARTIFACTS/<scenario>-<command>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated frequency list, e.g. 64,128,256.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hold the coefficients fixed at the launch time.
    #[arg(long)]
    frozen_coeffs: bool,
    /// Write strip fields as binary dumps.
    #[arg(long)]
    dump_strip: bool,
}

#[derive(Args)]
struct Staged {
    #[command(flatten)]
    common: Common,
    /// Simulate artifact providing the coefficients.
    #[arg(long)]
    input: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => config::load(p).map_err(Failure::Config)?,
            None => RunConfig::default(),
        };
        if let Some(l) = &self.lambda {
            cfg.frequency.lambdas = l.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.frozen_coeffs |= self.frozen_coeffs;
        cfg.dump_strip |= self.dump_strip;
        cfg.validate().map_err(Failure::Config)?;
        Ok(cfg)
    }

    fn out(&self, cfg: &RunConfig, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let root = std::env::var_os(ARTIFACT_ROOT).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("artifacts"));
            root.join(format!("{}-{command}", cfg.scenario))
        })
    }
}

fn run_stage(c: &Common, command: &str, f: impl FnOnce(&RunConfig, &Path) -> Result<Outcome, Failure>) -> Result<Outcome, Failure> {
    let cfg = c.resolve()?;
    let out = c.out(&cfg, command);
    f(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(c) => run_stage(c, "simulate", commands::simulate),
        Cmd::DtnTest(c) => run_stage(c, "dtn-test", commands::dtn_test),
        Cmd::Flow(s) => run_stage(&s.common, "flow", |cfg, out| commands::flow(cfg, s.input.as_deref(), out)),
        Cmd::Parametrix(s) => run_stage(&s.common, "parametrix", |cfg, out| commands::parametrix(cfg, s.input.as_deref(), out)),
        Cmd::Strichartz(c) => run_stage(c, "strichartz", commands::strichartz),
        Cmd::Report { dirs, out } => return report(dirs, out.as_deref()),
    };
    match result {
        Ok(o) => {
            let mut failed = false;
            for c in &o.checks {
                println!("{} {}: {:.6e} (target {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.target);
                failed |= !c.pass;
            }
            println!("artifact: {}", o.dir.display());
            if failed {
                for c in o.checks.iter().filter(|c| !c.pass) {
                    eprintln!("tolerance failure: {} = {:.6e}, target {}", c.name, c.value, c.target);
                }
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: Failure) -> ExitCode {
    match e {
        Failure::Config(m) => {
            eprintln!("config error: {m}");
            ExitCode::from(3)
        }
        Failure::Abort(m) => {
            eprintln!("numerical abort: {m}");
            ExitCode::from(4)
        }
    }
}

fn report(dirs: &[PathBuf], out: Option<&Path>) -> ExitCode {
    let r = match commands::report(dirs) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let text = serde_json::to_string_pretty(&r).expect("report serializes");
    println!("{text}");
    if let Some(p) = out {
        if let Err(e) = std::fs::write(p, format!("{text}\n")) {
            return fail(Failure::Abort(format!("cannot write {}: {e}", p.display())));
        }
    }
    for f in &r.failures {
        eprintln!("tolerance failure: {f}");
    }
    if r.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
