//! Command-line front end for `queuetail`.
//!
//! Exit codes: `0` success, `1` invalid input, `2` numerical
//! non-convergence, `3` verification failure.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

pub use args::Cli;

use std::path::Path;

use anyhow::Result;
use queuetail_core::{HtScaling, JsqSystem, MmnSystem};

use crate::args::{BoundsCmd, Command, ExactCmd, SimulateCmd, VerifyArgs};
use crate::config::ExperimentConfig;
use crate::output::{emit, render, Format};
use crate::verify::{run_suite, VerifyOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

/// Raised when a computed check does not hold.
#[derive(Debug)]
pub struct VerificationFailed(pub String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

/// Exit code for an error raised anywhere below [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<VerificationFailed>() {
            return EXIT_VERIFY;
        }
        if let Some(e) = cause.downcast_ref::<queuetail_core::Error>() {
            return match e {
                queuetail_core::Error::NonConvergence { .. } | queuetail_core::Error::Estimation(_) => EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INPUT
}

pub fn run(cli: Cli) -> Result<()> {
    let format = cli.format;
    let output = cli.output.as_deref();
    let table = |rows: &[output::Row], fmt: Option<Format>, path: Option<&Path>| -> Result<()> {
        emit(&render(rows, fmt.unwrap_or_default())?, path)
    };
    match cli.command {
        Command::Bounds(cmd) => {
            let rows = match cmd {
                BoundsCmd::Jsq { sys, grid } => commands::bounds_jsq(&JsqSystem::new(sys.n, sys.mu, sys.eps)?, &grid.x)?,
                BoundsCmd::Ssq { pmfs, grid } => {
                    commands::bounds_ssq(&commands::load_ssq(&pmfs.arrival, &pmfs.service)?, &grid.x)?
                }
                BoundsCmd::Mmn { n, alpha, c, mu, grid } => {
                    let scaling = HtScaling::new(c, alpha)?;
                    let sys = MmnSystem::new(n, mu, scaling.eps_of(n)?)?;
                    eprintln!("regime: {}", scaling.regime());
                    commands::bounds_mmn(&sys, &scaling, &grid.x)?
                }
            };
            if rows.iter().any(|r| r.conditions_met == Some(false)) {
                eprintln!("note: some bounds are reported outside their stated preconditions (conditions_met=false)");
            }
            table(&rows, format, output)
        }
        Command::Exact(cmd) => match cmd {
            ExactCmd::Mm1 { eps, x } => table(&commands::exact_mm1(eps, &x)?, format, output),
            ExactCmd::Mmn { sys, tol } => {
                let (rows, worst) = commands::exact_mmn(&MmnSystem::new(sys.n, sys.mu, sys.eps)?, tol)?;
                table(&rows, format, output)?;
                if worst > tol {
                    return Err(VerificationFailed(format!(
                        "integral formulas and birth-death solve disagree by {worst:e} (tolerance {tol:e})"
                    ))
                    .into());
                }
                Ok(())
            }
            ExactCmd::Ssq { pmfs, grid } => table(
                &commands::exact_ssq(&commands::load_ssq(&pmfs.arrival, &pmfs.service)?, &grid.x)?,
                format,
                output,
            ),
        },
        Command::Simulate(cmd) => {
            let rows = match cmd {
                SimulateCmd::Jsq { sys, events, run } => {
                    let cfg = commands::sim_config(run.seed, events, run.replications, run.batches, run.warmup, &run.x, &run.theta)?;
                    commands::simulate_jsq_rows(&JsqSystem::new(sys.n, sys.mu, sys.eps)?, &cfg)?
                }
                SimulateCmd::Ssq { pmfs, slots, run } => {
                    let cfg = commands::sim_config(run.seed, slots, run.replications, run.batches, run.warmup, &run.x, &run.theta)?;
                    commands::simulate_ssq_rows(&commands::load_ssq(&pmfs.arrival, &pmfs.service)?, &cfg)?
                }
            };
            table(&rows, format, output)
        }
        Command::Sweep { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rows = commands::sweep(&cfg)?;
            let (fmt, path) = match &cfg.output {
                Some(o) => (format.or(Some(o.format)), output.or(o.path.as_deref())),
                None => (format, output),
            };
            table(&rows, fmt, path)
        }
        Command::Verify(args) => verify_command(args),
    }
}

fn verify_command(args: VerifyArgs) -> Result<()> {
    let cfg = args.config.as_deref().map(ExperimentConfig::from_file).transpose()?;
    let suite = args
        .suite
        .or_else(|| cfg.as_ref().and_then(|c| c.suite))
        .ok_or_else(|| anyhow::anyhow!("no suite selected: pass --suite or set `suite` in the config"))?;
    let opts = VerifyOptions {
        sim: cfg.and_then(|c| c.sim),
    };
    let records = run_suite(suite, &opts)?;
    let mut report = serde_json::to_vec_pretty(&records)?;
    report.push(b'\n');
    emit(&report, args.report.as_deref())?;
    let failed = records.iter().filter(|r| !r.pass).count();
    eprintln!(
        "{}: {} checks, {} failed",
        verify::suite_name(suite),
        records.len(),
        failed
    );
    if failed > 0 {
        return Err(VerificationFailed(format!("{failed} of {} checks failed", records.len())).into());
    }
    Ok(())
}
