use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "queuetail", version, about = "Tail bounds, exact oracles and simulation for heavy-traffic queues")]
pub struct Cli {
    /// Output format for tables.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the table to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytical bounds.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Exact stationary quantities from closed forms and numerical oracles.
    #[command(subcommand)]
    Exact(ExactCmd),
    /// Run a seeded steady-state simulation.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Evaluate a whole experiment described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run verification suites and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum BoundsCmd {
    /// Join-the-shortest-queue tail bounds.
    Jsq {
        #[command(flatten)]
        sys: ServerArgs,
        #[command(flatten)]
        grid: XGrid,
    },
    /// Single-server discrete-time queue tail bound.
    Ssq {
        #[command(flatten)]
        pmfs: PmfArgs,
        #[command(flatten)]
        grid: XGrid,
    },
    /// Idle-server bounds of the M/M/n queue under `eps = c n^-alpha`.
    Mmn {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[command(flatten)]
        grid: XGrid,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExactCmd {
    /// Scaled M/M/1 tail `P(eps q >= x)`.
    Mm1 {
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// M/M/n boundary probabilities from the integral formulas and the birth-death solver.
    Mmn {
        #[command(flatten)]
        sys: ServerArgs,
        /// Largest relative disagreement tolerated between the two methods.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Stationary law of the single-server queue.
    Ssq {
        #[command(flatten)]
        pmfs: PmfArgs,
        #[command(flatten)]
        grid: XGrid,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    Jsq {
        #[command(flatten)]
        sys: ServerArgs,
        #[arg(long, value_parser = parse_count)]
        events: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    Ssq {
        #[command(flatten)]
        pmfs: PmfArgs,
        #[arg(long, value_parser = parse_count)]
        slots: u64,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args)]
pub struct ServerArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    /// JSON file `{"values": [...], "probs": [...]}` with the arrival law.
    #[arg(long)]
    pub arrival: PathBuf,
    /// JSON file with the service law.
    #[arg(long)]
    pub service: PathBuf,
}

#[derive(Debug, Args)]
pub struct XGrid {
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub replications: u64,
    #[arg(long, default_value_t = 32)]
    pub batches: u32,
    #[arg(long, default_value_t = 0.2)]
    pub warmup: f64,
    /// Tail grid for `P(eps * queue > x)`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Grid of `theta` values for the MGF estimates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    MmnOracle,
    GnIdentities,
    GeometricW,
    JsqSandwich,
    JsqSim,
    JsqSsc,
    JsqLimit,
    SsqDominance,
    SsqClaims,
    MmnRegimes,
    MarkovLemma,
    Determinism,
    All,
    None,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Experiment config; its `suite` and `sim` blocks select the suite and
    /// override the simulation horizon.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the JSON report; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parses a nonnegative integer count, accepting scientific notation such as `1e8`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(format!("`{s}` is not a nonnegative integer count"));
    }
    Ok(v as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e8"), Ok(100_000_000));
        assert_eq!(parse_count("2.5e3"), Ok(2500));
        assert_eq!(parse_count("12"), Ok(12));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("abc").is_err());
        assert!(parse_count("1e400").is_err());
    }

    #[test]
    fn parses_negative_theta_lists() {
        let cli = Cli::try_parse_from([
            "queuetail", "simulate", "jsq", "--n", "2", "--eps", "0.2", "--events", "1e5", "--seed", "1", "--theta",
            "-0.5,0.3",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate(SimulateCmd::Jsq { run, events, .. }) => {
                assert_eq!(events, 100_000);
                assert_eq!(run.theta, vec![-0.5, 0.3]);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        let r = Cli::try_parse_from(["queuetail", "simulate", "jsq", "--n", "2", "--eps", "0.2", "--events", "10"]);
        assert!(r.is_err());
    }

    #[test]
    fn cli_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
