//! Seeded steady-state simulators for the JSQ system and the discrete-time
//! single-server queue, with batch-means confidence intervals.
//!
//! Replications run in parallel (capped by the `QUEUETAIL_THREADS`
//! environment variable) and are merged in replication order, so results do
//! not depend on scheduling.

mod config;
mod jsq;
mod ld;
pub mod rng;
mod ssq;

use rayon::prelude::*;
use serde::Serialize;

pub use config::SimConfig;
pub use jsq::{simulate_jsq, JsqStats};
pub use ld::{estimate_ld_slope, LdFit};
pub use ssq::{simulate_ssq, SsqStats};

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "QUEUETAIL_THREADS";

/// Normal quantile used for the 95% intervals.
pub const Z95: f64 = 1.96;

/// A steady-state estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub point: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub batches_used: u32,
}

impl SimEstimate {
    /// A known value with zero uncertainty.
    pub fn exact(value: f64) -> Self {
        Self {
            point: value,
            stderr: 0.0,
            ci95: (value, value),
            batches_used: 0,
        }
    }

    /// Mean of the batch values with standard error `sd / sqrt(B)`.
    pub fn from_batches(values: &[f64]) -> Self {
        let b = values.len();
        let point = values.iter().sum::<f64>() / b as f64;
        let stderr = if b > 1 {
            let ss: f64 = values.iter().map(|v| (v - point).powi(2)).sum();
            (ss / (b as f64 - 1.0) / b as f64).sqrt()
        } else {
            0.0
        };
        Self {
            point,
            stderr,
            ci95: (point - Z95 * stderr, point + Z95 * stderr),
            batches_used: b as u32,
        }
    }

    /// As [`SimEstimate::from_batches`], but a probability that was never
    /// observed gets the one-sided rule-of-three interval `[0, 3 / B]`.
    pub fn from_probability_batches(values: &[f64]) -> Self {
        let est = Self::from_batches(values);
        if est.point == 0.0 {
            Self {
                ci95: (0.0, 3.0 / values.len() as f64),
                ..est
            }
        } else {
            est
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }
}

/// An estimate attached to a grid point (`x` for tails, `theta` for MGFs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridEstimate {
    pub at: f64,
    pub estimate: SimEstimate,
}

/// Looks up the estimate at grid point `at`.
pub fn grid_lookup(grid: &[GridEstimate], at: f64) -> Option<&SimEstimate> {
    grid.iter().find(|g| g.at == at).map(|g| &g.estimate)
}

/// Per-batch values of one replication, one column per reported quantity.
pub(crate) type BatchTable = Vec<Vec<f64>>;

/// Runs `f(i)` for every replication index and returns the results in index order.
pub(crate) fn run_replications<T, F>(count: u32, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let work = || (0..u64::from(count)).into_par_iter().map(&f).collect::<Vec<T>>();
    match thread_cap()? {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::validation("thread pool", e.to_string()))
            .map(|pool| pool.install(work)),
        None => Ok(work()),
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::validation("QUEUETAIL_THREADS", format!("'{v}' is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Concatenates the batch tables of all replications column by column.
pub(crate) fn merge_columns(tables: &[BatchTable]) -> Vec<Vec<f64>> {
    let width = tables.first().map_or(0, |t| t.first().map_or(0, Vec::len));
    let mut columns = vec![Vec::new(); width];
    for table in tables {
        for row in table {
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(*v);
            }
        }
    }
    columns
}

/// Index of the first integer level strictly above `x / eps`, treating
/// ratios within `1e-9` of an integer as that integer.
pub(crate) fn first_level_above(x: f64, eps: f64) -> usize {
    let y = x / eps;
    let r = y.round();
    let y = if r >= 1.0 && (y - r).abs() <= 1e-9 * r { r } else { y };
    y.floor() as usize + 1
}
