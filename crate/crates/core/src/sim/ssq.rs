use rand::Rng;
use serde::Serialize;

use super::rng::replication_rng;
use super::{first_level_above, merge_columns, run_replications, BatchTable, GridEstimate, SimConfig, SimEstimate};
use crate::error::Result;
use crate::model::SsqSystem;

/// Slot-average statistics of a single-server queue run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsqStats {
    /// `P(eps q > x)` for each `x` in the tail grid.
    pub tail: Vec<GridEstimate>,
    /// `E[exp(theta eps q)]` for each `theta`.
    pub mgf: Vec<GridEstimate>,
    /// `E[u]`, the mean unused service per slot.
    pub mean_u: SimEstimate,
    /// `E[exp(-theta eps u)]` for each `theta`.
    pub e_neg_theta_u: Vec<GridEstimate>,
    pub slots_per_replication: u64,
    pub replications: u32,
}

/// Cumulative law of the increment `a - s`.
struct IncrementSampler {
    cdf: Vec<f64>,
    steps: Vec<i64>,
}

impl IncrementSampler {
    fn new(sys: &SsqSystem) -> Self {
        let mut law: Vec<(i64, f64)> = Vec::new();
        for (a, pa) in sys.arrival.iter() {
            for (s, ps) in sys.service.iter() {
                let d = i64::from(a) - i64::from(s);
                match law.iter_mut().find(|(v, _)| *v == d) {
                    Some(entry) => entry.1 += pa * ps,
                    None => law.push((d, pa * ps)),
                }
            }
        }
        law.retain(|(_, p)| *p > 0.0);
        law.sort_by_key(|(d, _)| *d);
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(law.len());
        for (_, p) in &law {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().expect("nonempty law") = f64::INFINITY;
        Self {
            cdf,
            steps: law.into_iter().map(|(d, _)| d).collect(),
        }
    }

    #[inline]
    fn sample(&self, u: f64) -> i64 {
        let mut i = 0;
        while u >= self.cdf[i] {
            i += 1;
        }
        self.steps[i]
    }
}

fn grow(hist: &mut Vec<f64>, index: usize) {
    if index >= hist.len() {
        hist.resize(2 * (index + 1), 0.0);
    }
}

fn run_one(sys: &SsqSystem, cfg: &SimConfig, index: u64) -> BatchTable {
    let eps = sys.eps();
    let sampler = IncrementSampler::new(sys);
    let mut rng = replication_rng(cfg.seed, index);
    let mut q: i64 = 0;

    for _ in 0..cfg.warmup_events() {
        q = (q + sampler.sample(rng.random())).max(0);
    }

    let mut by_q = vec![0.0; 64];
    let mut by_u = vec![0.0; 8];
    let mut table = Vec::with_capacity(cfg.batches as usize);
    for _ in 0..cfg.batches {
        by_q.iter_mut().for_each(|v| *v = 0.0);
        by_u.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..cfg.batch_len() {
            grow(&mut by_q, q as usize);
            by_q[q as usize] += 1.0;
            let next = q + sampler.sample(rng.random());
            let u = (-next).max(0) as usize;
            grow(&mut by_u, u);
            by_u[u] += 1.0;
            q = next.max(0);
        }
        let slots: f64 = by_q.iter().sum();
        let mut row = Vec::with_capacity(cfg.tail_grid.len() + 2 * cfg.theta_grid.len() + 1);
        for &x in &cfg.tail_grid {
            let from = first_level_above(x, eps).min(by_q.len());
            row.push(by_q[from..].iter().sum::<f64>() / slots);
        }
        for &theta in &cfg.theta_grid {
            let m: f64 = by_q.iter().enumerate().map(|(k, c)| c * (theta * eps * k as f64).exp()).sum();
            row.push(m / slots);
        }
        for &theta in &cfg.theta_grid {
            let m: f64 = by_u.iter().enumerate().map(|(k, c)| c * (-theta * eps * k as f64).exp()).sum();
            row.push(m / slots);
        }
        row.push(by_u.iter().enumerate().map(|(k, c)| k as f64 * c).sum::<f64>() / slots);
        table.push(row);
    }
    table
}

/// Simulates `q(t+1) = [q(t) + a(t) - s(t)]^+` from `q(0) = 0`.
///
/// The unused service is `u(t) = q(t+1) - q(t) - a(t) + s(t)`. Only the
/// increment `a - s` drives the chain, so one uniform draw per slot samples it
/// from the exact product law.
pub fn simulate_ssq(sys: &SsqSystem, cfg: &SimConfig) -> Result<SsqStats> {
    cfg.validate()?;
    let tables = run_replications(cfg.replications, |i| run_one(sys, cfg, i))?;
    let columns = merge_columns(&tables);
    let (nt, nth) = (cfg.tail_grid.len(), cfg.theta_grid.len());
    let grid = |offset: usize, points: &[f64], prob: bool| -> Vec<GridEstimate> {
        points
            .iter()
            .enumerate()
            .map(|(j, &at)| GridEstimate {
                at,
                estimate: if prob {
                    SimEstimate::from_probability_batches(&columns[offset + j])
                } else {
                    SimEstimate::from_batches(&columns[offset + j])
                },
            })
            .collect()
    };
    Ok(SsqStats {
        tail: grid(0, &cfg.tail_grid, true),
        mgf: grid(nt, &cfg.theta_grid, false),
        e_neg_theta_u: grid(nt + nth, &cfg.theta_grid, false),
        mean_u: SimEstimate::from_batches(&columns[nt + 2 * nth]),
        slots_per_replication: cfg.horizon_events,
        replications: cfg.replications,
    })
}
