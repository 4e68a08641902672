use rand::Rng;
use serde::Serialize;

use super::rng::{replication_rng, SimRng};
use super::{first_level_above, merge_columns, run_replications, BatchTable, GridEstimate, SimConfig, SimEstimate};
use super::{estimate_ld_slope, LdFit};
use crate::error::Result;
use crate::model::JsqSystem;

/// Time-average statistics of a JSQ run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsqStats {
    /// `P(eps * sum(q) > x)` for each `x` in the tail grid.
    pub tail: Vec<GridEstimate>,
    /// `E[exp(theta eps sum(q))]` for each `theta`.
    pub mgf: Vec<GridEstimate>,
    /// `E[mu sum_i 1{q_i = 0} exp(theta eps sum(q))]` for each `theta`.
    pub beta: Vec<GridEstimate>,
    /// `(1/n) sum_i E[exp(theta |q_i - mean(q)|)]` for each `theta`.
    pub perp_mgf: Vec<GridEstimate>,
    /// `P(q_i = 0)`, averaged over servers.
    pub empty_frac: SimEstimate,
    /// Log-tail slope over the whole tail grid, when at least four points are positive.
    pub ld_slope: Option<LdFit>,
    pub events_per_replication: u64,
    pub replications: u32,
}

/// Queue lengths stored as the number of servers holding each length.
struct State {
    n: usize,
    counts: Vec<u32>,
    /// Smallest length held by some server.
    lo: usize,
    /// Largest length held by some server.
    hi: usize,
    total: usize,
}

impl State {
    fn empty(n: u32) -> Self {
        let mut counts = vec![0; 16];
        counts[0] = n;
        Self {
            n: n as usize,
            counts,
            lo: 0,
            hi: 0,
            total: 0,
        }
    }

    fn busy(&self) -> u32 {
        self.n as u32 - self.counts[0]
    }

    /// Advances one event using a single uniform draw: it selects arrival
    /// versus departure and, for departures, the length bucket of a server
    /// chosen uniformly among the busy ones.
    #[inline]
    fn step(&mut self, rng: &mut SimRng, lambda: f64, mu: f64, rate: f64) {
        let v = rng.random::<f64>() * rate;
        if v < lambda {
            let l = self.lo;
            self.counts[l] -= 1;
            if l + 1 >= self.counts.len() {
                self.counts.resize(2 * self.counts.len(), 0);
            }
            self.counts[l + 1] += 1;
            if self.counts[l] == 0 {
                self.lo = l + 1;
            }
            if l + 1 > self.hi {
                self.hi = l + 1;
            }
            self.total += 1;
        } else {
            let busy = self.busy();
            let mut k = (((v - lambda) / mu) as u32).min(busy - 1);
            let mut l = self.lo.max(1);
            loop {
                let c = self.counts[l];
                if k < c {
                    break;
                }
                k -= c;
                l += 1;
            }
            self.counts[l] -= 1;
            self.counts[l - 1] += 1;
            if l - 1 < self.lo {
                self.lo = l - 1;
            }
            if l == self.hi && self.counts[l] == 0 {
                self.hi = l - 1;
            }
            self.total -= 1;
        }
    }
}

/// Holding-time-weighted histograms for one batch.
struct Accumulator {
    /// Time spent at each total queue length.
    by_total: Vec<f64>,
    /// Time spent at each total, weighted by the number of empty servers.
    empty_by_total: Vec<f64>,
    /// Server-time at each deviation `|n q_i - sum(q)|`, divided by `n`.
    by_deviation: Vec<f64>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            by_total: vec![0.0; 64],
            empty_by_total: vec![0.0; 64],
            by_deviation: vec![0.0; 64],
        }
    }

    fn clear(&mut self) {
        self.by_total.iter_mut().for_each(|v| *v = 0.0);
        self.empty_by_total.iter_mut().for_each(|v| *v = 0.0);
        self.by_deviation.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn record(&mut self, s: &State, w: f64, w_per_server: f64) {
        let total = s.total;
        if total >= self.by_total.len() {
            let len = 2 * (total + 1);
            self.by_total.resize(len, 0.0);
            self.empty_by_total.resize(len, 0.0);
        }
        self.by_total[total] += w;
        self.empty_by_total[total] += w * f64::from(s.counts[0]);
        for l in s.lo..=s.hi {
            let c = s.counts[l];
            if c > 0 {
                let d = (s.n * l).abs_diff(total);
                if d >= self.by_deviation.len() {
                    self.by_deviation.resize(2 * (d + 1), 0.0);
                }
                self.by_deviation[d] += w_per_server * f64::from(c);
            }
        }
    }

    /// Batch values in column order: tails, mgf, beta, perp, empty fraction.
    fn row(&self, sys: &JsqSystem, cfg: &SimConfig) -> Vec<f64> {
        let time: f64 = self.by_total.iter().sum();
        let eps = sys.eps;
        let n = f64::from(sys.n);
        let mut row = Vec::with_capacity(cfg.tail_grid.len() + 3 * cfg.theta_grid.len() + 1);
        for &x in &cfg.tail_grid {
            let from = first_level_above(x, eps).min(self.by_total.len());
            row.push(self.by_total[from..].iter().sum::<f64>() / time);
        }
        for &theta in &cfg.theta_grid {
            let m: f64 = self
                .by_total
                .iter()
                .enumerate()
                .map(|(s, w)| w * (theta * eps * s as f64).exp())
                .sum();
            row.push(m / time);
        }
        for &theta in &cfg.theta_grid {
            let b: f64 = self
                .empty_by_total
                .iter()
                .enumerate()
                .map(|(s, w)| w * (theta * eps * s as f64).exp())
                .sum();
            row.push(sys.mu * b / time);
        }
        for &theta in &cfg.theta_grid {
            let p: f64 = self
                .by_deviation
                .iter()
                .enumerate()
                .map(|(d, w)| w * (theta * d as f64 / n).exp())
                .sum();
            row.push(p / time);
        }
        row.push(self.empty_by_total.iter().sum::<f64>() / (n * time));
        row
    }
}

fn run_one(sys: &JsqSystem, cfg: &SimConfig, index: u64) -> BatchTable {
    let mut rng = replication_rng(cfg.seed, index);
    let mut state = State::empty(sys.n);
    let (lambda, mu) = (sys.lambda(), sys.mu);
    let inv_n = 1.0 / f64::from(sys.n);

    for _ in 0..cfg.warmup_events() {
        let rate = lambda + mu * f64::from(state.busy());
        state.step(&mut rng, lambda, mu, rate);
    }

    let mut acc = Accumulator::new();
    let mut table = Vec::with_capacity(cfg.batches as usize);
    for _ in 0..cfg.batches {
        acc.clear();
        for _ in 0..cfg.batch_len() {
            let rate = lambda + mu * f64::from(state.busy());
            let w = 1.0 / rate;
            acc.record(&state, w, w * inv_n);
            state.step(&mut rng, lambda, mu, rate);
        }
        table.push(acc.row(sys, cfg));
    }
    table
}

/// Simulates the JSQ continuous-time chain from the empty state.
///
/// The embedded jump chain is simulated and every visited state is weighted
/// by its mean holding time `1 / total_rate`, so all reported quantities are
/// stationary time averages. Arrivals join a shortest queue; departures
/// leave from a server chosen uniformly among the busy ones.
pub fn simulate_jsq(sys: &JsqSystem, cfg: &SimConfig) -> Result<JsqStats> {
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
    let tail = grid(0, &cfg.tail_grid, true);
    let ld_slope = match (cfg.tail_grid.iter().copied().reduce(f64::min), cfg.tail_grid.iter().copied().reduce(f64::max)) {
        (Some(lo), Some(hi)) => estimate_ld_slope(&tail, (lo, hi)).ok(),
        _ => None,
    };
    Ok(JsqStats {
        mgf: grid(nt, &cfg.theta_grid, false),
        beta: grid(nt + nth, &cfg.theta_grid, false),
        perp_mgf: grid(nt + 2 * nth, &cfg.theta_grid, false),
        empty_frac: SimEstimate::from_probability_batches(&columns[nt + 3 * nth]),
        tail,
        ld_slope,
        events_per_replication: cfg.horizon_events,
        replications: cfg.replications,
    })
}
