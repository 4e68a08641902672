use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_warmup() -> f64 {
    0.2
}

fn default_batches() -> u32 {
    32
}

fn default_replications() -> u32 {
    1
}

/// Run-length, batching and output-grid settings shared by the simulators.
///
/// `horizon_events` counts events (JSQ) or slots (single-server queue) per
/// replication. The first `warmup_fraction` of them is discarded and the rest
/// is split into `batches` equal batches. As a rule of thumb the horizon
/// should be at least `100 / eps^2` so the run covers many relaxation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon_events: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "default_batches")]
    pub batches: u32,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub tail_grid: Vec<f64>,
    #[serde(default)]
    pub theta_grid: Vec<f64>,
}

impl SimConfig {
    pub fn new(seed: u64, horizon_events: u64) -> Self {
        Self {
            seed,
            horizon_events,
            warmup_fraction: default_warmup(),
            batches: default_batches(),
            replications: default_replications(),
            tail_grid: Vec::new(),
            theta_grid: Vec::new(),
        }
    }

    pub fn with_replications(mut self, replications: u32) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_tail_grid(mut self, grid: Vec<f64>) -> Self {
        self.tail_grid = grid;
        self
    }

    pub fn with_theta_grid(mut self, grid: Vec<f64>) -> Self {
        self.theta_grid = grid;
        self
    }

    pub fn warmup_events(&self) -> u64 {
        (self.horizon_events as f64 * self.warmup_fraction).floor() as u64
    }

    /// Events per batch; the remainder after `batches` full batches is dropped.
    pub fn batch_len(&self) -> u64 {
        (self.horizon_events - self.warmup_events()) / u64::from(self.batches)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::validation("sim config", reason));
        if !(0.0..=0.5).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction {} not in [0, 0.5]", self.warmup_fraction));
        }
        if self.batches < 8 {
            return bad(format!("batches = {} must be at least 8", self.batches));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        let post = self.horizon_events as f64 * (1.0 - self.warmup_fraction);
        if post < 100.0 * f64::from(self.batches) {
            return bad(format!(
                "horizon {} leaves {post} events after warmup, fewer than 100 per batch",
                self.horizon_events
            ));
        }
        if let Some(x) = self.tail_grid.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return bad(format!("tail grid point {x} must be finite and nonnegative"));
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !t.is_finite()) {
            return bad(format!("theta grid point {t} must be finite"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let cfg = SimConfig::new(1, 100_000);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.warmup_events(), 20_000);
        assert_eq!(cfg.batch_len(), 2_500);

        assert!(SimConfig::new(1, 1000).validate().is_err());
        let mut c = cfg.clone();
        c.batches = 4;
        assert!(c.validate().is_err());
        let mut c = cfg.clone();
        c.warmup_fraction = 0.6;
        assert!(c.validate().is_err());
        let mut c = cfg.clone();
        c.replications = 0;
        assert!(c.validate().is_err());
        assert!(cfg.clone().with_tail_grid(vec![-1.0]).validate().is_err());
        assert!(cfg.with_theta_grid(vec![f64::NAN]).validate().is_err());
    }

    #[test]
    fn json_schema_is_strict() {
        let c: SimConfig = serde_json::from_str(r#"{"seed":3,"horizon_events":50000}"#).unwrap();
        assert_eq!(c.batches, 32);
        assert!(serde_json::from_str::<SimConfig>(r#"{"seed":3,"horizon_events":5,"bogus":1}"#).is_err());
    }
}
