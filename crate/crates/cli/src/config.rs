//! Strict JSON experiment configuration.
//!
//! ```json
//! {
//!   "system": {"kind": "mmn", "n": [100, 400], "scaling": {"c": 1.0, "alpha": 0.7}},
//!   "x": [0.5, 1.0, 2.0],
//!   "theta": [0.3],
//!   "sim": {"seed": 1, "horizon_events": 1000000},
//!   "output": {"format": "csv", "path": "out.csv"},
//!   "suite": "mmn-oracle"
//! }
//! ```
//!
//! `system.kind` is `jsq`, `ssq` or `mmn`. The many-server kinds take a list
//! of `n` and exactly one of `eps` or `scaling`. The single-server kind takes
//! `arrival` and `service`, each either an inline PMF or a path relative to
//! the config file. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use queuetail_core::{BoundedPmf, HtScaling, SimConfig};
use serde::Deserialize;

use crate::args::Suite;
use crate::output::Format;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: Option<SystemBlock>,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    pub sim: Option<SimConfig>,
    pub output: Option<OutputBlock>,
    pub suite: Option<Suite>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemBlock {
    Jsq {
        n: Vec<u32>,
        #[serde(default = "unit_rate")]
        mu: f64,
        eps: Option<f64>,
        scaling: Option<ScalingBlock>,
    },
    Ssq {
        arrival: PmfSource,
        service: PmfSource,
    },
    Mmn {
        n: Vec<u32>,
        #[serde(default = "unit_rate")]
        mu: f64,
        eps: Option<f64>,
        scaling: Option<ScalingBlock>,
    },
}

fn unit_rate() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingBlock {
    pub c: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PmfSource {
    Path(PathBuf),
    Inline(BoundedPmf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
}

/// How the heavy-traffic parameter is chosen for each `n`.
#[derive(Debug, Clone, Copy)]
pub enum EpsRule {
    Fixed(f64),
    Scaled(HtScaling),
}

impl EpsRule {
    pub fn from_block(eps: Option<f64>, scaling: Option<ScalingBlock>) -> Result<Self> {
        match (eps, scaling) {
            (Some(e), None) => Ok(EpsRule::Fixed(e)),
            (None, Some(s)) => Ok(EpsRule::Scaled(HtScaling::new(s.c, s.alpha)?)),
            _ => bail!("system block needs exactly one of `eps` or `scaling`"),
        }
    }

    pub fn eps(&self, n: u32) -> Result<f64> {
        match self {
            EpsRule::Fixed(e) => Ok(*e),
            EpsRule::Scaled(s) => Ok(s.eps_of(n)?),
        }
    }
}

impl PmfSource {
    pub fn load(&self, base: &Path) -> Result<BoundedPmf> {
        match self {
            PmfSource::Inline(p) => Ok(p.clone()),
            PmfSource::Path(p) => {
                let full = if p.is_absolute() { p.clone() } else { base.join(p) };
                BoundedPmf::from_json_file(&full).with_context(|| format!("loading {}", full.display()))
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).context("invalid experiment config")?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text, base).with_context(|| format!("in {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        match &self.system {
            Some(SystemBlock::Jsq { n, eps, scaling, .. }) | Some(SystemBlock::Mmn { n, eps, scaling, .. }) => {
                if n.is_empty() {
                    bail!("system block has an empty `n` list");
                }
                let rule = EpsRule::from_block(*eps, *scaling)?;
                for &k in n {
                    rule.eps(k)?;
                }
            }
            Some(SystemBlock::Ssq { .. }) | None => {}
        }
        if let Some(x) = self.x.iter().find(|x| !x.is_finite()) {
            bail!("x grid point {x} is not finite");
        }
        if let Some(t) = self.theta.iter().find(|t| !t.is_finite()) {
            bail!("theta grid point {t} is not finite");
        }
        Ok(())
    }
}
