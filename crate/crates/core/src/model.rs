//! Domain types shared by the bounds, oracles and simulators.
//!
//! Every system is parameterized by its heavy-traffic parameter `eps`, the
//! relative distance of the load from capacity: `lambda = capacity * (1 - eps)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(probs) == 1` for [`BoundedPmf`].
pub const PMF_SUM_TOL: f64 = 1e-12;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPmf {
    values: Vec<u32>,
    probs: Vec<f64>,
}

/// A probability mass function on finitely many nonnegative integers.
///
/// Fixtures are loaded as-is: a PMF whose probabilities do not sum to one
/// within [`PMF_SUM_TOL`] is rejected, never renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct BoundedPmf {
    values: Vec<u32>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for BoundedPmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        BoundedPmf::new(raw.values, raw.probs)
    }
}

impl BoundedPmf {
    pub fn new(values: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("pmf", "support is empty"));
        }
        if values.len() != probs.len() {
            return Err(Error::validation(
                "pmf",
                format!(
                    "values and probs differ in length ({} vs {})",
                    values.len(),
                    probs.len()
                ),
            ));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "pmf",
                format!("values must be strictly increasing (found {} then {})", w[0], w[1]),
            ));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::validation(
                "pmf",
                format!("probabilities must be finite and nonnegative (found {p})"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::validation(
                "pmf",
                format!("probabilities sum to {total}, not 1 within {PMF_SUM_TOL:e}"),
            ));
        }
        Ok(Self { values, probs })
    }

    /// Bernoulli(p) on {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation("pmf", format!("Bernoulli parameter {p} not in [0,1]")));
        }
        Self::new(vec![0, 1], vec![1.0 - p, p])
    }

    pub fn point_mass(value: u32) -> Self {
        Self {
            values: vec![value],
            probs: vec![1.0],
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::validation("pmf file", e.to_string()))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `(value, probability)` pairs in increasing value order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    /// Largest support point (the almost-sure bound `A`).
    pub fn max_value(&self) -> u32 {
        *self.values.last().expect("nonempty by construction")
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, p)| f64::from(v) * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.iter().map(|(v, p)| p * (f64::from(v) - m).powi(2)).sum()
    }
}

/// Moments of the per-slot increment `a - s` of the discrete-time queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffMoments {
    /// `E[a] - E[s]`.
    pub mean_diff: f64,
    /// `Var(a) + Var(s)`, which equals `Var(a - s)` for independent laws.
    pub var_sum: f64,
    /// `max(0, E[(a - s)^3])`.
    pub e3: f64,
    /// Common almost-sure bound on arrivals and service.
    pub a_max: u32,
}

/// Moments of `a - s` by exact double summation over the product support.
pub fn diff_moments(arrival: &BoundedPmf, service: &BoundedPmf) -> DiffMoments {
    let mut mean_diff = 0.0;
    for (a, pa) in arrival.iter() {
        for (s, ps) in service.iter() {
            mean_diff += pa * ps * (f64::from(a) - f64::from(s));
        }
    }
    let mut var_sum = 0.0;
    let mut third = 0.0;
    for (a, pa) in arrival.iter() {
        for (s, ps) in service.iter() {
            let d = f64::from(a) - f64::from(s);
            var_sum += pa * ps * (d - mean_diff).powi(2);
            third += pa * ps * d.powi(3);
        }
    }
    DiffMoments {
        mean_diff,
        var_sum,
        e3: third.max(0.0),
        a_max: arrival.max_value().max(service.max_value()),
    }
}

fn check_eps(what: &'static str, eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::validation(what, format!("eps = {eps} must lie in (0, 1)")))
    }
}

fn check_servers_rate(what: &'static str, n: u32, mu: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::validation(what, "n must be at least 1"));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::validation(what, format!("mu = {mu} must be positive")));
    }
    Ok(())
}

/// `n` parallel exponential servers fed by Poisson arrivals routed to a shortest queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JsqSystem {
    pub n: u32,
    pub mu: f64,
    pub eps: f64,
}

impl JsqSystem {
    pub fn new(n: u32, mu: f64, eps: f64) -> Result<Self> {
        check_servers_rate("jsq system", n, mu)?;
        check_eps("jsq system", eps)?;
        Ok(Self { n, mu, eps })
    }

    /// Total arrival rate `n * mu * (1 - eps)`.
    pub fn lambda(&self) -> f64 {
        f64::from(self.n) * self.mu * (1.0 - self.eps)
    }
}

/// Discrete-time single-server queue with i.i.d. bounded arrivals and potential service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsqSystem {
    pub arrival: BoundedPmf,
    pub service: BoundedPmf,
}

impl SsqSystem {
    pub fn new(arrival: BoundedPmf, service: BoundedPmf) -> Result<Self> {
        let (lambda, mu) = (arrival.mean(), service.mean());
        if !(lambda < mu) {
            return Err(Error::validation(
                "ssq system",
                format!("unstable: mean arrival {lambda} is not below mean service {mu}"),
            ));
        }
        Ok(Self { arrival, service })
    }

    pub fn lambda(&self) -> f64 {
        self.arrival.mean()
    }

    pub fn mu(&self) -> f64 {
        self.service.mean()
    }

    /// `1 - lambda / mu`.
    pub fn eps(&self) -> f64 {
        1.0 - self.lambda() / self.mu()
    }

    pub fn moments(&self) -> DiffMoments {
        diff_moments(&self.arrival, &self.service)
    }
}

/// The M/M/n (Erlang-C) queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmnSystem {
    pub n: u32,
    pub mu: f64,
    pub eps: f64,
}

impl MmnSystem {
    pub fn new(n: u32, mu: f64, eps: f64) -> Result<Self> {
        check_servers_rate("mmn system", n, mu)?;
        check_eps("mmn system", eps)?;
        Ok(Self { n, mu, eps })
    }

    pub fn lambda(&self) -> f64 {
        f64::from(self.n) * self.mu * (1.0 - self.eps)
    }

    pub fn rho(&self) -> f64 {
        1.0 - self.eps
    }

    /// Idle-server scaling `1 / sqrt(n (1 - eps))`.
    pub fn eta(&self) -> f64 {
        1.0 / (f64::from(self.n) * self.rho()).sqrt()
    }

    /// Scaled mean idle count `n * eps * eta`.
    pub fn zeta(&self) -> f64 {
        f64::from(self.n) * self.eps * self.eta()
    }
}

/// Many-server heavy-traffic scaling `eps(n) = c * n^(-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HtScaling {
    pub c: f64,
    pub alpha: f64,
}

impl HtScaling {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::validation("scaling", format!("c = {c} must be positive")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::validation("scaling", format!("alpha = {alpha} must be positive")));
        }
        Ok(Self { c, alpha })
    }

    pub fn eps_of(&self, n: u32) -> Result<f64> {
        let eps = self.c * f64::from(n).powf(-self.alpha);
        check_eps("scaling", eps)?;
        Ok(eps)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.alpha).expect("alpha validated positive")
    }
}

/// Many-server heavy-traffic regime determined by the exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `alpha < 1/2`.
    SubHw,
    /// Halfin-Whitt, `alpha = 1/2`.
    Hw,
    /// `1/2 < alpha < 1`.
    SuperHw,
    /// Non-degenerate slowdown, `alpha = 1`.
    Nds,
    /// `alpha > 1`.
    SuperSlowdown,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::SubHw => "sub-hw",
            Regime::Hw => "hw",
            Regime::SuperHw => "super-hw",
            Regime::Nds => "nds",
            Regime::SuperSlowdown => "super-slowdown",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sub-hw" => Ok(Regime::SubHw),
            "hw" => Ok(Regime::Hw),
            "super-hw" => Ok(Regime::SuperHw),
            "nds" => Ok(Regime::Nds),
            "super-slowdown" => Ok(Regime::SuperSlowdown),
            other => Err(Error::validation("regime", format!("unknown regime '{other}'"))),
        }
    }
}

/// Classifies `alpha` with exact comparisons against 1/2 and 1.
pub fn classify_regime(alpha: f64) -> Result<Regime> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::validation("alpha", format!("{alpha} must be positive")));
    }
    Ok(if alpha < 0.5 {
        Regime::SubHw
    } else if alpha == 0.5 {
        Regime::Hw
    } else if alpha < 1.0 {
        Regime::SuperHw
    } else if alpha == 1.0 {
        Regime::Nds
    } else {
        Regime::SuperSlowdown
    })
}

/// Which side of which tail a [`TailBound`] controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Upper bound on `P(X > x)`.
    Upper,
    /// Lower bound on `P(X > x)`.
    Lower,
    /// Upper bound on the left tail `P(X < -x)`.
    UpperLeftTail,
}

/// A bound of the form `(c0 + c1 x) exp(-r1 x - r2 x^2)`, valid for `x > x_min`.
///
/// Bounds whose preconditions fail are still returned, with
/// `conditions_met == false`, so callers can tabulate them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub side: Side,
    pub c0: f64,
    pub c1: f64,
    pub r1: f64,
    pub r2: f64,
    pub x_min: f64,
    pub conditions_met: bool,
}

impl TailBound {
    /// Evaluates the bound; never negative and never NaN for finite `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let prefactor = self.c0 + self.c1 * x;
        if !(prefactor > 0.0) {
            return 0.0;
        }
        (prefactor.ln() - self.r1 * x - self.r2 * x * x).exp()
    }

    /// True when the preconditions hold and `x` lies in the validity window.
    pub fn holds_at(&self, x: f64) -> bool {
        self.conditions_met && x > self.x_min
    }

    /// An upper bound at or above one carries no information.
    pub fn is_vacuous_at(&self, x: f64) -> bool {
        self.side != Side::Lower && self.eval(x) >= 1.0
    }
}
