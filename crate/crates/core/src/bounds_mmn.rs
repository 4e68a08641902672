//! M/M/n formulas built on the kernel
//! `G_n(t) = exp(-n eps t - n (1 - eps)(e^{-t} + t - 1))`:
//! boundary probabilities, conditional idle-server and waiting-customer MGFs,
//! and the many-server heavy-traffic bounds on the idle-server count `r`.
//!
//! Integrals of `G_n` are computed in log space, normalized at the kernel's
//! maximizer `t* = log(1 - eps)`, because at large `n` the integrand spans
//! hundreds of orders of magnitude.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::std_normal_cdf;
use crate::model::{classify_regime, HtScaling, MmnSystem, Regime, Side, TailBound};
use crate::quadrature::integrate;

/// Default relative tolerance for integrals of `G_n`.
pub const GN_REL_TOL: f64 = 1e-12;

/// Normalized exponents below this are treated as zero mass.
const LOG_CUTOFF: f64 = -60.0;

const MAX_INTERVALS: usize = 4000;

/// Constants of the idle-server bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmnConstants {
    /// `1 / integral_1^2 exp(-4 t^2) dt`.
    pub kappa_tilde1: f64,
    /// `4 e pi kappa_hw`, prefactor in the regime `1/2 < alpha < 1`.
    pub kappa_super: f64,
    /// `1 + kappa_tilde1 sqrt(3 pi) / 2`, prefactor at `alpha = 1/2`.
    pub kappa_hw: f64,
    /// `kappa_tilde1`, used for `alpha < 1/2`.
    pub kappa_sub: f64,
}

impl MmnConstants {
    pub fn get() -> &'static MmnConstants {
        static CONSTANTS: OnceLock<MmnConstants> = OnceLock::new();
        CONSTANTS.get_or_init(|| {
            let q = integrate(|t| (-4.0 * t * t).exp(), 1.0, 2.0, 1e-14, 0.0, 100)
                .expect("smooth integrand on a unit interval");
            let kappa_tilde1 = 1.0 / q.value;
            let kappa_hw = 1.0 + kappa_tilde1 * (3.0 * PI).sqrt() / 2.0;
            MmnConstants {
                kappa_tilde1,
                kappa_super: 4.0 * E * PI * kappa_hw,
                kappa_hw,
                kappa_sub: kappa_tilde1,
            }
        })
    }
}

/// `e^{-t} + t - 1`, with a series near zero where the direct form cancels.
fn exp_neg_plus_linear(t: f64) -> f64 {
    if t.abs() < 1e-2 {
        let t2 = t * t;
        t2 * (0.5 - t / 6.0 + t2 / 24.0 - t2 * t / 120.0 + t2 * t2 / 720.0 - t2 * t2 * t / 5040.0)
    } else {
        (-t).exp_m1() + t
    }
}

/// `log G_n(t)`.
pub fn gn_log(t: f64, sys: &MmnSystem) -> f64 {
    let n = f64::from(sys.n);
    -n * sys.eps * t - n * sys.rho() * exp_neg_plus_linear(t)
}

/// `log G_n(t0 + d) - log G_n(t0)`, accurate even when both values are huge.
fn gn_log_diff(t0: f64, d: f64, sys: &MmnSystem) -> f64 {
    let n = f64::from(sys.n);
    -n * sys.eps * d - n * sys.rho() * ((-t0).exp() * (-d).exp_m1() + d)
}

/// Maximizer `log(1 - eps)` of `log G_n`.
pub fn gn_argmax(sys: &MmnSystem) -> f64 {
    (-sys.eps).ln_1p()
}

/// `log` of `integral_{-inf}^{upper} G_n(t) dt` to relative tolerance `rel_tol`.
pub fn gn_log_integral_tol(sys: &MmnSystem, upper: f64, rel_tol: f64) -> Result<f64> {
    if !upper.is_finite() {
        return Err(Error::domain("gn_integral", format!("upper limit {upper} must be finite")));
    }
    let t_star = gn_argmax(sys);
    let anchor = upper.min(t_star);
    let log_peak = gn_log(anchor, sys);
    let h = |t: f64| gn_log_diff(anchor, t - anchor, sys).exp();

    let width = 1.0 / f64::from(sys.n).sqrt();
    let mut d = width;
    while gn_log_diff(anchor, -d, sys) > LOG_CUTOFF {
        d *= 2.0;
    }
    let left = anchor - d;

    let mut value = integrate(h, left, anchor, rel_tol, 0.0, MAX_INTERVALS)?.value;
    if upper > anchor {
        let mut d = width;
        while d < upper - anchor && gn_log_diff(anchor, d, sys) > LOG_CUTOFF {
            d *= 2.0;
        }
        let right = (anchor + d).min(upper);
        value += integrate(h, anchor, right, rel_tol, 0.0, MAX_INTERVALS)?.value;
    }
    Ok(log_peak + value.ln())
}

pub fn gn_log_integral(sys: &MmnSystem, upper: f64) -> Result<f64> {
    gn_log_integral_tol(sys, upper, GN_REL_TOL)
}

/// `integral_{-inf}^{upper} G_n(t) dt`; underflows to 0 for very negative `upper`.
pub fn gn_integral(sys: &MmnSystem, upper: f64) -> Result<f64> {
    Ok(gn_log_integral(sys, upper)?.exp())
}

/// Boundary probabilities of the stationary M/M/n queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmnExactSummary {
    pub p_q_eq_n: f64,
    pub p_w_gt_0: f64,
    pub p_r_gt_0: f64,
    /// `integral_{-inf}^0 G_n(t) dt`.
    pub integral_neg: f64,
}

/// `P(q = n) = (1/eps + n I)^-1`, `P(w > 0) = ((1 - eps)/eps) P(q = n)` and
/// `P(r > 0) = n P(q = n) I`, with `I` the integral of `G_n` up to zero.
pub fn mmn_exact_summary(sys: &MmnSystem) -> Result<MmnExactSummary> {
    let log_i = gn_log_integral(sys, 0.0)?;
    let log_n = f64::from(sys.n).ln();
    let (a, b) = (-sys.eps.ln(), log_n + log_i);
    let log_denominator = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    let log_p = -log_denominator;
    Ok(MmnExactSummary {
        p_q_eq_n: log_p.exp(),
        p_w_gt_0: (log_p + (sys.rho() / sys.eps).ln()).exp(),
        p_r_gt_0: (log_n + log_p + log_i).exp(),
        integral_neg: log_i.exp(),
    })
}

/// `E[exp(theta r) | r > 0] = G_n(theta)^-1 integral_{-inf}^theta G_n / integral_{-inf}^0 G_n`.
pub fn r_mgf_conditional(sys: &MmnSystem, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(1.0);
    }
    let log_num = gn_log_integral(sys, theta)?;
    let log_den = gn_log_integral(sys, 0.0)?;
    Ok((log_num - log_den - gn_log(theta, sys)).exp())
}

/// `E[exp(theta w) | w > 0] = 1 / (1 - (1 - e^{-theta}) / eps)` for `theta < log(1/(1 - eps))`.
pub fn w_mgf_conditional(sys: &MmnSystem, theta: f64) -> Result<f64> {
    let radius = -(-sys.eps).ln_1p();
    if !(theta < radius) {
        return Err(Error::domain(
            "w_mgf_conditional",
            format!("theta = {theta} must be below log(1/(1-eps)) = {radius}"),
        ));
    }
    Ok(1.0 / (1.0 + (-theta).exp_m1() / sys.eps))
}

/// Exact conditional tail `P(eps w >= x | w > 0) = (1 - eps)^(ceil(x/eps) - 1)`.
pub fn w_tail_conditional(sys: &MmnSystem, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::validation("x", format!("{x} must be positive")));
    }
    let y = x / sys.eps;
    let r = y.round();
    let y = if r >= 1.0 && (y - r).abs() <= 1e-9 * r { r } else { y };
    Ok(((y.ceil() - 1.0) * (-sys.eps).ln_1p()).exp())
}

/// `(1/(1 - eps)) exp(-theta_n x)`, an upper bound on [`w_tail_conditional`].
pub fn w_tail_conditional_upper(sys: &MmnSystem) -> TailBound {
    TailBound {
        side: Side::Upper,
        c0: 1.0 / sys.rho(),
        c1: 0.0,
        r1: -(-sys.eps).ln_1p() / sys.eps,
        r2: 0.0,
        x_min: 0.0,
        conditions_met: true,
    }
}

fn eps_matches(sys: &MmnSystem, scaling: &HtScaling) -> bool {
    scaling
        .eps_of(sys.n)
        .map(|e| (e - sys.eps).abs() <= 1e-12 * e)
        .unwrap_or(false)
}

/// Whether `n^(2 alpha - 1) > 4 c^2`, needed for `1/2 < alpha < 1`.
pub fn super_hw_condition(n: u32, scaling: &HtScaling) -> bool {
    f64::from(n).powf(2.0 * scaling.alpha - 1.0) > 4.0 * scaling.c * scaling.c
}

/// Gaussian bound `c0 exp(-x^2 / 2)` on `P(eta (r - n eps) > x | r > 0)`.
///
/// `c0` is `kappa_super c n^(1/2 - alpha)`, `kappa_hw` or `1` for the regimes
/// `1/2 < alpha < 1`, `alpha = 1/2` and `alpha < 1/2` respectively. Other
/// regimes have no such bound.
pub fn mmn_idle_tail_bound(sys: &MmnSystem, scaling: &HtScaling, regime: Regime) -> Result<TailBound> {
    let actual = classify_regime(scaling.alpha)?;
    if actual != regime {
        return Err(Error::validation(
            "regime",
            format!("alpha = {} is {actual}, not {regime}", scaling.alpha),
        ));
    }
    let k = MmnConstants::get();
    let n = f64::from(sys.n);
    let (c0, regime_ok) = match regime {
        Regime::SuperHw => (
            k.kappa_super * scaling.c * n.powf(0.5 - scaling.alpha),
            super_hw_condition(sys.n, scaling),
        ),
        Regime::Hw => (k.kappa_hw, true),
        Regime::SubHw => (1.0, true),
        Regime::Nds | Regime::SuperSlowdown => {
            return Err(Error::domain("mmn_idle_tail_bound", format!("no idle-server bound in regime {regime}")))
        }
    };
    Ok(TailBound {
        side: Side::Upper,
        c0,
        c1: 0.0,
        r1: 0.0,
        r2: 0.5,
        x_min: 0.0,
        conditions_met: regime_ok && eps_matches(sys, scaling),
    })
}

/// `exp(-x^2 (1/2 - 2 e eps))` bounding `P(eta (r - n eps) < -x | r > 0)` for `alpha < 1/2`.
/// Flagged when the exponent does not decay.
pub fn mmn_idle_lower_tail_bound(sys: &MmnSystem) -> TailBound {
    let r2 = 0.5 - 2.0 * E * sys.eps;
    TailBound {
        side: Side::UpperLeftTail,
        c0: 1.0,
        c1: 0.0,
        r1: 0.0,
        r2,
        x_min: 0.0,
        conditions_met: r2 > 0.0,
    }
}

/// One-sided bound or limit for `P(r > 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrBound {
    Upper { value: f64, conditions_met: bool },
    Lower { value: f64, conditions_met: bool },
    Limit { value: f64 },
}

impl PrBound {
    pub fn value(&self) -> f64 {
        match *self {
            PrBound::Upper { value, .. } | PrBound::Lower { value, .. } | PrBound::Limit { value } => value,
        }
    }
}

/// `P(r > 0) <= 4 e pi c n^(1/2 - alpha)` for `1/2 < alpha < 1`,
/// `P(r > 0) >= 1 - (kappa_sub / c) n^(alpha - 1/2) exp(-c n^(1/2 - alpha))` for
/// `alpha < 1/2`, and the Halfin-Whitt limit at `alpha = 1/2`.
pub fn mmn_p_r_bounds(sys: &MmnSystem, scaling: &HtScaling) -> Result<PrBound> {
    let n = f64::from(sys.n);
    let (c, alpha) = (scaling.c, scaling.alpha);
    let consistent = eps_matches(sys, scaling);
    match scaling.regime() {
        Regime::SuperHw => Ok(PrBound::Upper {
            value: 4.0 * E * PI * c * n.powf(0.5 - alpha),
            conditions_met: consistent && super_hw_condition(sys.n, scaling),
        }),
        Regime::SubHw => {
            let k = MmnConstants::get();
            let tail = (k.kappa_sub / c) * n.powf(alpha - 0.5) * (-c * n.powf(0.5 - alpha)).exp();
            Ok(PrBound::Lower {
                value: 1.0 - tail,
                conditions_met: consistent,
            })
        }
        Regime::Hw => Ok(PrBound::Limit { value: mmn_hw_limit_p(c)? }),
        r => Err(Error::domain("mmn_p_r_bounds", format!("no bound on P(r > 0) in regime {r}"))),
    }
}

/// `N / (1 + N)` with `N = sqrt(2 pi) c exp(c^2/2) Phi(c)`.
pub fn mmn_hw_limit_p(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::validation("c", format!("{c} must be positive")));
    }
    let log_n = 0.5 * (2.0 * PI).ln() + c.ln() + 0.5 * c * c + std_normal_cdf(c).ln();
    Ok(1.0 / (1.0 + (-log_n).exp()))
}

/// Reference comparator: `P(Z > x | Z > -zeta)` for standard normal `Z`.
pub fn truncated_normal_tail(x: f64, zeta: f64) -> f64 {
    if x <= -zeta {
        return 1.0;
    }
    std_normal_cdf(-x) / std_normal_cdf(zeta)
}
