//! Join-the-shortest-queue: decay rate, state-space-collapse constants, tail
//! bounds on the scaled total queue `eps * sum(q_i)`, the limiting MGF and the
//! stationary MGF identity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{JsqSystem, Side, TailBound};
use crate::sim::SimEstimate;

/// Constants of the exponential bound on the perpendicular component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JsqConstants {
    /// Bound on `E[exp(theta_perp |q_perp_i|)]`.
    pub kappa_perp: f64,
    pub theta_perp: f64,
}

impl JsqConstants {
    pub const STANDARD: JsqConstants = JsqConstants {
        kappa_perp: 128.0,
        theta_perp: 1.0 / 96.0,
    };

    /// `4 e kappa_perp^2 / theta_perp`.
    pub fn kappa2(&self) -> f64 {
        4.0 * std::f64::consts::E * self.kappa_perp * self.kappa_perp / self.theta_perp
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::validation("eps", format!("{eps} must lie in (0, 1)")))
    }
}

/// `(1/eps) log(1/(1-eps))`, the exact exponential decay rate of the scaled
/// total queue. Lies strictly between `1` and `1/(1-eps)`.
pub fn theta_n(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(-(-eps).ln_1p() / eps)
}

/// Same as [`theta_n`]: both tail bounds decay at this rate, so it is the
/// large-deviations rate of `P(eps * sum(q) > x)`.
pub fn jsq_ld_rate(eps: f64) -> Result<f64> {
    theta_n(eps)
}

/// `n eps log(1/eps)`, the quantity the collapse condition bounds.
pub fn ssc_statistic(sys: &JsqSystem) -> f64 {
    f64::from(sys.n) * sys.eps * (1.0 / sys.eps).ln()
}

/// True iff `n eps log(1/eps) < theta_perp / 4` and `eps <= 1/2`.
pub fn ssc_condition(sys: &JsqSystem) -> bool {
    sys.eps <= 0.5 && ssc_statistic(sys) < JsqConstants::STANDARD.theta_perp / 4.0
}

/// Upper bound `2 e x (1 + kappa2 n eps log(1/eps)) exp(-theta_n x)` for `x > 1 - eps`.
pub fn jsq_tail_upper(sys: &JsqSystem) -> TailBound {
    let kappa2 = JsqConstants::STANDARD.kappa2();
    TailBound {
        side: Side::Upper,
        c0: 0.0,
        c1: 2.0 * std::f64::consts::E * (1.0 + kappa2 * ssc_statistic(sys)),
        r1: -(-sys.eps).ln_1p() / sys.eps,
        r2: 0.0,
        x_min: 1.0 - sys.eps,
        conditions_met: ssc_condition(sys),
    }
}

/// Lower bound `exp(-theta_n x) / (1 - eps)`, stated for every `n` and `eps`.
pub fn jsq_tail_lower(sys: &JsqSystem) -> TailBound {
    TailBound {
        side: Side::Lower,
        c0: 1.0 / (1.0 - sys.eps),
        c1: 0.0,
        r1: -(-sys.eps).ln_1p() / sys.eps,
        r2: 0.0,
        x_min: 0.0,
        conditions_met: true,
    }
}

/// The geometric-law lower bound `(1 - eps) exp(-theta_n x)`, which the M/M/1
/// tail `(1 - eps)^ceil(x/eps)` dominates for all `x > 0`.
pub fn jsq_tail_lower_geometric(sys: &JsqSystem) -> TailBound {
    TailBound {
        c0: 1.0 - sys.eps,
        ..jsq_tail_lower(sys)
    }
}

/// Heavy-traffic limit `1 / (1 - theta)` of `E[exp(theta eps sum(q))]`.
pub fn jsq_limit_mgf(theta: f64) -> Result<f64> {
    if !(theta < 1.0) {
        return Err(Error::domain("jsq_limit_mgf", format!("theta = {theta} must be below 1")));
    }
    Ok(1.0 / (1.0 - theta))
}

/// Inputs of the drift coefficient `gamma_n(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaInputs {
    pub n: u32,
    pub mu: f64,
    pub eps: f64,
    pub theta: f64,
}

/// `gamma_n(theta) = n mu - lambda exp(eps theta)`, evaluated as
/// `n mu (eps - (1 - eps) expm1(eps theta))` to keep precision near `theta = 0`.
pub fn jsq_gamma(g: &GammaInputs) -> f64 {
    f64::from(g.n) * g.mu * (g.eps - (1.0 - g.eps) * (g.eps * g.theta).exp_m1())
}

/// Relative residual `|lhs - beta / gamma_n(theta)| / lhs` of the stationary
/// identity `E[exp(theta eps sum q)] = E[beta] / gamma_n(theta)`, where
/// `beta = mu sum_i 1{q_i = 0} exp(theta eps sum q)`.
pub fn jsq_mgf_identity_residual(g: &GammaInputs, sim_lhs: &SimEstimate, sim_beta: &SimEstimate) -> Result<f64> {
    let gamma = jsq_gamma(g);
    if !(gamma > 0.0) {
        return Err(Error::domain(
            "mgf identity",
            format!("gamma_n({}) = {gamma} is not positive", g.theta),
        ));
    }
    Ok((sim_lhs.point - sim_beta.point / gamma).abs() / sim_lhs.point)
}

/// Absolute gap `lhs - beta / gamma_n(theta)` and its standard error, treating
/// the two estimates as independent.
pub fn jsq_mgf_identity_gap(g: &GammaInputs, sim_lhs: &SimEstimate, sim_beta: &SimEstimate) -> Result<(f64, f64)> {
    let gamma = jsq_gamma(g);
    if !(gamma > 0.0) {
        return Err(Error::domain(
            "mgf identity",
            format!("gamma_n({}) = {gamma} is not positive", g.theta),
        ));
    }
    let gap = sim_lhs.point - sim_beta.point / gamma;
    let se = sim_lhs.stderr.hypot(sim_beta.stderr / gamma);
    Ok((gap, se))
}
