//! Discrete-time single-server queue `q(t+1) = [q(t) + a(t) - s(t)]^+`:
//! tail and large-deviations bounds for the scaled queue `eps * q`, the MGF
//! bound they come from, and the drift and unused-service inequalities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Side, SsqSystem, TailBound};
use crate::sim::SimEstimate;

/// Constants of the single-server bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsqBoundParams {
    pub eps: f64,
    pub mu: f64,
    /// `2 mu / sigma^2`.
    pub theta_eps: f64,
    /// `2 mu E3 / (3 sigma^4) + eps 9 mu^2 A^4 / sigma^6`.
    pub kappa_ssq: f64,
    /// `theta_eps (1 - kappa_ssq eps)`.
    pub rate: f64,
    /// `(1 + kappa_ssq eps) / theta_eps`, where the Markov step needs `x > 1 / lambda`.
    pub x_min: f64,
    /// `theta_eps / (1 + kappa_ssq eps)`, the threshold as it is usually quoted.
    pub x_min_quoted: f64,
}

impl SsqBoundParams {
    /// Supremum of the window on which the MGF bound is finite.
    pub fn theta_sup(&self) -> f64 {
        self.theta_eps / (1.0 + self.kappa_ssq * self.eps)
    }
}

pub fn ssq_bound_params(sys: &SsqSystem) -> Result<SsqBoundParams> {
    let m = sys.moments();
    if !(m.var_sum > 0.0) {
        return Err(Error::Degenerate(
            "arrival and service are deterministic, the variance of a - s is zero".into(),
        ));
    }
    let (mu, eps, s2) = (sys.mu(), sys.eps(), m.var_sum);
    let a4 = f64::from(m.a_max).powi(4);
    let theta_eps = 2.0 * mu / s2;
    let kappa_ssq = 2.0 * mu * m.e3 / (3.0 * s2 * s2) + eps * 9.0 * mu * mu * a4 / (s2 * s2 * s2);
    Ok(SsqBoundParams {
        eps,
        mu,
        theta_eps,
        kappa_ssq,
        rate: theta_eps * (1.0 - kappa_ssq * eps),
        x_min: (1.0 + kappa_ssq * eps) / theta_eps,
        x_min_quoted: theta_eps / (1.0 + kappa_ssq * eps),
    })
}

/// `e theta_eps x exp(-rate x)`, valid for `x > x_min`. Flagged when the rate is not positive.
pub fn ssq_tail_upper(sys: &SsqSystem) -> Result<TailBound> {
    let p = ssq_bound_params(sys)?;
    Ok(TailBound {
        side: Side::Upper,
        c0: 0.0,
        c1: std::f64::consts::E * p.theta_eps,
        r1: p.rate,
        r2: 0.0,
        x_min: p.x_min,
        conditions_met: p.rate > 0.0,
    })
}

/// Lower bound on the true decay rate of `P(eps q > x)`.
pub fn ssq_ld_rate(sys: &SsqSystem) -> Result<f64> {
    Ok(ssq_bound_params(sys)?.rate)
}

/// `(1 - (theta / theta_eps)(1 + kappa_ssq eps))^-1`, bounding `E[exp(eps theta q)]`
/// for `0 < theta < theta_eps / (1 + kappa_ssq eps)`.
pub fn ssq_mgf_bound(sys: &SsqSystem, theta: f64) -> Result<f64> {
    let p = ssq_bound_params(sys)?;
    if !(theta > 0.0 && theta < p.theta_sup()) {
        return Err(Error::domain(
            "ssq_mgf_bound",
            format!("theta = {theta} outside (0, {})", p.theta_sup()),
        ));
    }
    Ok(1.0 / (1.0 - theta / p.theta_eps * (1.0 + p.kappa_ssq * p.eps)))
}

/// `1 - E[exp(eps theta (a - s))]` by exact summation.
pub fn ssq_gamma(sys: &SsqSystem, theta: f64) -> f64 {
    let eps = sys.eps();
    let mut total = 0.0;
    for (a, pa) in sys.arrival.iter() {
        for (s, ps) in sys.service.iter() {
            total -= pa * ps * (eps * theta * (f64::from(a) - f64::from(s))).exp_m1();
        }
    }
    total
}

/// `theta eps^2 mu (1 - (theta / theta_eps)(1 + kappa_ssq eps))`, a lower bound on [`ssq_gamma`].
pub fn ssq_gamma_lower(sys: &SsqSystem, theta: f64) -> Result<f64> {
    let p = ssq_bound_params(sys)?;
    Ok(theta * p.eps * p.eps * p.mu * (1.0 - theta / p.theta_eps * (1.0 + p.kappa_ssq * p.eps)))
}

/// `eps^2 theta mu`, which bounds `1 - E[exp(-theta eps u)]` in steady state.
pub fn ssq_unused_service_bound(sys: &SsqSystem, theta: f64) -> f64 {
    let eps = sys.eps();
    eps * eps * theta * sys.mu()
}

/// True iff `1 - E[exp(-theta eps u)] <= eps^2 theta mu` up to three standard errors.
pub fn ssq_claim2_check(sim_u: &SimEstimate, theta: f64, sys: &SsqSystem) -> bool {
    1.0 - sim_u.point <= ssq_unused_service_bound(sys, theta) + 3.0 * sim_u.stderr
}

/// Markov-inequality tail bound `e lambda x exp(-lambda x)` for a variable
/// whose MGF is at most `1 / (1 - theta / lambda)`; requires `x > 1 / lambda`.
pub fn markov_tail_from_mgf(lambda_rate: f64, x: f64) -> Result<f64> {
    if !(lambda_rate > 0.0 && lambda_rate.is_finite()) {
        return Err(Error::validation("lambda", format!("{lambda_rate} must be positive")));
    }
    if !(x > 1.0 / lambda_rate) {
        return Err(Error::domain(
            "markov_tail_from_mgf",
            format!("x = {x} must exceed 1/lambda = {}", 1.0 / lambda_rate),
        ));
    }
    let lx = lambda_rate * x;
    Ok((1.0 + lx.ln() - lx).exp())
}

/// One step of `E[V(t+1)] = (1 - gamma) E[V(t)] + E[beta(t)]` with
/// `V = exp(theta eps q)` and `beta(t) = 1 - exp(-theta eps u(t))`.
pub fn ssq_mgf_recursion_step(gamma: f64, ev: f64, ebeta: f64) -> f64 {
    (1.0 - gamma) * ev + ebeta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{bernoulli_ssq_stationary, ssq_unused_service_mgf};
    use crate::model::BoundedPmf;

    fn fixture() -> SsqSystem {
        SsqSystem::new(BoundedPmf::bernoulli(0.4).unwrap(), BoundedPmf::bernoulli(0.5).unwrap()).unwrap()
    }

    #[test]
    fn params_for_bernoulli_fixture() {
        let p = ssq_bound_params(&fixture()).unwrap();
        assert!((p.eps - 0.2).abs() < 1e-15);
        assert!((p.theta_eps - 1.0 / 0.49).abs() < 1e-14);
        let kappa = 0.2 * 9.0 * 0.25 / 0.49f64.powi(3);
        assert!((p.kappa_ssq - kappa).abs() < 1e-12);
        assert!((p.kappa_ssq - 3.8249).abs() < 1e-4);
        assert!((p.rate - 0.4796).abs() < 1e-4);
        assert!(p.rate <= p.theta_eps);
        assert!((p.x_min * p.x_min_quoted - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_system_rejected() {
        let one = BoundedPmf::point_mass(1);
        let two = BoundedPmf::point_mass(2);
        let sys = SsqSystem::new(one, two).unwrap();
        assert!(matches!(ssq_bound_params(&sys), Err(Error::Degenerate(_))));
    }

    #[test]
    fn kappa_without_third_moment_vanishes_as_eps_shrinks() {
        let mut prev_rate = 0.0;
        for p_a in [0.40, 0.45, 0.48, 0.49, 0.495, 0.499] {
            let sys = SsqSystem::new(BoundedPmf::bernoulli(p_a).unwrap(), BoundedPmf::bernoulli(0.5).unwrap()).unwrap();
            let p = ssq_bound_params(&sys).unwrap();
            assert!(p.rate > prev_rate, "rate must increase as eps decreases");
            prev_rate = p.rate;
            assert_eq!(sys.moments().e3, 0.0);
        }
        let sys = SsqSystem::new(BoundedPmf::bernoulli(0.4999).unwrap(), BoundedPmf::bernoulli(0.5).unwrap()).unwrap();
        let p = ssq_bound_params(&sys).unwrap();
        assert!((p.rate - p.theta_eps).abs() < 1e-3 * p.theta_eps);
        assert!((p.theta_eps - 2.0 * 0.5 / sys.moments().var_sum).abs() < 1e-14);
    }

    #[test]
    fn tail_bound_dominates_exact() {
        let sys = fixture();
        let b = ssq_tail_upper(&sys).unwrap();
        let law = bernoulli_ssq_stationary(0.4, 0.5).unwrap();
        let x = 5.0;
        assert!(law.tail_ge(x / 0.2) <= b.eval(x));
        assert!(!b.holds_at(b.x_min * 0.5));
        assert!(law.decay_rate() / 0.2 >= ssq_ld_rate(&sys).unwrap());
        assert!((law.decay_rate() / 0.2 - 5.0 * 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mgf_bound_window() {
        let sys = fixture();
        let p = ssq_bound_params(&sys).unwrap();
        let half = 0.5 * p.theta_sup();
        assert!((ssq_mgf_bound(&sys, half).unwrap() - 2.0).abs() < 1e-12);
        assert!((ssq_mgf_bound(&sys, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(ssq_mgf_bound(&sys, 0.0).is_err());
        assert!(ssq_mgf_bound(&sys, p.theta_sup()).is_err());
        let law = bernoulli_ssq_stationary(0.4, 0.5).unwrap();
        for i in 1..100 {
            let t = p.theta_sup() * i as f64 / 100.0;
            assert!(law.mgf(0.2 * t) <= ssq_mgf_bound(&sys, t).unwrap());
        }
    }

    #[test]
    fn gamma_and_its_lower_bound() {
        let sys = fixture();
        assert_eq!(ssq_gamma(&sys, 0.0), 0.0);
        assert!(ssq_gamma(&sys, -0.3) < 0.0);
        assert!(ssq_gamma(&sys, 0.3) > 0.0);
        let sup = ssq_bound_params(&sys).unwrap().theta_sup();
        for i in 1..200 {
            let t = sup * i as f64 / 200.0;
            let lower = ssq_gamma_lower(&sys, t).unwrap();
            assert!(lower > 0.0);
            assert!(ssq_gamma(&sys, t) >= lower);
        }
    }

    #[test]
    fn unused_service_inequality_on_exact_law() {
        let sys = fixture();
        let pi = bernoulli_ssq_stationary(0.4, 0.5).unwrap().truncated(400);
        for theta in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let m = ssq_unused_service_mgf(&pi, &sys.arrival, &sys.service, -theta * 0.2);
            assert!(1.0 - m <= ssq_unused_service_bound(&sys, theta) + 1e-10);
            assert!(ssq_claim2_check(&SimEstimate::exact(m), theta, &sys));
        }
    }

    #[test]
    fn markov_lemma_examples() {
        assert!((markov_tail_from_mgf(1.0, 2.0).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert!(markov_tail_from_mgf(1.0, 1.0).is_err());
        assert!(markov_tail_from_mgf(0.0, 1.0).is_err());
        let (l, x) = (3.0, 2.0);
        let ratio = markov_tail_from_mgf(l, x).unwrap() / (-l * x).exp();
        assert!((ratio / (std::f64::consts::E * l * x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recursion_step() {
        assert_eq!(ssq_mgf_recursion_step(0.25, 2.0, 0.5), 2.0);
    }
}
