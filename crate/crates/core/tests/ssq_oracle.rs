use std::collections::BTreeMap;

use proptest::prelude::*;
use queuetail_core::bounds_ssq::{
    markov_tail_from_mgf, ssq_bound_params, ssq_gamma, ssq_gamma_lower, ssq_ld_rate, ssq_mgf_bound,
    ssq_mgf_recursion_step, ssq_tail_upper, ssq_unused_service_bound,
};
use queuetail_core::exact::{bernoulli_ssq_stationary, ssq_stationary, ssq_unused_service_mean, ssq_unused_service_mgf};
use queuetail_core::{BoundedPmf, SsqSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bernoulli_system(p_a: f64, p_s: f64) -> SsqSystem {
    SsqSystem::new(BoundedPmf::bernoulli(p_a).unwrap(), BoundedPmf::bernoulli(p_s).unwrap()).unwrap()
}

#[test]
fn bernoulli_tail_dominated_for_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let p_s = rng.random_range(0.05..0.95);
        let p_a = p_s * rng.random_range(0.05..0.95);
        let sys = bernoulli_system(p_a, p_s);
        let law = bernoulli_ssq_stationary(p_a, p_s).unwrap();
        let eps = sys.eps();
        let bound = ssq_tail_upper(&sys).unwrap();
        let lo = bound.x_min;
        if lo < 20.0 {
            for i in 1..=50 {
                let x = lo + (20.0 - lo) * f64::from(i) / 50.0;
                let exact = law.tail_gt(x / eps);
                assert!(exact <= bound.eval(x), "p_a={p_a} p_s={p_s} x={x}");
            }
        }
        assert!(law.decay_rate() / eps >= ssq_ld_rate(&sys).unwrap(), "p_a={p_a} p_s={p_s}");
    }
}

#[test]
fn bernoulli_mgf_dominated() {
    let sys = bernoulli_system(0.4, 0.5);
    let law = bernoulli_ssq_stationary(0.4, 0.5).unwrap();
    let p = ssq_bound_params(&sys).unwrap();
    for i in 1..100 {
        let theta = p.theta_sup() * f64::from(i) / 100.0;
        assert!(law.mgf(theta * p.eps) <= ssq_mgf_bound(&sys, theta).unwrap());
    }
    assert!((ssq_mgf_bound(&sys, 0.5 * p.theta_sup()).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn unused_service_claims_on_exact_chain() {
    let sys = bernoulli_system(0.4, 0.5);
    let law = bernoulli_ssq_stationary(0.4, 0.5).unwrap();
    let pi = law.truncated(400);
    let eps = sys.eps();
    let mean_u = ssq_unused_service_mean(&pi, &sys.arrival, &sys.service);
    assert!((mean_u - eps * sys.mu()).abs() < 1e-12);
    let p = ssq_bound_params(&sys).unwrap();
    for i in 1..=40 {
        let theta = p.theta_sup() * f64::from(i) / 41.0;
        let e_neg = ssq_unused_service_mgf(&pi, &sys.arrival, &sys.service, -theta * eps);
        assert!(1.0 - e_neg <= ssq_unused_service_bound(&sys, theta) + 1e-10, "theta={theta}");
        assert!(ssq_gamma(&sys, theta) >= ssq_gamma_lower(&sys, theta).unwrap() - 1e-10, "theta={theta}");
    }
}

#[test]
fn power_iteration_matches_bernoulli_law() {
    let a = BoundedPmf::bernoulli(0.3).unwrap();
    let s = BoundedPmf::bernoulli(0.6).unwrap();
    let pi = ssq_stationary(&a, &s, 1e-14, 1e-15).unwrap();
    let law = bernoulli_ssq_stationary(0.3, 0.6).unwrap();
    for k in 0..30 {
        assert!((pi.prob(k) - law.pmf(k as u64)).abs() < 1e-11, "k={k}");
    }
}

/// Exact law of `q(t)` from `q(0) = 0`, one step of the Lindley recursion.
fn propagate(law: &BTreeMap<u64, f64>, a: &BoundedPmf, s: &BoundedPmf) -> BTreeMap<u64, f64> {
    let mut next = BTreeMap::new();
    for (&q, &p) in law {
        for (av, pa) in a.iter() {
            for (sv, ps) in s.iter() {
                let target = (q as i64 + i64::from(av) - i64::from(sv)).max(0) as u64;
                *next.entry(target).or_insert(0.0) += p * pa * ps;
            }
        }
    }
    next
}

#[test]
fn transient_mgf_recursion_matches_propagation() {
    let a = BoundedPmf::new(vec![0, 1, 2], vec![0.5, 0.3, 0.2]).unwrap();
    let s = BoundedPmf::new(vec![0, 1, 3], vec![0.4, 0.2, 0.4]).unwrap();
    let sys = SsqSystem::new(a.clone(), s.clone()).unwrap();
    let eps = sys.eps();
    let theta = 0.5 * ssq_bound_params(&sys).unwrap().theta_sup();
    let gamma = ssq_gamma(&sys, theta);
    let mut law = BTreeMap::from([(0u64, 1.0)]);
    for t in 0..100 {
        let ev: f64 = law.iter().map(|(&q, p)| p * (theta * eps * q as f64).exp()).sum();
        let mut ebeta = 0.0;
        for (&q, &p) in &law {
            for (av, pa) in a.iter() {
                for (sv, ps) in s.iter() {
                    let u = (i64::from(sv) - i64::from(av) - q as i64).max(0) as f64;
                    ebeta -= p * pa * ps * (-theta * eps * u).exp_m1();
                }
            }
        }
        law = propagate(&law, &a, &s);
        let direct: f64 = law.iter().map(|(&q, p)| p * (theta * eps * q as f64).exp()).sum();
        let recursed = ssq_mgf_recursion_step(gamma, ev, ebeta);
        assert!((direct - recursed).abs() < 1e-12 * direct, "t={t}");
    }
}

#[test]
fn markov_lemma_examples() {
    assert!((markov_tail_from_mgf(1.0, 2.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    assert!(markov_tail_from_mgf(1.0, 1.0).is_err());
    assert!(markov_tail_from_mgf(0.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn markov_lemma_dominates_exponential(lambda in 1e-3f64..1e3, k in 1.0001f64..50.0) {
        let x = k / lambda;
        let bound = markov_tail_from_mgf(lambda, x).unwrap();
        let exact = (-lambda * x).exp();
        prop_assert!(exact <= bound);
        let e = std::f64::consts::E;
        prop_assert!((bound / exact / (e * lambda * x) - 1.0).abs() < 1e-12);
    }
}
