//! Verification suites. Each suite compares a formula against an independent
//! oracle (a birth-death solve, a closed form, or a seeded simulation) and
//! returns one record per comparison.

use std::f64::consts::E;

use anyhow::Result;
use queuetail_core::bounds_jsq::{jsq_tail_lower, jsq_tail_upper, ssc_condition, theta_n};
use queuetail_core::bounds_mmn::{
    gn_integral, mmn_exact_summary, mmn_hw_limit_p, mmn_idle_lower_tail_bound, mmn_idle_tail_bound, mmn_p_r_bounds,
    r_mgf_conditional, w_mgf_conditional, w_tail_conditional,
};
use queuetail_core::bounds_ssq::{
    markov_tail_from_mgf, ssq_bound_params, ssq_gamma, ssq_gamma_lower, ssq_ld_rate, ssq_tail_upper,
    ssq_unused_service_bound,
};
use queuetail_core::exact::{
    bernoulli_ssq_stationary, mm1_scaled_tail_strict, ssq_unused_service_mean, ssq_unused_service_mgf, MmnChain,
};
use queuetail_core::sim::rng::splitmix64;
use queuetail_core::sim::{estimate_ld_slope, grid_lookup, simulate_jsq, GridEstimate};
use queuetail_core::{BoundedPmf, HtScaling, JsqSystem, MmnSystem, Regime, SimConfig, SimEstimate, SsqSystem};
use serde::{Serialize, Serializer};

use crate::args::Suite;
use crate::commands::{simulate_jsq_rows, simulate_ssq_rows};
use crate::output::{render, Format};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub suite: &'static str,
    pub check: String,
    #[serde(serialize_with = "finite_or_na")]
    pub expected: f64,
    #[serde(serialize_with = "finite_or_na")]
    pub observed: f64,
    #[serde(serialize_with = "finite_or_na")]
    pub tolerance: f64,
    pub pass: bool,
}

fn finite_or_na<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("na")
    }
}

impl CheckRecord {
    /// Passes when `observed <= expected + tolerance`.
    fn at_most(suite: &'static str, check: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = observed <= expected + tolerance;
        Self { suite, check, expected, observed, tolerance, pass }
    }

    /// Passes when `observed >= expected - tolerance`.
    fn at_least(suite: &'static str, check: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = observed >= expected - tolerance;
        Self { suite, check, expected, observed, tolerance, pass }
    }

    /// Passes when `|observed - expected| <= tolerance`.
    fn near(suite: &'static str, check: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (observed - expected).abs() <= tolerance;
        Self { suite, check, expected, observed, tolerance, pass }
    }

    /// Passes when `|observed / expected - 1| <= tolerance`.
    fn relative(suite: &'static str, check: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = ((observed - expected) / expected).abs() <= tolerance;
        Self { suite, check, expected, observed, tolerance, pass }
    }
}

/// Overrides for the simulation suites. A `sim` config replaces the seed and
/// horizon of every simulation, and the replication count when it is above one.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub sim: Option<SimConfig>,
}

impl VerifyOptions {
    fn sim_config(&self, seed: u64, horizon: u64, replications: u32) -> SimConfig {
        let base = SimConfig::new(seed, horizon).with_replications(replications);
        match &self.sim {
            None => base,
            Some(o) => SimConfig {
                seed: o.seed,
                horizon_events: o.horizon_events,
                warmup_fraction: o.warmup_fraction,
                batches: o.batches,
                replications: if o.replications > 1 { o.replications } else { replications },
                ..base
            },
        }
    }
}

pub const ALL_SUITES: [Suite; 12] = [
    Suite::MmnOracle,
    Suite::GnIdentities,
    Suite::GeometricW,
    Suite::JsqSandwich,
    Suite::JsqSim,
    Suite::JsqSsc,
    Suite::JsqLimit,
    Suite::SsqDominance,
    Suite::SsqClaims,
    Suite::MmnRegimes,
    Suite::MarkovLemma,
    Suite::Determinism,
];

pub fn suite_name(suite: Suite) -> &'static str {
    match suite {
        Suite::MmnOracle => "mmn-oracle",
        Suite::GnIdentities => "gn-identities",
        Suite::GeometricW => "geometric-w",
        Suite::JsqSandwich => "jsq-sandwich",
        Suite::JsqSim => "jsq-sim",
        Suite::JsqSsc => "jsq-ssc",
        Suite::JsqLimit => "jsq-limit",
        Suite::SsqDominance => "ssq-dominance",
        Suite::SsqClaims => "ssq-claims",
        Suite::MmnRegimes => "mmn-regimes",
        Suite::MarkovLemma => "markov-lemma",
        Suite::Determinism => "determinism",
        Suite::All => "all",
        Suite::None => "none",
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    match suite {
        Suite::MmnOracle => mmn_oracle(),
        Suite::GnIdentities => gn_identities(),
        Suite::GeometricW => geometric_w(),
        Suite::JsqSandwich => jsq_sandwich(),
        Suite::JsqSim => jsq_sim(opts),
        Suite::JsqSsc => jsq_ssc(opts),
        Suite::JsqLimit => jsq_limit(opts),
        Suite::SsqDominance => ssq_dominance(),
        Suite::SsqClaims => ssq_claims(),
        Suite::MmnRegimes => mmn_regimes(),
        Suite::MarkovLemma => markov_lemma(),
        Suite::Determinism => determinism(opts),
        Suite::All => {
            let mut all = Vec::new();
            for s in ALL_SUITES {
                all.extend(run_suite(s, opts)?);
            }
            Ok(all)
        }
        Suite::None => Ok(Vec::new()),
    }
}

fn mmn(n: u32, eps: f64) -> Result<MmnSystem> {
    Ok(MmnSystem::new(n, 1.0, eps)?)
}

/// Natural log of the truncation tolerance for the birth-death oracle; deep
/// enough that geometric MGF weights near the convergence radius stay resolved.
const ORACLE_LOG_TOL: f64 = -2000.0;

pub const MMN_ORACLE_SYSTEMS: [(u32, f64); 5] = [(1, 0.5), (2, 0.5), (5, 0.2), (10, 0.1), (50, 0.05)];

fn mmn_oracle() -> Result<Vec<CheckRecord>> {
    const S: &str = "mmn-oracle";
    const TOL: f64 = 1e-8;
    let mut out = Vec::new();
    for (n, eps) in MMN_ORACLE_SYSTEMS {
        let sys = mmn(n, eps)?;
        let s = mmn_exact_summary(&sys)?;
        let chain = MmnChain::solve_log(sys, ORACLE_LOG_TOL)?;
        let tag = format!("n={n} eps={eps}");
        out.push(CheckRecord::relative(S, format!("P(q=n) {tag}"), s.p_q_eq_n, chain.p_q_eq_n(), TOL));
        out.push(CheckRecord::relative(S, format!("P(w>0) {tag}"), s.p_w_gt_0, chain.p_w_gt_0(), TOL));
        out.push(CheckRecord::relative(S, format!("P(r>0) {tag}"), s.p_r_gt_0, chain.p_r_gt_0(), TOL));
        for theta in [-1.0, -0.5, 0.3, 0.7] {
            out.push(CheckRecord::relative(
                S,
                format!("E[exp(theta r) | r>0] {tag} theta={theta}"),
                r_mgf_conditional(&sys, theta)?,
                chain.r_mgf_conditional(theta),
                TOL,
            ));
        }
        let radius = -(-eps).ln_1p();
        for frac in [0.25, 0.5] {
            let theta = frac * radius;
            out.push(CheckRecord::relative(
                S,
                format!("E[exp(theta w) | w>0] {tag} theta={theta:.6}"),
                w_mgf_conditional(&sys, theta)?,
                chain.w_mgf_conditional(theta),
                TOL,
            ));
        }
    }
    Ok(out)
}

fn gn_identities() -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for n in [1, 2] {
        out.push(CheckRecord::near(
            "gn-identities",
            format!("integral of G_n up to 0 at n={n} eps=0.5"),
            gn_integral(&mmn(n, 0.5)?, 0.0)?,
            2.0,
            1e-10,
        ));
    }
    Ok(out)
}

fn geometric_w() -> Result<Vec<CheckRecord>> {
    const S: &str = "geometric-w";
    let sys = mmn(5, 0.2)?;
    let chain = MmnChain::solve_log(sys, ORACLE_LOG_TOL)?;
    let worst = (1..=200)
        .map(|k| (chain.w_pmf_conditional(k) - 0.2 * 0.8f64.powi(k as i32 - 1)).abs())
        .fold(0.0, f64::max);
    let mut out = vec![CheckRecord::at_most(
        S,
        "max |P(w=k | w>0) - eps (1-eps)^(k-1)| over k <= 200".into(),
        worst,
        0.0,
        1e-10,
    )];
    let tail = (2..=20)
        .map(|x| {
            let x = f64::from(x);
            Ok(GridEstimate { at: x, estimate: SimEstimate::exact(w_tail_conditional(&sys, x)?) })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = estimate_ld_slope(&tail, (2.0, 20.0))?;
    out.push(CheckRecord::near(
        S,
        "log-tail slope of the conditional waiting law over x in [2, 20]".into(),
        fit.slope,
        theta_n(0.2)?,
        1e-6,
    ));
    Ok(out)
}

fn jsq_sandwich() -> Result<Vec<CheckRecord>> {
    const S: &str = "jsq-sandwich";
    let eps = 3e-4;
    let sys = JsqSystem::new(1, 1.0, eps)?;
    let (lower, upper) = (jsq_tail_lower(&sys), jsq_tail_upper(&sys));
    let mut out = vec![CheckRecord::near(
        S,
        "collapse condition holds".into(),
        f64::from(u8::from(ssc_condition(&sys))),
        1.0,
        0.0,
    )];
    for i in 0..20 {
        let x = 2.0 + 48.0 * f64::from(i) / 19.0;
        let exact = mm1_scaled_tail_strict(eps, x)?;
        out.push(CheckRecord::at_least(S, format!("exact tail >= lower bound at x={x:.4}"), exact, lower.eval(x), 0.0));
        out.push(CheckRecord::at_most(S, format!("exact tail <= upper bound at x={x:.4}"), exact, upper.eval(x), 0.0));
    }
    Ok(out)
}

fn jsq_sim(opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    const S: &str = "jsq-sim";
    let eps = 0.2;
    let sys = JsqSystem::new(2, 1.0, eps)?;
    let mut grid = vec![0.5];
    grid.extend((0..=12).map(|i| 1.0 + 0.25 * f64::from(i)));
    let cfg = opts.sim_config(0x5EED_0005, 100_000_000, 8).with_tail_grid(grid);
    let stats = simulate_jsq(&sys, &cfg)?;
    let lower = jsq_tail_lower(&sys);
    let mut out = Vec::new();
    for x in [0.5, 1.0, 2.0] {
        let est = grid_lookup(&stats.tail, x).expect("grid point present");
        out.push(CheckRecord::at_least(
            S,
            format!("simulated tail >= lower bound - 3 sigma at x={x}"),
            est.point,
            lower.eval(x),
            3.0 * est.stderr,
        ));
    }
    let t = theta_n(eps)?;
    let fit = estimate_ld_slope(&stats.tail, (1.0, 4.0))?;
    out.push(CheckRecord::near(
        S,
        "log-tail slope over x in [1, 4] vs theta_n (1.96 se + 5%)".into(),
        fit.slope,
        t,
        queuetail_core::sim::Z95 * fit.stderr + 0.05 * t,
    ));
    out.push(CheckRecord::near(
        S,
        "empty fraction CI contains eps".into(),
        stats.empty_frac.point,
        eps,
        stats.empty_frac.ci95.1 - stats.empty_frac.point,
    ));
    Ok(out)
}

fn jsq_ssc(opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    let sys = JsqSystem::new(4, 1.0, 0.1)?;
    let theta = 1.0 / 96.0;
    let cfg = opts.sim_config(0x5EED_0006, 100_000_000, 1).with_theta_grid(vec![theta]);
    let stats = simulate_jsq(&sys, &cfg)?;
    let est = grid_lookup(&stats.perp_mgf, theta).expect("grid point present");
    Ok(vec![CheckRecord::at_most(
        "jsq-ssc",
        "upper CI end of E[exp(theta |q_i - mean q|)] at theta=1/96".into(),
        est.ci95.1,
        128.0,
        0.0,
    )])
}

fn jsq_limit(opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    const S: &str = "jsq-limit";
    let theta = 0.5;
    let mut errors = Vec::new();
    for n in [2u32, 4, 8] {
        let eps = f64::from(n).powf(-1.5);
        let sys = JsqSystem::new(n, 1.0, eps)?;
        let cfg = opts.sim_config(0x5EED_0007 + u64::from(n), 100_000_000, 3).with_theta_grid(vec![theta]);
        let stats = simulate_jsq(&sys, &cfg)?;
        let est = grid_lookup(&stats.mgf, theta).expect("grid point present");
        errors.push((n, (est.point - 2.0).abs()));
    }
    Ok(errors
        .windows(2)
        .map(|w| {
            let ((n0, e0), (n1, e1)) = (w[0], w[1]);
            let mut r = CheckRecord::at_most(S, format!("|mgf(0.5) - 2| at n={n1} below n={n0}"), e1, e0, 0.0);
            r.pass = e1 < e0;
            r
        })
        .collect())
}

/// Deterministic uniforms on `[0, 1)` from a SplitMix sequence.
struct Uniforms(u64);

impl Uniforms {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        (splitmix64(self.0) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn bernoulli_system(p_a: f64, p_s: f64) -> Result<SsqSystem> {
    Ok(SsqSystem::new(BoundedPmf::bernoulli(p_a)?, BoundedPmf::bernoulli(p_s)?)?)
}

fn ssq_dominance() -> Result<Vec<CheckRecord>> {
    const S: &str = "ssq-dominance";
    let mut u = Uniforms(8);
    let mut out = Vec::new();
    for _ in 0..20 {
        let p_s = 0.05 + 0.9 * u.next();
        let p_a = p_s * (0.05 + 0.9 * u.next());
        let sys = bernoulli_system(p_a, p_s)?;
        let law = bernoulli_ssq_stationary(p_a, p_s)?;
        let eps = sys.eps();
        let bound = ssq_tail_upper(&sys)?;
        let tag = format!("p_a={p_a:.4} p_s={p_s:.4}");
        if bound.x_min < 20.0 {
            let worst = (1..=50)
                .map(|i| {
                    let x = bound.x_min + (20.0 - bound.x_min) * f64::from(i) / 50.0;
                    law.tail_gt(x / eps) - bound.eval(x)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(CheckRecord::at_most(
                S,
                format!("max (exact tail - bound) on (x_min, 20] {tag}"),
                worst,
                0.0,
                0.0,
            ));
        }
        out.push(CheckRecord::at_least(
            S,
            format!("exact decay rate >= rate bound {tag}"),
            law.decay_rate() / eps,
            ssq_ld_rate(&sys)?,
            0.0,
        ));
    }
    Ok(out)
}

fn ssq_claims() -> Result<Vec<CheckRecord>> {
    const S: &str = "ssq-claims";
    const SLACK: f64 = 1e-10;
    let sys = bernoulli_system(0.4, 0.5)?;
    let pi = bernoulli_ssq_stationary(0.4, 0.5)?.truncated(200);
    let eps = sys.eps();
    let p = ssq_bound_params(&sys)?;
    let mut out = vec![CheckRecord::near(
        S,
        "E[u] = eps mu".into(),
        ssq_unused_service_mean(&pi, &sys.arrival, &sys.service),
        eps * sys.mu(),
        SLACK,
    )];
    let (mut claim2, mut claim3) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 1..=40 {
        let theta = p.theta_sup() * f64::from(i) / 41.0;
        let e_neg = ssq_unused_service_mgf(&pi, &sys.arrival, &sys.service, -theta * eps);
        claim2 = claim2.max(1.0 - e_neg - ssq_unused_service_bound(&sys, theta));
        claim3 = claim3.max(ssq_gamma_lower(&sys, theta)? - ssq_gamma(&sys, theta));
    }
    out.push(CheckRecord::at_most(
        S,
        "max over theta of 1 - E[exp(-theta eps u)] - eps^2 theta mu".into(),
        claim2,
        0.0,
        SLACK,
    ));
    out.push(CheckRecord::at_most(
        S,
        "max over theta of drift lower bound - 1 + E[exp(eps theta (a - s))]".into(),
        claim3,
        0.0,
        SLACK,
    ));
    Ok(out)
}

fn mmn_regimes() -> Result<Vec<CheckRecord>> {
    const S: &str = "mmn-regimes";
    let mut out = Vec::new();
    let half_steps = |hi: u32| (1..=hi).map(|i| 0.5 * f64::from(i));

    let super_hw = HtScaling::new(1.0, 0.7)?;
    let sys = mmn(100, super_hw.eps_of(100)?)?;
    let chain = MmnChain::solve(sys, 1e-15)?;
    let bound = mmn_idle_tail_bound(&sys, &super_hw, Regime::SuperHw)?;
    let p_r = chain.p_r_gt_0();
    for x in half_steps(8) {
        let cond = chain.idle_upper_tail_conditional(x);
        out.push(CheckRecord::at_most(S, format!("super-HW n=100 conditional idle tail at x={x}"), cond, bound.eval(x), 0.0));
        out.push(CheckRecord::at_most(S, format!("super-HW n=100 joint idle tail at x={x}"), cond * p_r, bound.eval(x), 0.0));
    }
    let pr_bound = mmn_p_r_bounds(&sys, &super_hw)?.value();
    out.push(CheckRecord::at_most(S, "super-HW n=100 P(r>0)".into(), p_r, pr_bound, 0.0));

    let sub_hw = HtScaling::new(1.0, 0.3)?;
    let sys = mmn(1_000_000, sub_hw.eps_of(1_000_000)?)?;
    let chain = MmnChain::solve(sys, 1e-15)?;
    let lower = mmn_p_r_bounds(&sys, &sub_hw)?.value();
    out.push(CheckRecord::at_least(S, "sub-HW n=1e6 P(r>0)".into(), chain.p_r_gt_0(), lower, 0.0));
    let right = mmn_idle_tail_bound(&sys, &sub_hw, Regime::SubHw)?;
    let left = mmn_idle_lower_tail_bound(&sys);
    for x in half_steps(6) {
        out.push(CheckRecord::at_most(
            S,
            format!("sub-HW n=1e6 conditional upper idle tail at x={x}"),
            chain.idle_upper_tail_conditional(x),
            right.eval(x),
            0.0,
        ));
        out.push(CheckRecord::at_most(
            S,
            format!("sub-HW n=1e6 conditional lower idle tail at x={x}"),
            chain.idle_lower_tail_conditional(x),
            left.eval(x),
            0.0,
        ));
    }

    let hw = HtScaling::new(1.0, 0.5)?;
    let limit = mmn_hw_limit_p(1.0)?;
    let mut prev: Option<(u32, f64)> = None;
    for n in [100u32, 400, 1600, 6400] {
        let chain = MmnChain::solve(mmn(n, hw.eps_of(n)?)?, 1e-15)?;
        let err = (chain.p_r_gt_0() - limit).abs();
        if let Some((n0, e0)) = prev {
            let mut r = CheckRecord::at_most(S, format!("HW |P(r>0) - limit| at n={n} below n={n0}"), err, e0, 0.0);
            r.pass = err < e0;
            out.push(r);
        }
        prev = Some((n, err));
    }
    let (_, last) = prev.expect("four sizes");
    out.push(CheckRecord::at_most(S, "HW |P(r>0) - limit| at n=6400".into(), last, 0.0, 0.01));
    Ok(out)
}

fn markov_lemma() -> Result<Vec<CheckRecord>> {
    const S: &str = "markov-lemma";
    let mut u = Uniforms(11);
    let (mut violations, mut worst_ratio) = (0u32, 0.0f64);
    for _ in 0..1000 {
        let lambda = 10f64.powf(-3.0 + 6.0 * u.next());
        let x = (1.0 + 1e-9 + 49.0 * u.next()) / lambda;
        let bound = markov_tail_from_mgf(lambda, x)?;
        let exact = (-lambda * x).exp();
        if exact > bound {
            violations += 1;
        }
        worst_ratio = worst_ratio.max((bound / exact / (E * lambda * x) - 1.0).abs());
    }
    Ok(vec![
        CheckRecord::near(S, "exponential tails above the bound".into(), f64::from(violations), 0.0, 0.0),
        CheckRecord::at_most(S, "max |bound / tail / (e lambda x) - 1|".into(), worst_ratio, 0.0, 1e-12),
    ])
}

fn determinism(opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    const S: &str = "determinism";
    let jsq = JsqSystem::new(3, 1.0, 0.25)?;
    let ssq = bernoulli_system(0.4, 0.5)?;
    let base = SimConfig {
        horizon_events: 200_000,
        ..opts.sim_config(42, 200_000, 2)
    }
    .with_tail_grid(vec![0.5, 1.0, 2.0])
    .with_theta_grid(vec![0.3]);
    let run = |seed: u64| -> Result<(Vec<u8>, Vec<u8>)> {
        let cfg = SimConfig { seed, ..base.clone() };
        Ok((
            render(&simulate_jsq_rows(&jsq, &cfg)?, Format::Csv)?,
            render(&simulate_ssq_rows(&ssq, &cfg)?, Format::Csv)?,
        ))
    };
    let first = run(base.seed)?;
    let again = run(base.seed)?;
    let other = run(base.seed.wrapping_add(1))?;
    let flag = |b: bool| f64::from(u8::from(b));
    Ok(vec![
        CheckRecord::near(S, "jsq output identical for equal seeds".into(), flag(first.0 == again.0), 1.0, 0.0),
        CheckRecord::near(S, "ssq output identical for equal seeds".into(), flag(first.1 == again.1), 1.0, 0.0),
        CheckRecord::near(S, "jsq output changes with the seed".into(), flag(first.0 != other.0), 1.0, 0.0),
        CheckRecord::near(S, "ssq output changes with the seed".into(), flag(first.1 != other.1), 1.0, 0.0),
    ])
}
