//! Table builders behind the `bounds`, `exact`, `simulate` and `sweep` subcommands.

use anyhow::{Context, Result};
use queuetail_core::bounds_jsq::{
    jsq_tail_lower, jsq_tail_lower_geometric, jsq_tail_upper, ssc_condition, ssc_statistic, theta_n,
};
use queuetail_core::bounds_mmn::{
    mmn_exact_summary, mmn_idle_lower_tail_bound, mmn_idle_tail_bound, mmn_p_r_bounds, w_tail_conditional_upper,
    PrBound,
};
use queuetail_core::bounds_ssq::{ssq_bound_params, ssq_tail_upper};
use queuetail_core::exact::{
    cramer_root, mm1_scaled_tail, mm1_scaled_tail_strict, ssq_stationary, ssq_unused_service_mean, MmnChain,
};
use queuetail_core::sim::{simulate_jsq, simulate_ssq};
use queuetail_core::{BoundedPmf, HtScaling, JsqSystem, MmnSystem, Regime, SimConfig, SsqSystem};

use crate::config::{EpsRule, ExperimentConfig, SystemBlock};
use crate::output::{Cell, Row};
use crate::VerificationFailed;

const SSQ_DEFAULT_X: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];
const SIM_DEFAULT_X: [f64; 3] = [0.5, 1.0, 2.0];

pub fn bounds_jsq(sys: &JsqSystem, xs: &[f64]) -> Result<Vec<Row>> {
    let (n, eps) = (Some(sys.n), sys.eps);
    let upper = jsq_tail_upper(sys);
    let lower = jsq_tail_lower(sys);
    let geometric = jsq_tail_lower_geometric(sys);
    let ssc = ssc_condition(sys);
    let mut rows = vec![
        Row::new("jsq", n, eps, "rate", theta_n(eps)?),
        Row::new("jsq", n, eps, "ssc_statistic", ssc_statistic(sys)).conditions(ssc),
        Row::new("jsq", n, eps, "upper_c1", upper.c1).conditions(ssc),
        Row::new("jsq", n, eps, "upper_x_min", upper.x_min),
    ];
    for &x in xs {
        rows.push(Row::bound("jsq", n, eps, "tail_lower", &lower, x));
        rows.push(Row::bound("jsq", n, eps, "tail_lower_geometric", &geometric, x));
        rows.push(Row::bound("jsq", n, eps, "tail_upper", &upper, x));
    }
    Ok(rows)
}

pub fn bounds_ssq(sys: &SsqSystem, xs: &[f64]) -> Result<Vec<Row>> {
    let p = ssq_bound_params(sys)?;
    let bound = ssq_tail_upper(sys)?;
    let eps = p.eps;
    let mut rows = vec![
        Row::new("ssq", None, eps, "theta_eps", p.theta_eps),
        Row::new("ssq", None, eps, "kappa_ssq", p.kappa_ssq),
        Row::new("ssq", None, eps, "rate", p.rate).conditions(bound.conditions_met),
        Row::new("ssq", None, eps, "x_min", p.x_min),
        Row::new("ssq", None, eps, "x_min_quoted", p.x_min_quoted),
    ];
    let xs = if xs.is_empty() { &SSQ_DEFAULT_X[..] } else { xs };
    for &x in xs {
        rows.push(Row::bound("ssq", None, eps, "tail_upper", &bound, x));
    }
    Ok(rows)
}

pub fn bounds_mmn(sys: &MmnSystem, scaling: &HtScaling, xs: &[f64]) -> Result<Vec<Row>> {
    let (n, eps) = (Some(sys.n), sys.eps);
    let regime = scaling.regime();
    let mut rows = Vec::new();
    match mmn_p_r_bounds(sys, scaling) {
        Ok(PrBound::Upper { value, conditions_met }) => {
            let cell = if value >= 1.0 { Cell::Vacuous } else { Cell::Num(value) };
            rows.push(Row::new("mmn", n, eps, "p_r_gt_0_upper", cell).conditions(conditions_met))
        }
        Ok(PrBound::Lower { value, conditions_met }) => {
            rows.push(Row::new("mmn", n, eps, "p_r_gt_0_lower", value).conditions(conditions_met))
        }
        Ok(PrBound::Limit { value }) => rows.push(Row::new("mmn", n, eps, "p_r_gt_0_limit", value)),
        Err(_) => {}
    }
    let idle = match regime {
        Regime::SuperHw | Regime::Hw | Regime::SubHw => Some(mmn_idle_tail_bound(sys, scaling, regime)?),
        _ => None,
    };
    if let Some(b) = &idle {
        rows.push(Row::new("mmn", n, eps, "idle_tail_c0", b.c0).conditions(b.conditions_met));
    }
    let left = (regime == Regime::SubHw).then(|| mmn_idle_lower_tail_bound(sys));
    let w = w_tail_conditional_upper(sys);
    for &x in xs {
        if let Some(b) = &idle {
            rows.push(Row::bound("mmn", n, eps, "idle_tail_upper", b, x));
        }
        if let Some(b) = &left {
            rows.push(Row::bound("mmn", n, eps, "idle_left_tail_upper", b, x));
        }
        rows.push(Row::bound("mmn", n, eps, "w_tail_upper", &w, x));
    }
    Ok(rows)
}

pub fn exact_mm1(eps: f64, xs: &[f64]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &x in xs {
        rows.push(Row::new("mm1", Some(1), eps, "tail_ge", mm1_scaled_tail(eps, x)?).at(x));
        rows.push(Row::new("mm1", Some(1), eps, "tail_gt", mm1_scaled_tail_strict(eps, x)?).at(x));
    }
    Ok(rows)
}

/// Boundary probabilities by both methods, with the largest relative
/// disagreement between them.
pub fn exact_mmn(sys: &MmnSystem, tol: f64) -> Result<(Vec<Row>, f64)> {
    let (n, eps) = (Some(sys.n), sys.eps);
    let s = mmn_exact_summary(sys)?;
    let chain = MmnChain::solve(*sys, 1e-15)?;
    let pairs = [
        ("p_q_eq_n", s.p_q_eq_n, chain.p_q_eq_n()),
        ("p_w_gt_0", s.p_w_gt_0, chain.p_w_gt_0()),
        ("p_r_gt_0", s.p_r_gt_0, chain.p_r_gt_0()),
    ];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, formula, oracle) in pairs {
        rows.push(Row::new("mmn", n, eps, format!("{name}_integral"), formula));
        rows.push(Row::new("mmn", n, eps, format!("{name}_birth_death"), oracle));
        worst = worst.max(((formula - oracle) / oracle).abs());
    }
    rows.push(Row::new("mmn", n, eps, "integral_neg", s.integral_neg));
    rows.push(Row::new("mmn", n, eps, "max_relative_residual", worst).conditions(worst <= tol));
    Ok((rows, worst))
}

pub fn exact_ssq(sys: &SsqSystem, xs: &[f64]) -> Result<Vec<Row>> {
    let eps = sys.eps();
    let pi = ssq_stationary(&sys.arrival, &sys.service, 1e-13, 1e-15)?;
    let mut rows = vec![
        Row::new("ssq", None, eps, "mean_scaled_queue", eps * pi.mean()),
        Row::new("ssq", None, eps, "mean_u", ssq_unused_service_mean(&pi, &sys.arrival, &sys.service)),
    ];
    let rate = cramer_root(&sys.arrival, &sys.service)?.map(|z| z / eps);
    rows.push(Row::new("ssq", None, eps, "decay_rate", rate));
    let xs = if xs.is_empty() { &SSQ_DEFAULT_X[..] } else { xs };
    for &x in xs {
        let k = (x / eps).floor();
        let tail = if k < 0.0 { 1.0 } else { pi.tail_gt(k as usize) };
        rows.push(Row::new("ssq", None, eps, "tail_gt", tail).at(x));
    }
    Ok(rows)
}

pub fn simulate_jsq_rows(sys: &JsqSystem, cfg: &SimConfig) -> Result<Vec<Row>> {
    let stats = simulate_jsq(sys, cfg)?;
    let (n, eps) = (Some(sys.n), sys.eps);
    let mut rows = Vec::new();
    for g in &stats.tail {
        rows.push(Row::estimate("jsq", n, eps, "tail", &g.estimate).at(g.at));
    }
    for (name, grid) in [("mgf", &stats.mgf), ("beta", &stats.beta), ("perp_mgf", &stats.perp_mgf)] {
        for g in grid {
            rows.push(Row::estimate("jsq", n, eps, name, &g.estimate).at(g.at));
        }
    }
    rows.push(Row::estimate("jsq", n, eps, "empty_frac", &stats.empty_frac));
    if let Some(fit) = &stats.ld_slope {
        let half = queuetail_core::sim::Z95 * fit.stderr;
        let mut row = Row::new("jsq", n, eps, "ld_slope", fit.slope);
        row.ci = Some((fit.slope - half, fit.slope + half));
        rows.push(row);
    }
    Ok(rows)
}

pub fn simulate_ssq_rows(sys: &SsqSystem, cfg: &SimConfig) -> Result<Vec<Row>> {
    let stats = simulate_ssq(sys, cfg)?;
    let eps = sys.eps();
    let mut rows = Vec::new();
    for g in &stats.tail {
        rows.push(Row::estimate("ssq", None, eps, "tail", &g.estimate).at(g.at));
    }
    for g in &stats.mgf {
        rows.push(Row::estimate("ssq", None, eps, "mgf", &g.estimate).at(g.at));
    }
    rows.push(Row::estimate("ssq", None, eps, "mean_u", &stats.mean_u));
    for g in &stats.e_neg_theta_u {
        rows.push(Row::estimate("ssq", None, eps, "e_neg_theta_u", &g.estimate).at(g.at));
    }
    Ok(rows)
}

/// Builds a simulation config from command-line style settings.
pub fn sim_config(
    seed: u64,
    horizon: u64,
    replications: u64,
    batches: u32,
    warmup: f64,
    x: &[f64],
    theta: &[f64],
) -> Result<SimConfig> {
    let replications = u32::try_from(replications).context("replication count too large")?;
    let xs = if x.is_empty() { SIM_DEFAULT_X.to_vec() } else { x.to_vec() };
    let cfg = SimConfig {
        warmup_fraction: warmup,
        batches,
        ..SimConfig::new(seed, horizon)
            .with_replications(replications)
            .with_tail_grid(xs)
            .with_theta_grid(theta.to_vec())
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_ssq(arrival: &std::path::Path, service: &std::path::Path) -> Result<SsqSystem> {
    let a = BoundedPmf::from_json_file(arrival).with_context(|| format!("loading {}", arrival.display()))?;
    let s = BoundedPmf::from_json_file(service).with_context(|| format!("loading {}", service.display()))?;
    Ok(SsqSystem::new(a, s)?)
}

/// Every table the config describes, in input order: bounds, then exact
/// quantities, then simulation estimates, for each `n` in turn.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let Some(system) = &cfg.system else {
        anyhow::bail!("sweep needs a `system` block");
    };
    let sim = cfg.sim.as_ref().map(|s| {
        let mut s = s.clone();
        if s.tail_grid.is_empty() {
            s.tail_grid = if cfg.x.is_empty() { SIM_DEFAULT_X.to_vec() } else { cfg.x.clone() };
        }
        if s.theta_grid.is_empty() {
            s.theta_grid = cfg.theta.clone();
        }
        s
    });
    let mut rows = Vec::new();
    match system {
        SystemBlock::Jsq { n, mu, eps, scaling } => {
            let rule = EpsRule::from_block(*eps, *scaling)?;
            for &k in n {
                let sys = JsqSystem::new(k, *mu, rule.eps(k)?)?;
                rows.extend(bounds_jsq(&sys, &cfg.x)?);
                if k == 1 {
                    rows.extend(exact_mm1(sys.eps, &cfg.x)?);
                }
                if let Some(s) = &sim {
                    rows.extend(simulate_jsq_rows(&sys, s)?);
                }
            }
        }
        SystemBlock::Ssq { arrival, service } => {
            let sys = SsqSystem::new(arrival.load(&cfg.base_dir)?, service.load(&cfg.base_dir)?)?;
            rows.extend(bounds_ssq(&sys, &cfg.x)?);
            rows.extend(exact_ssq(&sys, &cfg.x)?);
            if let Some(s) = &sim {
                rows.extend(simulate_ssq_rows(&sys, s)?);
            }
        }
        SystemBlock::Mmn { n, mu, eps, scaling } => {
            let rule = EpsRule::from_block(*eps, *scaling)?;
            for &k in n {
                let sys = MmnSystem::new(k, *mu, rule.eps(k)?)?;
                if let EpsRule::Scaled(sc) = rule {
                    rows.extend(bounds_mmn(&sys, &sc, &cfg.x)?);
                }
                let (exact, worst) = exact_mmn(&sys, 1e-8)?;
                rows.extend(exact);
                if worst > 1e-8 {
                    return Err(VerificationFailed(format!("M/M/{k}: methods disagree by {worst:e}")).into());
                }
            }
        }
    }
    Ok(rows)
}
