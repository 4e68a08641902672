//! Ground-truth oracles: birth-death stationary laws, the M/M/1 and
//! Bernoulli single-server geometric laws, a generic Lindley-chain solver and
//! the standard normal CDF.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BoundedPmf, MmnSystem};

/// Default certified tail mass for truncated stationary laws.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Hard cap on the number of states a truncated law may hold.
pub const MAX_STATES: usize = 50_000_000;

/// A truncated stationary law on `0..=truncation_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
    pub truncation_k: usize,
    /// Upper bound on the probability mass beyond `truncation_k`.
    pub certified_tail_mass: f64,
}

impl StationaryDistribution {
    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// `P(X > k)` within the truncation.
    pub fn tail_gt(&self, k: usize) -> f64 {
        if k >= self.truncation_k {
            return 0.0;
        }
        self.probs[k + 1..].iter().rev().sum()
    }

    /// `P(X >= k)` within the truncation.
    pub fn tail_ge(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.tail_gt(k - 1)
        }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `E[exp(z X)]` within the truncation.
    pub fn mgf(&self, z: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * (z * k as f64).exp())
            .sum()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stationary law of the birth-death chain with rates `birth(k)` (k to k+1)
/// and `death(k)` (k to k-1).
///
/// Unnormalized weights are accumulated in log space. The chain is truncated
/// at the first level `K` where the birth/death ratio `r` is below one and not
/// above its predecessor; the mass beyond `K` is then at most
/// `pi_K * r / (1 - r)`, which must fall below `tail_tol`. This certificate
/// assumes the ratio sequence is nonincreasing from that point on, as it is
/// for every M/M/n chain.
pub fn birth_death_stationary<B, D>(birth: B, death: D, tail_tol: f64) -> Result<StationaryDistribution>
where
    B: Fn(usize) -> f64,
    D: Fn(usize) -> f64,
{
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::validation("tail_tol", format!("{tail_tol} must lie in (0, 1)")));
    }
    Ok(birth_death_log_weights(birth, death, tail_tol.ln())?.into_distribution())
}

/// Normalized log-probabilities of a truncated birth-death law. Keeping the
/// law in log form lets the truncation reach masses far below the smallest
/// positive double, which matters for moment generating functions whose
/// weights grow geometrically.
#[derive(Debug, Clone, PartialEq)]
pub struct LogStationary {
    pub log_probs: Vec<f64>,
    /// Natural log of the certified bound on the mass beyond the truncation.
    pub log_certified_tail_mass: f64,
}

impl LogStationary {
    pub fn into_distribution(self) -> StationaryDistribution {
        let mut probs: Vec<f64> = self.log_probs.iter().map(|l| l.exp()).collect();
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        let truncation_k = probs.len() - 1;
        StationaryDistribution {
            probs,
            truncation_k,
            certified_tail_mass: self.log_certified_tail_mass.exp(),
        }
    }

    /// `log sum_{k in range} exp(log_probs[k] + z f(k))`.
    pub fn log_sum_weighted<F>(&self, range: std::ops::Range<usize>, f: F) -> f64
    where
        F: Fn(usize) -> f64,
    {
        let end = range.end.min(self.log_probs.len());
        let terms: Vec<f64> = (range.start.min(end)..end).map(|k| self.log_probs[k] + f(k)).collect();
        log_sum_exp(&terms)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + terms.iter().map(|t| (t - hi).exp()).sum::<f64>().ln()
}

/// Log-space variant of [`birth_death_stationary`] with the tail tolerance
/// given as its natural logarithm.
pub fn birth_death_log_weights<B, D>(birth: B, death: D, log_tail_tol: f64) -> Result<LogStationary>
where
    B: Fn(usize) -> f64,
    D: Fn(usize) -> f64,
{
    if !(log_tail_tol < 0.0) {
        return Err(Error::validation("log_tail_tol", format!("{log_tail_tol} must be negative")));
    }
    let mut log_w = vec![0.0f64];
    let mut log_total = 0.0f64;
    let mut prev_ratio = f64::INFINITY;
    let mut certified = f64::NEG_INFINITY;
    loop {
        let k = log_w.len() - 1;
        let b = birth(k);
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::validation("birth rate", format!("birth({k}) = {b}")));
        }
        if b == 0.0 {
            break;
        }
        let d = death(k + 1);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::validation("death rate", format!("death({}) = {d}", k + 1)));
        }
        let ratio = b / d;
        let log_pk = log_w[k];
        if ratio < 1.0 && ratio <= prev_ratio {
            let bound = log_pk - log_total + (ratio / (1.0 - ratio)).ln();
            if bound < log_tail_tol {
                certified = bound;
                break;
            }
        }
        if log_w.len() >= MAX_STATES {
            return Err(Error::Unstable(format!(
                "no certified truncation within {MAX_STATES} states (last birth/death ratio {ratio})"
            )));
        }
        prev_ratio = ratio;
        let next = log_pk + b.ln() - d.ln();
        log_total = log_add(log_total, next);
        log_w.push(next);
    }
    let log_total = log_sum_exp(&log_w);
    log_w.iter_mut().for_each(|l| *l -= log_total);
    Ok(LogStationary {
        log_probs: log_w,
        log_certified_tail_mass: certified,
    })
}

fn snap_to_integer(y: f64) -> f64 {
    let r = y.round();
    if r >= 1.0 && (y - r).abs() <= 1e-9 * r {
        r
    } else {
        y
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::validation("eps", format!("{eps} must lie in (0, 1)")))
    }
}

/// `(1 - eps)^ceil(x / eps)`, the probability that the scaled M/M/1 queue
/// `eps * q` reaches `x`.
///
/// `x / eps` within a relative `1e-9` of an integer is treated as that
/// integer, so grid points such as `x = 0.6, eps = 0.2` land on the intended
/// level despite rounding.
pub fn mm1_scaled_tail(eps: f64, x: f64) -> Result<f64> {
    Ok(mm1_scaled_log_tail(eps, x)?.exp())
}

/// Natural logarithm of [`mm1_scaled_tail`], usable far beyond underflow.
pub fn mm1_scaled_log_tail(eps: f64, x: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(x > 0.0) {
        return Err(Error::validation("x", format!("{x} must be positive")));
    }
    let k = snap_to_integer(x / eps).ceil();
    Ok(k * (-eps).ln_1p())
}

/// Strict tail `P(eps * q > x) = (1 - eps)^(floor(x / eps) + 1)` of the M/M/1 queue.
pub fn mm1_scaled_tail_strict(eps: f64, x: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(x >= 0.0) {
        return Err(Error::validation("x", format!("{x} must be nonnegative")));
    }
    let k = snap_to_integer(x / eps).floor() + 1.0;
    Ok((k * (-eps).ln_1p()).exp())
}

/// The geometric stationary law of the Lindley queue with Bernoulli arrivals and service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliSsqLaw {
    pub p_a: f64,
    pub p_s: f64,
    /// `pi_{k+1} / pi_k = p_a (1 - p_s) / (p_s (1 - p_a))`.
    pub ratio: f64,
}

impl BernoulliSsqLaw {
    pub fn pmf(&self, k: u64) -> f64 {
        (1.0 - self.ratio) * self.ratio.powf(k as f64)
    }

    /// `P(q >= y)`.
    pub fn tail_ge(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        self.ratio.powf(snap_to_integer(y).ceil())
    }

    /// `P(q > y)`.
    pub fn tail_gt(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        self.ratio.powf(snap_to_integer(y).floor() + 1.0)
    }

    /// `E[exp(z q)]`; infinite when `ratio * e^z >= 1`.
    pub fn mgf(&self, z: f64) -> f64 {
        let rz = self.ratio * z.exp();
        if rz >= 1.0 {
            f64::INFINITY
        } else {
            (1.0 - self.ratio) / (1.0 - rz)
        }
    }

    /// Exact decay rate of `P(q > y)` in `y`.
    pub fn decay_rate(&self) -> f64 {
        -self.ratio.ln()
    }

    /// Truncated law on `0..=k_max`.
    pub fn truncated(&self, k_max: usize) -> StationaryDistribution {
        let probs: Vec<f64> = (0..=k_max as u64).map(|k| self.pmf(k)).collect();
        StationaryDistribution {
            probs,
            truncation_k: k_max,
            certified_tail_mass: self.ratio.powf(k_max as f64 + 1.0),
        }
    }
}

/// Stationary law of `q(t+1) = [q(t) + a - s]^+` with Bernoulli(`p_a`) arrivals
/// and Bernoulli(`p_s`) service.
pub fn bernoulli_ssq_stationary(p_a: f64, p_s: f64) -> Result<BernoulliSsqLaw> {
    if !(0.0..=1.0).contains(&p_a) || !(0.0..=1.0).contains(&p_s) {
        return Err(Error::validation("bernoulli parameters", format!("({p_a}, {p_s}) not in [0,1]")));
    }
    if !(p_a < p_s) {
        return Err(Error::Unstable(format!("arrival probability {p_a} is not below service probability {p_s}")));
    }
    let ratio = p_a * (1.0 - p_s) / (p_s * (1.0 - p_a));
    Ok(BernoulliSsqLaw { p_a, p_s, ratio })
}

/// Law of the increment `a - s`, indexed from `offset = -max(s)`.
fn increment_law(arrival: &BoundedPmf, service: &BoundedPmf) -> (i64, Vec<f64>) {
    let offset = -i64::from(service.max_value());
    let width = (i64::from(arrival.max_value()) - offset + 1) as usize;
    let mut law = vec![0.0; width];
    for (a, pa) in arrival.iter() {
        for (s, ps) in service.iter() {
            law[(i64::from(a) - i64::from(s) - offset) as usize] += pa * ps;
        }
    }
    (offset, law)
}

/// Positive root `z` of `E[exp(z (a - s))] = 1`, the exact decay rate of the
/// unscaled stationary queue. `None` when `a - s <= 0` almost surely.
pub fn cramer_root(arrival: &BoundedPmf, service: &BoundedPmf) -> Result<Option<f64>> {
    let (offset, law) = increment_law(arrival, service);
    let mean: f64 = law.iter().enumerate().map(|(i, p)| (i as i64 + offset) as f64 * p).sum();
    if !(mean < 0.0) {
        return Err(Error::Unstable(format!("mean increment {mean} is not negative")));
    }
    let up_mass: f64 = law
        .iter()
        .enumerate()
        .filter(|(i, _)| *i as i64 + offset > 0)
        .map(|(_, p)| p)
        .sum();
    if up_mass == 0.0 {
        return Ok(None);
    }
    let log_mgf = |z: f64| -> f64 {
        law.iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| p * (z * (i as i64 + offset) as f64).exp())
            .sum::<f64>()
            .ln()
    };
    let mut hi = 1.0;
    while log_mgf(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    // log E[e^{z(a-s)}] is convex, negative on (0, root) and positive after it.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_mgf(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Stationary law of the Lindley chain for arbitrary bounded arrival and
/// service laws, by power iteration of the transition operator truncated
/// (and reflected) at a level where the geometric tail is below `tail_tol`.
///
/// Iteration stops once successive iterates differ by less than `iter_tol`
/// in total variation.
pub fn ssq_stationary(
    arrival: &BoundedPmf,
    service: &BoundedPmf,
    tail_tol: f64,
    iter_tol: f64,
) -> Result<StationaryDistribution> {
    let Some(root) = cramer_root(arrival, service)? else {
        return Ok(StationaryDistribution {
            probs: vec![1.0],
            truncation_k: 0,
            certified_tail_mass: 0.0,
        });
    };
    let (offset, law) = increment_law(arrival, service);
    let k_max = ((-tail_tol.ln()) / root).ceil() as usize + arrival.max_value() as usize + 1;
    if k_max >= MAX_STATES {
        return Err(Error::Unstable(format!("truncation level {k_max} too large")));
    }
    let steps: Vec<(i64, f64)> = law
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, p)| (i as i64 + offset, *p))
        .collect();
    let mut pi = vec![0.0; k_max + 1];
    pi[0] = 1.0;
    let mut next = vec![0.0; k_max + 1];
    let max_iter = 10_000_000usize / (k_max + 1).max(1) * 100 + 10_000;
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (q, &p) in pi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(d, pd) in &steps {
                let target = (q as i64 + d).clamp(0, k_max as i64) as usize;
                next[target] += p * pd;
            }
        }
        let tv: f64 = 0.5 * pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>();
        std::mem::swap(&mut pi, &mut next);
        if tv < iter_tol {
            let sum: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= sum);
            return Ok(StationaryDistribution {
                probs: pi,
                truncation_k: k_max,
                certified_tail_mass: tail_tol,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "ssq power iteration",
        achieved: iter_tol,
    })
}

/// `E[exp(z u)]` for the unused service `u = [s - a - q]^+` under the
/// stationary queue law `pi`.
pub fn ssq_unused_service_mgf(pi: &StationaryDistribution, arrival: &BoundedPmf, service: &BoundedPmf, z: f64) -> f64 {
    let mut total = 0.0;
    for (q, &p) in pi.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (a, pa) in arrival.iter() {
            for (s, ps) in service.iter() {
                let u = (i64::from(s) - i64::from(a) - q as i64).max(0) as f64;
                total += p * pa * ps * (z * u).exp();
            }
        }
    }
    total
}

/// `E[u]` for the unused service under `pi`.
pub fn ssq_unused_service_mean(pi: &StationaryDistribution, arrival: &BoundedPmf, service: &BoundedPmf) -> f64 {
    let mut total = 0.0;
    for (q, &p) in pi.probs.iter().enumerate() {
        for (a, pa) in arrival.iter() {
            for (s, ps) in service.iter() {
                total += p * pa * ps * (i64::from(s) - i64::from(a) - q as i64).max(0) as f64;
            }
        }
    }
    total
}

/// Standard normal CDF through the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// The M/M/n queue-length law, solved as a birth-death chain, with the
/// derived idle-server and waiting-customer quantities.
#[derive(Debug, Clone)]
pub struct MmnChain {
    pub sys: MmnSystem,
    pub dist: StationaryDistribution,
    pub log_dist: LogStationary,
}

impl MmnChain {
    pub fn solve(sys: MmnSystem, tail_tol: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::validation("tail_tol", format!("{tail_tol} must lie in (0, 1)")));
        }
        Self::solve_log(sys, tail_tol.ln())
    }

    /// Solves with the truncation tolerance given as a natural logarithm, for
    /// example `-2000` when moment generating functions near the radius of
    /// convergence are needed.
    pub fn solve_log(sys: MmnSystem, log_tail_tol: f64) -> Result<Self> {
        let lambda = sys.lambda();
        let n = sys.n as usize;
        let mu = sys.mu;
        let log_dist = birth_death_log_weights(|_| lambda, |k| k.min(n) as f64 * mu, log_tail_tol)?;
        let dist = log_dist.clone().into_distribution();
        Ok(Self { sys, dist, log_dist })
    }

    fn n(&self) -> usize {
        self.sys.n as usize
    }

    pub fn p_q_eq_n(&self) -> f64 {
        self.dist.prob(self.n())
    }

    /// `P(w > 0) = P(q > n)`.
    pub fn p_w_gt_0(&self) -> f64 {
        self.log_p_w_gt_0().exp()
    }

    /// `P(r > 0) = P(q < n)`.
    pub fn p_r_gt_0(&self) -> f64 {
        self.log_p_r_gt_0().exp()
    }

    fn log_p_w_gt_0(&self) -> f64 {
        self.log_dist.log_sum_weighted(self.n() + 1..usize::MAX, |_| 0.0)
    }

    fn log_p_r_gt_0(&self) -> f64 {
        self.log_dist.log_sum_weighted(0..self.n(), |_| 0.0)
    }

    /// `E[exp(theta r) | r > 0]` with `r = n - q` idle servers.
    pub fn r_mgf_conditional(&self, theta: f64) -> f64 {
        let n = self.n();
        let num = self.log_dist.log_sum_weighted(0..n, |k| theta * (n - k) as f64);
        (num - self.log_p_r_gt_0()).exp()
    }

    /// `E[exp(theta w) | w > 0]` with `w = q - n` waiting customers, summed
    /// over the truncated law.
    pub fn w_mgf_conditional(&self, theta: f64) -> f64 {
        let n = self.n();
        let num = self.log_dist.log_sum_weighted(n + 1..usize::MAX, |k| theta * (k - n) as f64);
        (num - self.log_p_w_gt_0()).exp()
    }

    /// `P(w = k | w > 0)` for `k >= 1`.
    pub fn w_pmf_conditional(&self, k: usize) -> f64 {
        self.dist.prob(self.n() + k) / self.p_w_gt_0()
    }

    /// `P(eta (r - n eps) > x | r > 0)`.
    pub fn idle_upper_tail_conditional(&self, x: f64) -> f64 {
        let n = self.n();
        let (eta, shift) = (self.sys.eta(), self.sys.n as f64 * self.sys.eps);
        let num: f64 = (0..n.min(self.dist.probs.len()))
            .filter(|&k| eta * ((n - k) as f64 - shift) > x)
            .map(|k| self.dist.probs[k])
            .sum();
        num / self.p_r_gt_0()
    }

    /// `P(eta (r - n eps) < -x | r > 0)`.
    pub fn idle_lower_tail_conditional(&self, x: f64) -> f64 {
        let n = self.n();
        let (eta, shift) = (self.sys.eta(), self.sys.n as f64 * self.sys.eps);
        let num: f64 = (0..n.min(self.dist.probs.len()))
            .filter(|&k| eta * ((n - k) as f64 - shift) < -x)
            .map(|k| self.dist.probs[k])
            .sum();
        num / self.p_r_gt_0()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm1_geometric() {
        let d = birth_death_stationary(|_| 0.5, |_| 1.0, 1e-20).unwrap();
        for k in 0..=60 {
            assert!((d.prob(k) - 0.5f64.powi(k as i32 + 1)).abs() < 1e-12 * d.prob(k), "k={k}");
        }
        assert!(d.certified_tail_mass < 1e-20);
    }

    #[test]
    fn mm2_hand_solved() {
        let d = birth_death_stationary(|_| 1.0, |k| k.min(2) as f64, 1e-12).unwrap();
        assert!((d.prob(0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.prob(1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.prob(2) - 1.0 / 6.0).abs() < 1e-12);
        for k in 3..40 {
            assert!((d.prob(k) - d.prob(2) * 0.5f64.powi(k as i32 - 2)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_arrivals_point_mass() {
        let d = birth_death_stationary(|_| 0.0, |_| 1.0, 1e-12).unwrap();
        assert_eq!(d.probs, vec![1.0]);
    }

    #[test]
    fn unstable_chain_detected() {
        let err = birth_death_stationary(|_| 1.0, |_| 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Unstable(_)));
    }

    #[test]
    fn generator_balance_residual() {
        let sys = MmnSystem::new(20, 1.5, 0.1).unwrap();
        let chain = MmnChain::solve(sys, 1e-12).unwrap();
        let p = &chain.dist.probs;
        let lam = sys.lambda();
        let mu = |k: usize| k.min(20) as f64 * 1.5;
        for k in 1..p.len() - 1 {
            let r = lam * p[k - 1] + mu(k + 1) * p[k + 1] - (lam + mu(k)) * p[k];
            assert!(r.abs() < 1e-10, "k={k} residual {r}");
        }
        for k in 0..p.len() - 1 {
            assert!((lam * p[k] - mu(k + 1) * p[k + 1]).abs() < 1e-12 * p[k].max(1e-300));
        }
    }

    #[test]
    fn truncation_doubling_is_stable() {
        let coarse = birth_death_stationary(|_| 0.8, |k| k.min(3) as f64 * 0.3, 1e-12).unwrap();
        let fine = birth_death_stationary(|_| 0.8, |k| k.min(3) as f64 * 0.3, 1e-24).unwrap();
        assert!(fine.truncation_k > coarse.truncation_k);
        for k in 0..=coarse.truncation_k {
            assert!((coarse.prob(k) - fine.prob(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn mm1_tail_examples() {
        assert!((mm1_scaled_tail(0.5, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((mm1_scaled_tail(0.2, 1.0).unwrap() - 0.32768).abs() < 1e-15);
        assert!((mm1_scaled_tail(0.3, 1e-9).unwrap() - 0.7).abs() < 1e-15);
        assert!((mm1_scaled_tail_strict(0.2, 1.0).unwrap() - 0.8f64.powi(6)).abs() < 1e-15);
        assert!(mm1_scaled_tail(0.0, 1.0).is_err());
        assert!(mm1_scaled_tail(0.5, 0.0).is_err());
    }

    #[test]
    fn mm1_tail_matches_birth_death() {
        let eps = 0.2;
        let d = birth_death_stationary(|_| 0.8, |_| 1.0, 1e-14).unwrap();
        for i in 1..=40 {
            let x = 0.25 * i as f64;
            let y = x / eps;
            let level = if (y - y.round()).abs() < 1e-9 { y.round() } else { y };
            let ge = d.tail_ge(level.ceil() as usize);
            let gt = d.tail_gt(level.floor() as usize);
            assert!((mm1_scaled_tail(eps, x).unwrap() - ge).abs() < 1e-12, "x={x}");
            assert!((mm1_scaled_tail_strict(eps, x).unwrap() - gt).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn mm1_log_rate_matches_theta() {
        let eps = 0.2f64;
        let x = 1e3;
        let rate = -mm1_scaled_log_tail(eps, x).unwrap() / x;
        let theta = -(-eps).ln_1p() / eps;
        assert!((rate - theta).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_law_and_fixed_point() {
        let law = bernoulli_ssq_stationary(0.4, 0.5).unwrap();
        assert!((law.ratio - 2.0 / 3.0).abs() < 1e-15);
        assert!(bernoulli_ssq_stationary(0.5, 0.5).is_err());

        let a = BoundedPmf::bernoulli(0.4).unwrap();
        let s = BoundedPmf::bernoulli(0.5).unwrap();
        let k = 200;
        let pi: Vec<f64> = (0..=k as u64).map(|i| law.pmf(i)).collect();
        let mut next = vec![0.0; k + 1];
        for (q, p) in pi.iter().enumerate() {
            for (av, pa) in a.iter() {
                for (sv, ps) in s.iter() {
                    let t = (q as i64 + i64::from(av) - i64::from(sv)).clamp(0, k as i64) as usize;
                    next[t] += p * pa * ps;
                }
            }
        }
        for q in 0..k {
            assert!((next[q] - pi[q]).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn generic_ssq_solver_matches_bernoulli() {
        let a = BoundedPmf::bernoulli(0.3).unwrap();
        let s = BoundedPmf::bernoulli(0.6).unwrap();
        let law = bernoulli_ssq_stationary(0.3, 0.6).unwrap();
        let d = ssq_stationary(&a, &s, 1e-14, 1e-15).unwrap();
        for k in 0..30 {
            assert!((d.prob(k) - law.pmf(k as u64)).abs() < 1e-12, "k={k}");
        }
        let root = cramer_root(&a, &s).unwrap().unwrap();
        assert!((root - law.decay_rate()).abs() < 1e-12);
    }

    #[test]
    fn unused_service_mean_is_eps_mu() {
        let a = BoundedPmf::bernoulli(0.4).unwrap();
        let s = BoundedPmf::bernoulli(0.5).unwrap();
        let d = bernoulli_ssq_stationary(0.4, 0.5).unwrap().truncated(200);
        let eu = ssq_unused_service_mean(&d, &a, &s);
        assert!((eu - 0.1).abs() < 1e-12);
        assert!((ssq_unused_service_mgf(&d, &a, &s, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_up_increments_give_point_mass() {
        let one = BoundedPmf::point_mass(1);
        let two = BoundedPmf::point_mass(2);
        assert_eq!(cramer_root(&one, &two).unwrap(), None);
        let d = ssq_stationary(&one, &two, 1e-12, 1e-14).unwrap();
        assert_eq!(d.probs, vec![1.0]);
        assert!(cramer_root(&one, &one).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_normal_cdf(-5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
        for x in [0.1, 0.7, 1.9, 3.3, 6.0] {
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mmn_chain_conditional_laws() {
        let chain = MmnChain::solve(MmnSystem::new(2, 1.0, 0.5).unwrap(), 1e-14).unwrap();
        assert!((chain.p_q_eq_n() - 1.0 / 6.0).abs() < 1e-13);
        // pi_0 = pi_1 = 1/3, so r is 2 or 1 with equal conditional probability.
        let theta: f64 = 0.7;
        let expect = (theta.exp() + (2.0 * theta).exp()) / 2.0;
        assert!((chain.r_mgf_conditional(theta) - expect).abs() < 1e-13);
        let chain = MmnChain::solve(MmnSystem::new(5, 1.0, 0.2).unwrap(), 1e-14).unwrap();
        for k in 1..=50 {
            let geo = 0.2 * 0.8f64.powi(k as i32 - 1);
            assert!((chain.w_pmf_conditional(k) - geo).abs() < 1e-12);
        }
    }
}
