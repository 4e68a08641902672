use serde::Serialize;

use super::GridEstimate;
use crate::error::{Error, Result};

/// Fitted exponential decay rate of a tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Fits `-log P(X > x) = a + slope * x` over the grid points inside `window`
/// (inclusive) with a positive estimate.
///
/// Each point is weighted by `(p / se)^2`, the inverse delta-method variance
/// of `-log p`. When no point carries a standard error (exact inputs) the
/// fit is ordinary least squares and the slope error comes from the residuals.
pub fn estimate_ld_slope(tail: &[GridEstimate], window: (f64, f64)) -> Result<LdFit> {
    let pts: Vec<(f64, f64, f64)> = tail
        .iter()
        .filter(|g| g.at >= window.0 && g.at <= window.1 && g.estimate.point > 0.0)
        .map(|g| (g.at, -g.estimate.point.ln(), g.estimate.stderr / g.estimate.point))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Estimation(format!(
            "{} positive tail points in [{}, {}], need at least 4",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let weighted = pts.iter().any(|p| p.2 > 0.0);
    let floor = pts.iter().map(|p| p.2).filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let weight = |se: f64| if weighted { 1.0 / se.max(floor).powi(2) } else { 1.0 };

    let sw: f64 = pts.iter().map(|p| weight(p.2)).sum();
    let mx = pts.iter().map(|p| weight(p.2) * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| weight(p.2) * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| weight(p.2) * (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Estimation("tail grid points in the window do not vary".into()));
    }
    let sxy: f64 = pts.iter().map(|p| weight(p.2) * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let intercept = my - slope * mx;
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (pts.len() as f64 - 2.0) / sxx).sqrt()
    };
    Ok(LdFit {
        slope,
        stderr,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::mm1_scaled_tail;
    use crate::sim::SimEstimate;

    fn exact_grid(xs: &[f64], f: impl Fn(f64) -> f64) -> Vec<GridEstimate> {
        xs.iter()
            .map(|&x| GridEstimate {
                at: x,
                estimate: SimEstimate::exact(f(x)),
            })
            .collect()
    }

    #[test]
    fn pure_exponential() {
        let xs: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
        let fit = estimate_ld_slope(&exact_grid(&xs, |x| (-2.0 * x).exp()), (0.0, 10.0)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        assert_eq!(fit.points, 10);
    }

    #[test]
    fn mm1_tails_give_theta() {
        let xs: Vec<f64> = (0..=24).map(|i| 2.0 + 0.25 * i as f64).collect();
        let fit = estimate_ld_slope(&exact_grid(&xs, |x| mm1_scaled_tail(0.2, x).unwrap()), (2.0, 8.0)).unwrap();
        assert!((fit.slope / 1.115_72 - 1.0).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn weighted_fit_uses_standard_errors() {
        let mut g = exact_grid(&[1.0, 2.0, 3.0, 4.0], |x| (-x).exp());
        for p in &mut g {
            p.estimate = SimEstimate::from_batches(&[p.estimate.point * 0.99, p.estimate.point * 1.01]);
        }
        let fit = estimate_ld_slope(&g, (1.0, 4.0)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-9);
        assert!(fit.stderr > 0.0);
    }

    #[test]
    fn too_few_points() {
        let g = exact_grid(&[1.0, 2.0, 3.0, 4.0], |x| if x > 3.0 { 0.0 } else { (-x).exp() });
        assert!(matches!(estimate_ld_slope(&g, (1.0, 4.0)), Err(Error::Estimation(_))));
        assert!(estimate_ld_slope(&[], (0.0, 1.0)).is_err());
    }
}
