use queuetail_core::bounds_jsq::{jsq_tail_lower, jsq_tail_lower_geometric, jsq_tail_upper, ssc_condition, theta_n};
use queuetail_core::exact::{mm1_scaled_log_tail, mm1_scaled_tail, mm1_scaled_tail_strict};
use queuetail_core::sim::estimate_ld_slope;
use queuetail_core::sim::GridEstimate;
use queuetail_core::{JsqSystem, SimEstimate};

fn grid() -> Vec<f64> {
    (0..20).map(|i| 2.0 + 48.0 * f64::from(i) / 19.0).collect()
}

#[test]
fn single_server_upper_bound_dominates() {
    let sys = JsqSystem::new(1, 1.0, 3e-4).unwrap();
    assert!(ssc_condition(&sys));
    let upper = jsq_tail_upper(&sys);
    for x in grid() {
        assert!(upper.holds_at(x));
        assert!(mm1_scaled_tail_strict(3e-4, x).unwrap() <= upper.eval(x), "x={x}");
    }
}

#[test]
fn single_server_geometric_lower_bound_holds() {
    let sys = JsqSystem::new(1, 1.0, 3e-4).unwrap();
    let lower = jsq_tail_lower_geometric(&sys);
    for x in grid() {
        assert!(lower.eval(x) <= mm1_scaled_tail_strict(3e-4, x).unwrap() * (1.0 + 1e-12), "x={x}");
    }
}

#[test]
fn stated_lower_bound_exceeds_single_server_tail() {
    let sys = JsqSystem::new(1, 1.0, 3e-4).unwrap();
    let lower = jsq_tail_lower(&sys);
    let x = 10.0;
    assert!(lower.eval(x) > mm1_scaled_tail_strict(3e-4, x).unwrap());
    assert!(lower.eval(x) > mm1_scaled_tail(3e-4, x).unwrap());
}

#[test]
fn mm1_log_tail_slope_is_theta_n() {
    let eps = 0.2;
    let tail: Vec<GridEstimate> = (0..=12)
        .map(|i| {
            let x = 2.0 + 0.5 * f64::from(i);
            GridEstimate {
                at: x,
                estimate: SimEstimate::exact(mm1_scaled_tail(eps, x).unwrap()),
            }
        })
        .collect();
    let fit = estimate_ld_slope(&tail, (2.0, 8.0)).unwrap();
    let t = theta_n(eps).unwrap();
    assert!(((fit.slope - t) / t).abs() < 0.01, "slope {}", fit.slope);
    let far = mm1_scaled_log_tail(eps, 1000.0).unwrap();
    assert!((far / 1000.0 + t).abs() < 1e-12);
}
