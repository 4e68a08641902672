//! Tail bounds, large-deviations rates and exact stationary formulas for
//! heavy-traffic queues, with the oracles and simulators used to check them.
//!
//! Three systems are covered:
//!
//! * join-the-shortest-queue with `n` exponential servers ([`bounds_jsq`], [`sim::simulate_jsq`]);
//! * the discrete-time single-server queue with bounded arrivals and service
//!   ([`bounds_ssq`], [`sim::simulate_ssq`]);
//! * the M/M/n queue in the many-server regimes ([`bounds_mmn`]).
//!
//! [`exact`] holds the ground-truth solvers (birth-death chains, geometric
//! laws, the normal CDF) that every bound is tested against.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds_jsq;
pub mod bounds_mmn;
pub mod bounds_ssq;
pub mod error;
pub mod exact;
pub mod model;
pub mod quadrature;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    classify_regime, diff_moments, BoundedPmf, DiffMoments, HtScaling, JsqSystem, MmnSystem,
    Regime, Side, SsqSystem, TailBound,
};
pub use sim::{SimConfig, SimEstimate};
