//! Online linear programming with stochastic replenishment: input models,
//! dual-price policies, LP benchmarks and a Monte-Carlo harness.

pub mod config;
pub mod dual;
pub mod harness;
pub mod lp;
pub mod model;
pub mod policies;
pub mod rng;
