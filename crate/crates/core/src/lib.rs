//! Simulation of stochastic differential equations driven by a time-changed
//! Brownian motion, where the time change is the inverse of a stable or
//! exponentially tempered stable subordinator.
//!
//! The approximation of the time-changed solution is the composition of two
//! discretizations sharing a common step size `delta`:
//!
//! * [`sde::euler_maruyama`] solves the parent Ito SDE on the equidistant
//!   grid `{0, delta, 2*delta, ...}`;
//! * [`timechange::build_time_change`] turns a simulated subordinator path
//!   into a step-function approximation of the inverse subordinator.
//!
//! [`solver::simulate_time_changed`] composes the two, and [`harness`]
//! estimates strong and weak convergence orders of the composed scheme by
//! coupling the approximation with a near-exact solution driven by the same
//! noise.
//!
//! All randomness flows through explicit [`rng::RandomStream`] values, so
//! every simulation is reproducible from a single seed regardless of thread
//! count.

pub mod error;
pub mod harness;
pub mod rng;
pub mod sde;
pub mod solver;
pub mod subordinator;
pub mod timechange;

pub use error::{Error, Result};
