//! Discretized inverse subordinators and analytic oracles for the inverse
//! stable case.
//!
//! Given a subordinator path on the grid `{0, delta, ...}`, the discretized
//! inverse `E_delta` is the nondecreasing right-continuous step function
//!
//! ```text
//! E_delta(t) = n * delta   whenever   t in [D(n delta), D((n+1) delta)),
//! ```
//!
//! which sandwiches the exact inverse: `E(t) - delta <= E_delta(t) <= E(t)`
//! pathwise, with equality `E_delta(D(n delta)) = E(D(n delta)) = n delta`
//! at the grid jump times.

use crate::error::{Error, Result};
use crate::subordinator::SubordinatorPath;
use statrs::function::gamma::ln_gamma;

/// Relative term threshold for truncating the Mittag-Leffler series.
const ML_REL_TOL: f64 = 1e-14;
/// Series length cap before reporting non-convergence.
const ML_MAX_TERMS: usize = 10_000;
/// Largest exponent passed to `exp` by the overflow guard.
const ML_EXP_GUARD: f64 = 700.0;

/// Step-function approximation of an inverse subordinator on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangePath {
    delta: f64,
    jump_times: Vec<f64>,
    horizon: f64,
    stop_index: usize,
}

/// Wraps a simulated subordinator path as the step function `E_delta`.
pub fn build_time_change(path: SubordinatorPath) -> TimeChangePath {
    let delta = path.delta();
    let horizon = path.horizon();
    let stop_index = path.stop_index();
    TimeChangePath {
        delta,
        jump_times: path.values().to_vec(),
        horizon,
        stop_index,
    }
}

impl TimeChangePath {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The jump times `D(0), D(delta), ..., D((N+1) delta)`.
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The stopping index `N`; `E_delta(horizon) = N * delta`.
    pub fn stop_index(&self) -> usize {
        self.stop_index
    }

    /// The level index `n` with `t in [D(n delta), D((n+1) delta))`.
    ///
    /// A `t` equal to a jump time maps to the new level (right continuity).
    pub fn evaluate_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        // Largest n with D(n delta) <= t; jump_times is strictly increasing
        // and t <= horizon < D((N+1) delta), so n <= N.
        Ok(self.jump_times.partition_point(|&d| d <= t) - 1)
    }

    /// `E_delta(t) = n * delta` for the unique bracketing index `n`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.evaluate_index(t)? as f64 * self.delta)
    }

    /// `E_delta(horizon) = N * delta`.
    pub fn terminal_level(&self) -> f64 {
        self.stop_index as f64 * self.delta
    }
}

/// `E[E_beta(t)^n] = n! t^{n beta} / Gamma(n beta + 1)` for the inverse of a
/// stable subordinator with `psi(s) = s^beta`.
pub fn stable_inverse_moment(beta: f64, n: u32, t: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("moment order n must be >= 1"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!(
            "time t must be finite and >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let nf = f64::from(n);
    let log_value = ln_gamma(nf + 1.0) - ln_gamma(nf * beta + 1.0) + nf * beta * t.ln();
    Ok(log_value.exp())
}

/// Mittag-Leffler function `E_beta(z) = sum_n z^n / Gamma(n beta + 1)` by
/// truncated power series.
///
/// Terms are accumulated until `|term| < 1e-14 |partial sum|` (at most
/// 10^4 terms). The argument must stay below an overflow guard: for `z > 0`
/// the value grows like `exp(z^{1/beta})/beta`.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    if !z.is_finite() {
        return Err(Error::domain(format!("argument must be finite, got {z}")));
    }
    if z.abs() > 1.0 && z.abs().powf(1.0 / beta) > ML_EXP_GUARD {
        return Err(Error::domain(format!(
            "argument {z} exceeds the overflow guard for beta = {beta}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let log_abs_z = z.abs().ln();
    let negative = z < 0.0;
    let mut sum = 1.0;
    let mut exp_term = 1.0;
    for n in 1..=ML_MAX_TERMS {
        let nf = n as f64;
        let term = if beta == 1.0 {
            // Gamma(n + 1) is exactly n!; the exact ratio z/n keeps the
            // alternating series accurate under cancellation.
            exp_term *= z / nf;
            exp_term
        } else {
            // Independent log-space evaluation; a running ratio would
            // compound the rounding of ln_gamma across terms.
            let magnitude = (nf * log_abs_z - ln_gamma(nf * beta + 1.0)).exp();
            if negative && n % 2 == 1 {
                -magnitude
            } else {
                magnitude
            }
        };
        sum += term;
        if term.abs() < ML_REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::numeric(format!(
        "Mittag-Leffler series did not converge within {ML_MAX_TERMS} terms \
         (beta = {beta}, z = {z})"
    )))
}
