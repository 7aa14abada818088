//! Stable and exponentially tempered stable subordinators: Laplace
//! exponents, exact increment sampling, and path simulation on an
//! equidistant grid.
//!
//! A subordinator `D` is a nondecreasing Levy process with
//! `E[exp(-s D(t))] = exp(-t psi(s))`, where
//! `psi(s) = a s + integral_0^inf (1 - exp(-s x)) nu(dx)`.
//! Both families implemented here have infinite Levy measure, so paths are
//! strictly increasing with infinitely many jumps.

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use rand::Rng;
use rand_distr::{Exp1, Open01};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Hard cap on the number of grid steps in a single path, so that a
/// misconfigured run fails with a resource error instead of exhausting
/// memory.
pub const MAX_PATH_STEPS: usize = 1_000_000_000;

/// Jump structure of the subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Levy measure proportional to `x^{-1-beta} dx`, normalized so that
    /// the jump part of the Laplace exponent is `scale * s^beta`.
    Stable,
    /// Levy measure `scale * exp(-kappa x) x^{-1-beta} dx`.
    TemperedStable,
}

/// Parametric description of a driftless or drifted subordinator with
/// infinite Levy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorSpec {
    family: Family,
    beta: f64,
    kappa: f64,
    drift: f64,
    scale: f64,
}

impl SubordinatorSpec {
    /// Stable subordinator with `psi(s) = s^beta` (unit scale, no drift).
    pub fn stable(beta: f64) -> Result<Self> {
        Self::new(Family::Stable, beta, 0.0, 0.0, 1.0)
    }

    /// Tempered stable subordinator with Levy measure
    /// `exp(-kappa x) x^{-1-beta} dx` (unit scale, no drift).
    pub fn tempered_stable(beta: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::TemperedStable, beta, kappa, 0.0, 1.0)
    }

    /// Fully parameterized constructor.
    pub fn new(family: Family, beta: f64, kappa: f64, drift: f64, scale: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::domain(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(Error::domain(format!(
                "drift must be finite and >= 0, got {drift}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "scale must be finite and > 0, got {scale}"
            )));
        }
        match family {
            Family::Stable if kappa != 0.0 => {
                return Err(Error::domain(format!(
                    "kappa must be 0 for the stable family, got {kappa}"
                )));
            }
            Family::TemperedStable if !(kappa > 0.0 && kappa.is_finite()) => {
                return Err(Error::domain(format!(
                    "kappa must be finite and > 0 for the tempered stable family, got {kappa}"
                )));
            }
            _ => {}
        }
        Ok(Self {
            family,
            beta,
            kappa,
            drift,
            scale,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Laplace exponent `psi(s)`.
    ///
    /// Stable: `psi(s) = drift * s + scale * s^beta`. Tempered stable:
    /// `psi(s) = drift * s + scale * Gamma(1-beta)/beta * ((s+kappa)^beta -
    /// kappa^beta)`, the closed form of the Levy integral
    /// `integral (1 - exp(-s x)) scale exp(-kappa x) x^{-1-beta} dx`.
    pub fn laplace_exponent(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::domain(format!(
                "laplace_exponent requires finite s >= 0, got {s}"
            )));
        }
        let jump = match self.family {
            Family::Stable => self.scale * s.powf(self.beta),
            Family::TemperedStable => {
                self.scale
                    * self.tempered_constant()
                    * ((s + self.kappa).powf(self.beta) - self.kappa.powf(self.beta))
            }
        };
        Ok(self.drift * s + jump)
    }

    /// `Gamma(1-beta)/beta`, the constant relating the tempered Levy density
    /// to its Laplace exponent.
    fn tempered_constant(&self) -> f64 {
        gamma(1.0 - self.beta) / self.beta
    }

    /// Coefficient `c` such that the jump part of an increment over `dt` is
    /// distributed (before tempering) as `(c * dt)^{1/beta} * S` with `S`
    /// a standard one-sided stable variate.
    fn stable_jump_coefficient(&self) -> f64 {
        match self.family {
            Family::Stable => self.scale,
            // Tilting a stable proposal with jump exponent c~ * s^beta by
            // exp(-kappa v) yields exactly the tempered increment law, with
            // c~ carrying the Gamma(1-beta)/beta normalization.
            Family::TemperedStable => self.scale * self.tempered_constant(),
        }
    }

    /// One draw distributed as `D(dt)`.
    pub fn sample_increment(&self, dt: f64, rng: &mut RandomStream) -> Result<f64> {
        self.sample_increment_counted(dt, rng).map(|(z, _)| z)
    }

    /// Like [`sample_increment`](Self::sample_increment), additionally
    /// reporting how many stable proposals the tempering rejection loop
    /// consumed (always 1 for the stable family).
    ///
    /// The mean proposal count is `exp(dt * c~ * kappa^beta)` with
    /// `c~ = scale * Gamma(1-beta)/beta`, close to 1 for small `dt`.
    pub fn sample_increment_counted(&self, dt: f64, rng: &mut RandomStream) -> Result<(f64, u64)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!(
                "increment horizon dt must be finite and > 0, got {dt}"
            )));
        }
        let unit = (self.stable_jump_coefficient() * dt).powf(1.0 / self.beta);
        let mut proposals: u64 = 0;
        let jump = loop {
            proposals += 1;
            let v = unit * sample_standard_stable(self.beta, rng);
            match self.family {
                Family::Stable => break v,
                Family::TemperedStable => {
                    // Exponential tilting: accept the stable proposal V with
                    // probability exp(-kappa V); the accepted draw has the
                    // tempered increment law.
                    let u: f64 = rng.sample(Open01);
                    if u <= (-self.kappa * v).exp() {
                        break v;
                    }
                }
            }
        };
        Ok((self.drift * dt + jump, proposals))
    }

    /// Simulates `D` on the grid `{0, delta, 2 delta, ...}` until the first
    /// value exceeding `horizon`.
    ///
    /// The returned path holds `D(0), D(delta), ..., D((N+1) delta)` with
    /// the stopping index `N` satisfying
    /// `D(N delta) <= horizon < D((N+1) delta)`.
    pub fn simulate_path_until(
        &self,
        delta: f64,
        horizon: f64,
        rng: &mut RandomStream,
    ) -> Result<SubordinatorPath> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!(
                "step delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!(
                "horizon must be finite and > 0, got {horizon}"
            )));
        }
        let mut values = vec![0.0];
        while *values.last().unwrap() <= horizon {
            if values.len() > MAX_PATH_STEPS {
                return Err(Error::Resource(format!(
                    "subordinator path exceeded {MAX_PATH_STEPS} steps before \
                     reaching horizon {horizon} (delta = {delta})"
                )));
            }
            let last = *values.last().unwrap();
            // The jump part is a.s. strictly positive; redraw on the
            // measure-zero event that rounding produces a non-increase.
            let mut next = last + self.sample_increment(delta, rng)?;
            let mut retries = 0;
            while next <= last {
                retries += 1;
                if retries > 1000 {
                    return Err(Error::numeric(
                        "subordinator increment failed to strictly increase after 1000 redraws",
                    ));
                }
                next = last + self.sample_increment(delta, rng)?;
            }
            values.push(next);
        }
        let stop_index = values.len() - 2;
        Ok(SubordinatorPath {
            delta,
            values,
            horizon,
            stop_index,
        })
    }
}

/// Draws a standard one-sided stable variate `S` with
/// `E[exp(-s S)] = exp(-s^beta)`.
///
/// Kanter's representation: with `U` uniform on `(0, pi)` and `W` standard
/// exponential,
///
/// ```text
/// S = sin(beta U) / sin(U)^{1/beta} * ( sin((1-beta) U) / W )^{(1-beta)/beta}
/// ```
///
/// The representation is exact (no discretization bias). Non-finite values
/// from float overflow deep in the tails are rejected and redrawn.
fn sample_standard_stable(beta: f64, rng: &mut RandomStream) -> f64 {
    loop {
        let u: f64 = {
            let raw: f64 = rng.sample(Open01);
            raw * PI
        };
        let w: f64 = rng.sample(Exp1);
        let s1 = (beta * u).sin() / u.sin().powf(1.0 / beta);
        let s2 = (((1.0 - beta) * u).sin() / w).powf((1.0 - beta) / beta);
        let s = s1 * s2;
        if s.is_finite() && s > 0.0 {
            return s;
        }
    }
}

/// Values of a subordinator on an equidistant grid, extended one step past
/// the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    delta: f64,
    values: Vec<f64>,
    horizon: f64,
    stop_index: usize,
}

impl SubordinatorPath {
    /// Builds a path from explicit grid values, validating the invariants:
    /// `values[0] = 0`, strict increase, and
    /// `values[N] <= horizon < values[N+1]` for `N = values.len() - 2`.
    pub fn new(delta: f64, values: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!(
                "step delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!(
                "horizon must be finite and > 0, got {horizon}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::domain(
                "a subordinator path needs at least the origin and one increment",
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::domain(format!(
                "subordinator paths start at 0, got {}",
                values[0]
            )));
        }
        if !values.windows(2).all(|w| w[1] > w[0] && w[1].is_finite()) {
            return Err(Error::domain(
                "subordinator path values must be finite and strictly increasing",
            ));
        }
        let stop_index = values.len() - 2;
        if !(values[stop_index] <= horizon && horizon < values[stop_index + 1]) {
            return Err(Error::domain(format!(
                "horizon {horizon} is not bracketed by the last two grid values \
                 ({} and {})",
                values[stop_index],
                values[stop_index + 1]
            )));
        }
        Ok(Self {
            delta,
            values,
            horizon,
            stop_index,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `D(0), D(delta), ..., D((N+1) delta)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The stopping index `N` with `D(N delta) <= horizon < D((N+1) delta)`.
    pub fn stop_index(&self) -> usize {
        self.stop_index
    }
}
