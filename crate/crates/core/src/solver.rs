//! Composition of the Euler-Maruyama solution with the discretized inverse
//! subordinator, producing the approximation of the time-changed SDE
//! solution on `[0, T]`, plus a coupled near-exact solution for error
//! studies.
//!
//! Simulation of one path:
//!
//! 1. simulate the subordinator on `{0, delta, 2 delta, ...}` until the
//!    stopping index `N` with `D(N delta) <= T < D((N+1) delta)`;
//! 2. run Euler-Maruyama on the grid `{0, delta, ..., N delta}`;
//! 3. set `Y_delta(t) = X_delta(n delta)` for
//!    `t in [D(n delta), D((n+1) delta))` and `Y_delta(T) = X_delta(N delta)`.
//!
//! The Brownian motion and the subordinator are driven by disjoint
//! substreams of one parent stream, realizing the independence the scheme
//! assumes. Composition is done on integer level indices, never on float
//! multiples of `delta`.

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::sde::{euler_maruyama, CoefficientField, CoefficientPreset, EulerPath};
use crate::subordinator::SubordinatorSpec;
use crate::timechange::{build_time_change, TimeChangePath};

/// Substream label for the subordinator noise.
pub const STREAM_SUBORDINATOR: u64 = 0;
/// Substream label for the Brownian noise.
pub const STREAM_BROWNIAN: u64 = 1;

/// One simulated path of the time-changed approximation.
#[derive(Debug, Clone)]
pub struct TimeChangedPath {
    delta: f64,
    horizon: f64,
    euler: EulerPath,
    time_change: TimeChangePath,
    sample_times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TimeChangedPath {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The parent-scheme path `X_delta` on `{0, ..., N delta}`.
    pub fn euler(&self) -> &EulerPath {
        &self.euler
    }

    /// The discretized inverse subordinator `E_delta`.
    pub fn time_change(&self) -> &TimeChangePath {
        &self.time_change
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    /// `Y_delta(sample_times[k])`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `Y_delta(T) = X_delta(N delta)`.
    pub fn terminal_value(&self) -> &[f64] {
        &self.euler.grid_values()[self.time_change.stop_index()]
    }
}

/// Simulates one path of the time-changed approximation, evaluated at the
/// given sorted sample times in `[0, horizon]`.
pub fn simulate_time_changed(
    spec: &SubordinatorSpec,
    coeffs: &CoefficientField,
    y0: &[f64],
    delta: f64,
    horizon: f64,
    sample_times: &[f64],
    rng: &RandomStream,
) -> Result<TimeChangedPath> {
    if !sample_times.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::domain("sample times must be sorted"));
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        if first < 0.0 || last > horizon {
            return Err(Error::domain(format!(
                "sample times must lie in [0, {horizon}]"
            )));
        }
    }

    let mut sub_rng = rng.substream(STREAM_SUBORDINATOR);
    let mut brown_rng = rng.substream(STREAM_BROWNIAN);

    let path = spec.simulate_path_until(delta, horizon, &mut sub_rng)?;
    let stop_index = path.stop_index();
    let time_change = build_time_change(path);
    let euler = euler_maruyama(coeffs, y0, delta, stop_index, &mut brown_rng)?;

    let values = sample_times
        .iter()
        .map(|&t| {
            let level = time_change.evaluate_index(t)?;
            Ok(euler.grid_values()[level].clone())
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TimeChangedPath {
        delta,
        horizon,
        euler,
        time_change,
        sample_times: sample_times.to_vec(),
        values,
    })
}

/// A coupled realization of the approximation and the near-exact solution,
/// both driven by the same Brownian increments and subordinator path.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    /// `X_delta(E_delta(T)) = X_delta(N delta)`.
    pub approx_terminal: Vec<f64>,
    /// `X(E_delta(T))` from the preset's closed-form parent solution.
    pub near_exact_terminal: Vec<f64>,
    /// `max_{0 <= n <= N} |X(n delta) - X_delta(n delta)|`.
    pub sup_grid_error: f64,
    /// The stopping index `N`.
    pub stop_index: usize,
}

/// Simulates one coupled realization for a preset with an exact parent
/// solution.
pub fn simulate_coupled(
    spec: &SubordinatorSpec,
    preset: &CoefficientPreset,
    y0: &[f64],
    delta: f64,
    horizon: f64,
    rng: &RandomStream,
) -> Result<CoupledRun> {
    if !preset.has_exact_oracle(y0) {
        return Err(Error::Unsupported(format!(
            "preset '{}' with y0 = {y0:?} has no exact solution oracle",
            preset.id()
        )));
    }
    let coeffs = preset.coefficients()?;

    let mut sub_rng = rng.substream(STREAM_SUBORDINATOR);
    let mut brown_rng = rng.substream(STREAM_BROWNIAN);

    let path = spec.simulate_path_until(delta, horizon, &mut sub_rng)?;
    let stop_index = path.stop_index();
    let euler = euler_maruyama(&coeffs, y0, delta, stop_index, &mut brown_rng)?;
    let brownian = euler.brownian_component(0);

    let mut sup_grid_error: f64 = 0.0;
    for n in 0..=stop_index {
        let exact = preset.exact_at(y0, &brownian, delta, n)?;
        let diff = (exact - euler.grid_values()[n][0]).abs();
        sup_grid_error = sup_grid_error.max(diff);
    }

    let near_exact = preset.exact_at(y0, &brownian, delta, stop_index)?;
    Ok(CoupledRun {
        approx_terminal: euler.grid_values()[stop_index].clone(),
        near_exact_terminal: vec![near_exact],
        sup_grid_error,
        stop_index,
    })
}

/// Terminal pair `(X_delta(E_delta(T)), X(E_delta(T)))` of one coupled
/// realization.
pub fn simulate_coupled_pair(
    spec: &SubordinatorSpec,
    preset: &CoefficientPreset,
    y0: &[f64],
    delta: f64,
    horizon: f64,
    rng: &RandomStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let run = simulate_coupled(spec, preset, y0, delta, horizon, rng)?;
    Ok((run.approx_terminal, run.near_exact_terminal))
}
