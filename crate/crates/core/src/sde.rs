//! Coefficient fields and the Euler-Maruyama scheme for the parent Ito SDE
//! on an equidistant grid, plus the closed-form geometric Brownian motion
//! solution used as a coupling oracle.
//!
//! Only grid values are produced; no continuous interpolation is stored,
//! since downstream composition with the discretized time change consumes
//! grid values exclusively.

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::sync::Arc;

type Field = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Drift and diffusion coefficients of an Ito SDE together with their
/// declared regularity metadata.
///
/// The constants `lipschitz_k` and `holder_gamma` are user-declared
/// hypotheses, spot-checked on a fixed sample of points at construction
/// time as a diagnostic; they are not verified symbolically.
#[derive(Clone)]
pub struct CoefficientField {
    dim_state: usize,
    dim_noise: usize,
    drift: Field,
    diffusion: Field,
    lipschitz_k: f64,
    holder_gamma: f64,
    autonomous: bool,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim_state", &self.dim_state)
            .field("dim_noise", &self.dim_noise)
            .field("lipschitz_k", &self.lipschitz_k)
            .field("holder_gamma", &self.holder_gamma)
            .field("autonomous", &self.autonomous)
            .finish_non_exhaustive()
    }
}

impl CoefficientField {
    /// Builds a coefficient field, checking output shapes and spot-checking
    /// the declared Lipschitz and linear-growth constants on a fixed set of
    /// probe points.
    pub fn new(
        dim_state: usize,
        dim_noise: usize,
        drift: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        diffusion: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        lipschitz_k: f64,
        holder_gamma: f64,
        autonomous: bool,
    ) -> Result<Self> {
        if dim_state == 0 || dim_noise == 0 {
            return Err(Error::domain("dimensions must be positive"));
        }
        if !(lipschitz_k > 0.0 && lipschitz_k.is_finite()) {
            return Err(Error::domain(format!(
                "lipschitz_k must be finite and > 0, got {lipschitz_k}"
            )));
        }
        if !(holder_gamma > 0.0 && holder_gamma.is_finite()) {
            return Err(Error::domain(format!(
                "holder_gamma must be finite and > 0, got {holder_gamma}"
            )));
        }
        let field = Self {
            dim_state,
            dim_noise,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            lipschitz_k,
            holder_gamma,
            autonomous,
        };
        field.spot_check()?;
        Ok(field)
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_noise(&self) -> usize {
        self.dim_noise
    }

    pub fn lipschitz_k(&self) -> f64 {
        self.lipschitz_k
    }

    pub fn holder_gamma(&self) -> f64 {
        self.holder_gamma
    }

    pub fn autonomous(&self) -> bool {
        self.autonomous
    }

    /// `b(t, x)`, validated to have length `dim_state`.
    pub fn drift_at(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let b = (self.drift)(t, x);
        if b.len() != self.dim_state {
            return Err(Error::domain(format!(
                "drift returned {} components, expected {}",
                b.len(),
                self.dim_state
            )));
        }
        Ok(b)
    }

    /// `sigma(t, x)` as a row-major `dim_state x dim_noise` matrix.
    pub fn diffusion_at(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let s = (self.diffusion)(t, x);
        if s.len() != self.dim_state * self.dim_noise {
            return Err(Error::domain(format!(
                "diffusion returned {} entries, expected {} x {}",
                s.len(),
                self.dim_state,
                self.dim_noise
            )));
        }
        Ok(s)
    }

    /// Diagnostic check of the declared regularity on a deterministic sample
    /// of points: Lipschitz continuity in `x` and linear growth, both with
    /// constant `lipschitz_k`.
    fn spot_check(&self) -> Result<()> {
        let mut probe = RandomStream::from_seed(0x636f_6566); // fixed probe stream
        let draw_point = |rng: &mut RandomStream| -> Vec<f64> {
            (0..self.dim_state)
                .map(|_| rng.random::<f64>() * 6.0 - 3.0)
                .collect()
        };
        let slack = 1e-9;
        for _ in 0..16 {
            let t = probe.random::<f64>() * 2.0;
            let x = draw_point(&mut probe);
            let y = draw_point(&mut probe);
            let bx = self.drift_at(t, &x)?;
            let by = self.drift_at(t, &y)?;
            let sx = self.diffusion_at(t, &x)?;
            let sy = self.diffusion_at(t, &y)?;

            let dist = norm(&sub(&x, &y));
            let coeff_dist = norm(&sub(&bx, &by)) + norm(&sub(&sx, &sy));
            if coeff_dist > self.lipschitz_k * dist * (1.0 + slack) + slack {
                return Err(Error::domain(format!(
                    "declared Lipschitz constant {} violated: coefficient \
                     distance {coeff_dist} > K * {dist} at t = {t}",
                    self.lipschitz_k
                )));
            }

            let growth = norm(&bx) + norm(&sx);
            let bound = self.lipschitz_k * (1.0 + norm(&x));
            if growth > bound * (1.0 + slack) + slack {
                return Err(Error::domain(format!(
                    "declared growth constant {} violated: |b| + |sigma| = \
                     {growth} > {bound} at t = {t}",
                    self.lipschitz_k
                )));
            }
        }
        Ok(())
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euler-Maruyama grid values together with the cumulative Brownian path
/// that drove them, retained for coupling with exact solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerPath {
    delta: f64,
    grid_values: Vec<Vec<f64>>,
    brownian_cumulative: Vec<Vec<f64>>,
}

impl EulerPath {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `X_delta(0), X_delta(delta), ..., X_delta(n delta)`.
    pub fn grid_values(&self) -> &[Vec<f64>] {
        &self.grid_values
    }

    /// `B(0), B(delta), ..., B(n delta)`.
    pub fn brownian_cumulative(&self) -> &[Vec<f64>] {
        &self.brownian_cumulative
    }

    /// One scalar component of the cumulative Brownian path.
    pub fn brownian_component(&self, j: usize) -> Vec<f64> {
        self.brownian_cumulative.iter().map(|b| b[j]).collect()
    }
}

/// Runs the Euler-Maruyama scheme
///
/// ```text
/// X(tau_{n+1}) = X(tau_n) + b(tau_n, X(tau_n)) delta
///                         + sigma(tau_n, X(tau_n)) (B(tau_{n+1}) - B(tau_n))
/// ```
///
/// on the grid `tau_n = n delta`, `n = 0..n_steps`. Brownian increments are
/// i.i.d. Gaussian with covariance `delta * I`, drawn from the stream with
/// the rand_distr ziggurat sampler.
pub fn euler_maruyama(
    coeffs: &CoefficientField,
    y0: &[f64],
    delta: f64,
    n_steps: usize,
    rng: &mut RandomStream,
) -> Result<EulerPath> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "step delta must lie in (0, 1), got {delta}"
        )));
    }
    if y0.len() != coeffs.dim_state() {
        return Err(Error::domain(format!(
            "initial value has {} components, expected {}",
            y0.len(),
            coeffs.dim_state()
        )));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(Error::domain("initial value must be finite"));
    }

    let d = coeffs.dim_state();
    let m = coeffs.dim_noise();
    let sqrt_delta = delta.sqrt();

    let mut grid_values = Vec::with_capacity(n_steps + 1);
    let mut brownian = Vec::with_capacity(n_steps + 1);
    grid_values.push(y0.to_vec());
    brownian.push(vec![0.0; m]);

    let mut x = y0.to_vec();
    let mut b_cum = vec![0.0; m];
    for n in 0..n_steps {
        let t = n as f64 * delta;
        let b = coeffs.drift_at(t, &x)?;
        let sigma = coeffs.diffusion_at(t, &x)?;
        let db: Vec<f64> = (0..m)
            .map(|_| sqrt_delta * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for i in 0..d {
            let mut diffusion_term = 0.0;
            for j in 0..m {
                diffusion_term += sigma[i * m + j] * db[j];
            }
            x[i] += b[i] * delta + diffusion_term;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric(format!(
                "non-finite state after Euler step {}",
                n + 1
            )));
        }
        for j in 0..m {
            b_cum[j] += db[j];
        }
        grid_values.push(x.clone());
        brownian.push(b_cum.clone());
    }

    Ok(EulerPath {
        delta,
        grid_values,
        brownian_cumulative: brownian,
    })
}

/// Exact geometric Brownian motion solution `exp(B(i delta) - i delta / 2)`
/// at grid index `i`, for the scalar SDE `dX = X dB`, `X(0) = 1`.
///
/// Passing the cumulative Brownian values of an [`EulerPath`] couples the
/// exact solution to the scheme pathwise at every grid point.
pub fn gbm_exact(brownian_cumulative: &[f64], delta: f64, index: usize) -> Result<f64> {
    if index >= brownian_cumulative.len() {
        return Err(Error::domain(format!(
            "index {index} out of range for a path of {} grid values",
            brownian_cumulative.len()
        )));
    }
    let t = index as f64 * delta;
    Ok((brownian_cumulative[index] - 0.5 * t).exp())
}

/// Named coefficient sets referencable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientPreset {
    /// `b = 0`, `sigma(x) = x`; exact solution `exp(B(t) - t/2)` for
    /// `y0 = 1`.
    Gbm,
    /// `b(x) = mu x`, `sigma(x) = x`.
    LinearDriftGbm { mu: f64 },
    /// `b(x) = theta (mu - x)`, `sigma = const`.
    OrnsteinUhlenbeck { theta: f64, mu: f64, sigma: f64 },
    /// `b = 0`, `sigma = 0`; the exact solution is the constant `y0`.
    Constant,
}

impl CoefficientPreset {
    pub fn id(&self) -> &'static str {
        match self {
            CoefficientPreset::Gbm => "gbm",
            CoefficientPreset::LinearDriftGbm { .. } => "linear-drift-gbm",
            CoefficientPreset::OrnsteinUhlenbeck { .. } => "ou",
            CoefficientPreset::Constant => "constant",
        }
    }

    /// Instantiates the scalar coefficient field (`d = m = 1`).
    pub fn coefficients(&self) -> Result<CoefficientField> {
        match *self {
            CoefficientPreset::Gbm => CoefficientField::new(
                1,
                1,
                |_, _| vec![0.0],
                |_, x| vec![x[0]],
                1.0,
                1.0,
                true,
            ),
            CoefficientPreset::LinearDriftGbm { mu } => {
                if !mu.is_finite() {
                    return Err(Error::domain("mu must be finite"));
                }
                CoefficientField::new(
                    1,
                    1,
                    move |_, x| vec![mu * x[0]],
                    |_, x| vec![x[0]],
                    mu.abs() + 1.0,
                    1.0,
                    true,
                )
            }
            CoefficientPreset::OrnsteinUhlenbeck { theta, mu, sigma } => {
                if !(theta.is_finite() && mu.is_finite() && sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::domain(
                        "ou parameters must be finite with sigma >= 0",
                    ));
                }
                let k = theta.abs() * (1.0 + mu.abs()) + sigma + 1.0;
                CoefficientField::new(
                    1,
                    1,
                    move |_, x| vec![theta * (mu - x[0])],
                    move |_, _| vec![sigma],
                    k,
                    1.0,
                    true,
                )
            }
            CoefficientPreset::Constant => CoefficientField::new(
                1,
                1,
                |_, _| vec![0.0],
                |_, _| vec![0.0],
                1.0,
                1.0,
                true,
            ),
        }
    }

    /// Default initial value for the preset.
    pub fn default_initial(&self) -> Vec<f64> {
        match self {
            CoefficientPreset::OrnsteinUhlenbeck { mu, .. } => vec![*mu],
            _ => vec![1.0],
        }
    }

    /// Whether a closed-form parent solution coupled to the Brownian path is
    /// available for this preset and initial value.
    pub fn has_exact_oracle(&self, y0: &[f64]) -> bool {
        match self {
            CoefficientPreset::Gbm => y0 == [1.0],
            CoefficientPreset::Constant => true,
            _ => false,
        }
    }

    /// The exact parent solution at grid `index`, coupled to the given
    /// cumulative Brownian path.
    pub fn exact_at(
        &self,
        y0: &[f64],
        brownian_cumulative: &[f64],
        delta: f64,
        index: usize,
    ) -> Result<f64> {
        match self {
            CoefficientPreset::Gbm if y0 == [1.0] => gbm_exact(brownian_cumulative, delta, index),
            CoefficientPreset::Constant => {
                if index >= brownian_cumulative.len() {
                    return Err(Error::domain(format!("index {index} out of range")));
                }
                Ok(y0[0])
            }
            _ => Err(Error::Unsupported(format!(
                "preset '{}' with y0 = {y0:?} has no exact solution oracle",
                self.id()
            ))),
        }
    }
}
