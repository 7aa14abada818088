//! Monte Carlo convergence study: strong and weak terminal errors of the
//! time-changed scheme across a grid of step sizes, with least-squares
//! log2-log2 slope fits.
//!
//! For each step size, the study runs coupled realizations of the
//! approximation `X_delta(E_delta(T))` and the near-exact solution
//! `X(E_delta(T))` on shared noise, then estimates
//!
//! ```text
//! STERR(delta) = mean_i |X(E_delta(T)) - X_delta(E_delta(T))|
//! WKERR(delta) = |mean_i X(E_delta(T)) - mean_i X_delta(E_delta(T))|
//! ```
//!
//! Per-path seeds are derived from `(master_seed, delta index, path index)`,
//! and aggregation runs in path-index order, so reports are bit-identical
//! regardless of how many worker threads execute the path loop.

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::sde::{norm, CoefficientPreset};
use crate::solver::{simulate_coupled, CoupledRun};
use crate::subordinator::SubordinatorSpec;
use rayon::prelude::*;
use std::io::{self, Write};
use std::time::Duration;

/// Test function for the weak error. Extensible; the identity matches the
/// first-moment comparison of the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakFunction {
    Identity,
}

impl WeakFunction {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            WeakFunction::Identity => x.to_vec(),
        }
    }
}

/// Configuration of a convergence study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub spec: SubordinatorSpec,
    pub preset: CoefficientPreset,
    pub y0: Vec<f64>,
    pub horizon: f64,
    /// Step sizes, strictly decreasing.
    pub deltas: Vec<f64>,
    /// Coupled paths per step size.
    pub n_paths: usize,
    pub master_seed: u64,
    pub weak_function: WeakFunction,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::domain("deltas must be nonempty"));
        }
        if !self.deltas.iter().all(|&d| d > 0.0 && d < 1.0) {
            return Err(Error::domain("every delta must lie in (0, 1)"));
        }
        if !self.deltas.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::domain("deltas must be strictly decreasing"));
        }
        if self.n_paths < 2 {
            return Err(Error::domain("n_paths must be at least 2"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain(format!(
                "horizon must be finite and > 0, got {}",
                self.horizon
            )));
        }
        if !self.preset.has_exact_oracle(&self.y0) {
            return Err(Error::Unsupported(format!(
                "preset '{}' with y0 = {:?} has no exact solution oracle",
                self.preset.id(),
                self.y0
            )));
        }
        Ok(())
    }

    fn delta_index(&self, delta: f64) -> Result<usize> {
        self.deltas
            .iter()
            .position(|&d| d == delta)
            .ok_or_else(|| {
                Error::domain(format!("delta {delta} is not part of the study grid"))
            })
    }
}

/// One row of a convergence report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub delta: f64,
    pub sterr: f64,
    pub sterr_stderr: f64,
    pub wkerr: f64,
    pub wkerr_stderr: f64,
    /// Mean stopping index over the paths of this row.
    pub mean_stop_index: f64,
}

/// Slope and intercept of a least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Run metadata echoed into the report (not serialized to the CSV outputs,
/// which must be byte-stable across reruns).
#[derive(Debug, Clone)]
pub struct ReportMetadata {
    pub master_seed: u64,
    pub n_paths: usize,
    pub preset_id: &'static str,
    /// Debug rendering of the full study configuration.
    pub config_echo: String,
    pub elapsed: Duration,
}

/// Result of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// One row per configured delta, in configuration order.
    pub rows: Vec<ReportRow>,
    /// Fit of `log2 STERR` on `log2 delta`; `None` when fewer than two rows
    /// carry a positive error.
    pub strong_fit: Option<LineFit>,
    /// Fit of `log2 WKERR` on `log2 delta`.
    pub weak_fit: Option<LineFit>,
    pub metadata: ReportMetadata,
}

impl ConvergenceReport {
    /// Writes the per-delta rows as CSV with a fixed header and column
    /// order. Formatting is locale-independent.
    pub fn write_rows_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "delta,sterr,sterr_stderr,wkerr,wkerr_stderr,mean_N")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.delta,
                row.sterr,
                row.sterr_stderr,
                row.wkerr,
                row.wkerr_stderr,
                row.mean_stop_index
            )?;
        }
        Ok(())
    }

    /// Writes the sidecar summary: slopes, intercepts, and the seed.
    /// Undefined fits are written as `NaN`.
    pub fn write_summary_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "strong_slope,strong_intercept,weak_slope,weak_intercept,seed"
        )?;
        let (ss, si) = fit_fields(self.strong_fit);
        let (ws, wi) = fit_fields(self.weak_fit);
        writeln!(w, "{ss},{si},{ws},{wi},{}", self.metadata.master_seed)
    }
}

fn fit_fields(fit: Option<LineFit>) -> (f64, f64) {
    match fit {
        Some(f) => (f.slope, f.intercept),
        None => (f64::NAN, f64::NAN),
    }
}

/// Runs the coupled paths for one step size. Each path gets the stream
/// `root -> delta_index -> path_index`, so results do not depend on the
/// parallel schedule.
fn coupled_samples(config: &StudyConfig, delta_index: usize) -> Result<Vec<CoupledRun>> {
    let delta = config.deltas[delta_index];
    let root = RandomStream::from_seed(config.master_seed).substream(delta_index as u64);
    (0..config.n_paths)
        .into_par_iter()
        .map(|path_index| {
            let rng = root.substream(path_index as u64);
            simulate_coupled(
                &config.spec,
                &config.preset,
                &config.y0,
                delta,
                config.horizon,
                &rng,
            )
            .map_err(|e| {
                Error::Numeric(format!(
                    "path {path_index} at delta {delta} failed: {e}"
                ))
            })
        })
        .collect()
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn strong_from_samples(samples: &[CoupledRun]) -> (f64, f64) {
    let abs_errors: Vec<f64> = samples
        .iter()
        .map(|run| norm(&sub(&run.near_exact_terminal, &run.approx_terminal)))
        .collect();
    mean_and_stderr(&abs_errors)
}

fn weak_from_samples(samples: &[CoupledRun], g: WeakFunction) -> (f64, f64) {
    let diffs: Vec<Vec<f64>> = samples
        .iter()
        .map(|run| {
            sub(
                &g.apply(&run.near_exact_terminal),
                &g.apply(&run.approx_terminal),
            )
        })
        .collect();
    let d = diffs[0].len();
    let n = diffs.len() as f64;
    let mut mean = vec![0.0; d];
    for diff in &diffs {
        for (m, v) in mean.iter_mut().zip(diff) {
            *m += v / n;
        }
    }
    // Standard error per component, combined as a Euclidean magnitude.
    let mut se_sq = 0.0;
    if diffs.len() > 1 {
        for j in 0..d {
            let var = diffs
                .iter()
                .map(|diff| (diff[j] - mean[j]).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            se_sq += var / n;
        }
    }
    (norm(&mean), se_sq.sqrt())
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Mean absolute terminal difference between the near-exact solution and
/// the approximation over `n_paths` coupled pairs, with its standard error.
pub fn strong_error(config: &StudyConfig, delta: f64) -> Result<(f64, f64)> {
    config.validate()?;
    let samples = coupled_samples(config, config.delta_index(delta)?)?;
    Ok(strong_from_samples(&samples))
}

/// Absolute difference of terminal means over `n_paths` coupled pairs, with
/// a standard error for the underlying difference of means.
pub fn weak_error(config: &StudyConfig, delta: f64) -> Result<(f64, f64)> {
    config.validate()?;
    let samples = coupled_samples(config, config.delta_index(delta)?)?;
    Ok(weak_from_samples(&samples, config.weak_function))
}

/// Ordinary least squares of `log2(err)` on `log2(delta)`.
///
/// Points with a nonpositive error are excluded with a warning (a weak
/// error can vanish at small sample counts); at least two usable points
/// must remain.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::domain("need at least two points to fit a line"));
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(delta, err)| {
            if err > 0.0 {
                true
            } else {
                log::warn!("excluding nonpositive error {err} at delta {delta} from the fit");
                false
            }
        })
        .map(|&(delta, err)| (delta.log2(), err.log2()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::domain(
            "fewer than two positive errors; slope is undefined",
        ));
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = usable
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::domain("degenerate abscissae; slope is undefined"));
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: mean_y - slope * mean_x,
    })
}

/// Runs the full study: both errors on shared realizations for every step
/// size, then the two log2-log2 fits.
pub fn run_convergence_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let start = std::time::Instant::now();

    let mut rows = Vec::with_capacity(config.deltas.len());
    for (delta_index, &delta) in config.deltas.iter().enumerate() {
        let samples = coupled_samples(config, delta_index)?;
        let (sterr, sterr_stderr) = strong_from_samples(&samples);
        let (wkerr, wkerr_stderr) = weak_from_samples(&samples, config.weak_function);
        let mean_stop_index = samples
            .iter()
            .map(|run| run.stop_index as f64)
            .sum::<f64>()
            / samples.len() as f64;
        rows.push(ReportRow {
            delta,
            sterr,
            sterr_stderr,
            wkerr,
            wkerr_stderr,
            mean_stop_index,
        });
    }

    let strong_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.sterr)).collect();
    let weak_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.wkerr)).collect();
    let strong_fit = fit_loglog(&strong_points).ok();
    let weak_fit = fit_loglog(&weak_points).ok();

    Ok(ConvergenceReport {
        rows,
        strong_fit,
        weak_fit,
        metadata: ReportMetadata {
            master_seed: config.master_seed,
            n_paths: config.n_paths,
            preset_id: config.preset.id(),
            config_echo: format!("{config:?}"),
            elapsed: start.elapsed(),
        },
    })
}

/// Median of the per-path sup-over-grid coupling errors at one step size.
/// Used as a qualitative uniform-convergence diagnostic; no rate is
/// attached to it.
pub fn median_sup_error(config: &StudyConfig, delta: f64) -> Result<f64> {
    config.validate()?;
    let samples = coupled_samples(config, config.delta_index(delta)?)?;
    let mut sups: Vec<f64> = samples.iter().map(|run| run.sup_grid_error).collect();
    sups.sort_by(|a, b| a.total_cmp(b));
    let mid = sups.len() / 2;
    Ok(if sups.len() % 2 == 1 {
        sups[mid]
    } else {
        0.5 * (sups[mid - 1] + sups[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_spec() -> SubordinatorSpec {
        SubordinatorSpec::tempered_stable(0.95, 1.0).unwrap()
    }

    fn small_config() -> StudyConfig {
        // A stable time change with E[E(1)] near 1 keeps the coarse step
        // sizes well inside the nondegenerate regime for small path counts.
        StudyConfig {
            spec: SubordinatorSpec::stable(0.9).unwrap(),
            preset: CoefficientPreset::Gbm,
            y0: vec![1.0],
            horizon: 1.0,
            deltas: vec![0.0625, 0.015625, 0.00390625],
            n_paths: 60,
            master_seed: 9001,
            weak_function: WeakFunction::Identity,
        }
    }

    #[test]
    fn config_validation_catches_bad_grids() {
        let mut cfg = small_config();
        cfg.deltas = vec![];
        assert!(cfg.validate().is_err());

        let mut cfg = small_config();
        cfg.deltas = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());

        let mut cfg = small_config();
        cfg.n_paths = 1;
        assert!(cfg.validate().is_err());

        let mut cfg = small_config();
        cfg.preset = CoefficientPreset::OrnsteinUhlenbeck {
            theta: 1.0,
            mu: 0.0,
            sigma: 1.0,
        };
        cfg.y0 = vec![0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn degenerate_preset_yields_zero_errors_and_flagged_fits() {
        let cfg = StudyConfig {
            spec: paper_spec(),
            preset: CoefficientPreset::Constant,
            y0: vec![1.0],
            horizon: 1.0,
            deltas: vec![0.5],
            n_paths: 2,
            master_seed: 1,
            weak_function: WeakFunction::Identity,
        };
        let report = run_convergence_study(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].sterr, 0.0);
        assert_eq!(report.rows[0].wkerr, 0.0);
        assert!(report.strong_fit.is_none());
        assert!(report.weak_fit.is_none());
    }

    #[test]
    fn fit_recovers_an_exact_power_law() {
        let points: Vec<(f64, f64)> = [0.0625, 0.03125, 0.015625, 0.0078125]
            .iter()
            .map(|&d: &f64| (d, d.sqrt()))
            .collect();
        let fit = fit_loglog(&points).unwrap();
        assert_relative_eq!(fit.slope, 0.5, max_relative = 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn fit_on_two_points_is_the_secant_slope() {
        let fit = fit_loglog(&[(0.25, 0.1), (0.0625, 0.025)]).unwrap();
        assert_relative_eq!(fit.slope, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn fit_excludes_nonpositive_errors() {
        let fit = fit_loglog(&[(0.25, 0.1), (0.125, 0.0), (0.0625, 0.025)]).unwrap();
        assert_relative_eq!(fit.slope, 1.0, max_relative = 1e-12);
        assert!(fit_loglog(&[(0.25, 0.0), (0.125, 0.0), (0.0625, 0.025)]).is_err());
        assert!(fit_loglog(&[(0.25, 1.0)]).is_err());
    }

    #[test]
    fn weak_error_never_exceeds_strong_error_rowwise() {
        // |mean of differences| <= mean of |differences| on the same draws.
        let report = run_convergence_study(&small_config()).unwrap();
        for row in &report.rows {
            assert!(
                row.wkerr <= row.sterr + 1e-15,
                "wkerr {} > sterr {} at delta {}",
                row.wkerr,
                row.sterr,
                row.delta
            );
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_convergence_study(&small_config()).unwrap();
        let b = run_convergence_study(&small_config()).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.strong_fit, b.strong_fit);
        assert_eq!(a.weak_fit, b.weak_fit);

        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        a.write_rows_csv(&mut csv_a).unwrap();
        b.write_rows_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn strong_and_weak_errors_match_study_rows() {
        let cfg = small_config();
        let report = run_convergence_study(&cfg).unwrap();
        let (sterr, se) = strong_error(&cfg, cfg.deltas[1]).unwrap();
        let (wkerr, we) = weak_error(&cfg, cfg.deltas[1]).unwrap();
        assert_eq!(sterr, report.rows[1].sterr);
        assert_eq!(se, report.rows[1].sterr_stderr);
        assert_eq!(wkerr, report.rows[1].wkerr);
        assert_eq!(we, report.rows[1].wkerr_stderr);
        assert!(strong_error(&cfg, 0.33).is_err());
    }

    #[test]
    fn stderr_shrinks_like_the_square_root_of_the_path_count() {
        let base = small_config();
        let mut larger = small_config();
        larger.n_paths = base.n_paths * 10;
        let (_, se_small) = strong_error(&base, base.deltas[0]).unwrap();
        let (_, se_large) = strong_error(&larger, base.deltas[0]).unwrap();
        let ratio = se_small / se_large;
        assert!(
            (2.0..=5.0).contains(&ratio),
            "expected ratio near sqrt(10), got {ratio}"
        );
    }

    #[test]
    fn strong_error_grows_with_delta() {
        let report = run_convergence_study(&small_config()).unwrap();
        for pair in report.rows.windows(2) {
            assert!(
                pair[0].sterr > pair[1].sterr,
                "sterr not decreasing with delta: {} vs {}",
                pair[0].sterr,
                pair[1].sterr
            );
        }
    }

    #[test]
    fn csv_output_has_stable_schema() {
        let report = run_convergence_study(&small_config()).unwrap();
        let mut rows = Vec::new();
        report.write_rows_csv(&mut rows).unwrap();
        let text = String::from_utf8(rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "delta,sterr,sterr_stderr,wkerr,wkerr_stderr,mean_N"
        );
        assert_eq!(lines.count(), report.rows.len());

        let mut summary = Vec::new();
        report.write_summary_csv(&mut summary).unwrap();
        let text = String::from_utf8(summary).unwrap();
        assert!(text.starts_with(
            "strong_slope,strong_intercept,weak_slope,weak_intercept,seed\n"
        ));
        assert_eq!(text.lines().count(), 2);
    }
}
