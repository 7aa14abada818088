//! Shared oracles and statistics helpers for the integration suites.
//!
//! Everything here is independent of the library code paths it is used to
//! check: the Laplace-exponent oracle integrates the Levy measure by
//! adaptive quadrature instead of using closed forms, and the refinement
//! oracle realizes one subordinator at two resolutions from raw increments.

use subdiff::rng::RandomStream;
use subdiff::subordinator::{SubordinatorPath, SubordinatorSpec};

/// Adaptive Simpson quadrature with the standard error estimate
/// `|S_left + S_right - S_whole| / 15`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// `psi(s)` for a tempered stable subordinator by numerical quadrature of
/// `drift*s + integral_0^inf (1 - e^{-sx}) scale e^{-kappa x} x^{-1-beta} dx`.
///
/// The head `x in (0, 1]` is integrated after the substitution
/// `x = v^{1/(1-beta)}`, which removes the `x^{-beta}` endpoint singularity;
/// `1 - e^{-sx}` is evaluated as `-expm1(-sx)` to stay accurate for tiny
/// arguments. The tail is cut off where `e^{-kappa x}` is negligible.
pub fn tempered_psi_quadrature(
    beta: f64,
    kappa: f64,
    drift: f64,
    scale: f64,
    s: f64,
    tol: f64,
) -> f64 {
    let p = 1.0 / (1.0 - beta);
    let head_integrand = move |v: f64| -> f64 {
        if v <= 0.0 {
            // limit value: s * p as v -> 0
            return s * p;
        }
        let x = v.powf(p);
        (-(-s * x).exp_m1()) * (-kappa * x).exp() * p * v.powf(-p * beta - 1.0)
    };
    let head = adaptive_simpson(&head_integrand, 0.0, 1.0, tol);

    let tail_integrand = move |x: f64| -> f64 {
        (-(-s * x).exp_m1()) * (-kappa * x).exp() * x.powf(-1.0 - beta)
    };
    let cutoff = (45.0 / kappa).max(2.0);
    let tail = adaptive_simpson(&tail_integrand, 1.0, cutoff, tol);

    drift * s + scale * (head + tail)
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of a sample (by copy).
pub fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Spearman rank correlation (no tie handling; inputs here are continuous).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Realizes one subordinator at resolution `delta/2` and coarsens it to
/// `delta` by keeping every other grid value. Both returned paths describe
/// the same underlying process and both bracket the horizon.
pub fn coupled_resolutions(
    spec: &SubordinatorSpec,
    delta: f64,
    horizon: f64,
    rng: &mut RandomStream,
) -> (SubordinatorPath, SubordinatorPath) {
    let half = delta / 2.0;
    let mut fine = vec![0.0];
    // Extend until a value at an even fine index exceeds the horizon, so
    // the coarsened sequence also brackets it.
    loop {
        let last = *fine.last().unwrap();
        if last > horizon && (fine.len() - 1) % 2 == 0 {
            break;
        }
        let mut next = last + spec.sample_increment(half, rng).unwrap();
        while next <= last {
            next = last + spec.sample_increment(half, rng).unwrap();
        }
        fine.push(next);
    }
    let first_exceed = fine.iter().position(|&v| v > horizon).unwrap();
    let fine_path = SubordinatorPath::new(half, fine[..=first_exceed].to_vec(), horizon).unwrap();
    let coarse_values: Vec<f64> = fine.iter().copied().step_by(2).collect();
    let first_exceed_coarse = coarse_values.iter().position(|&v| v > horizon).unwrap();
    let coarse_path = SubordinatorPath::new(
        delta,
        coarse_values[..=first_exceed_coarse].to_vec(),
        horizon,
    )
    .unwrap();
    (coarse_path, fine_path)
}
