//! Damped Gauss-Newton (Levenberg-Marquardt) least squares with box
//! constraints, finite-difference or analytic Jacobians, and a scaled
//! normal-matrix covariance.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{FitOptions, FitResult, FitStatus, SeriesPoint};
use crate::{Error, Result};

/// Minimizes sum_k ((y_k - model(p, x_k)) / sigma_k)^2 over p.
///
/// `model(p, x)` evaluates the curve; `analytic_jacobian`, when given, fills
/// its slice with d model / d p_j at (p, x) and replaces finite differences.
/// `init` pairs each parameter name with its starting value; `bounds` is an
/// optional per-parameter closed box (trial steps are clamped into it).
///
/// The damping schedule is fixed: lambda starts at 1e-3 times the largest
/// normal-matrix diagonal, multiplies by 8 on a rejected step and divides
/// by 8 on an accepted one. Accepted iterates never increase the residual.
/// A singular normal matrix or hitting the iteration cap is reported via
/// `FitStatus`, not as an error.
pub fn least_squares_fit(
    model: &dyn Fn(&[f64], f64) -> f64,
    analytic_jacobian: Option<&dyn Fn(&[f64], f64, &mut [f64])>,
    data: &[SeriesPoint],
    init: &[(&str, f64)],
    bounds: Option<&[(f64, f64)]>,
    options: &FitOptions,
) -> Result<FitResult> {
    let p = init.len();
    if p == 0 {
        return Err(Error::invalid("fit has no parameters"));
    }
    if data.len() < p {
        return Err(Error::InsufficientData {
            points: data.len(),
            params: p,
        });
    }
    for (k, pt) in data.iter().enumerate() {
        if !pt.x.is_finite() || !pt.y.is_finite() {
            return Err(Error::invalid(format!("data point {k} is not finite")));
        }
        if let Some(s) = pt.sigma_y {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!(
                    "data point {k}: sigma {s} must be finite and > 0"
                )));
            }
        }
    }
    if let Some(b) = bounds {
        if b.len() != p {
            return Err(Error::invalid(format!(
                "bounds cover {} parameters, fit has {p}",
                b.len()
            )));
        }
        for (j, &(lo, hi)) in b.iter().enumerate() {
            if !(lo <= hi) {
                return Err(Error::invalid(format!(
                    "bounds for {}: [{lo}, {hi}] is empty",
                    init[j].0
                )));
            }
            let v = init[j].1;
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::invalid(format!(
                    "initial {} = {v} outside [{lo}, {hi}]",
                    init[j].0
                )));
            }
        }
    }

    let names: Vec<String> = init.iter().map(|&(n, _)| n.to_string()).collect();
    let mut params: Vec<f64> = init.iter().map(|&(_, v)| v).collect();

    let residuals = |pv: &[f64]| -> DVector<f64> {
        DVector::from_iterator(
            data.len(),
            data.iter().map(|pt| {
                let s = pt.sigma_y.unwrap_or(1.0);
                (pt.y - model(pv, pt.x)) / s
            }),
        )
    };

    // J_kj = d r_k / d p_j = -(d model / d p_j) / sigma_k.
    let jacobian = |pv: &[f64]| -> DMatrix<f64> {
        let n = data.len();
        let mut j = DMatrix::zeros(n, p);
        if let Some(aj) = analytic_jacobian {
            let mut row = vec![0.0; p];
            for (k, pt) in data.iter().enumerate() {
                let s = pt.sigma_y.unwrap_or(1.0);
                aj(pv, pt.x, &mut row);
                for (jj, d) in row.iter().enumerate() {
                    j[(k, jj)] = -d / s;
                }
            }
        } else {
            let mut work = pv.to_vec();
            for jj in 0..p {
                let h = options.fd_relative_step * pv[jj].abs().max(1.0);
                let mut hi = pv[jj] + h;
                let mut lo = pv[jj] - h;
                if let Some(b) = bounds {
                    hi = hi.clamp(b[jj].0, b[jj].1);
                    lo = lo.clamp(b[jj].0, b[jj].1);
                }
                let denom = hi - lo;
                if denom == 0.0 {
                    continue;
                }
                work[jj] = hi;
                let r_hi = residuals(&work);
                work[jj] = lo;
                let r_lo = residuals(&work);
                work[jj] = pv[jj];
                for k in 0..n {
                    j[(k, jj)] = (r_hi[k] - r_lo[k]) / denom;
                }
            }
        }
        j
    };

    let mut r = residuals(&params);
    let mut ssr = r.norm_squared();
    if !ssr.is_finite() {
        return Err(Error::invalid("model is not finite at the initial point"));
    }
    let mut ssr_history = vec![ssr];
    let mut status = FitStatus::IterationCap;
    let mut lambda = f64::NAN;
    let mut iterations = 0;

    'outer: while iterations < options.max_iterations {
        iterations += 1;
        let j = jacobian(&params);
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        let max_diag = (0..p).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            status = FitStatus::SingularNormalMatrix;
            break;
        }
        if lambda.is_nan() {
            lambda = options.lambda_init_scale * max_diag;
        }
        let gmax = g.amax();
        if gmax <= options.gradient_tol * ssr.max(1.0) {
            status = FitStatus::Converged;
            break;
        }
        let lambda_cap = max_diag * 1e12;
        let neg_g = -&g;
        loop {
            let mut damped = a.clone();
            for i in 0..p {
                damped[(i, i)] += lambda;
            }
            let step = match Cholesky::new(damped) {
                Some(ch) => ch.solve(&neg_g),
                None => {
                    lambda *= options.lambda_up;
                    if lambda > lambda_cap {
                        status = FitStatus::SingularNormalMatrix;
                        break 'outer;
                    }
                    continue;
                }
            };
            let mut trial: Vec<f64> = params
                .iter()
                .zip(step.iter())
                .map(|(pv, d)| pv + d)
                .collect();
            if let Some(b) = bounds {
                for (x, &(lo, hi)) in trial.iter_mut().zip(b) {
                    *x = x.clamp(lo, hi);
                }
            }
            let r_trial = residuals(&trial);
            let ssr_trial = r_trial.norm_squared();
            if ssr_trial.is_finite() && ssr_trial < ssr {
                let step_rel = params
                    .iter()
                    .zip(&trial)
                    .map(|(o, n)| (n - o).abs() / o.abs().max(1.0))
                    .fold(0.0_f64, f64::max);
                let drop_rel = (ssr - ssr_trial) / ssr.max(f64::MIN_POSITIVE);
                params = trial;
                r = r_trial;
                ssr = ssr_trial;
                ssr_history.push(ssr);
                lambda /= options.lambda_down;
                if ssr == 0.0
                    || drop_rel <= options.ssr_relative_tol
                    || step_rel <= options.step_relative_tol
                {
                    status = FitStatus::Converged;
                    break 'outer;
                }
                break;
            }
            lambda *= options.lambda_up;
            if lambda > lambda_cap {
                // No damped step improves: a numerical minimum. Call it
                // converged only if the gradient is small on a loose scale.
                status = if gmax <= options.gradient_tol.sqrt() * ssr.max(1.0) {
                    FitStatus::Converged
                } else {
                    FitStatus::Stalled
                };
                break 'outer;
            }
        }
    }

    let j = jacobian(&params);
    let a = j.transpose() * &j;
    let dof = data.len().saturating_sub(p).max(1);
    let s2 = ssr / dof as f64;
    let (covariance, sigmas) = match invert_normal_matrix(&a) {
        Some(inv) => {
            let c = inv * s2;
            let sym = (&c + c.transpose()) * 0.5;
            let sig = (0..p).map(|i| sym[(i, i)].max(0.0).sqrt()).collect();
            (sym, sig)
        }
        None => {
            if status == FitStatus::Converged {
                status = FitStatus::SingularNormalMatrix;
            }
            (DMatrix::from_element(p, p, f64::NAN), vec![f64::NAN; p])
        }
    };

    Ok(FitResult {
        param_names: names,
        params,
        sigmas,
        residual_norm: ssr.sqrt(),
        covariance,
        iterations,
        converged: status == FitStatus::Converged,
        status,
        ssr_history,
    })
}

/// Symmetric inverse of J^T J via eigendecomposition. Returns None when the
/// matrix is numerically singular (condition number above 1e12), which a
/// Cholesky factorization can miss by a rounding error.
fn invert_normal_matrix(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = a.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if !(max_ev > 0.0) || !max_ev.is_finite() {
        return None;
    }
    if eig.eigenvalues.iter().any(|&ev| ev <= max_ev * 1e-12) {
        return None;
    }
    let p = a.nrows();
    let mut inv_diag = DMatrix::zeros(p, p);
    for i in 0..p {
        inv_diag[(i, i)] = 1.0 / eig.eigenvalues[i];
    }
    Some(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn line(p: &[f64], x: f64) -> f64 {
        p[0] + p[1] * x
    }

    #[test]
    fn exact_line_recovered() {
        let data = vec![
            SeriesPoint::new(0.0, 1.0),
            SeriesPoint::new(1.0, 3.0),
            SeriesPoint::new(2.0, 5.0),
        ];
        let fit = least_squares_fit(
            &line,
            None,
            &data,
            &[("a", 0.0), ("b", 0.0)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged, "status {:?}", fit.status);
        assert_relative_eq!(fit.value("a").unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(fit.value("b").unwrap(), 2.0, epsilon = 1e-9);
        assert!(fit.residual_norm < 1e-9, "residual {}", fit.residual_norm);
    }

    fn single_lorentzian(p: &[f64], x: f64) -> f64 {
        let half = p[1] / 2.0;
        p[2] * half * half / ((x - p[0]).powi(2) + half * half)
    }

    #[test]
    fn noiseless_lorentzian_round_trip() {
        // The window must cover the 5%-perturbed center (3654 MHz), or the
        // misplaced peak leaves no gradient to pull it back.
        let truth = [3480.0, 20.0, 0.1];
        let data: Vec<SeriesPoint> = (0..300)
            .map(|i| {
                let x = 3300.0 + i as f64 * 1.5;
                SeriesPoint::new(x, single_lorentzian(&truth, x))
            })
            .collect();
        let init = [
            ("center", 3480.0 * 1.05),
            ("fwhm", 20.0 * 0.95),
            ("amp", 0.1 * 1.05),
        ];
        // The model is even in fwhm, so +-20 are twin minima; the physical
        // bound picks the positive one, as every domain fit does.
        let inf = f64::INFINITY;
        let fit = least_squares_fit(
            &single_lorentzian,
            None,
            &data,
            &init,
            Some(&[(-inf, inf), (1e-6, inf), (0.0, inf)]),
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged, "status {:?}", fit.status);
        for (got, want) in fit.params.iter().zip(truth) {
            assert_relative_eq!(*got, want, max_relative = 1e-6);
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        let data = vec![SeriesPoint::new(0.0, 1.0)];
        let err = least_squares_fit(
            &line,
            None,
            &data,
            &[("a", 0.0), ("b", 0.0)],
            None,
            &FitOptions::default(),
        );
        assert!(err.is_err(), "1 point cannot constrain 2 parameters");
    }

    #[test]
    fn init_outside_bounds_is_an_error() {
        let data = vec![SeriesPoint::new(0.0, 1.0), SeriesPoint::new(1.0, 3.0)];
        let err = least_squares_fit(
            &line,
            None,
            &data,
            &[("a", -1.0), ("b", 0.0)],
            Some(&[(0.0, 10.0), (0.0, 10.0)]),
            &FitOptions::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn bounds_are_respected() {
        // Best unconstrained slope is 2; cap it at 1.5.
        let data = vec![
            SeriesPoint::new(0.0, 1.0),
            SeriesPoint::new(1.0, 3.0),
            SeriesPoint::new(2.0, 5.0),
        ];
        let fit = least_squares_fit(
            &line,
            None,
            &data,
            &[("a", 0.5), ("b", 1.0)],
            Some(&[(f64::NEG_INFINITY, f64::INFINITY), (0.0, 1.5)]),
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.value("b").unwrap() <= 1.5 + 1e-12);
    }

    #[test]
    fn accepted_ssr_history_never_increases() {
        let truth = [3480.0, 20.0, 0.1];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let data: Vec<SeriesPoint> = (0..120)
            .map(|i| {
                let x = 3400.0 + i as f64 * 1.5;
                let noise: f64 = rng.gen_range(-0.005..0.005);
                SeriesPoint::new(x, single_lorentzian(&truth, x) + noise)
            })
            .collect();
        let fit = least_squares_fit(
            &single_lorentzian,
            None,
            &data,
            &[("center", 3500.0), ("fwhm", 30.0), ("amp", 0.07)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        for w in fit.ssr_history.windows(2) {
            assert!(w[1] <= w[0], "accepted step increased SSR: {w:?}");
        }
        assert!(fit.ssr_history.len() >= 2, "no step was ever accepted");
    }

    #[test]
    fn singular_model_is_reported_not_panicked() {
        // Two perfectly redundant parameters: the normal matrix is singular,
        // so the covariance cannot be formed and the fit is not converged.
        let redundant = |p: &[f64], x: f64| (p[0] + p[1]) * x;
        let data = vec![
            SeriesPoint::new(0.0, 0.0),
            SeriesPoint::new(1.0, 2.0),
            SeriesPoint::new(2.0, 4.0),
        ];
        let fit = least_squares_fit(
            &redundant,
            None,
            &data,
            &[("u", 0.9), ("v", 0.9)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.status, FitStatus::SingularNormalMatrix);
        assert!(fit.sigmas.iter().all(|s| s.is_nan()));
    }

    #[test]
    fn covariance_is_symmetric_and_sigmas_match_diagonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let data: Vec<SeriesPoint> = (0..40)
            .map(|i| {
                let x = i as f64 * 0.25;
                let noise: f64 = rng.gen_range(-0.1..0.1);
                SeriesPoint::new(x, 1.0 + 2.0 * x + noise)
            })
            .collect();
        let fit = least_squares_fit(
            &line,
            None,
            &data,
            &[("a", 0.0), ("b", 0.0)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        let c = &fit.covariance;
        assert_relative_eq!(c[(0, 1)], c[(1, 0)], epsilon = 1e-15);
        for i in 0..2 {
            assert_relative_eq!(fit.sigmas[i], c[(i, i)].sqrt(), epsilon = 1e-15);
            assert!(c[(i, i)] >= 0.0);
        }
    }

    #[test]
    fn sigmas_shrink_as_inverse_sqrt_of_replication() {
        // Replicating the same noisy data N-fold scales sigma by 1/sqrt(N).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut base = Vec::new();
        for i in 0..30 {
            let x = i as f64 * 0.3;
            let noise: f64 = rng.gen_range(-0.2..0.2);
            base.push(SeriesPoint::new(x, 1.0 + 2.0 * x + noise));
        }
        let fit1 = least_squares_fit(
            &line,
            None,
            &base,
            &[("a", 0.0), ("b", 0.0)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        let mut replicated = base.clone();
        for _ in 1..4 {
            replicated.extend_from_slice(&base);
        }
        let fit4 = least_squares_fit(
            &line,
            None,
            &replicated,
            &[("a", 0.0), ("b", 0.0)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        let ratio = fit1.sigmas[1] / fit4.sigmas[1];
        assert!(
            (ratio - 2.0).abs() < 0.4,
            "4x replication should halve sigma, ratio {ratio}"
        );
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        // Same fit with and without the analytic Jacobian lands on the same
        // answer; the Jacobians themselves agree entrywise.
        let truth = [3480.0, 20.0, 0.1];
        let jac = |p: &[f64], x: f64, out: &mut [f64]| {
            let half = p[1] / 2.0;
            let dx = x - p[0];
            let den = dx * dx + half * half;
            out[0] = p[2] * half * half * 2.0 * dx / (den * den);
            out[1] = p[2] * half * dx * dx / (den * den);
            out[2] = half * half / den;
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let p = [
                rng.gen_range(3400.0..3600.0),
                rng.gen_range(5.0..40.0),
                rng.gen_range(0.01..0.3),
            ];
            let x = rng.gen_range(3350.0..3650.0);
            let mut an = [0.0; 3];
            jac(&p, x, &mut an);
            for j in 0..3 {
                let h = 1e-6 * p[j].abs().max(1.0);
                let mut hi = p;
                let mut lo = p;
                hi[j] += h;
                lo[j] -= h;
                let fd = (single_lorentzian(&hi, x) - single_lorentzian(&lo, x)) / (2.0 * h);
                assert!(
                    (an[j] - fd).abs() <= 1e-5 * fd.abs().max(1e-12) + 1e-9,
                    "param {j}: analytic {} vs fd {fd}",
                    an[j]
                );
            }
        }
        let data: Vec<SeriesPoint> = (0..100)
            .map(|i| {
                let x = 3400.0 + i as f64 * 2.0;
                SeriesPoint::new(x, single_lorentzian(&truth, x))
            })
            .collect();
        let init = [("center", 3470.0), ("fwhm", 25.0), ("amp", 0.12)];
        let with = least_squares_fit(
            &single_lorentzian,
            Some(&jac),
            &data,
            &init,
            None,
            &FitOptions::default(),
        )
        .unwrap();
        let without = least_squares_fit(
            &single_lorentzian,
            None,
            &data,
            &init,
            None,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(with.converged && without.converged);
        for (a, b) in with.params.iter().zip(&without.params) {
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn weighted_points_pull_the_fit() {
        // One tight-sigma outlier dominates a loose-sigma crowd.
        let mut data = vec![SeriesPoint::with_sigma(0.0, 10.0, 0.001)];
        for i in 1..20 {
            data.push(SeriesPoint::with_sigma(0.0, 0.0, 10.0 + i as f64 * 0.0));
        }
        // Model: constant. Weighted mean should sit essentially at 10.
        let constant = |p: &[f64], _x: f64| p[0];
        let fit = least_squares_fit(
            &constant,
            None,
            &data,
            &[("c", 5.0)],
            None,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(
            (fit.params[0] - 10.0).abs() < 0.01,
            "weighted mean {} should be near the tight point",
            fit.params[0]
        );
    }
}
