//! Single-phonon-mode temperature model nu(T) = nu0 + c_nu (n + 1/2) for
//! resonance parameters, and the linear susceptibility window fit.

use super::{least_squares_fit, FitOptions, FitResult, SeriesPoint};
use crate::phonon::{bose_occupation, bose_occupation_denergy, bose_occupation_dt};
use crate::{Error, Result};

/// Parameters of nu(T) = nu0 + c_nu * (n(homega, T) + 1/2).
#[derive(Clone, Copy, Debug)]
pub struct ThermalModelParams {
    pub nu0_mhz: f64,
    pub c_nu_mhz: f64,
    pub homega_mev: f64,
}

impl ThermalModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.homega_mev > 0.0) {
            return Err(Error::invalid(format!(
                "homega = {} meV must be > 0",
                self.homega_mev
            )));
        }
        if !self.nu0_mhz.is_finite() || !self.c_nu_mhz.is_finite() {
            return Err(Error::invalid("thermal model parameters must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, t_k: f64) -> f64 {
        self.nu0_mhz + self.c_nu_mhz * (bose_occupation(self.homega_mev, t_k) + 0.5)
    }

    /// The T = 0 limit, nu0 + c_nu/2 (zero-point shift only).
    pub fn zero_kelvin_value(&self) -> f64 {
        self.nu0_mhz + 0.5 * self.c_nu_mhz
    }

    /// Analytic d nu / d T.
    pub fn susceptibility(&self, t_k: f64) -> f64 {
        self.c_nu_mhz * bose_occupation_dt(self.homega_mev, t_k)
    }

    /// Starting point derived from the data: assumes a typical optical-mode
    /// energy, then matches the curve at the temperature extremes.
    pub fn initial_guess(points: &[SeriesPoint]) -> Result<Self> {
        let (lo, hi) = span(points)?;
        let homega = 20.0;
        let n_lo = bose_occupation(homega, lo.x);
        let n_hi = bose_occupation(homega, hi.x);
        let c_nu = if n_hi > n_lo {
            (hi.y - lo.y) / (n_hi - n_lo)
        } else {
            -1.0
        };
        Ok(ThermalModelParams {
            nu0_mhz: lo.y - c_nu * (n_lo + 0.5),
            c_nu_mhz: c_nu,
            homega_mev: homega,
        })
    }
}

fn span(points: &[SeriesPoint]) -> Result<(SeriesPoint, SeriesPoint)> {
    let lo = points
        .iter()
        .copied()
        .min_by(|a, b| a.x.total_cmp(&b.x))
        .ok_or_else(|| Error::invalid("no points"))?;
    let hi = points
        .iter()
        .copied()
        .max_by(|a, b| a.x.total_cmp(&b.x))
        .ok_or_else(|| Error::invalid("no points"))?;
    Ok((lo, hi))
}

/// Fits (nu0, c_nu, homega) to (T, nu) points. Requires at least 4 points
/// whose temperatures are nonnegative and span at least a 3:1 ratio.
pub fn fit_thermal(
    points: &[SeriesPoint],
    init: &ThermalModelParams,
) -> Result<(ThermalModelParams, FitResult)> {
    init.validate()?;
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            points: points.len(),
            params: 3,
        });
    }
    let (lo, hi) = span(points)?;
    if lo.x < 0.0 {
        return Err(Error::invalid(format!("temperature {} K < 0", lo.x)));
    }
    if hi.x <= lo.x || hi.x < 3.0 * lo.x {
        return Err(Error::invalid(format!(
            "temperature span {}..{} K is degenerate; need at least a 3:1 ratio",
            lo.x, hi.x
        )));
    }

    let model = |p: &[f64], t: f64| p[0] + p[1] * (bose_occupation(p[2], t) + 0.5);
    let jacobian = |p: &[f64], t: f64, out: &mut [f64]| {
        out[0] = 1.0;
        out[1] = bose_occupation(p[2], t) + 0.5;
        out[2] = p[1] * bose_occupation_denergy(p[2], t);
    };
    let inf = f64::INFINITY;
    let result = least_squares_fit(
        &model,
        Some(&jacobian),
        points,
        &[
            ("nu0_mhz", init.nu0_mhz),
            ("c_nu_mhz", init.c_nu_mhz),
            ("homega_mev", init.homega_mev.clamp(1e-4, 1e4)),
        ],
        Some(&[(-inf, inf), (-inf, inf), (1e-4, 1e4)]),
        &FitOptions::default(),
    )?;
    let fitted = ThermalModelParams {
        nu0_mhz: result.params[0],
        c_nu_mhz: result.params[1],
        homega_mev: result.params[2],
    };
    Ok((fitted, result))
}

/// Ordinary least-squares slope of nu against T restricted to
/// [t_min_k, t_max_k]. Returns (slope, one-sigma slope uncertainty) in
/// MHz per K. Needs at least 3 in-range points.
pub fn fit_susceptibility(points: &[SeriesPoint], t_min_k: f64, t_max_k: f64) -> Result<(f64, f64)> {
    if !(t_min_k < t_max_k) {
        return Err(Error::invalid(format!(
            "susceptibility window [{t_min_k}, {t_max_k}] K is not ordered"
        )));
    }
    let in_range: Vec<SeriesPoint> = points
        .iter()
        .copied()
        .filter(|p| p.x >= t_min_k && p.x <= t_max_k)
        .collect();
    if in_range.len() < 3 {
        return Err(Error::InsufficientData {
            points: in_range.len(),
            params: 3,
        });
    }
    let n = in_range.len() as f64;
    let mean_x = in_range.iter().map(|p| p.x).sum::<f64>() / n;
    let mean_y = in_range.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = in_range.iter().map(|p| (p.x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "all in-window temperatures coincide; slope undefined",
        ));
    }
    let sxy: f64 = in_range
        .iter()
        .map(|p| (p.x - mean_x) * (p.y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = in_range
        .iter()
        .map(|p| (p.y - intercept - slope * p.x).powi(2))
        .sum();
    let dof = (in_range.len() - 2).max(1) as f64;
    let sigma = (ssr / dof / sxx).sqrt();
    Ok((slope, sigma))
}
