//! DC magnetometry and thermometry sensitivities from fitted spectra.
//!
//! eta_B keeps its 2*pi prefactor; eta_T replaces gamma_e with the
//! temperature susceptibility and drops the 2*pi. Slopes enter in per-Hz
//! units; chi enters in MHz/K and is converted internally.

use crate::constants::GAMMA_E_HZ_PER_G;
use crate::lineshape::{max_abs_derivative, OdmrModelParams};
use crate::{Error, Result};

/// CLI-facing bundle of the quantities the formulas need. Optional fields
/// cover the two routes: a measured max slope, or (c_m, delta_nu) for the
/// closed single-Lorentzian form.
#[derive(Clone, Copy, Debug)]
pub struct SensitivityInput {
    pub photon_rate_hz: f64,
    pub max_slope_per_hz: Option<f64>,
    pub chi_mhz_per_k: Option<f64>,
    pub c_m: Option<f64>,
    pub delta_nu_mhz: Option<f64>,
}

impl SensitivityInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.photon_rate_hz > 0.0) {
            return Err(Error::invalid("photon rate must be > 0"));
        }
        if let Some(s) = self.max_slope_per_hz {
            if !(s > 0.0) {
                return Err(Error::invalid("max slope must be > 0"));
            }
        }
        if let Some(d) = self.delta_nu_mhz {
            if !(d > 0.0) {
                return Err(Error::invalid("linewidth must be > 0"));
            }
        }
        if let Some(c) = self.c_m {
            if !(c > 0.0) {
                return Err(Error::invalid("contrast must be > 0"));
            }
        }
        Ok(())
    }
}

/// eta_B = 2 pi / (gamma_e sqrt(R) max|dC/dnu|), Gauss per sqrt-Hz, with
/// gamma_e in Hz/G and the slope in 1/Hz.
pub fn eta_b_general(r_hz: f64, max_slope_per_hz: f64) -> Result<f64> {
    if !(r_hz > 0.0) {
        return Err(Error::invalid(format!("photon rate {r_hz} must be > 0")));
    }
    if !(max_slope_per_hz > 0.0) {
        return Err(Error::invalid(format!(
            "max slope {max_slope_per_hz} must be > 0"
        )));
    }
    Ok(2.0 * std::f64::consts::PI / (GAMMA_E_HZ_PER_G * r_hz.sqrt() * max_slope_per_hz))
}

/// Single-Lorentzian closed form (8 pi / 3 sqrt(3)) delta_nu / (gamma_e c_m
/// sqrt(R)), equal to the general form because the peak's maximum slope is
/// (3 sqrt(3) / 4) c_m / delta_nu.
pub fn eta_b_closed_form(c_m: f64, delta_nu_mhz: f64, r_hz: f64) -> Result<f64> {
    if !(c_m > 0.0) || !(delta_nu_mhz > 0.0) || !(r_hz > 0.0) {
        return Err(Error::invalid(
            "closed form needs c_m > 0, delta_nu > 0, and R > 0",
        ));
    }
    let delta_nu_hz = delta_nu_mhz * 1e6;
    Ok(8.0 * std::f64::consts::PI / (3.0 * 3.0_f64.sqrt())
        * delta_nu_hz
        / (GAMMA_E_HZ_PER_G * c_m * r_hz.sqrt()))
}

/// eta_T = 1 / (|chi| sqrt(R) max|dC/dnu|), K per sqrt-Hz, chi converted to
/// Hz/K. No 2*pi here.
pub fn eta_t(chi_mhz_per_k: f64, r_hz: f64, max_slope_per_hz: f64) -> Result<f64> {
    if chi_mhz_per_k == 0.0 {
        return Err(Error::invalid("susceptibility is zero"));
    }
    if !(r_hz > 0.0) {
        return Err(Error::invalid(format!("photon rate {r_hz} must be > 0")));
    }
    if !(max_slope_per_hz > 0.0) {
        return Err(Error::invalid(format!(
            "max slope {max_slope_per_hz} must be > 0"
        )));
    }
    let chi_hz_per_k = chi_mhz_per_k.abs() * 1e6;
    Ok(1.0 / (chi_hz_per_k * r_hz.sqrt() * max_slope_per_hz))
}

/// Sensitivities of a fitted spectrum, from its numerical maximum slope.
#[derive(Clone, Copy, Debug)]
pub struct SensitivityReport {
    pub eta_b_g_per_sqrt_hz: f64,
    /// Present when a susceptibility was supplied.
    pub eta_t_k_per_sqrt_hz: Option<f64>,
    pub max_slope_per_mhz: f64,
    pub max_slope_per_hz: f64,
    /// Frequency at which the slope extremum occurs, MHz.
    pub slope_at_mhz: f64,
}

/// Pipes the model's max |dC/dnu| into both formulas. Fails on a model with
/// no slope (all amplitudes zero).
pub fn sensitivity_report(
    model: &OdmrModelParams,
    r_hz: f64,
    chi_mhz_per_k: Option<f64>,
) -> Result<SensitivityReport> {
    model.validate()?;
    let slope = max_abs_derivative(model);
    if !(slope.per_mhz > 0.0) {
        return Err(Error::invalid("model has zero slope everywhere"));
    }
    let eta_b = eta_b_general(r_hz, slope.per_hz())?;
    let eta_t_val = match chi_mhz_per_k {
        Some(chi) => Some(eta_t(chi, r_hz, slope.per_hz())?),
        None => None,
    };
    Ok(SensitivityReport {
        eta_b_g_per_sqrt_hz: eta_b,
        eta_t_k_per_sqrt_hz: eta_t_val,
        max_slope_per_mhz: slope.per_mhz,
        max_slope_per_hz: slope.per_hz(),
        slope_at_mhz: slope.at_mhz,
    })
}
