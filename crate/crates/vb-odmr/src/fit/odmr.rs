//! Multi-Lorentzian ODMR spectrum fit: peak-picked initial guesses, branch
//! detection, and parameter extraction (D, hyperfine spacing) with
//! uncertainties.

use super::{least_squares_fit, FitOptions, FitResult, SeriesPoint};
use crate::constants::{GAMMA_E_MHZ_PER_G, ZFS_ROOM_TEMP_MHZ};
use crate::lineshape::{lorentzian_eval, LorentzianPeak, OdmrModelParams, OdmrSpectrum};
use crate::polarization::polarized_amplitude_model;
use crate::spin::{Branch, Isotope};
use crate::util::moving_average;
use crate::{Error, Result};

/// How the per-line amplitudes are parameterized.
#[derive(Clone, Copy, Debug)]
pub enum AmplitudeMode {
    /// One overall scale per branch times fixed weights: the isotope's
    /// unpolarized degeneracies at p_up = 0.5 (the 1:3:3:1 ratio for the
    /// spin-1/2 isotope), or the binomial weights of a polarized ensemble
    /// for other p_up (spin-1/2 isotope only).
    RatioBinomial { p_up: f64 },
    /// Every line amplitude is its own parameter.
    Free,
}

impl AmplitudeMode {
    /// The unpolarized ratio mode (1:3:3:1 for the spin-1/2 isotope).
    pub fn ratio_binomial() -> Self {
        AmplitudeMode::RatioBinomial { p_up: 0.5 }
    }
}

/// Which branches the spectrum was judged to cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchCoverage {
    Both,
    SingleMinus,
    SinglePlus,
}

/// Everything a spectrum fit produces. `d_mhz` is present only when both
/// branches were fit; `a_zz_mhz` is the common line spacing, reported as a
/// magnitude.
#[derive(Clone, Debug)]
pub struct OdmrFit {
    pub result: FitResult,
    pub model: OdmrModelParams,
    pub d_mhz: Option<f64>,
    pub d_sigma_mhz: Option<f64>,
    pub a_zz_mhz: f64,
    pub a_zz_sigma_mhz: f64,
    pub coverage: BranchCoverage,
    /// Resolvable peaks found by the picker (diagnostic).
    pub detected_peaks: usize,
    /// Set when fewer peaks were resolvable than the model has lines; the
    /// fit still runs but the spacing may be poorly constrained.
    pub ill_conditioned: bool,
}

/// Fixed per-line weights for the ratio mode, in ascending frequency order.
pub(crate) fn ratio_weights(isotope: Isotope, p_up: f64, branch: Branch) -> Result<Vec<f64>> {
    match isotope {
        Isotope::N15 => Ok(polarized_amplitude_model(p_up, branch)?.to_vec()),
        Isotope::N14 => {
            if (p_up - 0.5).abs() > 1e-12 {
                return Err(Error::invalid(
                    "polarized amplitude ratios are only defined for the spin-1/2 isotope",
                ));
            }
            let degeneracies = isotope.projection_degeneracies();
            let total: f64 = degeneracies.iter().sum();
            Ok(degeneracies.iter().map(|d| d / total).collect())
        }
    }
}

/// Sum of one branch's comb at `nu`: line k at center + (k - (N-1)/2) * split.
fn eval_comb(center: f64, split: f64, fwhm: f64, amps: &[f64], nu: f64) -> f64 {
    let n = amps.len() as f64;
    amps.iter()
        .enumerate()
        .map(|(k, &amp)| {
            let peak = LorentzianPeak {
                center_mhz: center + (k as f64 - (n - 1.0) / 2.0) * split,
                fwhm_mhz: fwhm,
                amplitude: amp,
            };
            lorentzian_eval(&peak, nu)
        })
        .sum()
}

/// Local maxima of the 5-sample moving average whose height is at least
/// 30% of the tallest smoothed value. Returns (frequency, smoothed height),
/// ascending in frequency.
fn pick_peaks(freqs: &[f64], contrasts: &[f64]) -> Vec<(f64, f64)> {
    let smoothed = moving_average(contrasts, 5);
    let max_s = smoothed.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !(max_s > 0.0) {
        return Vec::new();
    }
    let threshold = 0.3 * max_s;
    let mut peaks = Vec::new();
    for i in 1..smoothed.len().saturating_sub(1) {
        if smoothed[i] >= threshold && smoothed[i] > smoothed[i - 1] && smoothed[i] >= smoothed[i + 1]
        {
            peaks.push((freqs[i], smoothed[i]));
        }
    }
    peaks
}

/// Full width at half the peak height, walked on the smoothed curve.
fn half_max_width(freqs: &[f64], contrasts: &[f64], peak_freq: f64) -> f64 {
    let smoothed = moving_average(contrasts, 5);
    let idx = freqs
        .iter()
        .position(|&f| f >= peak_freq)
        .unwrap_or(0)
        .min(freqs.len() - 1);
    let half = smoothed[idx] / 2.0;
    let mut left = freqs[0];
    for i in (0..idx).rev() {
        if smoothed[i] < half {
            left = freqs[i];
            break;
        }
    }
    let mut right = freqs[freqs.len() - 1];
    for (i, &s) in smoothed.iter().enumerate().skip(idx + 1) {
        if s < half {
            right = freqs[i];
            break;
        }
    }
    (right - left).max(2.0 * grid_step(freqs))
}

fn grid_step(freqs: &[f64]) -> f64 {
    if freqs.len() < 2 {
        1.0
    } else {
        (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64
    }
}

/// Splits picked peaks into branch clusters at the largest gap, if that gap
/// clearly dominates the in-cluster structure. Returns the index of the
/// first peak of the upper cluster, or None for single-branch coverage.
fn split_branches(peaks: &[(f64, f64)], span: f64) -> Option<usize> {
    if peaks.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let (k, &largest) = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one gap");
    let max_intra = gaps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, &g)| g)
        .fold(0.0_f64, f64::max);
    let split = if max_intra > 0.0 {
        largest > 1.8 * max_intra
    } else {
        // Two lone humps: branch pair only if they are far apart on the
        // scale of the scan window.
        largest > 0.25 * span
    };
    if split {
        Some(k + 1)
    } else {
        None
    }
}

struct ClusterInit {
    center: f64,
    width: f64,
    height: f64,
    intra_gaps: Vec<f64>,
}

fn cluster_init(peaks: &[(f64, f64)], freqs: &[f64], contrasts: &[f64]) -> ClusterInit {
    let lo = peaks.first().expect("cluster is non-empty").0;
    let hi = peaks.last().expect("cluster is non-empty").0;
    let tallest = peaks
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("cluster is non-empty");
    ClusterInit {
        center: 0.5 * (lo + hi),
        width: half_max_width(freqs, contrasts, tallest.0),
        height: tallest.1,
        intra_gaps: peaks.windows(2).map(|w| w[1].0 - w[0].0).collect(),
    }
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[values.len() / 2])
}

/// Fits a multi-Lorentzian comb model to a spectrum.
///
/// Without an explicit `init`, starting values come from peak picking and
/// the spectrum is classified as double- or single-branch. With `init`, the
/// spectrum is treated as covering both branches and the supplied model is
/// the starting point. D is reported only for double-branch fits.
pub fn fit_odmr(
    spectrum: &OdmrSpectrum,
    isotope: Isotope,
    mode: AmplitudeMode,
    init: Option<&OdmrModelParams>,
) -> Result<OdmrFit> {
    let line_count = isotope.projection_count();
    let freqs = spectrum.frequencies();
    let contrasts = spectrum.contrasts();
    let span = freqs[freqs.len() - 1] - freqs[0];
    if span <= 0.0 {
        return Err(Error::invalid("spectrum has no frequency span"));
    }
    let data: Vec<SeriesPoint> = spectrum
        .samples
        .iter()
        .map(|&(f, c)| SeriesPoint::new(f, c))
        .collect();

    let peaks = pick_peaks(&freqs, &contrasts);
    let detected_peaks = peaks.len();

    if let Some(init) = init {
        init.validate()?;
        if init.line_count != line_count {
            return Err(Error::invalid(format!(
                "initial model has {} lines per branch, isotope needs {line_count}",
                init.line_count
            )));
        }
        return fit_both(
            spectrum, isotope, mode, init, &data, detected_peaks, line_count,
        );
    }

    if peaks.is_empty() {
        return Err(Error::invalid(
            "no resolvable peaks above 30% of maximum; supply an initial model",
        ));
    }

    match split_branches(&peaks, span) {
        Some(split_at) => {
            let lower = cluster_init(&peaks[..split_at], &freqs, &contrasts);
            let upper = cluster_init(&peaks[split_at..], &freqs, &contrasts);
            let mut gaps: Vec<f64> = lower
                .intra_gaps
                .iter()
                .chain(upper.intra_gaps.iter())
                .copied()
                .collect();
            let splitting = median(&mut gaps)
                .unwrap_or_else(|| (0.5 * lower.width.min(upper.width)).max(1.0));
            let shape = unit_shape(isotope, mode)?;
            let max_w = shape.iter().fold(0.0_f64, |a, &b| a.max(b));
            let amp = |h: f64| shape.iter().map(|w| h * w / max_w).collect::<Vec<f64>>();
            let guess = OdmrModelParams {
                branch_centers: (lower.center, upper.center),
                hyperfine_splitting: splitting,
                widths: (lower.width, upper.width),
                amplitudes: (amp(lower.height), amp(upper.height)),
                line_count,
            };
            guess.validate()?;
            fit_both(
                spectrum,
                isotope,
                mode,
                &guess,
                &data,
                detected_peaks,
                line_count,
            )
        }
        None => {
            let cluster = cluster_init(&peaks, &freqs, &contrasts);
            fit_single(
                spectrum,
                isotope,
                mode,
                &cluster,
                &data,
                detected_peaks,
                line_count,
                span,
            )
        }
    }
}

/// Frequency-ordered weights of the minus branch for the ratio mode, or the
/// unpolarized shape as a neutral starting pattern for the free mode.
fn unit_shape(isotope: Isotope, mode: AmplitudeMode) -> Result<Vec<f64>> {
    match mode {
        AmplitudeMode::RatioBinomial { p_up } => ratio_weights(isotope, p_up, Branch::Minus),
        AmplitudeMode::Free => ratio_weights(isotope, 0.5, Branch::Minus),
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_both(
    spectrum: &OdmrSpectrum,
    isotope: Isotope,
    mode: AmplitudeMode,
    guess: &OdmrModelParams,
    data: &[SeriesPoint],
    detected_peaks: usize,
    line_count: usize,
) -> Result<OdmrFit> {
    let span = {
        let f = spectrum.frequencies();
        f[f.len() - 1] - f[0]
    };
    let inf = f64::INFINITY;
    let mut names: Vec<String> = vec![
        "f_minus_mhz".into(),
        "f_plus_mhz".into(),
        "splitting_mhz".into(),
        "fwhm_minus_mhz".into(),
        "fwhm_plus_mhz".into(),
    ];
    let mut init_vals = vec![
        guess.branch_centers.0,
        guess.branch_centers.1,
        guess.hyperfine_splitting.clamp(1e-6, span),
        guess.widths.0.clamp(1e-6, 10.0 * span),
        guess.widths.1.clamp(1e-6, 10.0 * span),
    ];
    let mut bounds = vec![
        (-inf, inf),
        (-inf, inf),
        (1e-6, span),
        (1e-6, 10.0 * span),
        (1e-6, 10.0 * span),
    ];

    let result: FitResult;
    let fitted_amps: (Vec<f64>, Vec<f64>);
    match mode {
        AmplitudeMode::RatioBinomial { p_up } => {
            let w_minus = ratio_weights(isotope, p_up, Branch::Minus)?;
            let w_plus = ratio_weights(isotope, p_up, Branch::Plus)?;
            names.push("scale_minus".into());
            names.push("scale_plus".into());
            init_vals.push(guess.amplitudes.0.iter().sum::<f64>().max(1e-9));
            init_vals.push(guess.amplitudes.1.iter().sum::<f64>().max(1e-9));
            bounds.push((0.0, inf));
            bounds.push((0.0, inf));
            let model = |p: &[f64], nu: f64| -> f64 {
                let minus: Vec<f64> = w_minus.iter().map(|w| p[5] * w).collect();
                let plus: Vec<f64> = w_plus.iter().map(|w| p[6] * w).collect();
                eval_comb(p[0], p[2], p[3], &minus, nu) + eval_comb(p[1], p[2], p[4], &plus, nu)
            };
            let named: Vec<(&str, f64)> = names
                .iter()
                .map(String::as_str)
                .zip(init_vals.iter().copied())
                .collect();
            result = least_squares_fit(
                &model,
                None,
                data,
                &named,
                Some(&bounds),
                &FitOptions::default(),
            )?;
            let p = &result.params;
            fitted_amps = (
                w_minus.iter().map(|w| p[5] * w).collect(),
                w_plus.iter().map(|w| p[6] * w).collect(),
            );
        }
        AmplitudeMode::Free => {
            for k in 0..line_count {
                names.push(format!("amp_minus_{k}"));
                init_vals.push(guess.amplitudes.0[k].max(1e-9));
                bounds.push((0.0, inf));
            }
            for k in 0..line_count {
                names.push(format!("amp_plus_{k}"));
                init_vals.push(guess.amplitudes.1[k].max(1e-9));
                bounds.push((0.0, inf));
            }
            let model = |p: &[f64], nu: f64| -> f64 {
                let a_minus = &p[5..5 + line_count];
                let a_plus = &p[5 + line_count..5 + 2 * line_count];
                eval_comb(p[0], p[2], p[3], a_minus, nu) + eval_comb(p[1], p[2], p[4], a_plus, nu)
            };
            let named: Vec<(&str, f64)> = names
                .iter()
                .map(String::as_str)
                .zip(init_vals.iter().copied())
                .collect();
            result = least_squares_fit(
                &model,
                None,
                data,
                &named,
                Some(&bounds),
                &FitOptions::default(),
            )?;
            let p = &result.params;
            fitted_amps = (
                p[5..5 + line_count].to_vec(),
                p[5 + line_count..5 + 2 * line_count].to_vec(),
            );
        }
    }

    let p = &result.params;
    let (mut c_minus, mut c_plus) = (p[0], p[1]);
    let (mut w_minus, mut w_plus) = (p[3], p[4]);
    let mut amps = fitted_amps;
    if c_minus > c_plus {
        std::mem::swap(&mut c_minus, &mut c_plus);
        std::mem::swap(&mut w_minus, &mut w_plus);
        amps = (amps.1, amps.0);
    }
    let model = OdmrModelParams {
        branch_centers: (c_minus, c_plus),
        hyperfine_splitting: p[2],
        widths: (w_minus, w_plus),
        amplitudes: amps,
        line_count,
    };
    model.validate()?;

    let cov = &result.covariance;
    let var_d = 0.25 * (cov[(0, 0)] + cov[(1, 1)] + 2.0 * cov[(0, 1)]);
    Ok(OdmrFit {
        d_mhz: Some(0.5 * (c_minus + c_plus)),
        d_sigma_mhz: Some(var_d.max(0.0).sqrt()),
        a_zz_mhz: p[2].abs(),
        a_zz_sigma_mhz: result.sigmas[2],
        coverage: BranchCoverage::Both,
        detected_peaks,
        ill_conditioned: detected_peaks < 2 * line_count,
        model,
        result,
    })
}

#[allow(clippy::too_many_arguments)]
fn fit_single(
    spectrum: &OdmrSpectrum,
    isotope: Isotope,
    mode: AmplitudeMode,
    cluster: &ClusterInit,
    data: &[SeriesPoint],
    detected_peaks: usize,
    line_count: usize,
    span: f64,
) -> Result<OdmrFit> {
    let inf = f64::INFINITY;
    let mut gaps = cluster.intra_gaps.clone();
    let splitting = median(&mut gaps).unwrap_or_else(|| (0.5 * cluster.width).max(1.0));
    let shape = unit_shape(isotope, mode)?;
    let max_w = shape.iter().fold(0.0_f64, |a, &b| a.max(b));

    let mut names: Vec<String> = vec![
        "f_branch_mhz".into(),
        "splitting_mhz".into(),
        "fwhm_mhz".into(),
    ];
    let mut init_vals = vec![
        cluster.center,
        splitting.clamp(1e-6, span),
        cluster.width.clamp(1e-6, 10.0 * span),
    ];
    let mut bounds = vec![(-inf, inf), (1e-6, span), (1e-6, 10.0 * span)];

    let result: FitResult;
    let branch_amps: Vec<f64>;
    match mode {
        AmplitudeMode::RatioBinomial { p_up } => {
            // Branch label is unknown before the fit; the minus convention
            // is used for the weight order and revisited below. For the
            // unpolarized default both orders coincide.
            let weights = ratio_weights(isotope, p_up, Branch::Minus)?;
            names.push("scale".into());
            init_vals.push((cluster.height / max_w).max(1e-9));
            bounds.push((0.0, inf));
            let model = |p: &[f64], nu: f64| -> f64 {
                let amps: Vec<f64> = weights.iter().map(|w| p[3] * w).collect();
                eval_comb(p[0], p[1], p[2], &amps, nu)
            };
            let named: Vec<(&str, f64)> = names
                .iter()
                .map(String::as_str)
                .zip(init_vals.iter().copied())
                .collect();
            result = least_squares_fit(
                &model,
                None,
                data,
                &named,
                Some(&bounds),
                &FitOptions::default(),
            )?;
            branch_amps = weights.iter().map(|w| result.params[3] * w).collect();
        }
        AmplitudeMode::Free => {
            for k in 0..line_count {
                names.push(format!("amp_{k}"));
                init_vals.push((cluster.height * shape[k] / max_w).max(1e-9));
                bounds.push((0.0, inf));
            }
            let model = |p: &[f64], nu: f64| -> f64 {
                eval_comb(p[0], p[1], p[2], &p[3..3 + line_count], nu)
            };
            let named: Vec<(&str, f64)> = names
                .iter()
                .map(String::as_str)
                .zip(init_vals.iter().copied())
                .collect();
            result = least_squares_fit(
                &model,
                None,
                data,
                &named,
                Some(&bounds),
                &FitOptions::default(),
            )?;
            branch_amps = result.params[3..3 + line_count].to_vec();
        }
    }

    let p = &result.params;
    let center = p[0];
    let coverage = if center <= ZFS_ROOM_TEMP_MHZ {
        BranchCoverage::SingleMinus
    } else {
        BranchCoverage::SinglePlus
    };
    // A silent partner center keeps the pair-shaped model valid; its
    // amplitudes are zero so it never contributes.
    let offset = spectrum
        .field_gauss
        .map(|b| 2.0 * GAMMA_E_MHZ_PER_G * b)
        .unwrap_or(500.0)
        .max(500.0);
    let zeros = vec![0.0; line_count];
    let model = match coverage {
        BranchCoverage::SingleMinus => OdmrModelParams {
            branch_centers: (center, center + offset),
            hyperfine_splitting: p[1],
            widths: (p[2], p[2]),
            amplitudes: (branch_amps, zeros),
            line_count,
        },
        _ => OdmrModelParams {
            branch_centers: (center - offset, center),
            hyperfine_splitting: p[1],
            widths: (p[2], p[2]),
            amplitudes: (zeros, branch_amps),
            line_count,
        },
    };
    model.validate()?;

    Ok(OdmrFit {
        d_mhz: None,
        d_sigma_mhz: None,
        a_zz_mhz: p[1].abs(),
        a_zz_sigma_mhz: result.sigmas[1],
        coverage,
        detected_peaks,
        ill_conditioned: detected_peaks < line_count,
        model,
        result,
    })
}
