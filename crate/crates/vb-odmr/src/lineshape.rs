//! Multi-Lorentzian ODMR contrast model: evaluation, synthetic spectra, and
//! the maximum-slope search feeding the sensitivity formulas.
//!
//! Contrast is stored as a positive dip depth; Lorentzians are
//! peak-normalized so a line's amplitude is its contrast at center.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::util::golden_min;
use crate::{Error, Result};

/// A single peak-normalized Lorentzian line.
#[derive(Clone, Copy, Debug)]
pub struct LorentzianPeak {
    pub center_mhz: f64,
    pub fwhm_mhz: f64,
    pub amplitude: f64,
}

/// amplitude * (fwhm/2)^2 / ((nu - center)^2 + (fwhm/2)^2).
pub fn lorentzian_eval(peak: &LorentzianPeak, nu_mhz: f64) -> f64 {
    let hw = 0.5 * peak.fwhm_mhz;
    let d = nu_mhz - peak.center_mhz;
    peak.amplitude * hw * hw / (d * d + hw * hw)
}

/// d/d(nu) of `lorentzian_eval`.
pub fn lorentzian_derivative(peak: &LorentzianPeak, nu_mhz: f64) -> f64 {
    let hw = 0.5 * peak.fwhm_mhz;
    let d = nu_mhz - peak.center_mhz;
    let denom = d * d + hw * hw;
    -2.0 * peak.amplitude * hw * hw * d / (denom * denom)
}

/// Double-branch hyperfine comb: each branch is `line_count` equally spaced
/// Lorentzians sharing one width, the comb centered on the branch center.
#[derive(Clone, Debug)]
pub struct OdmrModelParams {
    /// (f_minus, f_plus), MHz; f_minus < f_plus.
    pub branch_centers: (f64, f64),
    /// Spacing between adjacent hyperfine lines, MHz; > 0.
    pub hyperfine_splitting: f64,
    /// FWHM per branch, MHz.
    pub widths: (f64, f64),
    /// Per-line contrast, one list per branch, each of length `line_count`.
    pub amplitudes: (Vec<f64>, Vec<f64>),
    /// Hyperfine lines per branch: 4 (spin-1/2 nuclei) or 7 (spin-1).
    pub line_count: usize,
}

impl OdmrModelParams {
    pub fn validate(&self) -> Result<()> {
        let (f_minus, f_plus) = self.branch_centers;
        if !(f_minus < f_plus) {
            return Err(Error::invalid(format!(
                "branch centers must be ordered: {f_minus} >= {f_plus}"
            )));
        }
        if !(self.hyperfine_splitting > 0.0) {
            return Err(Error::invalid("hyperfine splitting must be > 0"));
        }
        if !(self.widths.0 > 0.0 && self.widths.1 > 0.0) {
            return Err(Error::invalid("widths must be > 0"));
        }
        if self.line_count != 4 && self.line_count != 7 {
            return Err(Error::invalid(format!(
                "line_count must be 4 or 7, got {}",
                self.line_count
            )));
        }
        for amps in [&self.amplitudes.0, &self.amplitudes.1] {
            if amps.len() != self.line_count {
                return Err(Error::invalid(format!(
                    "amplitude list length {} != line_count {}",
                    amps.len(),
                    self.line_count
                )));
            }
            if amps.iter().any(|&a| a < 0.0 || !a.is_finite()) {
                return Err(Error::invalid("amplitudes must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Mean of the branch centers.
    pub fn d_mhz(&self) -> f64 {
        0.5 * (self.branch_centers.0 + self.branch_centers.1)
    }

    /// Line centers of one branch, ascending. Line k sits at
    /// f_branch + (k - (N-1)/2) * splitting.
    pub fn line_positions(&self, branch: usize) -> Vec<f64> {
        let center = if branch == 0 {
            self.branch_centers.0
        } else {
            self.branch_centers.1
        };
        let n = self.line_count;
        (0..n)
            .map(|k| center + (k as f64 - (n as f64 - 1.0) / 2.0) * self.hyperfine_splitting)
            .collect()
    }

    /// All constituent peaks of the model.
    pub fn peaks(&self) -> Vec<LorentzianPeak> {
        let mut out = Vec::with_capacity(2 * self.line_count);
        for branch in 0..2 {
            let width = if branch == 0 { self.widths.0 } else { self.widths.1 };
            let amps = if branch == 0 { &self.amplitudes.0 } else { &self.amplitudes.1 };
            for (pos, &amp) in self.line_positions(branch).iter().zip(amps.iter()) {
                out.push(LorentzianPeak {
                    center_mhz: *pos,
                    fwhm_mhz: width,
                    amplitude: amp,
                });
            }
        }
        out
    }

    /// Largest model value over all line centers; a cheap stand-in for the
    /// peak contrast of the spectrum.
    pub fn peak_contrast(&self) -> f64 {
        self.peaks()
            .iter()
            .map(|p| model_eval(self, p.center_mhz))
            .fold(0.0, f64::max)
    }
}

/// Sum of both branches' Lorentzians at one frequency.
pub fn model_eval(params: &OdmrModelParams, nu_mhz: f64) -> f64 {
    params
        .peaks()
        .iter()
        .map(|p| lorentzian_eval(p, nu_mhz))
        .sum()
}

/// Analytic d/d(nu) of `model_eval`.
pub fn model_derivative(params: &OdmrModelParams, nu_mhz: f64) -> f64 {
    params
        .peaks()
        .iter()
        .map(|p| lorentzian_derivative(p, nu_mhz))
        .sum()
}

/// One measured or synthesized contrast-vs-frequency sweep.
#[derive(Clone, Debug)]
pub struct OdmrSpectrum {
    /// (frequency MHz, contrast) with strictly increasing frequencies.
    pub samples: Vec<(f64, f64)>,
    pub temperature_k: f64,
    pub field_gauss: Option<f64>,
    pub label: String,
}

impl OdmrSpectrum {
    /// Wraps samples after checking the frequency axis is strictly
    /// increasing and non-empty.
    pub fn new(samples: Vec<(f64, f64)>, temperature_k: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("spectrum needs at least one sample"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("spectrum frequencies must be strictly increasing"));
        }
        Ok(OdmrSpectrum {
            samples,
            temperature_k,
            field_gauss: None,
            label: String::new(),
        })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn contrasts(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }
}

/// Evaluates the model on `grid` and adds Gaussian noise of standard
/// deviation `noise_sigma`; deterministic for a fixed seed.
pub fn synthesize_spectrum(
    params: &OdmrModelParams,
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<OdmrSpectrum> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("frequency grid is empty"));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid("noise sigma must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE))
        .expect("sigma is finite and positive");
    let samples = grid
        .iter()
        .map(|&nu| {
            let clean = model_eval(params, nu);
            let value = if noise_sigma > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            };
            (nu, value)
        })
        .collect();
    OdmrSpectrum::new(samples, 0.0)
}

/// Location and value of the maximum |dC/d(nu)| of a model.
#[derive(Clone, Copy, Debug)]
pub struct MaxSlope {
    /// Contrast per MHz.
    pub per_mhz: f64,
    /// Frequency at which the maximum occurs, MHz.
    pub at_mhz: f64,
}

impl MaxSlope {
    /// Contrast per Hz.
    pub fn per_hz(&self) -> f64 {
        self.per_mhz * 1e-6
    }
}

/// Global maximum of |dC/d(nu)|: a dense scan (20 points per FWHM across
/// +-5 FWHM around every line) followed by golden-section refinement of the
/// best bracket down to 1e-4 MHz.
pub fn max_abs_derivative(params: &OdmrModelParams) -> MaxSlope {
    let peaks = params.peaks();
    let mut best = MaxSlope {
        per_mhz: 0.0,
        at_mhz: peaks.first().map(|p| p.center_mhz).unwrap_or(0.0),
    };
    let mut best_step = 0.0;
    for peak in &peaks {
        if peak.amplitude == 0.0 {
            continue;
        }
        let step = peak.fwhm_mhz / 20.0;
        let lo = peak.center_mhz - 5.0 * peak.fwhm_mhz;
        let n_steps = 200;
        for i in 0..=n_steps {
            let nu = lo + step * i as f64;
            let slope = model_derivative(params, nu).abs();
            if slope > best.per_mhz {
                best = MaxSlope {
                    per_mhz: slope,
                    at_mhz: nu,
                };
                best_step = step;
            }
        }
    }
    if best.per_mhz == 0.0 {
        return best;
    }
    let refined = golden_min(
        |nu| -model_derivative(params, nu).abs(),
        best.at_mhz - best_step,
        best.at_mhz + best_step,
        1e-4,
    );
    let refined_slope = model_derivative(params, refined).abs();
    if refined_slope > best.per_mhz {
        best = MaxSlope {
            per_mhz: refined_slope,
            at_mhz: refined,
        };
    }
    best
}
