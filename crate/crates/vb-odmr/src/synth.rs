//! Synthetic measurement generation from known ground-truth models.
//!
//! Everything built here is explicitly labeled synthetic, both in the
//! dataset label and in every per-temperature spectrum and trace label, so
//! generated fixtures can never pass as instrument data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constants::GAMMA_E_MHZ_PER_G;
use crate::data::{Dataset, RelaxationTrace};
use crate::fit::ratio_weights;
use crate::fit::{RelaxationMode, RelaxationParams, ThermalModelParams};
use crate::lineshape::{synthesize_spectrum, OdmrModelParams};
use crate::spin::{Branch, Isotope};
use crate::{Error, Result};

/// Ground-truth physics for a synthetic campaign: the thermal models for
/// the branch midpoint and hyperfine splitting, the relaxation model, and
/// the line shape parameters shared by every temperature.
#[derive(Clone, Debug)]
pub struct SynthTruth {
    pub isotope: Isotope,
    pub field_gauss: f64,
    /// Temperature model for the branch midpoint d = (f_minus + f_plus)/2.
    pub d_model: ThermalModelParams,
    /// Temperature model for the hyperfine line spacing.
    pub a_zz_model: ThermalModelParams,
    pub relaxation: RelaxationParams,
    pub fwhm_mhz: f64,
    /// Summed line amplitude per branch.
    pub branch_contrast: f64,
    pub p_up: f64,
}

impl Default for SynthTruth {
    fn default() -> Self {
        SynthTruth {
            isotope: Isotope::N15,
            field_gauss: 90.0,
            d_model: ThermalModelParams {
                nu0_mhz: 3600.0,
                c_nu_mhz: -200.0,
                homega_mev: 18.4,
            },
            a_zz_model: ThermalModelParams {
                nu0_mhz: 70.0,
                c_nu_mhz: -6.0,
                homega_mev: 18.4,
            },
            relaxation: RelaxationParams {
                modes: vec![RelaxationMode {
                    a_per_ms: 4.0,
                    homega_mev: 18.4,
                }],
                a_s_per_ms: 0.01,
            },
            fwhm_mhz: 20.0,
            branch_contrast: 0.08,
            p_up: 0.5,
        }
    }
}

impl SynthTruth {
    /// The full line-shape model at one temperature. Branch centers sit at
    /// d(T) -+ gamma_e B; per-line amplitudes follow the nuclear weight
    /// ratios scaled to `branch_contrast`.
    pub fn odmr_params_at(&self, t_k: f64) -> Result<OdmrModelParams> {
        self.d_model.validate()?;
        self.a_zz_model.validate()?;
        let d = self.d_model.eval(t_k);
        let a_zz = self.a_zz_model.eval(t_k);
        if !(a_zz > 0.0) {
            return Err(Error::invalid(format!(
                "hyperfine model gives non-positive splitting {a_zz} MHz at {t_k} K"
            )));
        }
        let zeeman = GAMMA_E_MHZ_PER_G * self.field_gauss;
        let scale = |w: Vec<f64>| w.into_iter().map(|x| x * self.branch_contrast).collect();
        let params = OdmrModelParams {
            branch_centers: (d - zeeman, d + zeeman),
            hyperfine_splitting: a_zz,
            widths: (self.fwhm_mhz, self.fwhm_mhz),
            amplitudes: (
                scale(ratio_weights(self.isotope, self.p_up, Branch::Minus)?),
                scale(ratio_weights(self.isotope, self.p_up, Branch::Plus)?),
            ),
            line_count: self.isotope.projection_count(),
        };
        params.validate()?;
        Ok(params)
    }

    /// Relaxation rate (1/ms) at one temperature.
    pub fn rate_at(&self, t_k: f64) -> f64 {
        self.relaxation.eval(t_k)
    }
}

/// Sampling plan for a synthetic campaign: which temperatures, what
/// frequency grid, how the decay traces are sampled, and the noise levels.
#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub temperatures_k: Vec<f64>,
    pub grid_lo_mhz: f64,
    pub grid_hi_mhz: f64,
    pub grid_step_mhz: f64,
    /// Absolute 1-sigma noise added to each contrast sample.
    pub contrast_noise: f64,
    /// Samples per relaxation trace, spread over five decay times.
    pub trace_points: usize,
    /// Absolute 1-sigma noise added to each trace sample.
    pub trace_noise: f64,
    pub trace_baseline: f64,
    pub trace_amplitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            temperatures_k: vec![
                10.0, 40.0, 70.0, 100.0, 130.0, 160.0, 190.0, 220.0, 250.0, 280.0, 315.0, 350.0,
            ],
            grid_lo_mhz: 3000.0,
            grid_hi_mhz: 4200.0,
            grid_step_mhz: 1.0,
            contrast_noise: 0.001,
            trace_points: 40,
            trace_noise: 0.002,
            trace_baseline: 1.0,
            trace_amplitude: 0.25,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures_k.is_empty() {
            return Err(Error::invalid("no temperatures requested"));
        }
        if self.temperatures_k.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::invalid("temperatures must be >= 0 K"));
        }
        if !(self.grid_step_mhz > 0.0) || !(self.grid_hi_mhz > self.grid_lo_mhz) {
            return Err(Error::invalid("frequency grid must be ascending with positive step"));
        }
        if !(self.contrast_noise >= 0.0) || !(self.trace_noise >= 0.0) {
            return Err(Error::invalid("noise levels must be >= 0"));
        }
        if self.trace_points < 5 {
            return Err(Error::invalid("traces need at least 5 samples"));
        }
        Ok(())
    }

    fn frequency_grid(&self) -> Vec<f64> {
        let n = ((self.grid_hi_mhz - self.grid_lo_mhz) / self.grid_step_mhz).floor() as usize + 1;
        (0..n)
            .map(|i| self.grid_lo_mhz + i as f64 * self.grid_step_mhz)
            .collect()
    }
}

/// Builds one labeled synthetic dataset: an ODMR spectrum and a relaxation
/// trace at every configured temperature, with all randomness drawn from
/// the single configured seed.
pub fn synthesize_dataset(truth: &SynthTruth, config: &SynthConfig, label: &str) -> Result<Dataset> {
    config.validate()?;
    truth.relaxation.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let grid = config.frequency_grid();
    let mut dataset = Dataset::new(format!("synthetic:{label}"));

    for &t_k in &config.temperatures_k {
        let params = truth.odmr_params_at(t_k)?;
        let spectrum_seed: u64 = master.gen();
        let mut spectrum = synthesize_spectrum(&params, &grid, config.contrast_noise, spectrum_seed)?;
        spectrum.temperature_k = t_k;
        spectrum.field_gauss = Some(truth.field_gauss);
        spectrum.label = format!("synthetic:{label} odmr {t_k} K");
        dataset.spectra.push(spectrum);

        let rate = truth.rate_at(t_k);
        if !(rate > 0.0) {
            return Err(Error::invalid(format!(
                "relaxation model gives non-positive rate {rate} /ms at {t_k} K"
            )));
        }
        let t1_ms = 1.0 / rate;
        let trace_seed: u64 = master.gen();
        let mut rng = ChaCha8Rng::seed_from_u64(trace_seed);
        let noise = Normal::new(0.0, config.trace_noise.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::invalid(e.to_string()))?;
        let samples = (0..config.trace_points)
            .map(|i| {
                let t_ms = 5.0 * t1_ms * i as f64 / (config.trace_points - 1) as f64;
                let clean = config.trace_baseline + config.trace_amplitude * (-t_ms / t1_ms).exp();
                let y = if config.trace_noise > 0.0 {
                    clean + noise.sample(&mut rng)
                } else {
                    clean
                };
                (t_ms, y)
            })
            .collect();
        dataset.traces.push(RelaxationTrace {
            temperature_k: t_k,
            samples,
            label: format!("synthetic:{label} t1 {t_k} K"),
        });
    }
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_t1_trace;
    use crate::lineshape::model_eval;
    use approx::assert_relative_eq;

    #[test]
    fn default_truth_matches_thermal_models_at_300k() {
        let truth = SynthTruth::default();
        let params = truth.odmr_params_at(300.0).unwrap();
        // the midpoint of the two branch centers is exactly d(300 K)
        assert_relative_eq!(params.d_mhz(), 3307.236669175837, epsilon = 1e-9);
        assert_relative_eq!(
            params.hyperfine_splitting,
            70.0 - 6.0 * (0.9638166541208151 + 0.5),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            params.branch_centers.1 - params.branch_centers.0,
            2.0 * GAMMA_E_MHZ_PER_G * 90.0,
            epsilon = 1e-9
        );
        let total: f64 = params.amplitudes.0.iter().sum();
        assert_relative_eq!(total, 0.08, epsilon = 1e-12);
    }

    #[test]
    fn dataset_has_one_spectrum_and_trace_per_temperature() {
        let dataset = synthesize_dataset(
            &SynthTruth::default(),
            &SynthConfig::default(),
            "S1",
        )
        .unwrap();
        assert_eq!(dataset.spectra.len(), 12);
        assert_eq!(dataset.traces.len(), 12);
        assert!(dataset.label.starts_with("synthetic:"), "dataset labeled synthetic");
        assert!(dataset.spectra.iter().all(|s| s.label.contains("synthetic")));
        assert!(dataset.traces.iter().all(|t| t.label.contains("synthetic")));
        dataset.validate().unwrap();
    }

    #[test]
    fn same_seed_reproduces_bytes_different_seed_does_not() {
        let truth = SynthTruth::default();
        let config = SynthConfig::default();
        let a = synthesize_dataset(&truth, &config, "S1").unwrap();
        let b = synthesize_dataset(&truth, &config, "S1").unwrap();
        for (sa, sb) in a.spectra.iter().zip(&b.spectra) {
            assert_eq!(sa.samples, sb.samples, "same seed, same samples");
        }
        let mut other = config.clone();
        other.seed = 43;
        let c = synthesize_dataset(&truth, &other, "S1").unwrap();
        assert_ne!(a.spectra[0].samples, c.spectra[0].samples, "seed changes noise");
    }

    #[test]
    fn zero_noise_spectrum_equals_model() {
        let truth = SynthTruth::default();
        let mut config = SynthConfig::default();
        config.contrast_noise = 0.0;
        config.trace_noise = 0.0;
        config.temperatures_k = vec![200.0];
        let dataset = synthesize_dataset(&truth, &config, "clean").unwrap();
        let params = truth.odmr_params_at(200.0).unwrap();
        for &(f, c) in &dataset.spectra[0].samples {
            assert_relative_eq!(c, model_eval(&params, f), epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_noise_trace_recovers_its_decay_time() {
        let truth = SynthTruth::default();
        let mut config = SynthConfig::default();
        config.trace_noise = 0.0;
        config.temperatures_k = vec![300.0];
        let dataset = synthesize_dataset(&truth, &config, "clean").unwrap();
        let (t1, fit) = fit_t1_trace(&dataset.traces[0].to_points()).unwrap();
        assert!(fit.converged, "clean exponential must converge");
        assert_relative_eq!(t1, 1.0 / truth.rate_at(300.0), max_relative = 1e-6);
    }

    #[test]
    fn n14_dataset_uses_seven_lines() {
        let mut truth = SynthTruth::default();
        truth.isotope = Isotope::N14;
        truth.a_zz_model = ThermalModelParams {
            nu0_mhz: 47.0,
            c_nu_mhz: -2.0,
            homega_mev: 18.4,
        };
        let params = truth.odmr_params_at(300.0).unwrap();
        assert_eq!(params.line_count, 7);
        assert_eq!(params.amplitudes.0.len(), 7);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let truth = SynthTruth::default();
        let mut config = SynthConfig::default();
        config.temperatures_k.clear();
        assert!(synthesize_dataset(&truth, &config, "x").is_err());

        let mut config = SynthConfig::default();
        config.grid_step_mhz = 0.0;
        assert!(synthesize_dataset(&truth, &config, "x").is_err());

        // a splitting model that crosses zero inside the campaign is physics
        // nonsense and must be caught, not synthesized
        let mut truth = SynthTruth::default();
        truth.a_zz_model.nu0_mhz = 1.0;
        let config = SynthConfig::default();
        assert!(synthesize_dataset(&truth, &config, "x").is_err());
    }
}
