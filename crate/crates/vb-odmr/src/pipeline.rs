//! The batch analysis pipeline: per-temperature spectrum and decay fits,
//! temperature models on the extracted parameters, susceptibility,
//! relaxation, and sensitivity, with cross-dataset aggregation.
//!
//! Stages are isolated. A stage that cannot run records why and leaves the
//! stages that do not depend on it untouched, so one bad spectrum never
//! sinks a whole run.

use std::path::PathBuf;

use crate::data::Dataset;
use crate::fit::{
    fit_odmr, fit_relaxation, fit_susceptibility, fit_t1_trace, fit_thermal, AmplitudeMode,
    EnergyConstraint, RelaxationParams, SeriesPoint, ThermalModelParams,
};
use crate::lineshape::{OdmrModelParams, OdmrSpectrum};
use crate::sensitivity::{sensitivity_report, SensitivityReport};
use crate::spin::Isotope;
use crate::{Error, Result};

/// How the phonon energy entering the relaxation fit is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HomegaPolicy {
    /// Fit the energy as a free parameter.
    Free,
    /// Pin it to the energy recovered by the thermal fit on d(T).
    Thermal,
    /// Pin it to a user-supplied value in meV.
    Fixed(f64),
}

/// Everything a run needs besides the data. The seed covers every random
/// draw a run can make, so identical configs and inputs produce identical
/// outputs byte for byte.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub isotope: Isotope,
    /// Applied to spectra that do not carry their own field annotation.
    pub field_gauss: Option<f64>,
    pub amplitude_mode: AmplitudeMode,
    /// Temperature window for the susceptibility line fit, K.
    pub susceptibility_window_k: (f64, f64),
    pub homega_policy: HomegaPolicy,
    pub output_dir: PathBuf,
    pub plot: bool,
    pub seed: u64,
    /// Detected photon rate used for sensitivity estimates, counts/s.
    pub photon_rate_hz: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            isotope: Isotope::N15,
            field_gauss: None,
            amplitude_mode: AmplitudeMode::ratio_binomial(),
            susceptibility_window_k: (250.0, 350.0),
            homega_policy: HomegaPolicy::Free,
            output_dir: PathBuf::from("out"),
            plot: true,
            seed: 42,
            photon_rate_hz: 2.6e6,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.susceptibility_window_k.0 < self.susceptibility_window_k.1) {
            return Err(Error::invalid(format!(
                "susceptibility window [{}, {}] K is not ordered",
                self.susceptibility_window_k.0, self.susceptibility_window_k.1
            )));
        }
        if !(self.photon_rate_hz > 0.0) {
            return Err(Error::invalid("photon rate must be > 0"));
        }
        if let HomegaPolicy::Fixed(e) = self.homega_policy {
            if !(e > 0.0) {
                return Err(Error::invalid("fixed phonon energy must be > 0 meV"));
            }
        }
        if let Some(b) = self.field_gauss {
            if !b.is_finite() {
                return Err(Error::invalid("field must be finite"));
            }
        }
        Ok(())
    }

    /// Key/value echo of the configuration, recorded in every report.
    pub fn summary_pairs(&self) -> Vec<(String, String)> {
        let mode = match self.amplitude_mode {
            AmplitudeMode::RatioBinomial { p_up } => format!("ratio_binomial(p_up={p_up})"),
            AmplitudeMode::Free => "free".to_string(),
        };
        let policy = match self.homega_policy {
            HomegaPolicy::Free => "free".to_string(),
            HomegaPolicy::Thermal => "thermal".to_string(),
            HomegaPolicy::Fixed(e) => format!("fixed({e} meV)"),
        };
        vec![
            ("isotope".into(), format!("{:?}", self.isotope)),
            (
                "field_gauss".into(),
                self.field_gauss.map_or("none".into(), |b| b.to_string()),
            ),
            ("amplitude_mode".into(), mode),
            (
                "susceptibility_window_k".into(),
                format!(
                    "{}..{}",
                    self.susceptibility_window_k.0, self.susceptibility_window_k.1
                ),
            ),
            ("homega_policy".into(), policy),
            ("output_dir".into(), self.output_dir.display().to_string()),
            ("plot".into(), self.plot.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("photon_rate_hz".into(), self.photon_rate_hz.to_string()),
        ]
    }
}

/// One spectrum's fitted parameters.
#[derive(Clone, Debug)]
pub struct TemperatureFit {
    pub dataset: String,
    pub temperature_k: f64,
    /// Branch midpoint; absent when only one branch was in the scan.
    pub d_mhz: Option<f64>,
    pub d_sigma_mhz: Option<f64>,
    pub a_zz_mhz: f64,
    pub a_zz_sigma_mhz: f64,
    /// Peak contrast of the fitted comb.
    pub contrast: f64,
    /// Mean of the two branch FWHMs.
    pub linewidth_mhz: f64,
    pub converged: bool,
    pub ill_conditioned: bool,
    /// Full fitted model, kept for the sensitivity stage and plots.
    pub model: OdmrModelParams,
}

/// One decay trace's fitted parameters.
#[derive(Clone, Debug)]
pub struct DecayFit {
    pub dataset: String,
    pub temperature_k: f64,
    pub t1_ms: f64,
    pub t1_sigma_ms: Option<f64>,
    pub rate_per_ms: f64,
    pub rate_sigma_per_ms: Option<f64>,
    pub converged: bool,
}

/// A fitted temperature model for one extracted series.
#[derive(Clone, Debug)]
pub struct ThermalFitEntry {
    /// Which series was fitted: "d_mhz" or "a_zz_mhz".
    pub series: String,
    pub params: ThermalModelParams,
    /// Sigmas in (nu0, c, homega) order.
    pub sigmas: [f64; 3],
    pub converged: bool,
    pub zero_kelvin_mhz: f64,
}

/// The fitted relaxation model for one dataset.
#[derive(Clone, Debug)]
pub struct RelaxationFitEntry {
    pub params: RelaxationParams,
    pub param_names: Vec<String>,
    pub sigmas: Vec<f64>,
    pub converged: bool,
    /// Which energy policy produced it, echoed for the report.
    pub policy: String,
}

impl RelaxationFitEntry {
    /// Flat (value, sigma) pairs in `param_names` order. Under a pinned
    /// energy policy the energy is not a parameter and has no row here.
    pub fn params_with_sigmas(&self) -> Vec<(f64, f64)> {
        self.param_names
            .iter()
            .zip(&self.sigmas)
            .map(|(name, &sigma)| {
                let value = if name == "a_s_per_ms" {
                    self.params.a_s_per_ms
                } else if let Some(rest) = name.strip_prefix("homega_") {
                    let i: usize = rest.trim_end_matches("_mev").parse().unwrap_or(0);
                    self.params.modes[i].homega_mev
                } else if let Some(rest) = name.strip_prefix("a_") {
                    let i: usize = rest.trim_end_matches("_per_ms").parse().unwrap_or(0);
                    self.params.modes[i].a_per_ms
                } else {
                    f64::NAN
                };
                (value, sigma)
            })
            .collect()
    }
}

/// The sensitivity estimate for one dataset.
#[derive(Clone, Debug)]
pub struct SensitivityEntry {
    /// Temperature of the spectrum the estimate is based on.
    pub temperature_k: f64,
    pub report: SensitivityReport,
}

/// Everything extracted from one dataset.
#[derive(Clone, Debug, Default)]
pub struct DatasetReport {
    pub label: String,
    pub odmr_rows: Vec<TemperatureFit>,
    pub decay_rows: Vec<DecayFit>,
    pub d_thermal: Option<ThermalFitEntry>,
    pub a_zz_thermal: Option<ThermalFitEntry>,
    /// (slope MHz/K, sigma) over the configured window.
    pub susceptibility: Option<(f64, f64)>,
    pub relaxation: Option<RelaxationFitEntry>,
    pub sensitivity: Option<SensitivityEntry>,
    /// Stages that could not run, with why.
    pub stage_errors: Vec<String>,
    /// Non-error observations (skipped optional stages, repairs).
    pub notes: Vec<String>,
}

/// Mean and spread of one scalar across datasets.
#[derive(Clone, Debug)]
pub struct AggregateEntry {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation; 0 when only one value contributed.
    pub std: f64,
    pub count: usize,
}

/// A full run: config echo, one report per dataset, and cross-dataset
/// aggregates (present only when more than one dataset was supplied).
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub config: Vec<(String, String)>,
    /// Whether SVG plots should be written alongside the CSVs.
    pub plot: bool,
    pub datasets: Vec<DatasetReport>,
    pub aggregates: Vec<AggregateEntry>,
}

impl RunReport {
    /// True when any dataset recorded a fit that did not converge or a
    /// stage error mentioning a fit; drives the process exit code.
    pub fn has_fit_failures(&self) -> bool {
        self.datasets.iter().any(|d| {
            d.odmr_rows.iter().any(|r| !r.converged)
                || d.decay_rows.iter().any(|r| !r.converged)
                || d.d_thermal.as_ref().is_some_and(|e| !e.converged)
                || d.a_zz_thermal.as_ref().is_some_and(|e| !e.converged)
                || d.relaxation.as_ref().is_some_and(|e| !e.converged)
                || !d.stage_errors.is_empty()
        })
    }
}

fn record<T>(errors: &mut Vec<String>, stage: &str, result: Result<T>) -> Option<T> {
    match result {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{stage}: {e}"));
            None
        }
    }
}

/// Weighted points when every sigma is usable, unweighted otherwise.
/// Mixing weighted and unweighted points would let a default weight of 1
/// drown real sigmas of a few kHz, so it is all or nothing.
fn series_points(xs: &[f64], ys: &[f64], sigmas: &[Option<f64>]) -> Vec<SeriesPoint> {
    let all_usable = sigmas
        .iter()
        .all(|s| s.is_some_and(|v| v.is_finite() && v > 0.0));
    xs.iter()
        .zip(ys)
        .zip(sigmas)
        .map(|((&x, &y), s)| {
            if all_usable {
                SeriesPoint::with_sigma(x, y, s.unwrap())
            } else {
                SeriesPoint::new(x, y)
            }
        })
        .collect()
}

fn fit_spectra(
    config: &RunConfig,
    dataset: &Dataset,
    report: &mut DatasetReport,
) {
    let mut spectra: Vec<&OdmrSpectrum> = dataset.spectra.iter().collect();
    spectra.sort_by(|a, b| a.temperature_k.total_cmp(&b.temperature_k));
    for spectrum in spectra {
        let stage = format!("odmr fit at {} K", spectrum.temperature_k);
        let fitted = if spectrum.field_gauss.is_none() && config.field_gauss.is_some() {
            let mut annotated = spectrum.clone();
            annotated.field_gauss = config.field_gauss;
            fit_odmr(&annotated, config.isotope, config.amplitude_mode, None)
        } else {
            fit_odmr(spectrum, config.isotope, config.amplitude_mode, None)
        };
        let Some(fit) = record(&mut report.stage_errors, &stage, fitted) else {
            continue;
        };
        report.odmr_rows.push(TemperatureFit {
            dataset: dataset.label.clone(),
            temperature_k: spectrum.temperature_k,
            d_mhz: fit.d_mhz,
            d_sigma_mhz: fit.d_sigma_mhz,
            a_zz_mhz: fit.a_zz_mhz,
            a_zz_sigma_mhz: fit.a_zz_sigma_mhz,
            contrast: fit.model.peak_contrast(),
            linewidth_mhz: 0.5 * (fit.model.widths.0 + fit.model.widths.1),
            converged: fit.result.converged,
            ill_conditioned: fit.ill_conditioned,
            model: fit.model,
        });
    }
}

fn fit_temperature_models(config: &RunConfig, report: &mut DatasetReport) {
    let d_rows: Vec<&TemperatureFit> = report
        .odmr_rows
        .iter()
        .filter(|r| r.converged && r.d_mhz.is_some())
        .collect();
    let temps: Vec<f64> = d_rows.iter().map(|r| r.temperature_k).collect();
    let ds: Vec<f64> = d_rows.iter().map(|r| r.d_mhz.unwrap()).collect();
    let d_sigmas: Vec<Option<f64>> = d_rows.iter().map(|r| r.d_sigma_mhz).collect();
    let d_points = series_points(&temps, &ds, &d_sigmas);

    let fit_series = |points: &[SeriesPoint], series: &str, errors: &mut Vec<String>| {
        let run = || -> Result<ThermalFitEntry> {
            let init = ThermalModelParams::initial_guess(points)?;
            let (params, result) = fit_thermal(points, &init)?;
            Ok(ThermalFitEntry {
                series: series.to_string(),
                sigmas: [
                    result.sigma("nu0_mhz").unwrap_or(f64::NAN),
                    result.sigma("c_nu_mhz").unwrap_or(f64::NAN),
                    result.sigma("homega_mev").unwrap_or(f64::NAN),
                ],
                converged: result.converged,
                zero_kelvin_mhz: params.zero_kelvin_value(),
                params,
            })
        };
        record(errors, &format!("thermal fit on {series}"), run())
    };

    report.d_thermal = fit_series(&d_points, "d_mhz", &mut report.stage_errors);

    let a_rows: Vec<&TemperatureFit> = report.odmr_rows.iter().filter(|r| r.converged).collect();
    let temps: Vec<f64> = a_rows.iter().map(|r| r.temperature_k).collect();
    let azs: Vec<f64> = a_rows.iter().map(|r| r.a_zz_mhz).collect();
    let a_sigmas: Vec<Option<f64>> = a_rows
        .iter()
        .map(|r| Some(r.a_zz_sigma_mhz).filter(|s| s.is_finite() && *s > 0.0))
        .collect();
    let a_points = series_points(&temps, &azs, &a_sigmas);
    report.a_zz_thermal = fit_series(&a_points, "a_zz_mhz", &mut report.stage_errors);

    let (w_lo, w_hi) = config.susceptibility_window_k;
    report.susceptibility = record(
        &mut report.stage_errors,
        "susceptibility",
        fit_susceptibility(&d_points, w_lo, w_hi),
    );
}

fn fit_decays(config: &RunConfig, dataset: &Dataset, report: &mut DatasetReport) {
    if dataset.traces.is_empty() {
        report
            .notes
            .push("no relaxation traces supplied; decay and relaxation stages skipped".into());
        return;
    }
    let mut traces: Vec<_> = dataset.traces.iter().collect();
    traces.sort_by(|a, b| a.temperature_k.total_cmp(&b.temperature_k));
    for trace in traces {
        let stage = format!("decay fit at {} K", trace.temperature_k);
        let Some((t1, result)) = record(
            &mut report.stage_errors,
            &stage,
            fit_t1_trace(&trace.to_points()),
        ) else {
            continue;
        };
        let t1_sigma = result.sigma("t1_ms").filter(|s| s.is_finite() && *s > 0.0);
        report.decay_rows.push(DecayFit {
            dataset: dataset.label.clone(),
            temperature_k: trace.temperature_k,
            t1_ms: t1,
            t1_sigma_ms: t1_sigma,
            rate_per_ms: 1.0 / t1,
            // first-order propagation through rate = 1/t1
            rate_sigma_per_ms: t1_sigma.map(|s| s / (t1 * t1)),
            converged: result.converged,
        });
    }

    let usable: Vec<&DecayFit> = report
        .decay_rows
        .iter()
        .filter(|r| r.converged && r.t1_ms > 0.0)
        .collect();
    if usable.is_empty() {
        report
            .stage_errors
            .push("relaxation: no converged decay fits to model".into());
        return;
    }
    let run = || -> Result<RelaxationFitEntry> {
        let (constraint, policy) = match config.homega_policy {
            HomegaPolicy::Fixed(e) => (EnergyConstraint::Fixed(vec![e]), format!("fixed({e} meV)")),
            HomegaPolicy::Thermal => {
                let entry = report.d_thermal.as_ref().ok_or_else(|| {
                    Error::invalid("energy policy `thermal` needs a successful d(T) fit")
                })?;
                let e = entry.params.homega_mev;
                (EnergyConstraint::Fixed(vec![e]), format!("thermal({e} meV)"))
            }
            HomegaPolicy::Free => {
                let init = report
                    .d_thermal
                    .as_ref()
                    .map_or(20.0, |e| e.params.homega_mev);
                (EnergyConstraint::Free(vec![init]), "free".to_string())
            }
        };
        let temps: Vec<f64> = usable.iter().map(|r| r.temperature_k).collect();
        let rates: Vec<f64> = usable.iter().map(|r| r.rate_per_ms).collect();
        let sigmas: Vec<Option<f64>> = usable.iter().map(|r| r.rate_sigma_per_ms).collect();
        let points = series_points(&temps, &rates, &sigmas);
        let (params, result) = fit_relaxation(&points, &constraint)?;
        Ok(RelaxationFitEntry {
            params,
            param_names: result.param_names.clone(),
            sigmas: result.sigmas.clone(),
            converged: result.converged,
            policy,
        })
    };
    report.relaxation = record(&mut report.stage_errors, "relaxation", run());
}

fn estimate_sensitivity(config: &RunConfig, report: &mut DatasetReport) {
    let row = report
        .odmr_rows
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| {
            (a.temperature_k - 300.0)
                .abs()
                .total_cmp(&(b.temperature_k - 300.0).abs())
        });
    let Some(row) = row else {
        report
            .stage_errors
            .push("sensitivity: no converged spectrum fit to evaluate".into());
        return;
    };
    let chi = report.susceptibility.map(|(slope, _)| slope);
    report.sensitivity = record(
        &mut report.stage_errors,
        &format!("sensitivity at {} K", row.temperature_k),
        sensitivity_report(&row.model, config.photon_rate_hz, chi).map(|rep| SensitivityEntry {
            temperature_k: row.temperature_k,
            report: rep,
        }),
    );
}

fn push_value(bag: &mut Vec<(String, Vec<f64>)>, name: &str, value: f64) {
    if !value.is_finite() {
        return;
    }
    match bag.iter_mut().find(|(k, _)| k == name) {
        Some((_, vs)) => vs.push(value),
        None => bag.push((name.to_string(), vec![value])),
    }
}

fn aggregate(datasets: &[DatasetReport]) -> Vec<AggregateEntry> {
    let mut bag: Vec<(String, Vec<f64>)> = Vec::new();
    for d in datasets {
        for (prefix, entry) in [("d", &d.d_thermal), ("a_zz", &d.a_zz_thermal)] {
            if let Some(e) = entry {
                push_value(&mut bag, &format!("{prefix}.nu0_mhz"), e.params.nu0_mhz);
                push_value(&mut bag, &format!("{prefix}.c_nu_mhz"), e.params.c_nu_mhz);
                push_value(&mut bag, &format!("{prefix}.homega_mev"), e.params.homega_mev);
                push_value(&mut bag, &format!("{prefix}.zero_kelvin_mhz"), e.zero_kelvin_mhz);
            }
        }
        if let Some((slope, _)) = d.susceptibility {
            push_value(&mut bag, "susceptibility_mhz_per_k", slope);
        }
        if let Some(r) = &d.relaxation {
            let values = {
                let mut v: Vec<f64> = Vec::new();
                for m in &r.params.modes {
                    v.push(m.a_per_ms);
                }
                v
            };
            for (i, a) in values.iter().enumerate() {
                push_value(&mut bag, &format!("relaxation.a_{i}_per_ms"), *a);
                push_value(
                    &mut bag,
                    &format!("relaxation.homega_{i}_mev"),
                    r.params.modes[i].homega_mev,
                );
            }
            push_value(&mut bag, "relaxation.a_s_per_ms", r.params.a_s_per_ms);
        }
        if let Some(s) = &d.sensitivity {
            push_value(&mut bag, "eta_b_g_per_sqrt_hz", s.report.eta_b_g_per_sqrt_hz);
            if let Some(eta_t) = s.report.eta_t_k_per_sqrt_hz {
                push_value(&mut bag, "eta_t_k_per_sqrt_hz", eta_t);
            }
        }
    }
    bag.into_iter()
        .map(|(name, vs)| {
            let n = vs.len();
            let mean = vs.iter().sum::<f64>() / n as f64;
            let std = if n >= 2 {
                (vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregateEntry {
                name,
                mean,
                std,
                count: n,
            }
        })
        .collect()
}

/// Runs only the spectrum-fit stage on one dataset. Thermal models,
/// susceptibility, and sensitivity are not attempted.
pub fn fit_spectra_stage(config: &RunConfig, dataset: &Dataset) -> Result<DatasetReport> {
    config.validate()?;
    let mut dr = DatasetReport {
        label: dataset.label.clone(),
        ..DatasetReport::default()
    };
    fit_spectra(config, dataset, &mut dr);
    Ok(dr)
}

/// Runs only the decay and relaxation stages on one dataset. The `thermal`
/// energy policy has no d(T) fit to draw from here and is rejected.
pub fn fit_decay_stage(config: &RunConfig, dataset: &Dataset) -> Result<DatasetReport> {
    config.validate()?;
    if config.homega_policy == HomegaPolicy::Thermal {
        return Err(Error::invalid(
            "energy policy `thermal` needs the full pipeline; use `free` or a fixed value",
        ));
    }
    let mut dr = DatasetReport {
        label: dataset.label.clone(),
        ..DatasetReport::default()
    };
    fit_decays(config, dataset, &mut dr);
    Ok(dr)
}

/// Runs every stage on every dataset. Only configuration and dataset-shape
/// problems are hard errors; anything that goes wrong inside a stage is
/// recorded on that dataset's report instead.
pub fn run_pipeline(config: &RunConfig, datasets: &[Dataset]) -> Result<RunReport> {
    config.validate()?;
    if datasets.is_empty() {
        return Err(Error::invalid("no datasets supplied"));
    }
    let mut labels: Vec<&str> = datasets.iter().map(|d| d.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("dataset labels must be unique within a run"));
    }
    for d in datasets {
        d.validate()?;
    }

    let mut report = RunReport {
        config: config.summary_pairs(),
        plot: config.plot,
        ..RunReport::default()
    };
    for dataset in datasets {
        let mut dr = DatasetReport {
            label: dataset.label.clone(),
            ..DatasetReport::default()
        };
        fit_spectra(config, dataset, &mut dr);
        if dr.odmr_rows.is_empty() && !dataset.spectra.is_empty() {
            dr.notes.push("no spectrum fits succeeded".into());
        }
        if dataset.spectra.is_empty() {
            dr.notes
                .push("no spectra supplied; spectrum-derived stages skipped".into());
        } else {
            fit_temperature_models(config, &mut dr);
        }
        fit_decays(config, dataset, &mut dr);
        if !dataset.spectra.is_empty() {
            estimate_sensitivity(config, &mut dr);
        }
        report.datasets.push(dr);
    }
    if datasets.len() > 1 {
        report.aggregates = aggregate(&report.datasets);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_dataset, SynthConfig, SynthTruth};
    use approx::assert_relative_eq;

    fn small_campaign(noise: f64, seed: u64) -> Dataset {
        let truth = SynthTruth::default();
        let config = SynthConfig {
            grid_step_mhz: 2.0,
            contrast_noise: noise,
            trace_noise: if noise > 0.0 { 0.002 } else { 0.0 },
            seed,
            ..SynthConfig::default()
        };
        synthesize_dataset(&truth, &config, "S1").unwrap()
    }

    #[test]
    fn clean_campaign_recovers_the_generating_models() {
        let dataset = small_campaign(0.0, 1);
        let config = RunConfig::default();
        let report = run_pipeline(&config, std::slice::from_ref(&dataset)).unwrap();
        let dr = &report.datasets[0];
        assert_eq!(dr.odmr_rows.len(), 12);
        assert_eq!(dr.decay_rows.len(), 12);
        assert!(dr.stage_errors.is_empty(), "{:?}", dr.stage_errors);

        let d = dr.d_thermal.as_ref().expect("d(T) model fitted");
        assert_relative_eq!(d.params.nu0_mhz, 3600.0, max_relative = 1e-3);
        assert_relative_eq!(d.params.c_nu_mhz, -200.0, max_relative = 5e-2);
        assert_relative_eq!(d.params.homega_mev, 18.4, max_relative = 5e-2);
        assert_relative_eq!(d.zero_kelvin_mhz, 3500.0, max_relative = 1e-3);

        let a = dr.a_zz_thermal.as_ref().expect("a_zz(T) model fitted");
        assert_relative_eq!(a.params.nu0_mhz, 70.0, max_relative = 5e-2);

        let (slope, _) = dr.susceptibility.expect("susceptibility fitted");
        assert!(slope < 0.0, "softening means negative slope, got {slope}");

        let rel = dr.relaxation.as_ref().expect("relaxation fitted");
        assert_relative_eq!(rel.params.modes[0].a_per_ms, 4.0, max_relative = 5e-2);
        assert_relative_eq!(rel.params.modes[0].homega_mev, 18.4, max_relative = 0.15);

        let sens = dr.sensitivity.as_ref().expect("sensitivity estimated");
        assert_eq!(sens.temperature_k, 315.0, "315 K is nearest 300 K in the campaign");
        assert!(sens.report.eta_t_k_per_sqrt_hz.is_some());
        assert!(sens.report.eta_b_g_per_sqrt_hz > 0.0);
        assert!(!report.has_fit_failures());
    }

    #[test]
    fn spectra_only_dataset_notes_the_skipped_stages() {
        let mut dataset = small_campaign(0.0, 2);
        dataset.traces.clear();
        let report = run_pipeline(&RunConfig::default(), &[dataset]).unwrap();
        let dr = &report.datasets[0];
        assert!(dr.decay_rows.is_empty());
        assert!(dr.relaxation.is_none());
        assert!(
            dr.notes.iter().any(|n| n.contains("skipped")),
            "omission noted: {:?}",
            dr.notes
        );
        assert!(dr.d_thermal.is_some(), "spectrum stages unaffected");
    }

    #[test]
    fn traces_only_dataset_still_fits_relaxation() {
        let mut dataset = small_campaign(0.0, 3);
        dataset.spectra.clear();
        // free energy would have no thermal fit to seed it; pin it instead
        let config = RunConfig {
            homega_policy: HomegaPolicy::Fixed(18.4),
            ..RunConfig::default()
        };
        let report = run_pipeline(&config, &[dataset]).unwrap();
        let dr = &report.datasets[0];
        assert!(dr.d_thermal.is_none());
        assert!(dr.sensitivity.is_none());
        let rel = dr.relaxation.as_ref().expect("relaxation fitted from traces alone");
        assert_relative_eq!(rel.params.modes[0].a_per_ms, 4.0, max_relative = 1e-3);
        assert_relative_eq!(rel.params.a_s_per_ms, 0.01, max_relative = 1e-2);
    }

    #[test]
    fn identical_datasets_aggregate_with_zero_spread() {
        let a = small_campaign(0.0, 4);
        let mut b = a.clone();
        b.label = "synthetic:S2".into();
        let report = run_pipeline(&RunConfig::default(), &[a, b]).unwrap();
        assert!(!report.aggregates.is_empty(), "aggregates present for 2 datasets");
        for agg in &report.aggregates {
            assert_eq!(agg.count, 2, "{}", agg.name);
            assert_eq!(agg.std, 0.0, "identical inputs, zero spread for {}", agg.name);
        }
        let single = run_pipeline(&RunConfig::default(), &report_input(5)).unwrap();
        assert!(single.aggregates.is_empty(), "no aggregates for a single dataset");
    }

    fn report_input(seed: u64) -> Vec<Dataset> {
        vec![small_campaign(0.0, seed)]
    }

    #[test]
    fn removing_one_temperature_leaves_other_rows_untouched() {
        let full = small_campaign(0.0, 6);
        let mut pruned = full.clone();
        let drop_t = 130.0;
        pruned.spectra.retain(|s| s.temperature_k != drop_t);
        pruned.traces.retain(|t| t.temperature_k != drop_t);
        let config = RunConfig::default();
        let a = run_pipeline(&config, &[full]).unwrap();
        let b = run_pipeline(&config, &[pruned]).unwrap();
        let rows_a: Vec<_> = a.datasets[0]
            .odmr_rows
            .iter()
            .filter(|r| r.temperature_k != drop_t)
            .collect();
        let rows_b: Vec<_> = b.datasets[0].odmr_rows.iter().collect();
        assert_eq!(rows_a.len(), rows_b.len());
        for (ra, rb) in rows_a.iter().zip(&rows_b) {
            assert_eq!(ra.temperature_k, rb.temperature_k);
            assert_eq!(ra.d_mhz, rb.d_mhz, "per-temperature rows are independent");
            assert_eq!(ra.a_zz_mhz, rb.a_zz_mhz);
            assert_eq!(ra.linewidth_mhz, rb.linewidth_mhz);
        }
    }

    #[test]
    fn failed_spectra_do_not_block_the_decay_stages() {
        let mut dataset = small_campaign(0.0, 7);
        // flatten every spectrum so peak picking has nothing to find
        for s in &mut dataset.spectra {
            for sample in &mut s.samples {
                sample.1 = 0.0;
            }
        }
        let config = RunConfig {
            homega_policy: HomegaPolicy::Fixed(18.4),
            ..RunConfig::default()
        };
        let report = run_pipeline(&config, &[dataset]).unwrap();
        let dr = &report.datasets[0];
        assert!(dr.odmr_rows.is_empty());
        assert!(
            dr.stage_errors.iter().any(|e| e.contains("odmr fit")),
            "spectrum failures recorded: {:?}",
            dr.stage_errors
        );
        assert!(dr.relaxation.is_some(), "decay stages still ran");
        assert!(report.has_fit_failures());
    }

    #[test]
    fn energy_policies_control_the_relaxation_fit() {
        let dataset = small_campaign(0.0, 8);
        let fixed = RunConfig {
            homega_policy: HomegaPolicy::Fixed(17.0),
            ..RunConfig::default()
        };
        let report = run_pipeline(&fixed, std::slice::from_ref(&dataset)).unwrap();
        let rel = report.datasets[0].relaxation.as_ref().unwrap();
        assert_eq!(rel.params.modes[0].homega_mev, 17.0, "fixed energy is pinned");
        assert!(rel.policy.starts_with("fixed"));

        let thermal = RunConfig {
            homega_policy: HomegaPolicy::Thermal,
            ..RunConfig::default()
        };
        let report = run_pipeline(&thermal, std::slice::from_ref(&dataset)).unwrap();
        let dr = &report.datasets[0];
        let rel = dr.relaxation.as_ref().unwrap();
        assert_eq!(
            rel.params.modes[0].homega_mev,
            dr.d_thermal.as_ref().unwrap().params.homega_mev,
            "thermal policy reuses the d(T) energy"
        );
    }

    #[test]
    fn config_and_dataset_shape_problems_are_hard_errors() {
        let dataset = small_campaign(0.0, 9);
        let bad_window = RunConfig {
            susceptibility_window_k: (350.0, 250.0),
            ..RunConfig::default()
        };
        assert!(run_pipeline(&bad_window, std::slice::from_ref(&dataset)).is_err());

        assert!(run_pipeline(&RunConfig::default(), &[]).is_err(), "no datasets");

        let twin = dataset.clone();
        assert!(
            run_pipeline(&RunConfig::default(), &[dataset, twin]).is_err(),
            "duplicate labels rejected"
        );
    }

    #[test]
    fn config_echo_records_the_seed() {
        let config = RunConfig {
            seed: 1234,
            ..RunConfig::default()
        };
        let pairs = config.summary_pairs();
        assert!(pairs.iter().any(|(k, v)| k == "seed" && v == "1234"));
        assert!(pairs.iter().any(|(k, _)| k == "photon_rate_hz"));
    }
}
