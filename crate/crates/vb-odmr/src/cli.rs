//! Command-line front end. One subcommand per capability, a flat
//! `key = value` config file, and the exit-code contract:
//!
//! - 0: success
//! - 1: usage error (bad flags, bad flag values, bad config file)
//! - 2: data error (missing or malformed input files, empty datasets)
//! - 3: a fit ran but failed or did not converge; partial outputs are
//!      still written

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{
    format_number, parse_series_csv, parse_spectrum_csv, parse_trace_csv, write_spectrum_csv,
    write_trace_csv, Dataset,
};
use crate::fit::{fit_thermal, AmplitudeMode, ThermalModelParams};
use crate::lineshape::{model_eval, OdmrModelParams};
use crate::phonon::{dominant_mode, evaluate_mode_sum};
use crate::pipeline::{
    fit_decay_stage, fit_spectra_stage, run_pipeline, DatasetReport, HomegaPolicy, RunConfig,
    RunReport,
};
use crate::polarization::{
    binomial_weights, eslac_field, extract_polarization, flip_flop_coefficients,
    polarized_amplitude_model, AmplitudeOrdering,
};
use crate::report::{render_report_txt, write_report};
use crate::sensitivity::{eta_b_closed_form, sensitivity_report};
use crate::spin::{Branch, HyperfineTensor, Isotope};
use crate::svg::{render_chart, Series, SeriesStyle};
use crate::synth::{synthesize_dataset, SynthConfig, SynthTruth};

#[derive(Parser)]
#[command(
    name = "vb-odmr",
    version,
    about = "Temperature-dependent spin spectroscopy toolkit: ODMR line fitting, \
             thermal and relaxation models, sensitivities, and nuclear polarization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset from known ground truth
    Simulate(SimulateArgs),
    /// Fit multi-Lorentzian models to ODMR spectra
    FitOdmr(FitOdmrArgs),
    /// Fit the two-level thermal model to a (temperature, value) series
    FitThermal(FitThermalArgs),
    /// Fit decay traces, then the two-phonon relaxation model
    FitT1(FitT1Args),
    /// Evaluate a phonon mode table over temperature
    PhononSum(PhononSumArgs),
    /// Magnetic and thermal sensitivity from line-shape parameters
    Sensitivity(SensitivityArgs),
    /// Nuclear polarization extraction and flip-flop diagnostics
    Polarization(PolarizationArgs),
    /// Full analysis: spectra and traces to models, plots, and a report
    Pipeline(PipelineArgs),
}

/// A classified failure: the message goes to stderr, the code to the shell.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

type CliResult = std::result::Result<i32, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: e.to_string() }
}

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

/// Parses and dispatches; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here too; they are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::FitOdmr(a) => cmd_fit_odmr(a),
        Command::FitThermal(a) => cmd_fit_thermal(a),
        Command::FitT1(a) => cmd_fit_t1(a),
        Command::PhononSum(a) => cmd_phonon_sum(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::Polarization(a) => cmd_polarization(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

// ---------------------------------------------------------------- config

/// Flags shared by the analysis subcommands; every one of them can also be
/// set in the `--config` file, with the flag winning.
#[derive(Args, Clone, Default)]
struct ConfigFlags {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nuclear isotope: n15 or n14
    #[arg(long)]
    isotope: Option<String>,
    /// Static field in G, applied to spectra without their own annotation
    #[arg(long)]
    field_gauss: Option<f64>,
    /// Per-line amplitude parameterization: ratio or free
    #[arg(long)]
    amplitude_mode: Option<String>,
    /// Up-orientation probability for the ratio mode
    #[arg(long)]
    p_up: Option<f64>,
    /// Lower edge of the susceptibility window, K
    #[arg(long)]
    window_min_k: Option<f64>,
    /// Upper edge of the susceptibility window, K
    #[arg(long)]
    window_max_k: Option<f64>,
    /// Phonon energy policy for the relaxation fit: free, thermal, or meV
    #[arg(long)]
    homega: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write SVG plots
    #[arg(long, overrides_with = "no_plot")]
    plot: bool,
    /// Suppress SVG plots
    #[arg(long)]
    no_plot: bool,
    /// Seed for every random draw in the run
    #[arg(long)]
    seed: Option<u64>,
    /// Detected photon rate for sensitivity estimates, counts/s
    #[arg(long)]
    photon_rate_hz: Option<f64>,
}

fn parse_isotope(s: &str) -> Result<Isotope, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "n15" | "15n" => Ok(Isotope::N15),
        "n14" | "14n" => Ok(Isotope::N14),
        other => Err(usage(format!("unknown isotope `{other}` (expected n15 or n14)"))),
    }
}

fn parse_homega_policy(s: &str) -> Result<HomegaPolicy, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "free" => Ok(HomegaPolicy::Free),
        "thermal" => Ok(HomegaPolicy::Thermal),
        other => other
            .parse::<f64>()
            .map(HomegaPolicy::Fixed)
            .map_err(|_| usage(format!("energy policy `{other}` is not free, thermal, or a meV value"))),
    }
}

/// Reads a flat `key = value` file: one pair per line, `#` comments and
/// blank lines ignored.
fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("config file {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!(
                "config file {}:{}: expected `key = value`, got `{line}`",
                path.display(),
                i + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn apply_config_key(cfg: &mut RunConfig, p_up: &mut f64, key: &str, value: &str) -> Result<(), Failure> {
    let bad_num = |k: &str, v: &str| usage(format!("config key `{k}`: `{v}` is not a number"));
    match key {
        "isotope" => cfg.isotope = parse_isotope(value)?,
        "field_gauss" => {
            cfg.field_gauss = if value.eq_ignore_ascii_case("none") {
                None
            } else {
                Some(value.parse().map_err(|_| bad_num(key, value))?)
            }
        }
        "amplitude_mode" => match value {
            "ratio" => cfg.amplitude_mode = AmplitudeMode::RatioBinomial { p_up: *p_up },
            "free" => cfg.amplitude_mode = AmplitudeMode::Free,
            other => return Err(usage(format!("amplitude_mode `{other}` is not ratio or free"))),
        },
        "p_up" => {
            *p_up = value.parse().map_err(|_| bad_num(key, value))?;
            if let AmplitudeMode::RatioBinomial { p_up: p } = &mut cfg.amplitude_mode {
                *p = *p_up;
            }
        }
        "window_min_k" => cfg.susceptibility_window_k.0 = value.parse().map_err(|_| bad_num(key, value))?,
        "window_max_k" => cfg.susceptibility_window_k.1 = value.parse().map_err(|_| bad_num(key, value))?,
        "homega_policy" => cfg.homega_policy = parse_homega_policy(value)?,
        "output_dir" => cfg.output_dir = PathBuf::from(value),
        "plot" => {
            cfg.plot = value
                .parse()
                .map_err(|_| usage(format!("config key `plot`: `{value}` is not true or false")))?
        }
        "seed" => cfg.seed = value.parse().map_err(|_| bad_num(key, value))?,
        "photon_rate_hz" => cfg.photon_rate_hz = value.parse().map_err(|_| bad_num(key, value))?,
        other => {
            return Err(usage(format!(
                "unknown config key `{other}` (known: isotope, field_gauss, amplitude_mode, \
                 p_up, window_min_k, window_max_k, homega_policy, output_dir, plot, seed, \
                 photon_rate_hz)"
            )))
        }
    }
    Ok(())
}

/// Defaults, then the config file, then explicit flags.
fn build_run_config(flags: &ConfigFlags) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    let mut p_up = 0.5;
    if let Some(path) = &flags.config {
        for (key, value) in parse_config_file(path)? {
            apply_config_key(&mut cfg, &mut p_up, &key, &value)?;
        }
    }
    if let Some(s) = &flags.isotope {
        cfg.isotope = parse_isotope(s)?;
    }
    if let Some(b) = flags.field_gauss {
        cfg.field_gauss = Some(b);
    }
    if let Some(p) = flags.p_up {
        p_up = p;
        if let AmplitudeMode::RatioBinomial { p_up: q } = &mut cfg.amplitude_mode {
            *q = p;
        }
    }
    if let Some(mode) = &flags.amplitude_mode {
        cfg.amplitude_mode = match mode.as_str() {
            "ratio" => AmplitudeMode::RatioBinomial { p_up },
            "free" => AmplitudeMode::Free,
            other => return Err(usage(format!("amplitude mode `{other}` is not ratio or free"))),
        };
    }
    if let Some(w) = flags.window_min_k {
        cfg.susceptibility_window_k.0 = w;
    }
    if let Some(w) = flags.window_max_k {
        cfg.susceptibility_window_k.1 = w;
    }
    if let Some(h) = &flags.homega {
        cfg.homega_policy = parse_homega_policy(h)?;
    }
    if let Some(out) = &flags.out {
        cfg.output_dir = out.clone();
    }
    if flags.plot {
        cfg.plot = true;
    } else if flags.no_plot {
        cfg.plot = false;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(r) = flags.photon_rate_hz {
        cfg.photon_rate_hz = r;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn parse_float_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: `{p}` is not a number")))
        })
        .collect()
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content)
        .map_err(|e| data_err(format!("writing {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| data_err(format!("creating {}: {e}", dir.display())))
}

// -------------------------------------------------------------- simulate

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dataset label; output files are prefixed with it
    #[arg(long, default_value = "S1")]
    label: String,
    /// Comma-separated temperatures in K
    #[arg(long)]
    temps: Option<String>,
    /// 1-sigma contrast noise on spectra
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
    /// 1-sigma signal noise on decay traces
    #[arg(long, default_value_t = 0.002)]
    trace_noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 90.0)]
    field_gauss: f64,
    #[arg(long, default_value = "n15")]
    isotope: String,
    /// Ground-truth static branch midpoint, MHz
    #[arg(long, default_value_t = 3600.0)]
    d0_mhz: f64,
    /// Ground-truth midpoint coupling coefficient, MHz
    #[arg(long, default_value_t = -200.0)]
    c_d_mhz: f64,
    /// Ground-truth phonon energy, meV
    #[arg(long, default_value_t = 18.4)]
    phonon_mev: f64,
    /// Frequency grid step, MHz
    #[arg(long, default_value_t = 1.0)]
    grid_step_mhz: f64,
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let mut truth = SynthTruth::default();
    truth.isotope = parse_isotope(&args.isotope)?;
    truth.field_gauss = args.field_gauss;
    truth.d_model = ThermalModelParams {
        nu0_mhz: args.d0_mhz,
        c_nu_mhz: args.c_d_mhz,
        homega_mev: args.phonon_mev,
    };
    truth.d_model.validate().map_err(usage)?;
    truth.a_zz_model.homega_mev = args.phonon_mev;
    truth.relaxation.modes[0].homega_mev = args.phonon_mev;
    if truth.isotope == Isotope::N14 {
        // seven narrower lines; default spin-1/2 spacing would overlap them
        truth.a_zz_model.nu0_mhz = 47.0;
        truth.a_zz_model.c_nu_mhz = -2.0;
    }

    let mut config = SynthConfig::default();
    if let Some(t) = &args.temps {
        config.temperatures_k = parse_float_list(t, "--temps")?;
    }
    config.contrast_noise = args.noise;
    config.trace_noise = args.trace_noise;
    config.grid_step_mhz = args.grid_step_mhz;
    config.seed = args.seed;

    let dataset = synthesize_dataset(&truth, &config, &args.label).map_err(usage)?;
    ensure_dir(&args.out)?;
    let spectra_path = args.out.join(format!("{}-spectra.csv", args.label));
    let traces_path = args.out.join(format!("{}-traces.csv", args.label));
    write_spectrum_csv(&dataset.spectra, &spectra_path).map_err(data_err)?;
    write_trace_csv(&dataset.traces, &traces_path).map_err(data_err)?;

    let mut truth_txt = String::from("synthetic dataset; generating ground truth\n");
    truth_txt.push_str(&format!("label = {}\n", dataset.label));
    truth_txt.push_str(&format!("seed = {}\n", config.seed));
    truth_txt.push_str(&format!("isotope = {:?}\n", truth.isotope));
    truth_txt.push_str(&format!("field_gauss = {}\n", truth.field_gauss));
    truth_txt.push_str(&format!(
        "d model: nu0 = {} MHz, c = {} MHz, homega = {} meV\n",
        truth.d_model.nu0_mhz, truth.d_model.c_nu_mhz, truth.d_model.homega_mev
    ));
    truth_txt.push_str(&format!(
        "a_zz model: nu0 = {} MHz, c = {} MHz, homega = {} meV\n",
        truth.a_zz_model.nu0_mhz, truth.a_zz_model.c_nu_mhz, truth.a_zz_model.homega_mev
    ));
    truth_txt.push_str(&format!(
        "relaxation: a = {} /ms, homega = {} meV, a_s = {} /ms\n",
        truth.relaxation.modes[0].a_per_ms,
        truth.relaxation.modes[0].homega_mev,
        truth.relaxation.a_s_per_ms
    ));
    truth_txt.push_str(&format!(
        "noise: contrast {} , trace {}\n",
        config.contrast_noise, config.trace_noise
    ));
    let truth_path = args.out.join(format!("{}-truth.txt", args.label));
    write_file(&truth_path, &truth_txt)?;

    println!(
        "wrote {} spectra and {} traces for {}",
        dataset.spectra.len(),
        dataset.traces.len(),
        dataset.label
    );
    for p in [&spectra_path, &traces_path, &truth_path] {
        println!("  {}", p.display());
    }
    Ok(0)
}

// -------------------------------------------------------------- fit-odmr

#[derive(Args)]
struct FitOdmrArgs {
    /// Long-format spectra CSV: temperature_k, frequency_mhz, contrast
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    config: ConfigFlags,
}

fn cmd_fit_odmr(args: FitOdmrArgs) -> CliResult {
    let cfg = build_run_config(&args.config)?;
    let parsed = parse_spectrum_csv(&args.input).map_err(data_err)?;
    print_warnings(&parsed.warnings);
    let label = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    let mut dataset = Dataset::new(label);
    dataset.spectra = parsed.value;

    let dr = fit_spectra_stage(&cfg, &dataset).map_err(data_err)?;
    println!("{:>8}  {:>14}  {:>12}  {:>8}  {:>9}  status", "T (K)", "d (MHz)", "a_zz (MHz)", "width", "contrast");
    for r in &dr.odmr_rows {
        let d = r
            .d_mhz
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>8}  {:>14}  {:>12.4}  {:>8.2}  {:>9.5}  {}{}",
            r.temperature_k,
            d,
            r.a_zz_mhz,
            r.linewidth_mhz,
            r.contrast,
            if r.converged { "ok" } else { "NOT CONVERGED" },
            if r.ill_conditioned { " (ill-conditioned)" } else { "" },
        );
    }
    for e in &dr.stage_errors {
        eprintln!("stage error: {e}");
    }

    ensure_dir(&cfg.output_dir)?;
    if cfg.plot {
        for spectrum in &dataset.spectra {
            let Some(row) = dr
                .odmr_rows
                .iter()
                .find(|r| r.temperature_k == spectrum.temperature_k)
            else {
                continue;
            };
            let curve: Vec<(f64, f64)> = spectrum
                .samples
                .iter()
                .map(|&(f, _)| (f, model_eval(&row.model, f)))
                .collect();
            let svg = render_chart(
                &format!("odmr at {} K", spectrum.temperature_k),
                "frequency (MHz)",
                "contrast",
                &[
                    Series { points: &spectrum.samples, label: "data", style: SeriesStyle::Markers },
                    Series { points: &curve, label: "fit", style: SeriesStyle::Line },
                ],
            );
            let name = format!("odmr-{}k.svg", spectrum.temperature_k);
            write_file(&cfg.output_dir.join(name), &svg)?;
        }
    }
    let failed = dr.odmr_rows.iter().any(|r| !r.converged) || !dr.stage_errors.is_empty();
    let report = RunReport {
        config: cfg.summary_pairs(),
        plot: false, // per-spectrum overlays above replace the summary charts
        datasets: vec![dr],
        aggregates: vec![],
    };
    let files = write_report(&report, &cfg.output_dir).map_err(data_err)?;
    for f in &files {
        println!("  {}", f.display());
    }
    Ok(if failed { 3 } else { 0 })
}

// ----------------------------------------------------------- fit-thermal

#[derive(Args)]
struct FitThermalArgs {
    /// Series CSV: temperature_k, value_mhz and optional sigma_mhz
    #[arg(long)]
    input: PathBuf,
    /// Name for the fitted series in the outputs
    #[arg(long, default_value = "value")]
    series: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    plot: bool,
}

fn cmd_fit_thermal(args: FitThermalArgs) -> CliResult {
    let points = parse_series_csv(&args.input).map_err(data_err)?.value;
    let init = ThermalModelParams::initial_guess(&points).map_err(data_err)?;
    let (params, result) = fit_thermal(&points, &init).map_err(data_err)?;

    println!("thermal model for {} ({} points)", args.series, points.len());
    for (name, value) in [
        ("nu0_mhz", params.nu0_mhz),
        ("c_nu_mhz", params.c_nu_mhz),
        ("homega_mev", params.homega_mev),
    ] {
        let sigma = result.sigma(name).unwrap_or(f64::NAN);
        println!("  {name} = {value:.6} (sigma {sigma:.3e})");
    }
    println!("  nu(0 K) = nu0 + c/2 = {:.6} MHz", params.zero_kelvin_value());
    if !result.converged {
        eprintln!("fit did not converge (status {:?})", result.status);
    }

    ensure_dir(&args.out)?;
    let mut entry_report = RunReport::default();
    entry_report.datasets.push(DatasetReport {
        label: args.series.clone(),
        d_thermal: Some(crate::pipeline::ThermalFitEntry {
            series: args.series.clone(),
            sigmas: [
                result.sigma("nu0_mhz").unwrap_or(f64::NAN),
                result.sigma("c_nu_mhz").unwrap_or(f64::NAN),
                result.sigma("homega_mev").unwrap_or(f64::NAN),
            ],
            converged: result.converged,
            zero_kelvin_mhz: params.zero_kelvin_value(),
            params: params.clone(),
        }),
        ..DatasetReport::default()
    });
    let files = write_report(&entry_report, &args.out).map_err(data_err)?;
    for f in &files {
        println!("  {}", f.display());
    }
    if args.plot {
        let data: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
        let t_hi = data.iter().map(|p| p.0).fold(f64::MIN, f64::max);
        let curve: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let t = 1.02 * t_hi * i as f64 / 200.0;
                (t, params.eval(t))
            })
            .collect();
        let svg = render_chart(
            &format!("{} vs temperature", args.series),
            "T (K)",
            "value (MHz)",
            &[
                Series { points: &data, label: "data", style: SeriesStyle::Markers },
                Series { points: &curve, label: "model", style: SeriesStyle::Line },
            ],
        );
        let path = args.out.join(format!("{}-thermal.svg", args.series));
        write_file(&path, &svg)?;
        println!("  {}", path.display());
    }
    Ok(if result.converged { 0 } else { 3 })
}

// ---------------------------------------------------------------- fit-t1

#[derive(Args)]
struct FitT1Args {
    /// Long-format trace CSV: temperature_k, time_ms, signal
    #[arg(long)]
    input: PathBuf,
    /// Phonon energy policy: free or a fixed meV value
    #[arg(long, default_value = "free")]
    homega: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    plot: bool,
}

fn cmd_fit_t1(args: FitT1Args) -> CliResult {
    let policy = parse_homega_policy(&args.homega)?;
    if policy == HomegaPolicy::Thermal {
        return Err(usage("energy policy `thermal` needs the full pipeline"));
    }
    let parsed = parse_trace_csv(&args.input).map_err(data_err)?;
    print_warnings(&parsed.warnings);
    let label = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    let mut dataset = Dataset::new(label);
    dataset.traces = parsed.value;

    let cfg = RunConfig {
        homega_policy: policy,
        output_dir: args.out.clone(),
        plot: args.plot,
        ..RunConfig::default()
    };
    let dr = fit_decay_stage(&cfg, &dataset).map_err(data_err)?;

    println!("{:>8}  {:>12}  {:>14}  status", "T (K)", "T1 (ms)", "rate (1/ms)");
    for r in &dr.decay_rows {
        println!(
            "{:>8}  {:>12.5}  {:>14.6}  {}",
            r.temperature_k,
            r.t1_ms,
            r.rate_per_ms,
            if r.converged { "ok" } else { "NOT CONVERGED" }
        );
    }
    if let Some(rel) = &dr.relaxation {
        println!("relaxation model (energy policy {}):", rel.policy);
        for (name, (value, sigma)) in rel.param_names.iter().zip(rel.params_with_sigmas()) {
            println!("  {name} = {value:.6} (sigma {sigma:.3e})");
        }
    }
    for e in &dr.stage_errors {
        eprintln!("stage error: {e}");
    }

    let failed = dr.decay_rows.iter().any(|r| !r.converged)
        || dr.relaxation.as_ref().is_some_and(|r| !r.converged)
        || !dr.stage_errors.is_empty();
    let report = RunReport {
        config: cfg.summary_pairs(),
        plot: cfg.plot,
        datasets: vec![dr],
        aggregates: vec![],
    };
    let files = write_report(&report, &cfg.output_dir).map_err(data_err)?;
    for f in &files {
        println!("  {}", f.display());
    }
    Ok(if failed { 3 } else { 0 })
}

// ------------------------------------------------------------ phonon-sum

#[derive(Args)]
struct PhononSumArgs {
    /// Mode table: index, energy_mev, then curvature_mhz or
    /// d2nu_mhz_per_a2 + mass_amu
    #[arg(long)]
    table: PathBuf,
    /// Static reference frequency the mode sum shifts, MHz
    #[arg(long, default_value_t = 0.0)]
    nu0_mhz: f64,
    /// Temperature sweep lo:hi:step in K
    #[arg(long, default_value = "0:400:10")]
    temps: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    plot: bool,
}

fn cmd_phonon_sum(args: PhononSumArgs) -> CliResult {
    let parts: Vec<&str> = args.temps.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--temps `{}` is not lo:hi:step", args.temps)));
    }
    let lo: f64 = parts[0].parse().map_err(|_| usage("--temps lo is not a number"))?;
    let hi: f64 = parts[1].parse().map_err(|_| usage("--temps hi is not a number"))?;
    let step: f64 = parts[2].parse().map_err(|_| usage("--temps step is not a number"))?;
    if !(step > 0.0) || hi < lo || lo < 0.0 {
        return Err(usage("--temps needs 0 <= lo <= hi and step > 0"));
    }

    let table = crate::data::load_mode_table(&args.table, args.nu0_mhz)
        .map_err(data_err)?
        .value;
    let dominant = dominant_mode(&table);
    println!(
        "{} modes; dominant: index {} at {} meV (coefficient {} MHz)",
        table.modes().len(),
        dominant.index,
        dominant.energy_mev,
        dominant.curvature_coeff_mhz
    );

    let n = ((hi - lo) / step).floor() as usize + 1;
    let mut csv = String::from("temperature_k,frequency_mhz\n");
    let mut curve = Vec::with_capacity(n);
    for i in 0..n {
        let t = lo + step * i as f64;
        let nu = evaluate_mode_sum(&table, t);
        curve.push((t, nu));
        csv.push_str(&format!("{},{}\n", format_number(t), format_number(nu)));
    }
    ensure_dir(&args.out)?;
    let csv_path = args.out.join("mode-sum.csv");
    write_file(&csv_path, &csv)?;
    println!("  {}", csv_path.display());
    if let (Some(first), Some(last)) = (curve.first(), curve.last()) {
        println!(
            "nu({} K) = {:.6} MHz, nu({} K) = {:.6} MHz",
            first.0, first.1, last.0, last.1
        );
    }
    if args.plot {
        let svg = render_chart(
            "mode-sum frequency vs temperature",
            "T (K)",
            "frequency (MHz)",
            &[Series { points: &curve, label: "mode sum", style: SeriesStyle::Line }],
        );
        let path = args.out.join("mode-sum.svg");
        write_file(&path, &svg)?;
        println!("  {}", path.display());
    }
    Ok(0)
}

// ----------------------------------------------------------- sensitivity

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SensitivityArgs {
    /// Peak contrast of the probed line
    #[arg(long)]
    contrast: f64,
    /// Line FWHM in MHz
    #[arg(long)]
    fwhm_mhz: f64,
    /// Detected photon rate, counts/s
    #[arg(long, default_value_t = 2.6e6)]
    photon_rate_hz: f64,
    /// Thermal susceptibility in MHz/K; enables the temperature estimate
    #[arg(long)]
    chi_mhz_per_k: Option<f64>,
}

fn cmd_sensitivity(args: SensitivityArgs) -> CliResult {
    // a single-line model: one branch far out of range with zero weight
    let model = OdmrModelParams {
        branch_centers: (3480.0, 3480.0 + 1e6),
        hyperfine_splitting: 1e-3,
        widths: (args.fwhm_mhz, args.fwhm_mhz),
        amplitudes: (vec![0.0, args.contrast, 0.0, 0.0], vec![0.0; 4]),
        line_count: 4,
    };
    model.validate().map_err(usage)?;
    let report = sensitivity_report(&model, args.photon_rate_hz, args.chi_mhz_per_k)
        .map_err(usage)?;
    let closed = eta_b_closed_form(args.contrast, args.fwhm_mhz, args.photon_rate_hz)
        .map_err(usage)?;
    println!("max |slope| = {:.6e} /MHz at {:.3} MHz", report.max_slope_per_mhz, report.slope_at_mhz);
    println!("eta_B (general)     = {:.6e} G/sqrt(Hz)", report.eta_b_g_per_sqrt_hz);
    println!("eta_B (closed form) = {closed:.6e} G/sqrt(Hz)");
    if let Some(eta_t) = report.eta_t_k_per_sqrt_hz {
        println!("eta_T = {eta_t:.6} K/sqrt(Hz)");
    }
    Ok(0)
}

// ----------------------------------------------------------- polarization

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PolarizationArgs {
    /// Four comma-separated hyperfine line amplitudes
    #[arg(long)]
    amplitudes: Option<String>,
    /// Amplitude order along the frequency axis: ascending or descending
    /// nuclear projection
    #[arg(long, default_value = "ascending")]
    ordering: String,
    /// Up-orientation probability; prints the line weights it implies
    #[arg(long)]
    p: Option<f64>,
    /// Hyperfine tensor a_xx,a_yy,a_zz[,a_xy] in MHz; prints flip-flop
    /// coefficients
    #[arg(long)]
    tensor: Option<String>,
    /// Zero-field splitting in MHz; prints the level anti-crossing field
    #[arg(long)]
    zfs_mhz: Option<f64>,
}

fn cmd_polarization(args: PolarizationArgs) -> CliResult {
    let mut did_something = false;
    if let Some(list) = &args.amplitudes {
        let values = parse_float_list(list, "--amplitudes")?;
        let arr: [f64; 4] = values
            .try_into()
            .map_err(|_| usage("--amplitudes needs exactly four values"))?;
        let ordering = match args.ordering.as_str() {
            "ascending" => AmplitudeOrdering::AscendingMi,
            "descending" => AmplitudeOrdering::DescendingMi,
            other => return Err(usage(format!("ordering `{other}` is not ascending or descending"))),
        };
        let (p, residual) = extract_polarization(&arr, ordering).map_err(usage)?;
        println!("polarization p = {p:.9} (residual {residual:.3e})");
        did_something = true;
    }
    if let Some(p) = args.p {
        let weights = binomial_weights(p).map_err(usage)?;
        println!("weights at p = {p}: {weights:?}");
        let minus = polarized_amplitude_model(p, Branch::Minus).map_err(usage)?;
        let plus = polarized_amplitude_model(p, Branch::Plus).map_err(usage)?;
        println!("  lower-branch line weights (frequency ascending): {minus:?}");
        println!("  upper-branch line weights (frequency ascending): {plus:?}");
        did_something = true;
    }
    if let Some(list) = &args.tensor {
        let values = parse_float_list(list, "--tensor")?;
        let tensor = match values.as_slice() {
            [xx, yy, zz] => HyperfineTensor { a_xx: *xx, a_yy: *yy, a_zz: *zz, a_xy: 0.0 },
            [xx, yy, zz, xy] => HyperfineTensor { a_xx: *xx, a_yy: *yy, a_zz: *zz, a_xy: *xy },
            _ => return Err(usage("--tensor needs three or four values")),
        };
        let coeffs = flip_flop_coefficients(&tensor);
        println!(
            "flip-flop coefficients: a1 = {:.6} MHz, |a2| = {:.6} MHz, leakage |a2/a1| = {:.6}",
            coeffs.a1_mhz,
            coeffs.a2_mhz.norm(),
            coeffs.leakage_ratio()
        );
        did_something = true;
    }
    if let Some(zfs) = args.zfs_mhz {
        let field = eslac_field(zfs).map_err(usage)?;
        println!("level anti-crossing field for zfs {zfs} MHz: {field:.3} G");
        did_something = true;
    }
    if !did_something {
        return Err(usage(
            "nothing to do: pass --amplitudes, --p, --tensor, or --zfs-mhz",
        ));
    }
    Ok(0)
}

// --------------------------------------------------------------- pipeline

#[derive(Args)]
struct PipelineArgs {
    /// Long-format spectra CSV; repeat for multiple datasets
    #[arg(long, action = clap::ArgAction::Append)]
    spectra: Vec<PathBuf>,
    /// Long-format trace CSV; repeat for multiple datasets, paired with
    /// --spectra by position
    #[arg(long, action = clap::ArgAction::Append)]
    traces: Vec<PathBuf>,
    /// Comma-separated dataset labels; defaults to the file stems
    #[arg(long)]
    labels: Option<String>,
    #[command(flatten)]
    config: ConfigFlags,
}

fn cmd_pipeline(args: PipelineArgs) -> CliResult {
    let cfg = build_run_config(&args.config)?;
    let count = args.spectra.len().max(args.traces.len());
    if count == 0 {
        return Err(usage("pass at least one --spectra or --traces file"));
    }
    let labels: Vec<String> = match &args.labels {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => Vec::new(),
    };
    if !labels.is_empty() && labels.len() != count {
        return Err(usage(format!(
            "--labels names {} datasets but {} were supplied",
            labels.len(),
            count
        )));
    }
    let mut datasets = Vec::with_capacity(count);
    for i in 0..count {
        let stem = |p: &PathBuf| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("dataset-{i}"))
        };
        let label = labels.get(i).cloned().unwrap_or_else(|| {
            args.spectra
                .get(i)
                .map(&stem)
                .or_else(|| args.traces.get(i).map(&stem))
                .unwrap()
        });
        let mut dataset = Dataset::new(label);
        if let Some(path) = args.spectra.get(i) {
            let parsed = parse_spectrum_csv(path).map_err(data_err)?;
            print_warnings(&parsed.warnings);
            dataset.spectra = parsed.value;
            dataset.provenance.push(path.clone());
        }
        if let Some(path) = args.traces.get(i) {
            let parsed = parse_trace_csv(path).map_err(data_err)?;
            print_warnings(&parsed.warnings);
            dataset.traces = parsed.value;
            dataset.provenance.push(path.clone());
        }
        datasets.push(dataset);
    }

    let report = run_pipeline(&cfg, &datasets).map_err(data_err)?;
    print!("{}", render_report_txt(&report));
    let files = write_report(&report, &cfg.output_dir).map_err(data_err)?;
    println!("\nfiles:");
    for f in &files {
        println!("  {}", f.display());
    }
    Ok(if report.has_fit_failures() { 3 } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(args.iter().copied())
    }

    #[test]
    fn unknown_flags_and_bad_values_exit_1() {
        assert_eq!(run_args(&["vb-odmr", "simulate", "--bogus"]), 1);
        assert_eq!(run_args(&["vb-odmr", "polarization", "--p", "1.5"]), 1);
        assert_eq!(run_args(&["vb-odmr", "polarization"]), 1, "no action requested");
        assert_eq!(
            run_args(&["vb-odmr", "fit-t1", "--input", "x.csv", "--homega", "sideways"]),
            1
        );
    }

    #[test]
    fn help_and_version_exit_0() {
        assert_eq!(run_args(&["vb-odmr", "--help"]), 0);
        assert_eq!(run_args(&["vb-odmr", "--version"]), 0);
    }

    #[test]
    fn missing_input_file_exits_2() {
        assert_eq!(
            run_args(&["vb-odmr", "fit-odmr", "--input", "/nonexistent/s.csv"]),
            2
        );
        assert_eq!(
            run_args(&["vb-odmr", "phonon-sum", "--table", "/nonexistent/m.csv"]),
            2
        );
    }

    #[test]
    fn sensitivity_and_polarization_print_and_exit_0() {
        assert_eq!(
            run_args(&[
                "vb-odmr",
                "sensitivity",
                "--contrast",
                "0.1",
                "--fwhm-mhz",
                "20",
                "--chi-mhz-per-k=-0.77",
            ]),
            0
        );
        assert_eq!(
            run_args(&["vb-odmr", "polarization", "--p", "0.5", "--zfs-mhz", "2128"]),
            0
        );
        assert_eq!(
            run_args(&[
                "vb-odmr",
                "polarization",
                "--amplitudes",
                "1,3,3,1",
                "--tensor",
                "2,1,1.5,0.5",
            ]),
            0
        );
    }

    #[test]
    fn simulate_then_pipeline_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "vb-odmr",
            "simulate",
            "--out",
            out,
            "--label",
            "T1",
            "--temps",
            "40,100,160,220,280,340",
            "--noise",
            "0",
            "--trace-noise",
            "0",
            "--grid-step-mhz",
            "2",
        ]);
        assert_eq!(code, 0);
        let spectra = dir.path().join("T1-spectra.csv");
        let traces = dir.path().join("T1-traces.csv");
        assert!(spectra.exists() && traces.exists());
        let truth = std::fs::read_to_string(dir.path().join("T1-truth.txt")).unwrap();
        assert!(truth.contains("synthetic"), "ground truth labeled synthetic");

        let pipe_out = dir.path().join("run");
        let code = run_args(&[
            "vb-odmr",
            "pipeline",
            "--spectra",
            spectra.to_str().unwrap(),
            "--traces",
            traces.to_str().unwrap(),
            "--out",
            pipe_out.to_str().unwrap(),
            "--no-plot",
            "--window-min-k",
            "220",
            "--window-max-k",
            "340",
        ]);
        assert_eq!(code, 0, "clean pipeline run succeeds");
        for name in ["fits.csv", "models.csv", "report.txt"] {
            assert!(pipe_out.join(name).exists(), "{name} written");
        }
        let report = std::fs::read_to_string(pipe_out.join("report.txt")).unwrap();
        assert!(report.contains("nu(0 K) = nu0 + c/2"));
    }

    #[test]
    fn fit_thermal_runs_on_a_series_file() {
        let dir = tempfile::tempdir().unwrap();
        let series = dir.path().join("d.csv");
        let model = ThermalModelParams {
            nu0_mhz: 3600.0,
            c_nu_mhz: -200.0,
            homega_mev: 18.4,
        };
        let mut csv = String::from("temperature_k,value_mhz\n");
        for t in [10.0, 60.0, 110.0, 160.0, 210.0, 260.0, 310.0, 360.0] {
            csv.push_str(&format!("{t},{}\n", model.eval(t)));
        }
        std::fs::write(&series, csv).unwrap();
        let out = dir.path().join("out");
        let code = run_args(&[
            "vb-odmr",
            "fit-thermal",
            "--input",
            series.to_str().unwrap(),
            "--series",
            "d_mhz",
            "--out",
            out.to_str().unwrap(),
            "--plot",
        ]);
        assert_eq!(code, 0);
        assert!(out.join("models.csv").exists());
        assert!(out.join("d_mhz-thermal.svg").exists());
        let models = std::fs::read_to_string(out.join("models.csv")).unwrap();
        assert!(models.contains("homega_mev"));
    }

    #[test]
    fn config_file_sets_defaults_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("run.conf");
        std::fs::write(
            &conf,
            "# run defaults\nseed = 7\nplot = false\nwindow_min_k = 200\nwindow_max_k = 320\n",
        )
        .unwrap();
        let flags = ConfigFlags {
            config: Some(conf.clone()),
            ..ConfigFlags::default()
        };
        let cfg = build_run_config(&flags).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.susceptibility_window_k, (200.0, 320.0));
        assert!(!cfg.plot);

        let flags = ConfigFlags {
            config: Some(conf.clone()),
            seed: Some(99),
            plot: true,
            ..ConfigFlags::default()
        };
        let cfg = build_run_config(&flags).unwrap();
        assert_eq!(cfg.seed, 99, "flag beats config file");
        assert!(cfg.plot);

        std::fs::write(&conf, "nonsense_key = 1\n").unwrap();
        let flags = ConfigFlags {
            config: Some(conf.clone()),
            ..ConfigFlags::default()
        };
        assert!(build_run_config(&flags).is_err(), "unknown keys rejected");

        std::fs::write(&conf, "just a line without equals\n").unwrap();
        let flags = ConfigFlags {
            config: Some(conf),
            ..ConfigFlags::default()
        };
        assert!(build_run_config(&flags).is_err(), "malformed lines rejected");
    }

    #[test]
    fn phonon_sum_writes_a_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("modes.csv");
        std::fs::write(&table, "index,energy_mev,curvature_mhz\n0,18.4,-200.0\n1,40.0,-10.0\n").unwrap();
        let out = dir.path().join("out");
        let code = run_args(&[
            "vb-odmr",
            "phonon-sum",
            "--table",
            table.to_str().unwrap(),
            "--nu0-mhz",
            "3600",
            "--temps",
            "0:300:50",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(out.join("mode-sum.csv")).unwrap();
        assert_eq!(csv.lines().count(), 8, "header plus seven temperatures");
    }
}
