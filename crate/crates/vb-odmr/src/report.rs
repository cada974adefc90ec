//! Run-report serialization: `fits.csv` (per-temperature rows),
//! `models.csv` (fitted model parameters and aggregates), `report.txt`
//! (human summary), and optional SVG plots.
//!
//! CSV numbers are written in scientific notation with nine digits after
//! the decimal point, so a write/parse cycle reproduces every value to
//! better than 1e-9 relative.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{format_number, read_table};
use crate::pipeline::{DatasetReport, RunReport};
use crate::svg::{render_chart, Series, SeriesStyle};
use crate::{Error, Result};

pub const FITS_HEADER: &str = "dataset,kind,temperature_k,d_mhz,d_sigma_mhz,a_zz_mhz,\
a_zz_sigma_mhz,contrast,linewidth_mhz,t1_ms,t1_sigma_ms,rate_per_ms,rate_sigma_per_ms,\
converged,ill_conditioned";

pub const MODELS_HEADER: &str = "dataset,model,parameter,value,sigma,count";

/// One row of `fits.csv`; the union of the spectrum-fit and decay-fit
/// columns, with inapplicable cells empty.
#[derive(Clone, Debug, PartialEq)]
pub struct FitsRow {
    pub dataset: String,
    /// "odmr" or "decay".
    pub kind: String,
    pub temperature_k: f64,
    pub d_mhz: Option<f64>,
    pub d_sigma_mhz: Option<f64>,
    pub a_zz_mhz: Option<f64>,
    pub a_zz_sigma_mhz: Option<f64>,
    pub contrast: Option<f64>,
    pub linewidth_mhz: Option<f64>,
    pub t1_ms: Option<f64>,
    pub t1_sigma_ms: Option<f64>,
    pub rate_per_ms: Option<f64>,
    pub rate_sigma_per_ms: Option<f64>,
    pub converged: bool,
    pub ill_conditioned: Option<bool>,
}

fn opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(format_number).unwrap_or_default()
}

fn fits_rows(report: &RunReport) -> Vec<FitsRow> {
    let mut rows = Vec::new();
    for d in &report.datasets {
        for r in &d.odmr_rows {
            rows.push(FitsRow {
                dataset: d.label.clone(),
                kind: "odmr".into(),
                temperature_k: r.temperature_k,
                d_mhz: r.d_mhz,
                d_sigma_mhz: r.d_sigma_mhz,
                a_zz_mhz: Some(r.a_zz_mhz),
                a_zz_sigma_mhz: Some(r.a_zz_sigma_mhz).filter(|s| s.is_finite()),
                contrast: Some(r.contrast),
                linewidth_mhz: Some(r.linewidth_mhz),
                t1_ms: None,
                t1_sigma_ms: None,
                rate_per_ms: None,
                rate_sigma_per_ms: None,
                converged: r.converged,
                ill_conditioned: Some(r.ill_conditioned),
            });
        }
        for r in &d.decay_rows {
            rows.push(FitsRow {
                dataset: d.label.clone(),
                kind: "decay".into(),
                temperature_k: r.temperature_k,
                d_mhz: None,
                d_sigma_mhz: None,
                a_zz_mhz: None,
                a_zz_sigma_mhz: None,
                contrast: None,
                linewidth_mhz: None,
                t1_ms: Some(r.t1_ms),
                t1_sigma_ms: r.t1_sigma_ms,
                rate_per_ms: Some(r.rate_per_ms),
                rate_sigma_per_ms: r.rate_sigma_per_ms,
                converged: r.converged,
                ill_conditioned: None,
            });
        }
    }
    rows
}

fn render_fits_csv(rows: &[FitsRow]) -> String {
    let mut out = String::from(FITS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.kind,
            format_number(r.temperature_k),
            opt(r.d_mhz),
            opt(r.d_sigma_mhz),
            opt(r.a_zz_mhz),
            opt(r.a_zz_sigma_mhz),
            opt(r.contrast),
            opt(r.linewidth_mhz),
            opt(r.t1_ms),
            opt(r.t1_sigma_ms),
            opt(r.rate_per_ms),
            opt(r.rate_sigma_per_ms),
            r.converged,
            r.ill_conditioned.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Reads `fits.csv` back. Together with the writer this round-trips every
/// numeric value to better than 1e-9 relative.
pub fn parse_fits_csv(path: &Path) -> Result<Vec<FitsRow>> {
    let table = read_table(path)?;
    let col = |name: &str| table.column(name);
    let c_dataset = col("dataset")?;
    let c_kind = col("kind")?;
    let c_temp = col("temperature_k")?;
    let c_d = col("d_mhz")?;
    let c_d_sigma = col("d_sigma_mhz")?;
    let c_a = col("a_zz_mhz")?;
    let c_a_sigma = col("a_zz_sigma_mhz")?;
    let c_contrast = col("contrast")?;
    let c_width = col("linewidth_mhz")?;
    let c_t1 = col("t1_ms")?;
    let c_t1_sigma = col("t1_sigma_ms")?;
    let c_rate = col("rate_per_ms")?;
    let c_rate_sigma = col("rate_sigma_per_ms")?;
    let c_conv = col("converged")?;
    let c_ill = col("ill_conditioned")?;
    let mut rows = Vec::new();
    for (line, fields) in &table.rows {
        let converged: bool = table.cell(*line, fields, c_conv)?.parse().map_err(|_| {
            table.parse_error(*line, "converged cell is not true/false")
        })?;
        let ill = match table.cell(*line, fields, c_ill)? {
            "" => None,
            s => Some(s.parse().map_err(|_| {
                table.parse_error(*line, "ill_conditioned cell is not true/false")
            })?),
        };
        rows.push(FitsRow {
            dataset: table.cell(*line, fields, c_dataset)?.to_string(),
            kind: table.cell(*line, fields, c_kind)?.to_string(),
            temperature_k: table.number(*line, fields, c_temp)?,
            d_mhz: table.number_optional(*line, fields, c_d)?,
            d_sigma_mhz: table.number_optional(*line, fields, c_d_sigma)?,
            a_zz_mhz: table.number_optional(*line, fields, c_a)?,
            a_zz_sigma_mhz: table.number_optional(*line, fields, c_a_sigma)?,
            contrast: table.number_optional(*line, fields, c_contrast)?,
            linewidth_mhz: table.number_optional(*line, fields, c_width)?,
            t1_ms: table.number_optional(*line, fields, c_t1)?,
            t1_sigma_ms: table.number_optional(*line, fields, c_t1_sigma)?,
            rate_per_ms: table.number_optional(*line, fields, c_rate)?,
            rate_sigma_per_ms: table.number_optional(*line, fields, c_rate_sigma)?,
            converged,
            ill_conditioned: ill,
        });
    }
    Ok(rows)
}

fn models_row(
    out: &mut String,
    dataset: &str,
    model: &str,
    parameter: &str,
    value: f64,
    sigma: Option<f64>,
    count: Option<usize>,
) {
    let _ = writeln!(
        out,
        "{dataset},{model},{parameter},{},{},{}",
        format_number(value),
        opt(sigma),
        count.map(|c| c.to_string()).unwrap_or_default()
    );
}

fn render_models_csv(report: &RunReport) -> String {
    let mut out = String::from(MODELS_HEADER);
    out.push('\n');
    for d in &report.datasets {
        for entry in [&d.d_thermal, &d.a_zz_thermal].into_iter().flatten() {
            let model = format!("thermal:{}", entry.series);
            let p = &entry.params;
            models_row(&mut out, &d.label, &model, "nu0_mhz", p.nu0_mhz, Some(entry.sigmas[0]), None);
            models_row(&mut out, &d.label, &model, "c_nu_mhz", p.c_nu_mhz, Some(entry.sigmas[1]), None);
            models_row(&mut out, &d.label, &model, "homega_mev", p.homega_mev, Some(entry.sigmas[2]), None);
            models_row(&mut out, &d.label, &model, "zero_kelvin_mhz", entry.zero_kelvin_mhz, None, None);
        }
        if let Some((slope, sigma)) = d.susceptibility {
            models_row(&mut out, &d.label, "susceptibility", "slope_mhz_per_k", slope, Some(sigma), None);
        }
        if let Some(rel) = &d.relaxation {
            for (name, (value, sigma)) in rel
                .param_names
                .iter()
                .zip(rel.params_with_sigmas())
            {
                models_row(&mut out, &d.label, "relaxation", name, value, Some(sigma), None);
            }
        }
        if let Some(s) = &d.sensitivity {
            models_row(&mut out, &d.label, "sensitivity", "temperature_k", s.temperature_k, None, None);
            models_row(&mut out, &d.label, "sensitivity", "eta_b_g_per_sqrt_hz", s.report.eta_b_g_per_sqrt_hz, None, None);
            if let Some(eta_t) = s.report.eta_t_k_per_sqrt_hz {
                models_row(&mut out, &d.label, "sensitivity", "eta_t_k_per_sqrt_hz", eta_t, None, None);
            }
            models_row(&mut out, &d.label, "sensitivity", "max_slope_per_hz", s.report.max_slope_per_hz, None, None);
        }
    }
    for agg in &report.aggregates {
        models_row(
            &mut out,
            "(all)",
            "aggregate",
            &agg.name,
            agg.mean,
            Some(agg.std),
            Some(agg.count),
        );
    }
    out
}

/// Renders the human-readable summary; `report.txt` is exactly this text.
pub fn render_report_txt(report: &RunReport) -> String {
    let mut out = String::from("analysis report\n===============\n\nconfiguration\n");
    for (k, v) in &report.config {
        let _ = writeln!(out, "  {k} = {v}");
    }
    for d in &report.datasets {
        let _ = writeln!(out, "\ndataset {}", d.label);
        let converged = d.odmr_rows.iter().filter(|r| r.converged).count();
        let ill = d.odmr_rows.iter().filter(|r| r.ill_conditioned).count();
        let _ = writeln!(
            out,
            "  spectra fitted: {} (converged {converged}, ill-conditioned {ill})",
            d.odmr_rows.len()
        );
        let _ = writeln!(out, "  decays fitted: {}", d.decay_rows.len());
        for entry in [&d.d_thermal, &d.a_zz_thermal].into_iter().flatten() {
            let p = &entry.params;
            let _ = writeln!(
                out,
                "  {}(T) model: nu0 = {:.6} MHz, c = {:.6} MHz, homega = {:.6} meV",
                entry.series.trim_end_matches("_mhz"),
                p.nu0_mhz,
                p.c_nu_mhz,
                p.homega_mev
            );
            let _ = writeln!(
                out,
                "    nu(0 K) = nu0 + c/2 = {:.6} MHz",
                entry.zero_kelvin_mhz
            );
        }
        if let Some((slope, sigma)) = d.susceptibility {
            let _ = writeln!(
                out,
                "  susceptibility: {slope:.6} MHz/K (sigma {sigma:.3e})"
            );
        }
        if let Some(rel) = &d.relaxation {
            let _ = writeln!(out, "  relaxation (energy policy {}):", rel.policy);
            for (name, (value, sigma)) in rel.param_names.iter().zip(rel.params_with_sigmas()) {
                let _ = writeln!(out, "    {name} = {value:.6} (sigma {sigma:.3e})");
            }
        }
        if let Some(s) = &d.sensitivity {
            let _ = writeln!(
                out,
                "  sensitivity at {} K: eta_B = {:.6e} G/sqrt(Hz){}",
                s.temperature_k,
                s.report.eta_b_g_per_sqrt_hz,
                s.report
                    .eta_t_k_per_sqrt_hz
                    .map(|e| format!(", eta_T = {e:.6} K/sqrt(Hz)"))
                    .unwrap_or_default()
            );
        }
        for n in &d.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        for e in &d.stage_errors {
            let _ = writeln!(out, "  stage error: {e}");
        }
    }
    if !report.aggregates.is_empty() {
        let _ = writeln!(out, "\naggregates across datasets (mean +- std [n])");
        for a in &report.aggregates {
            let _ = writeln!(out, "  {} = {:.6} +- {:.3e} [{}]", a.name, a.mean, a.std, a.count);
        }
    }
    out
}

fn safe_name(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn dataset_charts(d: &DatasetReport) -> Vec<(String, String)> {
    let mut charts = Vec::new();
    let base = safe_name(&d.label);

    let d_points: Vec<(f64, f64)> = d
        .odmr_rows
        .iter()
        .filter_map(|r| r.d_mhz.map(|v| (r.temperature_k, v)))
        .collect();
    if !d_points.is_empty() {
        let mut series_data = vec![Series {
            points: &d_points,
            label: "d(T) data",
            style: SeriesStyle::Markers,
        }];
        let curve: Vec<(f64, f64)>;
        if let Some(entry) = &d.d_thermal {
            let t_hi = d_points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
            curve = linspace(0.0, 1.02 * t_hi, 201)
                .into_iter()
                .map(|t| (t, entry.params.eval(t)))
                .collect();
            series_data.push(Series { points: &curve, label: "model", style: SeriesStyle::Line });
        }
        charts.push((
            format!("{base}-d-thermal.svg"),
            render_chart("branch midpoint vs temperature", "T (K)", "d (MHz)", &series_data),
        ));
    }

    let a_points: Vec<(f64, f64)> = d
        .odmr_rows
        .iter()
        .map(|r| (r.temperature_k, r.a_zz_mhz))
        .collect();
    if !a_points.is_empty() {
        let mut series_data = vec![Series {
            points: &a_points,
            label: "a_zz(T) data",
            style: SeriesStyle::Markers,
        }];
        let curve: Vec<(f64, f64)>;
        if let Some(entry) = &d.a_zz_thermal {
            let t_hi = a_points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
            curve = linspace(0.0, 1.02 * t_hi, 201)
                .into_iter()
                .map(|t| (t, entry.params.eval(t)))
                .collect();
            series_data.push(Series { points: &curve, label: "model", style: SeriesStyle::Line });
        }
        charts.push((
            format!("{base}-a-zz-thermal.svg"),
            render_chart("hyperfine splitting vs temperature", "T (K)", "a_zz (MHz)", &series_data),
        ));
    }

    let rate_points: Vec<(f64, f64)> = d
        .decay_rows
        .iter()
        .map(|r| (r.temperature_k, r.rate_per_ms))
        .collect();
    if !rate_points.is_empty() {
        let mut series_data = vec![Series {
            points: &rate_points,
            label: "1/T1 data",
            style: SeriesStyle::Markers,
        }];
        let curve: Vec<(f64, f64)>;
        if let Some(rel) = &d.relaxation {
            let t_hi = rate_points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
            curve = linspace(0.0, 1.02 * t_hi, 201)
                .into_iter()
                .map(|t| (t, rel.params.eval(t)))
                .collect();
            series_data.push(Series { points: &curve, label: "model", style: SeriesStyle::Line });
        }
        charts.push((
            format!("{base}-relaxation.svg"),
            render_chart("relaxation rate vs temperature", "T (K)", "1/T1 (1/ms)", &series_data),
        ));
    }
    charts
}

/// Writes the report files into `dir` (created if missing) and returns the
/// paths written. SVG plots are emitted only when the report's plot flag
/// is set.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    emit("fits.csv", render_fits_csv(&fits_rows(report)))?;
    emit("models.csv", render_models_csv(report))?;
    emit("report.txt", render_report_txt(report))?;
    if report.plot {
        for d in &report.datasets {
            for (name, svg) in dataset_charts(d) {
                emit(&name, svg)?;
            }
        }
    }
    Ok(written)
}
