//! File ingestion: long-format CSV spectra and relaxation traces, the
//! phonon mode table, and the dataset container the pipeline consumes.
//!
//! All readers accept comma- or whitespace-delimited text with a header
//! line naming the columns. Structural problems (missing columns,
//! unparseable cells, empty files) are errors carrying the line number;
//! domain-invalid rows (negative times) and reorderings are repaired and
//! reported as warnings.

use std::path::{Path, PathBuf};

use crate::lineshape::OdmrSpectrum;
use crate::phonon::{mode_from_curvature, PhononMode, PhononModeTable};
use crate::{Error, Result};

/// A parse product plus its non-fatal diagnostics.
#[derive(Clone, Debug)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// One relaxation time trace at a fixed temperature: (time_ms, signal)
/// samples, ascending in time.
#[derive(Clone, Debug)]
pub struct RelaxationTrace {
    pub temperature_k: f64,
    pub samples: Vec<(f64, f64)>,
    pub label: String,
}

impl RelaxationTrace {
    /// The trace as unweighted fit points.
    pub fn to_points(&self) -> Vec<crate::fit::SeriesPoint> {
        self.samples
            .iter()
            .map(|&(t, y)| crate::fit::SeriesPoint::new(t, y))
            .collect()
    }
}

/// A labeled measurement set. Spectra and traces are each keyed by
/// temperature; temperatures must be unique within each kind.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub label: String,
    pub spectra: Vec<OdmrSpectrum>,
    pub traces: Vec<RelaxationTrace>,
    pub provenance: Vec<PathBuf>,
}

impl Dataset {
    pub fn new(label: impl Into<String>) -> Self {
        Dataset {
            label: label.into(),
            ..Dataset::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for s in &self.spectra {
            if seen.contains(&s.temperature_k.to_bits()) {
                return Err(Error::invalid(format!(
                    "dataset {}: duplicate spectrum temperature {} K",
                    self.label, s.temperature_k
                )));
            }
            seen.push(s.temperature_k.to_bits());
        }
        seen.clear();
        for t in &self.traces {
            if seen.contains(&t.temperature_k.to_bits()) {
                return Err(Error::invalid(format!(
                    "dataset {}: duplicate trace temperature {} K",
                    self.label, t.temperature_k
                )));
            }
            seen.push(t.temperature_k.to_bits());
        }
        if self.spectra.is_empty() && self.traces.is_empty() {
            return Err(Error::invalid(format!(
                "dataset {} has neither spectra nor traces",
                self.label
            )));
        }
        Ok(())
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub(crate) struct Table {
    /// (1-based line number, fields) for every non-empty, non-comment row.
    pub(crate) rows: Vec<(usize, Vec<String>)>,
    header: Vec<String>,
    pub(crate) path: String,
}

impl Table {
    pub(crate) fn parse_error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Index of a required header column (case-insensitive).
    pub(crate) fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| self.parse_error(1, format!("missing required column `{name}`")))
    }

    pub(crate) fn column_optional(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    /// Like `number`, but an empty cell reads as None.
    pub(crate) fn number_optional(
        &self,
        line: usize,
        fields: &[String],
        idx: usize,
    ) -> Result<Option<f64>> {
        match fields.get(idx).map(String::as_str) {
            None | Some("") => Ok(None),
            Some(_) => self.number(line, fields, idx).map(Some),
        }
    }

    pub(crate) fn cell<'a>(&self, line: usize, fields: &'a [String], idx: usize) -> Result<&'a str> {
        fields.get(idx).map(String::as_str).ok_or_else(|| {
            self.parse_error(line, format!("row has {} fields, need {}", fields.len(), idx + 1))
        })
    }

    pub(crate) fn number(&self, line: usize, fields: &[String], idx: usize) -> Result<f64> {
        let cell = fields.get(idx).ok_or_else(|| {
            self.parse_error(line, format!("row has {} fields, need {}", fields.len(), idx + 1))
        })?;
        let v: f64 = cell
            .parse()
            .map_err(|_| self.parse_error(line, format!("cell `{cell}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.parse_error(line, format!("cell `{cell}` is not finite")));
        }
        Ok(v)
    }
}

/// Splits a delimiter-separated file into header and data rows. The
/// delimiter is a comma when the header contains one, whitespace otherwise.
/// Blank lines and `#` comments are skipped.
pub(crate) fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let split = |line: &str, comma: bool| -> Vec<String> {
        if comma {
            line.split(',').map(|f| f.trim().to_string()).collect()
        } else {
            line.split_whitespace().map(str::to_string).collect()
        }
    };
    let mut header: Option<(Vec<String>, bool)> = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match &header {
            None => {
                let comma = line.contains(',');
                header = Some((split(line, comma), comma));
            }
            Some((_, comma)) => rows.push((i + 1, split(line, *comma))),
        }
    }
    let (header, _) = header.ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: "file has no header line".into(),
    })?;
    Ok(Table {
        rows,
        header,
        path: path.display().to_string(),
    })
}

/// Groups (temperature, x, y) rows by temperature, preserving first-seen
/// temperature order, then sorts groups by temperature.
fn group_by_temperature(rows: Vec<(f64, f64, f64)>) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for (t, x, y) in rows {
        match groups.iter_mut().find(|(gt, _)| *gt == t) {
            Some((_, samples)) => samples.push((x, y)),
            None => groups.push((t, vec![(x, y)])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
}

/// Sorts samples by x, keeping only the last row for duplicate x values.
/// Reports what it repaired through `warnings`.
fn sort_dedupe(
    samples: Vec<(f64, f64)>,
    temperature: f64,
    axis: &str,
    warnings: &mut Vec<String>,
) -> Vec<(f64, f64)> {
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.iter().map(|s| s.0.to_bits()).ne(samples.iter().map(|s| s.0.to_bits())) {
        warnings.push(format!(
            "{temperature} K: {axis} values were not sorted; reordered"
        ));
    }
    let mut deduped: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for s in sorted {
        match deduped.last_mut() {
            Some(last) if last.0 == s.0 => {
                warnings.push(format!(
                    "{temperature} K: duplicate {axis} {}; keeping the last row",
                    s.0
                ));
                last.1 = s.1;
            }
            _ => deduped.push(s),
        }
    }
    deduped
}

/// Reads a long-format spectrum file with columns
/// `temperature_k, frequency_mhz, contrast`, one sample per row, and groups
/// rows into one spectrum per temperature.
pub fn parse_spectrum_csv(path: &Path) -> Result<Parsed<Vec<OdmrSpectrum>>> {
    let table = read_table(path)?;
    let c_temp = table.column("temperature_k")?;
    let c_freq = table.column("frequency_mhz")?;
    let c_contrast = table.column("contrast")?;
    let mut rows = Vec::new();
    for (line, fields) in &table.rows {
        let t = table.number(*line, fields, c_temp)?;
        let f = table.number(*line, fields, c_freq)?;
        let c = table.number(*line, fields, c_contrast)?;
        rows.push((t, f, c));
    }
    if rows.is_empty() {
        return Err(table.parse_error(1, "empty dataset: header but no rows"));
    }
    let stem = file_stem(path);
    let mut warnings = Vec::new();
    let mut spectra = Vec::new();
    for (t, samples) in group_by_temperature(rows) {
        let samples = sort_dedupe(samples, t, "frequency", &mut warnings);
        let mut spectrum = OdmrSpectrum::new(samples, t)?;
        spectrum.label = format!("{stem} {t} K");
        spectra.push(spectrum);
    }
    Ok(Parsed {
        value: spectra,
        warnings,
    })
}

/// Reads a long-format relaxation file with columns
/// `temperature_k, time_ms, signal` and groups rows into one trace per
/// temperature. Rows with negative times are rejected with a diagnostic.
pub fn parse_trace_csv(path: &Path) -> Result<Parsed<Vec<RelaxationTrace>>> {
    let table = read_table(path)?;
    let c_temp = table.column("temperature_k")?;
    let c_time = table.column("time_ms")?;
    let c_signal = table.column("signal")?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for (line, fields) in &table.rows {
        let t = table.number(*line, fields, c_temp)?;
        let time = table.number(*line, fields, c_time)?;
        let signal = table.number(*line, fields, c_signal)?;
        if time < 0.0 {
            warnings.push(format!(
                "{}:{line}: negative time {time} ms; row rejected",
                table.path
            ));
            continue;
        }
        rows.push((t, time, signal));
    }
    if rows.is_empty() {
        return Err(table.parse_error(1, "empty dataset: no usable rows"));
    }
    let stem = file_stem(path);
    let mut traces = Vec::new();
    for (t, samples) in group_by_temperature(rows) {
        let samples = sort_dedupe(samples, t, "time", &mut warnings);
        traces.push(RelaxationTrace {
            temperature_k: t,
            samples,
            label: format!("{stem} {t} K"),
        });
    }
    Ok(Parsed {
        value: traces,
        warnings,
    })
}

/// Reads a plain fit series with columns `temperature_k, value_mhz` and an
/// optional `sigma_mhz`. Empty sigma cells make that point unweighted.
pub fn parse_series_csv(path: &Path) -> Result<Parsed<Vec<crate::fit::SeriesPoint>>> {
    let table = read_table(path)?;
    let c_t = table.column("temperature_k")?;
    let c_v = table.column("value_mhz")?;
    let c_s = table.column_optional("sigma_mhz");
    let mut points = Vec::new();
    for (line, fields) in &table.rows {
        let x = table.number(*line, fields, c_t)?;
        let y = table.number(*line, fields, c_v)?;
        let sigma = match c_s {
            Some(idx) => table.number_optional(*line, fields, idx)?,
            None => None,
        };
        points.push(match sigma {
            Some(s) => crate::fit::SeriesPoint::with_sigma(x, y, s),
            None => crate::fit::SeriesPoint::new(x, y),
        });
    }
    if points.is_empty() {
        return Err(table.parse_error(1, "empty dataset: header but no rows"));
    }
    Ok(Parsed {
        value: points,
        warnings: Vec::new(),
    })
}

/// CSV number format: scientific notation with nine digits after the
/// decimal point, so a write/parse round trip stays within 5e-10 relative.
pub fn format_number(v: f64) -> String {
    format!("{v:.9e}")
}

/// Writes spectra back out in the long format `parse_spectrum_csv` reads.
pub fn write_spectrum_csv(spectra: &[OdmrSpectrum], path: &Path) -> Result<()> {
    let mut out = String::from("temperature_k,frequency_mhz,contrast\n");
    for s in spectra {
        for &(f, c) in &s.samples {
            out.push_str(&format!(
                "{},{},{}\n",
                format_number(s.temperature_k),
                format_number(f),
                format_number(c)
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes traces back out in the long format `parse_trace_csv` reads.
pub fn write_trace_csv(traces: &[RelaxationTrace], path: &Path) -> Result<()> {
    let mut out = String::from("temperature_k,time_ms,signal\n");
    for t in traces {
        for &(time, signal) in &t.samples {
            out.push_str(&format!(
                "{},{},{}\n",
                format_number(t.temperature_k),
                format_number(time),
                format_number(signal)
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a phonon mode table. Two layouts are accepted:
/// `index, energy_mev, curvature_mhz` (precombined coefficients) or
/// `index, energy_mev, d2nu_mhz_per_a2, mass_amu` (raw curvatures, combined
/// via the zero-point amplitude hbar/(M omega)). `nu0_ref_mhz` is the static
/// reference the mode sum adds to; it is not part of the file.
pub fn load_mode_table(path: &Path, nu0_ref_mhz: f64) -> Result<Parsed<PhononModeTable>> {
    let table = read_table(path)?;
    let c_index = table.column("index")?;
    let c_energy = table.column("energy_mev")?;
    let precombined = table.column_optional("curvature_mhz");
    let raw = table.column_optional("d2nu_mhz_per_a2");
    let mut modes = Vec::new();
    match (precombined, raw) {
        (Some(c_curv), _) => {
            for (line, fields) in &table.rows {
                let index = table.number(*line, fields, c_index)? as u32;
                let energy = table.number(*line, fields, c_energy)?;
                let coeff = table.number(*line, fields, c_curv)?;
                if !(energy > 0.0) {
                    return Err(table.parse_error(*line, format!("energy {energy} meV must be > 0")));
                }
                modes.push(PhononMode {
                    index,
                    energy_mev: energy,
                    curvature_coeff_mhz: coeff,
                });
            }
        }
        (None, Some(c_d2)) => {
            let c_mass = table.column("mass_amu")?;
            for (line, fields) in &table.rows {
                let index = table.number(*line, fields, c_index)? as u32;
                let energy = table.number(*line, fields, c_energy)?;
                let d2 = table.number(*line, fields, c_d2)?;
                let mass = table.number(*line, fields, c_mass)?;
                modes.push(
                    mode_from_curvature(index, energy, d2, mass)
                        .map_err(|e| table.parse_error(*line, e.to_string()))?,
                );
            }
        }
        (None, None) => {
            return Err(table.parse_error(
                1,
                "need either a `curvature_mhz` or a `d2nu_mhz_per_a2` + `mass_amu` column pair",
            ));
        }
    }
    let table_value = PhononModeTable::new(modes, nu0_ref_mhz, file_stem(path))?;
    Ok(Parsed {
        value: table_value,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn spectrum_two_temperatures() {
        let f = write_temp(
            "temperature_k,frequency_mhz,contrast\n\
             300,3400,0.01\n300,3480,0.05\n300,3560,0.01\n\
             100,3400,0.02\n100,3480,0.06\n100,3560,0.02\n",
        );
        let parsed = parse_spectrum_csv(f.path()).unwrap();
        assert_eq!(parsed.value.len(), 2);
        assert_eq!(parsed.value[0].temperature_k, 100.0, "groups sort by temperature");
        assert_eq!(parsed.value[1].samples.len(), 3);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn spectrum_accepts_whitespace_delimiters() {
        let f = write_temp(
            "temperature_k  frequency_mhz  contrast\n\
             300 3400 0.01\n300 3480 0.05\n",
        );
        let parsed = parse_spectrum_csv(f.path()).unwrap();
        assert_eq!(parsed.value.len(), 1);
        assert_eq!(parsed.value[0].samples[1].0, 3480.0);
    }

    #[test]
    fn spectrum_sorts_unsorted_frequencies_with_warning() {
        let f = write_temp(
            "temperature_k,frequency_mhz,contrast\n\
             300,3560,0.01\n300,3400,0.05\n300,3480,0.02\n",
        );
        let parsed = parse_spectrum_csv(f.path()).unwrap();
        let freqs = parsed.value[0].frequencies();
        assert_eq!(freqs, vec![3400.0, 3480.0, 3560.0]);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("not sorted"), "{:?}", parsed.warnings);
    }

    #[test]
    fn spectrum_header_only_is_empty_dataset() {
        let f = write_temp("temperature_k,frequency_mhz,contrast\n");
        let err = parse_spectrum_csv(f.path()).unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn spectrum_structural_errors_carry_line_numbers() {
        let f = write_temp("temperature_k,frequency_mhz\n300,3400\n");
        let err = parse_spectrum_csv(f.path()).unwrap_err();
        assert!(err.to_string().contains("contrast"), "{err}");

        let f = write_temp("temperature_k,frequency_mhz,contrast\n300,3400,0.01\n300,oops,0.02\n");
        let err = parse_spectrum_csv(f.path()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "line number in {err}");

        let f = write_temp("temperature_k,frequency_mhz,contrast\n300,3400\n");
        let err = parse_spectrum_csv(f.path()).unwrap_err();
        assert!(err.to_string().contains("fields"), "{err}");
    }

    #[test]
    fn trace_groups_and_rejects_negative_times() {
        let f = write_temp(
            "temperature_k,time_ms,signal\n\
             200,0.0,1.0\n200,1.0,0.7\n200,-2.0,0.5\n200,2.0,0.5\n200,3.0,0.4\n",
        );
        let parsed = parse_trace_csv(f.path()).unwrap();
        assert_eq!(parsed.value.len(), 1);
        assert_eq!(parsed.value[0].samples.len(), 4, "negative-time row dropped");
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("negative time"));
    }

    #[test]
    fn trace_duplicate_time_last_wins() {
        let f = write_temp(
            "temperature_k,time_ms,signal\n\
             200,0.0,1.0\n200,1.0,0.7\n200,1.0,0.65\n200,2.0,0.5\n",
        );
        let parsed = parse_trace_csv(f.path()).unwrap();
        let samples = &parsed.value[0].samples;
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[1], (1.0, 0.65), "last duplicate wins");
        assert!(parsed.warnings.iter().any(|w| w.contains("duplicate")));
    }

    #[test]
    fn mode_table_precombined_form() {
        let f = write_temp("index,energy_mev,curvature_mhz\n0,10.0,-50.0\n1,30.0,-20.0\n");
        let parsed = load_mode_table(f.path(), 3600.0).unwrap();
        assert_eq!(parsed.value.modes().len(), 2);
        assert_eq!(parsed.value.nu0_ref_mhz, 3600.0);
        assert_eq!(parsed.value.modes()[1].curvature_coeff_mhz, -20.0);
    }

    #[test]
    fn mode_table_raw_curvature_form() {
        let f = write_temp(
            "index energy_mev d2nu_mhz_per_a2 mass_amu\n3 16.0 250.0 11.0\n",
        );
        let parsed = load_mode_table(f.path(), 0.0).unwrap();
        let expect = 0.5 * 250.0 * crate::constants::HBAR_SQ_OVER_AMU_MEV_A2 / (11.0 * 16.0);
        assert_relative_eq!(parsed.value.modes()[0].curvature_coeff_mhz, expect, epsilon = 1e-12);
    }

    #[test]
    fn mode_table_requires_a_known_layout() {
        let f = write_temp("index,energy_mev\n0,10.0\n");
        assert!(load_mode_table(f.path(), 0.0).is_err());
        let f = write_temp("index,energy_mev,d2nu_mhz_per_a2\n0,10.0,5.0\n");
        let err = load_mode_table(f.path(), 0.0).unwrap_err();
        assert!(err.to_string().contains("mass_amu"), "{err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = parse_spectrum_csv(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn dataset_validation() {
        let mut d = Dataset::new("S1");
        assert!(d.validate().is_err(), "empty dataset rejected");
        let samples = vec![(3400.0, 0.01), (3480.0, 0.05)];
        d.spectra.push(OdmrSpectrum::new(samples.clone(), 300.0).unwrap());
        assert!(d.validate().is_ok());
        d.spectra.push(OdmrSpectrum::new(samples, 300.0).unwrap());
        assert!(d.validate().is_err(), "duplicate temperature rejected");
    }

    #[test]
    fn series_reader_handles_optional_sigma() {
        let f = write_temp("temperature_k,value_mhz,sigma_mhz\n10,3490,0.1\n300,3307,\n");
        let points = parse_series_csv(f.path()).unwrap().value;
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].sigma_y, Some(0.1));
        assert_eq!(points[1].sigma_y, None, "empty sigma cell means unweighted");

        let f = write_temp("temperature_k,value_mhz\n10,3490\n");
        assert!(parse_series_csv(f.path()).unwrap().value[0].sigma_y.is_none());

        let f = write_temp("temperature_k,value_mhz\n");
        assert!(parse_series_csv(f.path()).is_err(), "header-only rejected");
    }

    #[test]
    fn write_parse_round_trip_stays_within_1e9_relative() {
        let spectra = vec![
            OdmrSpectrum {
                samples: vec![
                    (3400.123456789, 0.0123456789),
                    (3480.987654321, 0.0523456789),
                ],
                temperature_k: 123.456789,
                field_gauss: None,
                label: String::new(),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spectra.csv");
        write_spectrum_csv(&spectra, &path).unwrap();
        let back = parse_spectrum_csv(&path).unwrap().value;
        assert_eq!(back.len(), 1);
        for (orig, got) in spectra[0].samples.iter().zip(&back[0].samples) {
            assert_relative_eq!(orig.0, got.0, max_relative = 1e-9);
            assert_relative_eq!(orig.1, got.1, max_relative = 1e-9);
        }
        assert_relative_eq!(back[0].temperature_k, 123.456789, max_relative = 1e-9);

        let traces = vec![RelaxationTrace {
            temperature_k: 300.0,
            samples: vec![(0.0, 1.25), (0.123456789, 1.0987654321)],
            label: String::new(),
        }];
        let path = dir.path().join("traces.csv");
        write_trace_csv(&traces, &path).unwrap();
        let back = parse_trace_csv(&path).unwrap().value;
        assert_relative_eq!(back[0].samples[1].1, 1.0987654321, max_relative = 1e-9);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let f = write_temp(
            "# synthetic fixture\n\ntemperature_k,frequency_mhz,contrast\n# block\n300,3400,0.01\n\n300,3480,0.05\n",
        );
        let parsed = parse_spectrum_csv(f.path()).unwrap();
        assert_eq!(parsed.value[0].samples.len(), 2);
    }
}
