// The on-disk formats: long-format spectrum and trace CSVs, series files,
// and phonon mode tables. Values are written as `{:.9e}` so a write-read
// round trip reproduces every number to better than 1e-9 relative.
//
//     cargo run --example csv_io

use std::path::Path;

use vb_odmr::data::{
    load_mode_table, parse_spectrum_csv, parse_trace_csv, write_spectrum_csv, write_trace_csv,
};
use vb_odmr::phonon::evaluate_mode_sum;
use vb_odmr::synth::{synthesize_dataset, SynthConfig, SynthTruth};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = Path::new("target/example-csv");
    std::fs::create_dir_all(out)?;

    let mut config = SynthConfig::default();
    config.temperatures_k = vec![100.0, 200.0, 300.0];
    config.grid_step_mhz = 5.0;
    let dataset = synthesize_dataset(&SynthTruth::default(), &config, "io-demo")?;

    // Spectra: temperature_k, frequency_mhz, contrast; one block per
    // temperature, readable by any CSV tool.
    let spectra_path = out.join("spectra.csv");
    write_spectrum_csv(&dataset.spectra, &spectra_path)?;
    let parsed = parse_spectrum_csv(&spectra_path)?;
    println!(
        "spectra.csv: wrote {} spectra, read back {} ({} warnings)",
        dataset.spectra.len(),
        parsed.value.len(),
        parsed.warnings.len()
    );
    let max_gap = dataset
        .spectra
        .iter()
        .zip(&parsed.value)
        .flat_map(|(a, b)| a.samples.iter().zip(&b.samples))
        .map(|(x, y)| (x.1 - y.1).abs())
        .fold(0.0, f64::max);
    println!("  max contrast round-trip error: {max_gap:.2e}");

    // Traces: temperature_k, time_ms, signal.
    let traces_path = out.join("traces.csv");
    write_trace_csv(&dataset.traces, &traces_path)?;
    let traces = parse_trace_csv(&traces_path)?;
    println!("traces.csv: {} traces read back", traces.value.len());

    // Mode tables come in two layouts. Precombined coefficients:
    let table_a = out.join("modes-precombined.csv");
    std::fs::write(
        &table_a,
        "index,energy_mev,curvature_mhz\n0,18.4,-95.0\n1,40.0,-12.0\n",
    )?;
    // or raw curvature (MHz per Angstrom^2) plus mode mass (amu), which the
    // loader converts using the zero-point length of each mode:
    let table_b = out.join("modes-raw.csv");
    std::fs::write(
        &table_b,
        "index,energy_mev,d2nu_mhz_per_A2,mass_amu\n0,18.4,-171.8,13.6\n1,40.0,-47.2,13.6\n",
    )?;

    for path in [&table_a, &table_b] {
        let table = load_mode_table(path, 3700.0)?.value;
        println!(
            "{}: {} modes, nu(300 K) = {:.4} MHz",
            path.file_name().unwrap().to_string_lossy(),
            table.modes().len(),
            evaluate_mode_sum(&table, 300.0)
        );
    }

    // Malformed input fails with the line number; rows that are merely
    // unphysical are skipped with a warning instead.
    std::fs::write(out.join("bad.csv"), "temperature_k,frequency_mhz\n300,3400\n")?;
    match parse_spectrum_csv(&out.join("bad.csv")) {
        Err(e) => println!("\nmissing column is a hard error: {e}"),
        Ok(_) => unreachable!("contrast column is required"),
    }
    Ok(())
}
