// Many-mode frequency shift: each vibrational mode contributes
// c_i (n_i + 1/2) to the resonance, with n_i the Bose occupation. A table
// of (energy, curvature) pairs reproduces the full temperature dependence.
//
//     cargo run --example phonon_modes

use vb_odmr::phonon::{
    bose_occupation, dominant_mode, evaluate_mode_sum, mode_from_curvature, PhononMode,
    PhononModeTable,
};

fn main() -> vb_odmr::Result<()> {
    // Occupation rises from zero and approaches kT / homega at high T.
    println!("Bose occupation of an 18.4 meV mode:");
    for t in [10.0, 100.0, 200.0, 300.0, 400.0] {
        println!("  n({t:>5} K) = {:.5}", bose_occupation(18.4, t));
    }

    // Modes can be given with a precombined coefficient (MHz) or from a raw
    // curvature in MHz per Angstrom^2 plus an effective mass in amu; the
    // second form folds in the zero-point length hbar / (M omega).
    let precombined = PhononMode { index: 0, energy_mev: 18.4, curvature_coeff_mhz: -95.0 };
    let from_raw = mode_from_curvature(1, 40.0, -180.0, 13.6)?;
    println!(
        "\nmode 1 from raw curvature: energy {} meV, coefficient {:.4} MHz",
        from_raw.energy_mev, from_raw.curvature_coeff_mhz
    );

    let table = PhononModeTable::new(
        vec![
            precombined,
            from_raw,
            PhononMode { index: 2, energy_mev: 85.0, curvature_coeff_mhz: -4.0 },
        ],
        3700.0,
        "example modes",
    )?;

    let top = dominant_mode(&table);
    println!(
        "dominant mode over 0..400 K: index {} at {} meV",
        top.index, top.energy_mev
    );

    println!("\n{:>7}  {:>14}  shift from 0 K", "T (K)", "nu (MHz)");
    let nu_0 = evaluate_mode_sum(&table, 0.0);
    for i in 0..=8 {
        let t = 50.0 * i as f64;
        let nu = evaluate_mode_sum(&table, t);
        println!("{t:>7}  {nu:>14.4}  {:>+10.4}", nu - nu_0);
    }
    println!("\nat T = 0 every mode still contributes c_i / 2: zero-point shift");
    println!("nu(0) - nu0_ref = {:.4} MHz", nu_0 - table.nu0_ref_mhz);
    Ok(())
}
