// Shot-noise-limited sensing figures from a fitted line shape: magnetic
// sensitivity eta_B from the steepest slope of the spectrum, thermal
// sensitivity eta_T from the slope and the frequency-temperature
// susceptibility.
//
//     cargo run --example sensing_sensitivity

use vb_odmr::lineshape::{max_abs_derivative, OdmrModelParams};
use vb_odmr::sensitivity::{eta_b_closed_form, eta_b_general, eta_t, sensitivity_report};

fn main() -> vb_odmr::Result<()> {
    let photon_rate_hz = 2.6e6;

    // One isolated Lorentzian: the closed form
    // eta_B = (8 pi / 3 sqrt(3)) (1 / gamma_e) (delta_nu / C sqrt(R))
    // and the general max-slope formula must agree.
    let contrast = 0.1;
    let fwhm = 20.0;
    let single = OdmrModelParams {
        branch_centers: (3480.0, 3480.0 + 1e6),
        hyperfine_splitting: 1e-3,
        widths: (fwhm, fwhm),
        amplitudes: (vec![0.0, contrast, 0.0, 0.0], vec![0.0; 4]),
        line_count: 4,
    };
    let slope = max_abs_derivative(&single);
    let general = eta_b_general(photon_rate_hz, slope.per_hz())?;
    let closed = eta_b_closed_form(contrast, fwhm, photon_rate_hz)?;
    println!("single line, contrast {contrast}, fwhm {fwhm} MHz, R = {photon_rate_hz:.1e} /s:");
    println!("  max |dC/dnu| = {:.6e} per MHz at {:.2} MHz", slope.per_mhz, slope.at_mhz);
    println!("  eta_B general     = {general:.6e} G/sqrt(Hz)");
    println!("  eta_B closed form = {closed:.6e} G/sqrt(Hz)");
    println!("  relative gap      = {:.2e}", (general - closed).abs() / closed);

    // A realistic multi-line model: overlapping hyperfine lines flatten the
    // slope, so the general formula is the one to trust.
    let weights = [0.125, 0.375, 0.375, 0.125];
    let amps: Vec<f64> = weights.iter().map(|w| 0.08 * w).collect();
    let multi = OdmrModelParams {
        branch_centers: (3348.0, 3852.0),
        hyperfine_splitting: 70.0,
        widths: (25.0, 25.0),
        amplitudes: (amps.clone(), amps),
        line_count: 4,
    };
    let report = sensitivity_report(&multi, photon_rate_hz, Some(-0.77))?;
    println!("\neight-line model with chi = -0.77 MHz/K:");
    println!("  steepest point    = {:.2} MHz", report.slope_at_mhz);
    println!("  eta_B = {:.6e} G/sqrt(Hz)", report.eta_b_g_per_sqrt_hz);
    println!("  eta_T = {:.4} K/sqrt(Hz)", report.eta_t_k_per_sqrt_hz.unwrap());

    // eta_T directly from numbers, the thermometry benchmark.
    let bench = eta_t(-0.77, 2.6e6, 2.2e-9)?;
    println!("\nbenchmark eta_T(chi = -0.77 MHz/K, R = 2.6e6 /s, slope = 2.2e-9 /Hz) = {bench:.4} K/sqrt(Hz)");
    Ok(())
}
