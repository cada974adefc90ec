// The two-level thermal model nu(T) = nu0 + c / (exp(homega / kT) - 1):
// evaluate it, fit it to noisy data, and read off the zero-point value
// and the local susceptibility d(nu)/dT.
//
//     cargo run --example thermal_shift

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vb_odmr::fit::{fit_susceptibility, fit_thermal, SeriesPoint, ThermalModelParams};

fn main() -> vb_odmr::Result<()> {
    let truth = ThermalModelParams {
        nu0_mhz: 3600.0,
        c_nu_mhz: -200.0,
        homega_mev: 18.4,
    };
    println!("truth: nu0 = {} MHz, c = {} MHz, homega = {} meV", truth.nu0_mhz, truth.c_nu_mhz, truth.homega_mev);
    println!("nu(0 K) = nu0 + c/2 = {} MHz (zero-point offset)", truth.zero_kelvin_value());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sigma = 0.1; // MHz
    let points: Vec<SeriesPoint> = (0..12)
        .map(|i| {
            let t = 10.0 + 31.0 * i as f64;
            let noise = sigma * (2.0 * rng.gen::<f64>() - 1.0);
            SeriesPoint::with_sigma(t, truth.eval(t) + noise, sigma)
        })
        .collect();

    let init = ThermalModelParams::initial_guess(&points)?;
    println!("\ninitial guess: nu0 = {:.1}, c = {:.1}, homega = {:.1}", init.nu0_mhz, init.c_nu_mhz, init.homega_mev);

    let (fitted, result) = fit_thermal(&points, &init)?;
    println!("fit converged in {} iterations", result.iterations);
    println!(
        "  nu0    = {:9.3} +- {:.3} MHz",
        fitted.nu0_mhz,
        result.sigma("nu0_mhz").unwrap_or(f64::NAN)
    );
    println!(
        "  c      = {:9.3} +- {:.3} MHz",
        fitted.c_nu_mhz,
        result.sigma("c_nu_mhz").unwrap_or(f64::NAN)
    );
    println!(
        "  homega = {:9.3} +- {:.3} meV",
        fitted.homega_mev,
        result.sigma("homega_mev").unwrap_or(f64::NAN)
    );
    println!("  nu(0 K) = {:.3} MHz", fitted.zero_kelvin_value());

    // The model's analytic slope and a straight-line fit over a window
    // should agree; both are ways to quote a thermometry susceptibility.
    let (slope, slope_sigma) = fit_susceptibility(&points, 250.0, 350.0)?;
    println!("\nsusceptibility near room temperature:");
    println!("  analytic d(nu)/dT at 300 K: {:.4} MHz/K", fitted.susceptibility(300.0));
    println!("  linear fit over 250..350 K: {slope:.4} +- {slope_sigma:.4} MHz/K");
    Ok(())
}
