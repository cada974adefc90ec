// Spin-lattice relaxation: the two-phonon Raman rate model
// Gamma(T) = A n(n+1) + A_S, exponential T1 extraction from a time trace,
// and a full rate-vs-temperature fit.
//
//     cargo run --example relaxation_rates

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vb_odmr::fit::{
    fit_relaxation, fit_t1_trace, EnergyConstraint, RelaxationMode, RelaxationParams, SeriesPoint,
};
use vb_odmr::phonon::bose_occupation;

fn main() -> vb_odmr::Result<()> {
    let truth = RelaxationParams {
        modes: vec![RelaxationMode { a_per_ms: 4.0, homega_mev: 18.4 }],
        a_s_per_ms: 0.01,
    };

    println!("{:>7}  {:>10}  {:>12}  {:>10}", "T (K)", "n(homega)", "rate (1/ms)", "T1 (ms)");
    for t in [10.0, 50.0, 100.0, 200.0, 300.0, 400.0] {
        let n = bose_occupation(18.4, t);
        let rate = truth.eval(t);
        println!("{t:>7}  {n:>10.5}  {rate:>12.5}  {:>10.4}", 1.0 / rate);
    }
    // High-temperature check: n(n+1) ~ (kT/homega)^2, so doubling T
    // quadruples the rate once kT >> homega.
    let ratio = truth.eval(600.0) / truth.eval(300.0);
    println!("high-T ratio Gamma(600)/Gamma(300) = {ratio:.3} (quadratic limit: 4)");

    // T1 from a single decay trace.
    let t1_true = 1.0 / truth.eval(300.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trace: Vec<SeriesPoint> = (0..40)
        .map(|i| {
            let t_ms = 5.0 * t1_true * i as f64 / 39.0;
            let signal = 1.0 + 0.25 * (-t_ms / t1_true).exp() + 0.002 * (2.0 * rng.gen::<f64>() - 1.0);
            SeriesPoint::new(t_ms, signal)
        })
        .collect();
    let (t1, result) = fit_t1_trace(&trace)?;
    println!("\nT1 trace fit at 300 K: {t1:.4} ms (truth {t1_true:.4}), converged = {}", result.converged);

    // Rate-vs-temperature fit with the phonon energy left free.
    let rates: Vec<SeriesPoint> = (0..12)
        .map(|i| {
            let t = 10.0 + 31.0 * i as f64;
            SeriesPoint::new(t, truth.eval(t) * (1.0 + 0.01 * (2.0 * rng.gen::<f64>() - 1.0)))
        })
        .collect();
    let (fitted, fit) = fit_relaxation(&rates, &EnergyConstraint::Free(vec![15.0]))?;
    println!("\nrate model fit (free energy):");
    println!("  A      = {:.4} /ms   (truth {})", fitted.modes[0].a_per_ms, truth.modes[0].a_per_ms);
    println!("  homega = {:.4} meV  (truth {})", fitted.modes[0].homega_mev, truth.modes[0].homega_mev);
    println!("  A_S    = {:.4} /ms   (truth {})", fitted.a_s_per_ms, truth.a_s_per_ms);
    println!("  converged = {}", fit.converged);
    Ok(())
}
