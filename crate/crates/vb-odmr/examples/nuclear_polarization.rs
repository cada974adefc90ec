// Nuclear polarization of the three spin-1/2 nitrogen neighbors: the
// hyperfine line amplitudes follow a binomial pattern in the up-fraction p,
// so relative line heights measure p directly. Also the flip-flop matrix
// elements behind optical pumping and the level anti-crossing field.
//
//     cargo run --example nuclear_polarization

use vb_odmr::polarization::{
    binomial_weights, eslac_field, extract_polarization, flip_flop_coefficients,
    polarized_amplitude_model, AmplitudeOrdering,
};
use vb_odmr::spin::{Branch, HyperfineTensor};

fn main() -> vb_odmr::Result<()> {
    println!("{:>6}  line weights (ascending m_I)", "p");
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let w = binomial_weights(p)?;
        println!("{p:>6}  [{:.4}, {:.4}, {:.4}, {:.4}]", w[0], w[1], w[2], w[3]);
    }
    println!("unpolarized p = 0.5 gives the familiar 1:3:3:1 pattern");

    // Round trip: make amplitudes at a known p, scale them arbitrarily,
    // recover p from the ratios alone.
    let p_true = 0.83;
    let w = binomial_weights(p_true)?;
    let amps: [f64; 4] = [170.0 * w[0], 170.0 * w[1], 170.0 * w[2], 170.0 * w[3]];
    let (p, residual) = extract_polarization(&amps, AmplitudeOrdering::AscendingMi)?;
    println!("\nextracted p = {p:.6} from scaled amplitudes (truth {p_true}, residual {residual:.1e})");

    // On the upper branch the frequency axis runs against m_I, so the same
    // physical polarization shows mirrored line heights.
    let lower = polarized_amplitude_model(p_true, Branch::Minus)?;
    let upper = polarized_amplitude_model(p_true, Branch::Plus)?;
    println!("lower-branch heights (freq ascending): {lower:?}");
    println!("upper-branch heights (freq ascending): {upper:?}");

    // Flip-flop coupling: a1 drives the polarization transfer, a2 leaks it.
    let tensor = HyperfineTensor { a_xx: 45.0, a_yy: 87.0, a_zz: 47.0, a_xy: 21.0 };
    let coeffs = flip_flop_coefficients(&tensor);
    println!("\nflip-flop coefficients of [45, 87, 47, 21] MHz tensor:");
    println!("  a1 = (a_xx + a_yy) / 4 = {:.3} MHz", coeffs.a1_mhz);
    println!("  |a2| = {:.3} MHz, leakage |a2/a1| = {:.4}", coeffs.a2_mhz.norm(), coeffs.leakage_ratio());

    let zfs = 2100.0;
    println!("\nexcited-state anti-crossing for zfs {zfs} MHz: B = {:.1} G", eslac_field(zfs)?);
    Ok(())
}
