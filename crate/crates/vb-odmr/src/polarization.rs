//! Three-nucleus polarization: binomial amplitude weights, polarization
//! extraction from hyperfine peak amplitudes, flip-flop coefficients of the
//! hyperfine tensor, and the level-anticrossing field.

use crate::constants::GAMMA_E_MHZ_PER_G;
use crate::linalg::C64;
use crate::spin::{Branch, HyperfineTensor};
use crate::util::golden_min;
use crate::{Error, Result};

/// Per-nucleus up probability plus the four line weights it induces,
/// ordered by X = number of up spins (0..3), i.e. ascending total m_I.
#[derive(Clone, Copy, Debug)]
pub struct PolarizationState {
    pub p_up: f64,
    pub weights: [f64; 4],
}

impl PolarizationState {
    pub fn new(p_up: f64) -> Result<Self> {
        Ok(PolarizationState {
            p_up,
            weights: binomial_weights(p_up)?,
        })
    }
}

/// C(3,k) p^k (1-p)^{3-k} for k = 0..3. Index k is X, the number of up
/// spins; the line with X = k sits at total m_I = k - 3/2.
pub fn binomial_weights(p: f64) -> Result<[f64; 4]> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let q = 1.0 - p;
    Ok([q * q * q, 3.0 * p * q * q, 3.0 * p * p * q, p * p * p])
}

/// How the supplied amplitudes are ordered relative to total m_I.
/// Frequency order maps onto m_I order differently on the two branches;
/// the caller states which one applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmplitudeOrdering {
    /// amplitudes[0] is the most-down line (X = 0), amplitudes[3] is X = 3.
    AscendingMi,
    /// amplitudes[0] is X = 3; the list is reversed before fitting.
    DescendingMi,
}

/// Recovers the per-nucleus up probability from four hyperfine line
/// amplitudes. Amplitudes are normalized to sum 1, reordered per `ordering`,
/// then p is found by minimizing the squared mismatch to the binomial
/// weights over [0, 1]: a coarse scan brackets the global basin (the
/// mismatch is a degree-6 polynomial and can have several local minima,
/// e.g. for palindromic inputs), then golden-section search refines it to
/// 1e-9. Returns (p, residual sum of squares).
pub fn extract_polarization(
    amplitudes: &[f64; 4],
    ordering: AmplitudeOrdering,
) -> Result<(f64, f64)> {
    for (i, &a) in amplitudes.iter().enumerate() {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::invalid(format!(
                "amplitude {i} = {a} must be finite and >= 0"
            )));
        }
    }
    let total: f64 = amplitudes.iter().sum();
    if total == 0.0 {
        return Err(Error::invalid("all four amplitudes are zero"));
    }
    let mut w = [0.0; 4];
    for (slot, &a) in w.iter_mut().zip(amplitudes) {
        *slot = a / total;
    }
    if ordering == AmplitudeOrdering::DescendingMi {
        w.reverse();
    }
    let objective = |p: f64| -> f64 {
        let model = binomial_weights(p).expect("bracket stays inside [0,1]");
        w.iter()
            .zip(model)
            .map(|(a, m)| (a - m) * (a - m))
            .sum()
    };
    // Ties on the scan keep the lowest p, so palindromic inputs resolve
    // deterministically to the left of the two symmetric minima.
    let steps = 2000_usize;
    let mut best_k = 0_usize;
    let mut best_v = f64::INFINITY;
    for k in 0..=steps {
        let v = objective(k as f64 / steps as f64);
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    let lo = best_k.saturating_sub(1) as f64 / steps as f64;
    let hi = (best_k + 1).min(steps) as f64 / steps as f64;
    let p = golden_min(&objective, lo, hi, 1e-9).clamp(0.0, 1.0);
    Ok((p, objective(p)))
}

/// Flip-flop coefficients of one hyperfine tensor: a1 drives the
/// polarization-transfer term, a2 the leakage term connecting the other
/// electron sublevel pair.
#[derive(Clone, Copy, Debug)]
pub struct FlipFlopCoeffs {
    pub a1_mhz: f64,
    pub a2_mhz: C64,
}

impl FlipFlopCoeffs {
    /// |a2| / |a1|, the leakage figure of merit; infinite when a1 = 0.
    pub fn leakage_ratio(&self) -> f64 {
        let a2 = self.a2_mhz.norm();
        if self.a1_mhz == 0.0 {
            if a2 == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            a2 / self.a1_mhz.abs()
        }
    }
}

/// a1 = (a_xx + a_yy)/4; a2 = (a_xx - a_yy)/4 + a_xy/(2i).
pub fn flip_flop_coefficients(tensor: &HyperfineTensor) -> FlipFlopCoeffs {
    FlipFlopCoeffs {
        a1_mhz: (tensor.a_xx + tensor.a_yy) / 4.0,
        // 1/(2i) = -i/2.
        a2_mhz: C64::new((tensor.a_xx - tensor.a_yy) / 4.0, -tensor.a_xy / 2.0),
    }
}

/// Field at which the electron Zeeman energy cancels the excited-state
/// zero-field splitting, B = zfs / gamma_e (Gauss).
pub fn eslac_field(excited_zfs_mhz: f64) -> Result<f64> {
    if !(excited_zfs_mhz > 0.0) {
        return Err(Error::invalid(format!(
            "excited-state splitting {excited_zfs_mhz} MHz must be > 0"
        )));
    }
    Ok(excited_zfs_mhz / GAMMA_E_MHZ_PER_G)
}

/// Binomial weights arranged in ascending frequency order for one branch.
///
/// On the upper branch the lowest-frequency line is the fully polarized
/// X = 3 line, so the weights are reversed; on the lower branch the m_I
/// coefficient flips sign and the ascending-X order is kept. Extractions
/// should rely on the explicit `AmplitudeOrdering` flag instead of this
/// convention when the branch mapping is in doubt.
pub fn polarized_amplitude_model(p: f64, branch: Branch) -> Result<[f64; 4]> {
    let mut w = binomial_weights(p)?;
    if branch == Branch::Plus {
        w.reverse();
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unpolarized_weights_are_1331() {
        let w = binomial_weights(0.5).unwrap();
        assert_eq!(w, [0.125, 0.375, 0.375, 0.125]);
    }

    #[test]
    fn fully_polarized_weights() {
        assert_eq!(binomial_weights(1.0).unwrap(), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(binomial_weights(0.0).unwrap(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn weights_at_p_030() {
        let w = binomial_weights(0.3).unwrap();
        let expect = [0.343, 0.441, 0.189, 0.027];
        for (got, want) in w.iter().zip(expect) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_sum_to_one_and_stay_in_range() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let w = binomial_weights(p).unwrap();
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum} at p = {p}");
            assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        assert!(binomial_weights(-0.01).is_err());
        assert!(binomial_weights(1.01).is_err());
    }

    #[test]
    fn extraction_of_1331_is_half() {
        let (p, residual) = extract_polarization(&[2.0, 6.0, 6.0, 2.0], AmplitudeOrdering::AscendingMi).unwrap();
        assert!((p - 0.5).abs() < 1e-9, "p = {p}");
        assert!(residual < 1e-15);
    }

    #[test]
    fn extraction_round_trips_binomial_weights() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let w = binomial_weights(p).unwrap();
            let (got, _) = extract_polarization(&w, AmplitudeOrdering::AscendingMi).unwrap();
            assert!((got - p).abs() <= 1e-9, "p = {p} recovered as {got}");
        }
    }

    #[test]
    fn extraction_matches_brute_force_grid() {
        // Golden-section must agree with an exhaustive scan, including on
        // noisy inputs where the residual is nonzero.
        let cases: [[f64; 4]; 4] = [
            [0.343, 0.441, 0.189, 0.027],
            [0.30, 0.45, 0.20, 0.05],
            [0.10, 0.20, 0.40, 0.30],
            [0.25, 0.25, 0.25, 0.25],
        ];
        for amps in cases {
            let (p, _) = extract_polarization(&amps, AmplitudeOrdering::AscendingMi).unwrap();
            let total: f64 = amps.iter().sum();
            let norm: Vec<f64> = amps.iter().map(|a| a / total).collect();
            let objective = |p: f64| -> f64 {
                let m = binomial_weights(p).unwrap();
                norm.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..=1_000_000 {
                let cand = k as f64 * 1e-6;
                let v = objective(cand);
                if v < best.0 {
                    best = (v, cand);
                }
            }
            assert!(
                (p - best.1).abs() <= 2e-6,
                "golden {p} vs grid {} for {amps:?}",
                best.1
            );
        }
    }

    #[test]
    fn extraction_ordering_flag_reverses() {
        let (p, r) = extract_polarization(&[0.027, 0.189, 0.441, 0.343], AmplitudeOrdering::DescendingMi).unwrap();
        assert!((p - 0.3).abs() < 1e-6, "p = {p}");
        assert!(r < 1e-15);

        // Reversing the list and flipping the flag leaves p unchanged.
        let w = [0.10, 0.20, 0.40, 0.30];
        let mut rev = w;
        rev.reverse();
        let (p1, _) = extract_polarization(&w, AmplitudeOrdering::AscendingMi).unwrap();
        let (p2, _) = extract_polarization(&rev, AmplitudeOrdering::DescendingMi).unwrap();
        assert!((p1 - p2).abs() < 1e-9);
    }

    #[test]
    fn extraction_rejects_bad_input() {
        assert!(extract_polarization(&[0.0; 4], AmplitudeOrdering::AscendingMi).is_err());
        assert!(extract_polarization(&[1.0, -0.1, 0.2, 0.3], AmplitudeOrdering::AscendingMi).is_err());
    }

    #[test]
    fn flip_flop_symmetric_tensor_has_no_leakage() {
        let t = HyperfineTensor {
            a_xx: 6.0,
            a_yy: 6.0,
            a_zz: 64.0,
            a_xy: 0.0,
        };
        let c = flip_flop_coefficients(&t);
        assert_eq!(c.a1_mhz, 3.0, "a1 = A/2 for in-plane symmetric tensors");
        assert_eq!(c.a2_mhz.norm(), 0.0);
        assert_eq!(c.leakage_ratio(), 0.0);
    }

    #[test]
    fn flip_flop_reference_values() {
        let t = HyperfineTensor {
            a_xx: 4.0,
            a_yy: 2.0,
            a_zz: 0.0,
            a_xy: 2.0,
        };
        let c = flip_flop_coefficients(&t);
        assert_relative_eq!(c.a1_mhz, 1.5, epsilon = 1e-15);
        assert_relative_eq!(c.a2_mhz.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(c.a2_mhz.im, -1.0, epsilon = 1e-15);
        assert_relative_eq!(c.a2_mhz.norm(), 1.118033988749895, epsilon = 1e-12);
        assert_relative_eq!(c.leakage_ratio(), 1.118033988749895 / 1.5, epsilon = 1e-12);

        let xy_only = HyperfineTensor {
            a_xx: 0.0,
            a_yy: 0.0,
            a_zz: 0.0,
            a_xy: 2.0,
        };
        let c = flip_flop_coefficients(&xy_only);
        assert_eq!(c.a1_mhz, 0.0);
        assert_relative_eq!(c.a2_mhz.im, -1.0, epsilon = 1e-15);
        assert!(c.leakage_ratio().is_infinite());
    }

    #[test]
    fn eslac_field_reference() {
        assert_relative_eq!(eslac_field(2128.0).unwrap(), 760.0, epsilon = 1e-12);
        assert_relative_eq!(eslac_field(2.8).unwrap(), 1.0, epsilon = 1e-12);
        assert!(eslac_field(0.0).is_err());
        assert!(eslac_field(-10.0).is_err());
    }

    #[test]
    fn branch_models_at_half_are_symmetric() {
        let minus = polarized_amplitude_model(0.5, Branch::Minus).unwrap();
        let plus = polarized_amplitude_model(0.5, Branch::Plus).unwrap();
        assert_eq!(minus, [0.125, 0.375, 0.375, 0.125]);
        assert_eq!(plus, minus, "1:3:3:1 is palindromic");
    }

    #[test]
    fn plus_branch_lowest_line_is_fully_polarized() {
        let plus = polarized_amplitude_model(0.3, Branch::Plus).unwrap();
        assert_relative_eq!(plus[0], 0.027, epsilon = 1e-12);
        assert_relative_eq!(plus[3], 0.343, epsilon = 1e-12);
    }

    #[test]
    fn branch_model_round_trips_through_extraction() {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let plus = polarized_amplitude_model(p, Branch::Plus).unwrap();
            let (got, _) = extract_polarization(&plus, AmplitudeOrdering::DescendingMi).unwrap();
            assert!((got - p).abs() <= 1e-9, "plus branch p = {p} -> {got}");

            let minus = polarized_amplitude_model(p, Branch::Minus).unwrap();
            let (got, _) = extract_polarization(&minus, AmplitudeOrdering::AscendingMi).unwrap();
            assert!((got - p).abs() <= 1e-9, "minus branch p = {p} -> {got}");
        }
    }
}
