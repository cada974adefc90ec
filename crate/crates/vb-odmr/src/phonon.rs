//! Phonon occupation numbers and the second-order spin-phonon temperature
//! model: per-mode coefficient sums, dominant-mode lookup, and the
//! finite-difference curvature estimator that produces the coefficients.

use crate::constants::{HBAR_SQ_OVER_AMU_MEV_A2, K_B_MEV_PER_K};
use crate::{Error, Result};

/// Mean occupation 1/(e^{E/kT} - 1); 0 at T = 0 by continuous limit.
pub fn bose_occupation(energy_mev: f64, t_k: f64) -> f64 {
    assert!(energy_mev > 0.0, "phonon energy must be > 0 meV");
    assert!(t_k >= 0.0, "temperature must be >= 0 K");
    if t_k == 0.0 {
        return 0.0;
    }
    let x = energy_mev / (K_B_MEV_PER_K * t_k);
    1.0 / x.exp_m1()
}

/// d n / d T, the analytic temperature derivative of `bose_occupation`.
/// Evaluates e^x/(e^x - 1)^2 as e^{-x}/(1 - e^{-x})^2 to stay finite for
/// large x; 0 at T = 0.
pub fn bose_occupation_dt(energy_mev: f64, t_k: f64) -> f64 {
    assert!(energy_mev > 0.0, "phonon energy must be > 0 meV");
    assert!(t_k >= 0.0, "temperature must be >= 0 K");
    if t_k == 0.0 {
        return 0.0;
    }
    let x = energy_mev / (K_B_MEV_PER_K * t_k);
    let em = (-x).exp();
    let occ_sq = em / (1.0 - em).powi(2);
    (energy_mev / (K_B_MEV_PER_K * t_k * t_k)) * occ_sq
}

/// d n / d E at fixed temperature, used by analytic fit Jacobians.
pub fn bose_occupation_denergy(energy_mev: f64, t_k: f64) -> f64 {
    assert!(energy_mev > 0.0, "phonon energy must be > 0 meV");
    assert!(t_k >= 0.0, "temperature must be >= 0 K");
    if t_k == 0.0 {
        return 0.0;
    }
    let x = energy_mev / (K_B_MEV_PER_K * t_k);
    let em = (-x).exp();
    let occ_sq = em / (1.0 - em).powi(2);
    -occ_sq / (K_B_MEV_PER_K * t_k)
}

/// One vibrational mode's contribution to the resonance shift.
#[derive(Clone, Copy, Debug)]
pub struct PhononMode {
    pub index: u32,
    /// Mode energy, meV; > 0 (rigid translations are excluded upstream).
    pub energy_mev: f64,
    /// Precombined coefficient c_i = (1/2) (d2nu/dq^2) hbar/(M omega), MHz.
    pub curvature_coeff_mhz: f64,
}

/// Combines a raw curvature (MHz per Angstrom^2), mode mass (amu), and mode
/// energy (meV) into the precombined coefficient.
pub fn mode_from_curvature(index: u32, energy_mev: f64, d2nu_mhz_per_a2: f64, mass_amu: f64) -> Result<PhononMode> {
    if !(energy_mev > 0.0) {
        return Err(Error::invalid(format!("mode {index}: energy must be > 0 meV")));
    }
    if !(mass_amu > 0.0) {
        return Err(Error::invalid(format!("mode {index}: mass must be > 0 amu")));
    }
    let zero_point_sq = HBAR_SQ_OVER_AMU_MEV_A2 / (mass_amu * energy_mev);
    Ok(PhononMode {
        index,
        energy_mev,
        curvature_coeff_mhz: 0.5 * d2nu_mhz_per_a2 * zero_point_sq,
    })
}

/// A set of modes plus the static reference value the shifts add to.
#[derive(Clone, Debug)]
pub struct PhononModeTable {
    modes: Vec<PhononMode>,
    pub nu0_ref_mhz: f64,
    pub source_label: String,
}

impl PhononModeTable {
    /// Validates: non-empty, unique indices, strictly positive energies.
    pub fn new(modes: Vec<PhononMode>, nu0_ref_mhz: f64, source_label: impl Into<String>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("mode table is empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &modes {
            if !(m.energy_mev > 0.0) {
                return Err(Error::invalid(format!(
                    "mode {}: energy {} meV must be > 0 (translational modes are excluded)",
                    m.index, m.energy_mev
                )));
            }
            if !seen.insert(m.index) {
                return Err(Error::invalid(format!("duplicate mode index {}", m.index)));
            }
        }
        Ok(PhononModeTable {
            modes,
            nu0_ref_mhz,
            source_label: source_label.into(),
        })
    }

    pub fn modes(&self) -> &[PhononMode] {
        &self.modes
    }
}

/// nu(T) = nu0_ref + sum_i c_i (n_i(T) + 1/2), summed in stored mode order.
pub fn evaluate_mode_sum(table: &PhononModeTable, t_k: f64) -> f64 {
    evaluate_mode_sum_with_reference(table, t_k, |_| table.nu0_ref_mhz)
}

/// Same sum with a caller-supplied nu0(T) replacing the constant reference,
/// for tabulated lattice-expansion corrections.
pub fn evaluate_mode_sum_with_reference(
    table: &PhononModeTable,
    t_k: f64,
    nu0_of_t: impl Fn(f64) -> f64,
) -> f64 {
    let shift: f64 = table
        .modes
        .iter()
        .map(|m| m.curvature_coeff_mhz * (bose_occupation(m.energy_mev, t_k) + 0.5))
        .sum();
    nu0_of_t(t_k) + shift
}

/// Mode with the largest |coefficient|; ties go to the lowest energy.
pub fn dominant_mode(table: &PhononModeTable) -> &PhononMode {
    table
        .modes
        .iter()
        .reduce(|best, m| {
            let a = m.curvature_coeff_mhz.abs();
            let b = best.curvature_coeff_mhz.abs();
            if a > b || (a == b && m.energy_mev < best.energy_mev) {
                m
            } else {
                best
            }
        })
        .expect("table is non-empty by construction")
}

/// Central second difference (nu_plus - 2 nu_zero + nu_minus) / delta_q^2.
pub fn curvature_from_samples(nu_minus: f64, nu_zero: f64, nu_plus: f64, delta_q: f64) -> Result<f64> {
    if !(delta_q > 0.0) {
        return Err(Error::invalid("displacement step must be > 0"));
    }
    Ok((nu_plus - 2.0 * nu_zero + nu_minus) / (delta_q * delta_q))
}
