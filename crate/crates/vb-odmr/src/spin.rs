//! Spin operators, the electron-nuclear Hamiltonian, and microwave
//! transition lines, both exact (from diagonalization) and secular.

use crate::constants::{GAMMA_E_MHZ_PER_G, GAMMA_N14_MHZ_PER_G, GAMMA_N15_MHZ_PER_G};
use crate::linalg::{diagonalize, C64, CMatrix};
use crate::{Error, Result};

/// Nitrogen isotope of the three nearest neighbors of the vacancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Isotope {
    /// Spin-1/2 nuclei.
    N15,
    /// Spin-1 nuclei.
    N14,
}

impl Isotope {
    pub fn nuclear_spin(self) -> f64 {
        match self {
            Isotope::N15 => 0.5,
            Isotope::N14 => 1.0,
        }
    }

    /// States per nucleus, 2I + 1.
    pub fn multiplicity(self) -> usize {
        match self {
            Isotope::N15 => 2,
            Isotope::N14 => 3,
        }
    }

    /// Distinct total projections of three equivalent nuclei, 6I + 1.
    /// Also the hyperfine line count per branch.
    pub fn projection_count(self) -> usize {
        match self {
            Isotope::N15 => 4,
            Isotope::N14 => 7,
        }
    }

    /// Dimension of the electron x three-nucleus product space.
    pub fn hilbert_dim(self) -> usize {
        3 * self.multiplicity().pow(3)
    }

    /// Default nuclear gyromagnetic ratio, MHz / G.
    pub fn default_gamma_n(self) -> f64 {
        match self {
            Isotope::N15 => GAMMA_N15_MHZ_PER_G,
            Isotope::N14 => GAMMA_N14_MHZ_PER_G,
        }
    }

    /// Total nuclear projections in ascending order, spaced by 1.
    pub fn projection_grid(self) -> Vec<f64> {
        let m_max = 3.0 * self.nuclear_spin();
        (0..self.projection_count())
            .map(|k| k as f64 - m_max)
            .collect()
    }

    /// Number of three-nucleus product states at each total projection,
    /// ascending M: (1, 3, 3, 1) for spin 1/2, (1, 3, 6, 7, 6, 3, 1) for
    /// spin 1.
    pub fn projection_degeneracies(self) -> Vec<f64> {
        match self {
            Isotope::N15 => vec![1.0, 3.0, 3.0, 1.0],
            Isotope::N14 => vec![1.0, 3.0, 6.0, 7.0, 6.0, 3.0, 1.0],
        }
    }
}

/// One nucleus's hyperfine coupling in MHz. Mirror symmetry through the
/// plane of the defect zeroes a_xz, a_yz, a_zx, a_zy and forces
/// a_yx = a_xy, leaving four independent components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HyperfineTensor {
    pub a_xx: f64,
    pub a_yy: f64,
    pub a_zz: f64,
    pub a_xy: f64,
}

impl HyperfineTensor {
    /// Purely secular coupling: only a_zz nonzero.
    pub fn secular(a_zz: f64) -> Self {
        HyperfineTensor {
            a_zz,
            ..HyperfineTensor::default()
        }
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.a_xx
            .abs()
            .max(self.a_yy.abs())
            .max(self.a_zz.abs())
            .max(self.a_xy.abs())
    }
}

/// Electron spin 1 coupled to three nitrogen nuclei in a field along z.
#[derive(Clone, Debug)]
pub struct SpinSystem {
    /// Zero-field splitting, MHz.
    pub d: f64,
    /// Longitudinal magnetic field, G.
    pub b_z: f64,
    pub isotope: Isotope,
    /// Hyperfine tensor of each nucleus.
    pub tensors: [HyperfineTensor; 3],
    /// Nuclear gyromagnetic ratio, MHz / G.
    pub gamma_n: f64,
}

impl SpinSystem {
    /// Same tensor on all three nuclei, default gyromagnetic ratio.
    pub fn uniform(d: f64, b_z: f64, isotope: Isotope, tensor: HyperfineTensor) -> Self {
        SpinSystem {
            d,
            b_z,
            isotope,
            tensors: [tensor; 3],
            gamma_n: isotope.default_gamma_n(),
        }
    }
}

/// Angular-momentum matrices for one spin, basis ordered by descending m.
#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    pub s_x: CMatrix,
    pub s_y: CMatrix,
    pub s_z: CMatrix,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
}

/// Builds the spin matrices for spin 1/2 or spin 1.
pub fn build_spin_operators(spin: f64) -> Result<SpinOperatorSet> {
    if spin != 0.5 && spin != 1.0 {
        return Err(Error::invalid(format!(
            "unsupported spin {spin}; expected 0.5 or 1"
        )));
    }
    let dim = (2.0 * spin).round() as usize + 1;
    let m_of = |row: usize| spin - row as f64;

    let mut s_plus = CMatrix::zeros(dim, dim);
    for row in 0..dim - 1 {
        let m = m_of(row + 1);
        s_plus[(row, row + 1)] = C64::new((spin * (spin + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let s_minus = s_plus.adjoint();
    let s_x = (&s_plus + &s_minus).map(|z| z * C64::new(0.5, 0.0));
    let s_y = (&s_plus - &s_minus).map(|z| z * C64::new(0.0, -0.5));
    let s_z = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(m_of(i), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(SpinOperatorSet {
        s_x,
        s_y,
        s_z,
        s_plus,
        s_minus,
    })
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Electron operator times a nuclear operator on slot `j`, identity on the
/// other two nuclei. Basis order: electron, nucleus 0, nucleus 1, nucleus 2.
fn two_site(op_e: &CMatrix, op_n: &CMatrix, j: usize, id_n: &CMatrix) -> CMatrix {
    let slot = |k: usize| if k == j { op_n } else { id_n };
    op_e.kronecker(slot(0)).kronecker(slot(1)).kronecker(slot(2))
}

/// Full Hamiltonian in MHz:
/// D Sz^2 + gamma_e B Sz + sum_j S.A_j.I_j - sum_j gamma_n B Iz_j.
pub fn build_hamiltonian(sys: &SpinSystem) -> CMatrix {
    let e = build_spin_operators(1.0).expect("spin 1 is supported");
    let n = build_spin_operators(sys.isotope.nuclear_spin()).expect("nuclear spin is supported");
    let dn = sys.isotope.multiplicity();
    let id_e = CMatrix::identity(3, 3);
    let id_n = CMatrix::identity(dn, dn);

    let sz2 = &e.s_z * &e.s_z;
    let electron = sz2 * real(sys.d) + &e.s_z * real(GAMMA_E_MHZ_PER_G * sys.b_z);
    let mut h = two_site(&electron, &id_n, 0, &id_n);

    for (j, t) in sys.tensors.iter().enumerate() {
        if t.a_xx != 0.0 {
            h += two_site(&e.s_x, &n.s_x, j, &id_n) * real(t.a_xx);
        }
        if t.a_yy != 0.0 {
            h += two_site(&e.s_y, &n.s_y, j, &id_n) * real(t.a_yy);
        }
        if t.a_zz != 0.0 {
            h += two_site(&e.s_z, &n.s_z, j, &id_n) * real(t.a_zz);
        }
        if t.a_xy != 0.0 {
            let cross = two_site(&e.s_x, &n.s_y, j, &id_n) + two_site(&e.s_y, &n.s_x, j, &id_n);
            h += cross * real(t.a_xy);
        }
        let zeeman_n = two_site(&id_e, &n.s_z, j, &id_n);
        h -= zeeman_n * real(sys.gamma_n * sys.b_z);
    }

    debug_assert_eq!(h.nrows(), sys.isotope.hilbert_dim());
    h
}

/// Microwave branch relative to the electron Zeeman pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// 0 <-> -1, centered near D - gamma_e B.
    Minus,
    /// 0 <-> +1, centered near D + gamma_e B.
    Plus,
}

/// One resonance line.
#[derive(Clone, Copy, Debug)]
pub struct TransitionLine {
    pub frequency_mhz: f64,
    /// Relative drive amplitude; secular lines are normalized to unit sum
    /// per branch, exact lines carry |<i|Sx|j>|^2 sums.
    pub amplitude: f64,
    pub branch: Branch,
    /// Total nuclear projection associated with the line. Exact lines that
    /// merge several projections carry the amplitude-weighted mean.
    pub m_i_total: f64,
}

/// Extraction knobs for exact transition lines.
#[derive(Clone, Copy, Debug)]
pub struct TransitionOptions {
    /// Drop lines weaker than this fraction of the strongest one.
    pub amplitude_floor: f64,
    /// Merge lines closer than this many MHz; amplitudes add.
    pub merge_tol_mhz: f64,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        TransitionOptions {
            amplitude_floor: 1e-6,
            merge_tol_mhz: 1e-6,
        }
    }
}

/// Exact transition lines from the diagonalized Hamiltonian. The drive and
/// detection operator is S_x (x-polarized microwaves); amplitudes are
/// |<i| S_x x 1_nuc |j>|^2 over eigenstate pairs.
pub fn transition_lines_exact(sys: &SpinSystem, opts: &TransitionOptions) -> Result<Vec<TransitionLine>> {
    let h = build_hamiltonian(sys);
    let (evals, evecs) = diagonalize(&h)?;
    let dim = evals.len();

    let e = build_spin_operators(1.0).expect("spin 1 is supported");
    let n = build_spin_operators(sys.isotope.nuclear_spin()).expect("nuclear spin is supported");
    let dn = sys.isotope.multiplicity();
    let id_e = CMatrix::identity(3, 3);
    let id_n = CMatrix::identity(dn, dn);

    let sx_full = {
        let nuc_id = id_n.kronecker(&id_n).kronecker(&id_n);
        e.s_x.kronecker(&nuc_id)
    };
    let iz_total = two_site(&id_e, &n.s_z, 0, &id_n)
        + two_site(&id_e, &n.s_z, 1, &id_n)
        + two_site(&id_e, &n.s_z, 2, &id_n);

    // Per-eigenstate nuclear projection, snapped to the half-integer grid.
    let m_min = -3.0 * sys.isotope.nuclear_spin();
    let labels: Vec<f64> = (0..dim)
        .map(|i| {
            let col = evecs.column(i);
            let expect = (col.adjoint() * &iz_total * col)[(0, 0)].re;
            (expect - m_min).round() + m_min
        })
        .collect();

    // Sx in the eigenbasis; |T_ij|^2 is the line amplitude for i -> j.
    let t = evecs.adjoint() * &sx_full * &evecs;

    struct Candidate {
        f: f64,
        amp: f64,
        m: f64,
    }
    let mut cands: Vec<Candidate> = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            let amp = t[(i, j)].norm_sqr();
            if amp > 0.0 {
                cands.push(Candidate {
                    f: evals[j] - evals[i],
                    amp,
                    m: labels[i],
                });
            }
        }
    }
    let max_amp = cands.iter().map(|c| c.amp).fold(0.0_f64, f64::max);
    if max_amp == 0.0 {
        return Ok(Vec::new());
    }
    let floor = opts.amplitude_floor * max_amp;
    cands.retain(|c| c.amp >= floor);
    cands.sort_by(|a, b| a.f.total_cmp(&b.f));

    let f_minus = sys.d - GAMMA_E_MHZ_PER_G * sys.b_z;
    let f_plus = sys.d + GAMMA_E_MHZ_PER_G * sys.b_z;
    let mut lines: Vec<TransitionLine> = Vec::new();
    let mut k = 0;
    while k < cands.len() {
        let mut end = k + 1;
        while end < cands.len() && cands[end].f - cands[end - 1].f <= opts.merge_tol_mhz {
            end += 1;
        }
        let group = &cands[k..end];
        let amp: f64 = group.iter().map(|c| c.amp).sum();
        let f = group.iter().map(|c| c.f * c.amp).sum::<f64>() / amp;
        let m = group.iter().map(|c| c.m * c.amp).sum::<f64>() / amp;
        let branch = if (f - f_minus).abs() <= (f - f_plus).abs() {
            Branch::Minus
        } else {
            Branch::Plus
        };
        lines.push(TransitionLine {
            frequency_mhz: f,
            amplitude: amp,
            branch,
            m_i_total: m,
        });
        k = end;
    }
    Ok(lines)
}

/// Secular transition lines: the minus branch at d - gamma_e b_z - a_zz M
/// and the plus branch at d + gamma_e b_z + a_zz M over the total nuclear
/// projections M, weighted by degeneracy and normalized to unit sum per
/// branch. Returned sorted by frequency.
pub fn secular_lines(d: f64, b_z: f64, a_zz: f64, isotope: Isotope) -> Vec<TransitionLine> {
    let grid = isotope.projection_grid();
    let degs = isotope.projection_degeneracies();
    let total: f64 = degs.iter().sum();
    let zeeman = GAMMA_E_MHZ_PER_G * b_z;

    let mut lines = Vec::with_capacity(2 * grid.len());
    for (m, w) in grid.iter().zip(degs.iter()) {
        lines.push(TransitionLine {
            frequency_mhz: d - zeeman - a_zz * m,
            amplitude: w / total,
            branch: Branch::Minus,
            m_i_total: *m,
        });
        lines.push(TransitionLine {
            frequency_mhz: d + zeeman + a_zz * m,
            amplitude: w / total,
            branch: Branch::Plus,
            m_i_total: *m,
        });
    }
    lines.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_one_matrices_match_reference() {
        let ops = build_spin_operators(1.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;

        let sx = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0),
                c(r, 0.0),
                c(0.0, 0.0),
                c(r, 0.0),
                c(0.0, 0.0),
                c(r, 0.0),
                c(0.0, 0.0),
                c(r, 0.0),
                c(0.0, 0.0),
            ],
        );
        let sy = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0),
                c(0.0, -r),
                c(0.0, 0.0),
                c(0.0, r),
                c(0.0, 0.0),
                c(0.0, -r),
                c(0.0, 0.0),
                c(0.0, r),
                c(0.0, 0.0),
            ],
        );
        let sz = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(-1.0, 0.0),
            ],
        );
        let sqrt2 = std::f64::consts::SQRT_2;
        let splus = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0),
                c(sqrt2, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(sqrt2, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );

        assert!(max_abs_diff(&ops.s_x, &sx) < 1e-15);
        assert!(max_abs_diff(&ops.s_y, &sy) < 1e-15);
        assert!(max_abs_diff(&ops.s_z, &sz) < 1e-15);
        assert!(max_abs_diff(&ops.s_plus, &splus) < 1e-15);
    }

    #[test]
    fn spin_half_matrices_match_reference() {
        let ops = build_spin_operators(0.5).unwrap();
        let iz = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        let iplus = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(max_abs_diff(&ops.s_z, &iz) < 1e-15);
        assert!(max_abs_diff(&ops.s_plus, &iplus) < 1e-15);
    }

    #[test]
    fn commutator_and_casimir_hold() {
        for spin in [0.5, 1.0] {
            let ops = build_spin_operators(spin).unwrap();
            let comm = &ops.s_x * &ops.s_y - &ops.s_y * &ops.s_x;
            let i_sz = ops.s_z.map(|z| z * c(0.0, 1.0));
            assert!(
                max_abs_diff(&comm, &i_sz) < 1e-14,
                "[Sx, Sy] != i Sz for spin {spin}"
            );

            let casimir = &ops.s_x * &ops.s_x + &ops.s_y * &ops.s_y + &ops.s_z * &ops.s_z;
            let dim = ops.s_z.nrows();
            let expect = CMatrix::identity(dim, dim) * c(spin * (spin + 1.0), 0.0);
            assert!(max_abs_diff(&casimir, &expect) < 1e-14);
        }
    }

    #[test]
    fn unsupported_spin_is_rejected() {
        assert!(build_spin_operators(0.75).is_err());
        assert!(build_spin_operators(1.5).is_err());
    }

    fn bare_system(isotope: Isotope, d: f64, b_z: f64) -> SpinSystem {
        SpinSystem::uniform(d, b_z, isotope, HyperfineTensor::default())
    }

    #[test]
    fn hamiltonian_dimensions() {
        assert_eq!(build_hamiltonian(&bare_system(Isotope::N15, 3480.0, 0.0)).nrows(), 24);
        assert_eq!(build_hamiltonian(&bare_system(Isotope::N14, 3480.0, 0.0)).nrows(), 81);
    }

    #[test]
    fn hamiltonian_is_hermitian_with_full_tensor() {
        let t = HyperfineTensor {
            a_xx: 40.0,
            a_yy: 25.0,
            a_zz: -64.0,
            a_xy: 10.0,
        };
        for isotope in [Isotope::N15, Isotope::N14] {
            let sys = SpinSystem::uniform(3480.0, 37.0, isotope, t);
            let h = build_hamiltonian(&sys);
            assert!(crate::linalg::hermitian_deviation(&h) < 1e-12);
        }
    }

    #[test]
    fn zero_tensor_zero_field_spectrum() {
        let mut sys = bare_system(Isotope::N15, 3480.0, 0.0);
        sys.gamma_n = 0.0;
        let h = build_hamiltonian(&sys);
        let (vals, _) = diagonalize(&h).unwrap();
        let zeros = vals.iter().filter(|v| v.abs() < 1e-9).count();
        let tops = vals.iter().filter(|v| (*v - 3480.0).abs() < 1e-9).count();
        assert_eq!((zeros, tops), (8, 16));
    }

    #[test]
    fn zeeman_splits_electron_sectors() {
        let mut sys = bare_system(Isotope::N15, 3480.0, 90.0);
        sys.gamma_n = 0.0;
        let h = build_hamiltonian(&sys);
        let (vals, _) = diagonalize(&h).unwrap();
        for target in [0.0, 3228.0, 3732.0] {
            let hits = vals.iter().filter(|v| (*v - target).abs() < 1e-9).count();
            assert_eq!(hits, 8, "expected 8 states at {target} MHz");
        }
    }

    #[test]
    fn secular_tensor_spectrum_is_diagonal_formula() {
        // With only a_zz and Iz terms the Hamiltonian is diagonal; every
        // diagonal entry must equal D ms^2 + gamma_e B ms + a_zz ms M
        // - gamma_n B M over the product basis.
        let a_zz = -64.0;
        let sys = SpinSystem::uniform(3480.0, 90.0, Isotope::N15, HyperfineTensor::secular(a_zz));
        let h = build_hamiltonian(&sys);

        let ms_of = |e: usize| 1.0 - e as f64;
        let mi_of = |n: usize| 0.5 - n as f64;
        for e in 0..3 {
            for n0 in 0..2 {
                for n1 in 0..2 {
                    for n2 in 0..2 {
                        let idx = ((e * 2 + n0) * 2 + n1) * 2 + n2;
                        let ms = ms_of(e);
                        let m = mi_of(n0) + mi_of(n1) + mi_of(n2);
                        let expect = 3480.0 * ms * ms
                            + GAMMA_E_MHZ_PER_G * 90.0 * ms
                            + a_zz * ms * m
                            - sys.gamma_n * 90.0 * m;
                        assert_relative_eq!(h[(idx, idx)].re, expect, max_relative = 1e-12);
                        assert!(h[(idx, idx)].im.abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_lines_zero_hyperfine() {
        let sys = bare_system(Isotope::N15, 3480.0, 90.0);
        let lines = transition_lines_exact(&sys, &TransitionOptions::default()).unwrap();
        assert_eq!(lines.len(), 2, "lines: {lines:?}");
        assert_relative_eq!(lines[0].frequency_mhz, 3228.0, epsilon = 1e-9);
        assert_relative_eq!(lines[1].frequency_mhz, 3732.0, epsilon = 1e-9);
        assert_eq!(lines[0].branch, Branch::Minus);
        assert_eq!(lines[1].branch, Branch::Plus);
        // Each branch collects 8 nuclear configurations of amplitude 1/2.
        assert_relative_eq!(lines[0].amplitude, 4.0, max_relative = 1e-9);
        assert_relative_eq!(lines[1].amplitude, 4.0, max_relative = 1e-9);
    }

    #[test]
    fn exact_lines_match_secular_for_secular_tensor() {
        let (d, b_z, a_zz) = (3480.0, 90.0, -64.0);
        let sys = SpinSystem::uniform(d, b_z, Isotope::N15, HyperfineTensor::secular(a_zz));
        let exact = transition_lines_exact(&sys, &TransitionOptions::default()).unwrap();
        let secular = secular_lines(d, b_z, a_zz, Isotope::N15);
        assert_eq!(exact.len(), secular.len());
        for (e, s) in exact.iter().zip(secular.iter()) {
            assert_relative_eq!(e.frequency_mhz, s.frequency_mhz, epsilon = 1e-9);
            assert_eq!(e.branch, s.branch);
            assert_relative_eq!(e.m_i_total, s.m_i_total, epsilon = 1e-9);
            // Exact amplitude is degeneracy/2; secular is degeneracy/8.
            assert_relative_eq!(e.amplitude, 4.0 * s.amplitude, max_relative = 1e-9);
        }
    }

    #[test]
    fn secular_lines_reference_values() {
        let lines = secular_lines(3480.0, 90.0, -64.0, Isotope::N15);
        assert_eq!(lines.len(), 8);
        let minus: Vec<f64> = lines
            .iter()
            .filter(|l| l.branch == Branch::Minus)
            .map(|l| l.frequency_mhz)
            .collect();
        assert_eq!(minus, vec![3132.0, 3196.0, 3260.0, 3324.0]);
        let plus: Vec<f64> = lines
            .iter()
            .filter(|l| l.branch == Branch::Plus)
            .map(|l| l.frequency_mhz)
            .collect();
        assert_eq!(plus, vec![3636.0, 3700.0, 3764.0, 3828.0]);

        for branch in [Branch::Minus, Branch::Plus] {
            let sum: f64 = lines
                .iter()
                .filter(|l| l.branch == branch)
                .map(|l| l.amplitude)
                .sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn secular_lines_n14_count_and_weights() {
        let lines = secular_lines(3480.0, 50.0, -47.0, Isotope::N14);
        assert_eq!(lines.len(), 14);
        let mut minus: Vec<f64> = lines
            .iter()
            .filter(|l| l.branch == Branch::Minus)
            .map(|l| l.amplitude * 27.0)
            .collect();
        minus.sort_by(f64::total_cmp);
        assert_eq!(minus, vec![1.0, 1.0, 3.0, 3.0, 6.0, 6.0, 7.0]);
    }

    #[test]
    fn secular_branches_coincide_at_zero_field() {
        let lines = secular_lines(3480.0, 0.0, -64.0, Isotope::N15);
        assert_eq!(lines.len(), 8);
        let mut freqs: Vec<f64> = lines.iter().map(|l| l.frequency_mhz).collect();
        freqs.sort_by(f64::total_cmp);
        for pair in freqs.chunks(2) {
            assert_relative_eq!(pair[0], pair[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn branch_centers_differ_by_twice_the_zeeman_shift() {
        for b in [13.0, 90.0, 250.0] {
            let lines = secular_lines(3480.0, b, -64.0, Isotope::N15);
            let center = |branch: Branch| -> f64 {
                let v: Vec<f64> = lines
                    .iter()
                    .filter(|l| l.branch == branch)
                    .map(|l| l.frequency_mhz)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            assert_relative_eq!(
                center(Branch::Plus) - center(Branch::Minus),
                2.0 * GAMMA_E_MHZ_PER_G * b,
                max_relative = 1e-12
            );
        }
    }
}
