//! Hermitian eigendecomposition with the conventions the rest of the crate
//! relies on: ascending eigenvalues, matching eigenvector columns.

use nalgebra::{Complex, DMatrix};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative Hermiticity tolerance enforced before decomposing.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// Diagonalizes a Hermitian matrix. Returns eigenvalues in ascending order
/// and a unitary whose columns are the matching eigenvectors.
///
/// The input is rejected if `max |H - H^dagger|` exceeds `HERMITICITY_TOL`
/// relative to the largest element magnitude.
pub fn diagonalize(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if h.nrows() != h.ncols() {
        return Err(Error::invalid(format!(
            "eigensolver needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let max_dev = hermitian_deviation(h);
    if max_dev > HERMITICITY_TOL * scale {
        return Err(Error::NonHermitian {
            max_dev,
            tol: HERMITICITY_TOL,
        });
    }

    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((eigenvalues, vectors))
}

/// Largest absolute deviation from Hermiticity.
pub fn hermitian_deviation(h: &CMatrix) -> f64 {
    let mut max_dev = 0.0_f64;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            let dev = (h[(i, j)] - h[(j, i)].conj()).norm();
            max_dev = max_dev.max(dev);
        }
    }
    max_dev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sorts_eigenvalues_ascending() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3.0, 0.0),
            c(-1.0, 0.0),
            c(2.0, 0.0),
        ]));
        let (vals, _) = diagonalize(&h).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn reconstructs_hermitian_input() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.5, 1.0),
                c(0.0, -0.3),
                c(0.5, -1.0),
                c(-1.0, 0.0),
                c(2.0, 0.2),
                c(0.0, 0.3),
                c(2.0, -0.2),
                c(0.7, 0.0),
            ],
        );
        let (vals, v) = diagonalize(&h).unwrap();
        let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            vals.iter().map(|&x| c(x, 0.0)),
        ));
        let rebuilt = &v * lam * v.adjoint();
        let err = (&rebuilt - &h).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "reconstruction error {err}");

        let gram = v.adjoint() * &v;
        let id = CMatrix::identity(3, 3);
        let uerr = (&gram - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(uerr < 1e-12, "unitarity error {uerr}");
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            diagonalize(&h),
            Err(crate::Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn rejects_rectangular() {
        let h = CMatrix::zeros(2, 3);
        assert!(diagonalize(&h).is_err());
    }
}
