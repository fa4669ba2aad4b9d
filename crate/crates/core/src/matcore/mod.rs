//! Complex dense linear algebra kernel.
//!
//! Everything here is a pure function of its inputs. Singular values and null
//! spaces come from a one-sided Jacobi SVD, log-determinants from a Cholesky
//! factorization. All logarithms are base 2.

mod chol;
mod matrix;
mod svd;

use num_complex::Complex64;
use thiserror::Error;

pub use chol::HERMITIAN_TOLERANCE;
pub use matrix::ComplexMatrix;

use svd::RightSvd;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian (relative residual {relative_residual:.3e})")]
    NotHermitian { relative_residual: f64 },
    #[error("matrix is not positive definite: leading minor of order {minor} has a non-positive pivot")]
    NotPositiveDefinite { minor: usize },
    #[error("rank tolerance must lie strictly between 0 and 1, got {0}")]
    Tolerance(f64),
}

/// Relative cutoff used to turn singular values into a numerical rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance(f64);

impl RankTolerance {
    pub const DEFAULT: RankTolerance = RankTolerance(1e-10);

    pub fn new(relative_threshold: f64) -> Result<Self, MatError> {
        if relative_threshold > 0.0 && relative_threshold < 1.0 {
            Ok(Self(relative_threshold))
        } else {
            Err(MatError::Tolerance(relative_threshold))
        }
    }

    #[inline]
    pub fn relative_threshold(self) -> f64 {
        self.0
    }
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub(crate) fn ensure_finite(m: &ComplexMatrix) -> Result<(), MatError> {
    match m.as_slice().iter().position(|z| !z.is_finite()) {
        None => Ok(()),
        Some(pos) => Err(MatError::NonFinite { row: pos / m.cols().max(1), col: pos % m.cols().max(1) }),
    }
}

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>, MatError> {
    ensure_finite(m)?;
    // Same factorization as `null_space_basis`, so rank and nullity always agree.
    let mut values = svd::right_svd(m).values;
    values.truncate(m.rows().min(m.cols()));
    Ok(values)
}

fn rank_from_values(values: &[f64], count: usize, tol: RankTolerance) -> usize {
    let Some(&largest) = values.first() else {
        return 0;
    };
    let cutoff = tol.relative_threshold() * largest;
    values[..count].iter().filter(|&&s| s > cutoff).count()
}

/// Number of singular values above `tol × σ_max`. The zero matrix has rank 0.
pub fn numerical_rank(m: &ComplexMatrix, tol: RankTolerance) -> Result<usize, MatError> {
    let values = singular_values(m)?;
    Ok(rank_from_values(&values, values.len(), tol))
}

/// Orthonormal basis of the numerical null space of `m`, as a
/// `cols × (cols − rank)` matrix.
///
/// Each column is phase-normalized so that its first nonzero entry is real
/// and positive, which makes the basis a deterministic function of the input.
pub fn null_space_basis(m: &ComplexMatrix, tol: RankTolerance) -> Result<ComplexMatrix, MatError> {
    ensure_finite(m)?;
    let n = m.cols();
    let RightSvd { values, v } = svd::right_svd(m);
    let rank = rank_from_values(&values, m.rows().min(n), tol);
    let columns: Vec<Vec<Complex64>> = (rank..n).map(|j| normalize_phase(v.column(j))).collect();
    Ok(ComplexMatrix::from_columns(n, &columns))
}

fn normalize_phase(mut col: Vec<Complex64>) -> Vec<Complex64> {
    if let Some(at) = col.iter().position(|z| z.norm() > 1e-12) {
        let lead = col[at];
        let rot = lead.conj() / lead.norm();
        for z in col.iter_mut() {
            *z *= rot;
        }
        col[at] = Complex64::new(lead.norm(), 0.0);
    }
    col
}

/// `log₂ det(m)` for a Hermitian positive-definite `m`.
pub fn logdet2_hpd(m: &ComplexMatrix) -> Result<f64, MatError> {
    chol::check_hermitian(m)?;
    let l = chol::cholesky_lower(m)?;
    Ok((0..l.rows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, derive_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(seed: u64, r: usize, col: usize) -> ComplexMatrix {
        complex_gaussian_matrix(&mut derive_rng(seed, 0x7e57, 0), r, col)
    }

    #[test]
    fn singular_values_of_identity_and_zero() {
        assert_eq!(singular_values(&ComplexMatrix::identity(3)).unwrap(), vec![1.0; 3]);
        assert_eq!(singular_values(&ComplexMatrix::zeros(2, 4)).unwrap(), vec![0.0; 2]);
    }

    #[test]
    fn singular_values_of_rotated_diagonal() {
        // U = (1/√2)[[1, i],[i, 1]], W = [[cos θ, −e^{iφ} sin θ],[e^{−iφ} sin θ, cos θ]]
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let u = ComplexMatrix::from_row_major(2, 2, vec![c(r, 0.0), c(0.0, r), c(0.0, r), c(r, 0.0)]).unwrap();
        let (th, ph) = (0.7_f64, 1.3_f64);
        let e = Complex64::from_polar(1.0, ph);
        let w = ComplexMatrix::from_row_major(
            2,
            2,
            vec![c(th.cos(), 0.0), -e * th.sin(), e.conj() * th.sin(), c(th.cos(), 0.0)],
        )
        .unwrap();
        let m = u.matmul(&ComplexMatrix::from_diag(&[3.0, 1.0])).matmul(&w.adjoint());
        let s = singular_values(&m).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-13 && (s[1] - 1.0).abs() < 1e-13, "{s:?}");
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut m = ComplexMatrix::identity(2);
        m[(1, 0)] = c(f64::INFINITY, 0.0);
        assert_eq!(singular_values(&m), Err(MatError::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn rank_examples() {
        let tol = RankTolerance::DEFAULT;
        assert_eq!(numerical_rank(&ComplexMatrix::identity(4), tol).unwrap(), 4);
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(3, 3), tol).unwrap(), 0);

        let g = random(11, 2, 3);
        let rep = ComplexMatrix::vstack(3, [&g, &g.select_rows(&[0])]);
        // Oracle: the third singular value collapses, the second does not.
        let s = singular_values(&rep).unwrap();
        assert!(s[2] < 1e-14 * s[0] && s[1] > 1e-3 * s[0]);
        assert_eq!(numerical_rank(&rep, tol).unwrap(), 2);

        for seed in 0..100 {
            assert_eq!(numerical_rank(&random(seed, 2, 5), tol).unwrap(), 2);
        }
    }

    #[test]
    fn tolerance_bounds() {
        assert!(RankTolerance::new(0.0).is_err());
        assert!(RankTolerance::new(1.0).is_err());
        assert!(RankTolerance::new(1e-6).is_ok());
    }

    #[test]
    fn null_space_axis_aligned() {
        let m = ComplexMatrix::from_row_major(1, 3, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = null_space_basis(&m, RankTolerance::DEFAULT).unwrap();
        assert_eq!((b.rows(), b.cols()), (3, 2));
        assert!(m.matmul(&b).frobenius_norm() < 1e-15);
        let gram = b.adjoint().matmul(&b);
        assert!(gram.sub(&ComplexMatrix::identity(2)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn null_space_of_full_column_rank_is_empty() {
        let b = null_space_basis(&random(3, 4, 2), RankTolerance::DEFAULT).unwrap();
        assert_eq!((b.rows(), b.cols()), (2, 0));
    }

    #[test]
    fn null_space_random_wide() {
        for seed in 0..100 {
            let m = random(seed, 2, 4);
            let b = null_space_basis(&m, RankTolerance::DEFAULT).unwrap();
            assert_eq!(b.cols(), 2);
            assert!(m.matmul(&b).frobenius_norm() < 1e-10 * m.frobenius_norm());
        }
    }

    #[test]
    fn null_space_is_phase_normalized_and_deterministic() {
        let m = random(5, 2, 5);
        let a = null_space_basis(&m, RankTolerance::DEFAULT).unwrap();
        let b = null_space_basis(&m.clone(), RankTolerance::DEFAULT).unwrap();
        assert_eq!(a, b);
        for j in 0..a.cols() {
            let lead = a.column(j).into_iter().find(|z| z.norm() > 1e-12).unwrap();
            assert_eq!(lead.im, 0.0);
            assert!(lead.re > 0.0);
        }
    }

    #[test]
    fn null_space_of_empty_matrix_is_identity() {
        let b = null_space_basis(&ComplexMatrix::zeros(0, 3), RankTolerance::DEFAULT).unwrap();
        assert_eq!(b, ComplexMatrix::identity(3));
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet2_hpd(&ComplexMatrix::identity(5)).unwrap(), 0.0);
        assert!((logdet2_hpd(&ComplexMatrix::from_diag(&[2.0, 4.0])).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(logdet2_hpd(&ComplexMatrix::zeros(0, 0)).unwrap(), 0.0);
        for seed in 0..20 {
            // det(I + a aᴴ) = 1 + ‖a‖²
            let a = random(seed, 6, 1);
            let expect = (1.0 + a.frobenius_norm().powi(2)).log2();
            let got = logdet2_hpd(&a.gram_plus_identity()).unwrap();
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn logdet_domain_errors() {
        let err = logdet2_hpd(&ComplexMatrix::from_diag(&[1.0, -2.0, 3.0])).unwrap_err();
        assert_eq!(err, MatError::NotPositiveDefinite { minor: 2 });

        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(logdet2_hpd(&m), Err(MatError::NotHermitian { .. })));
        assert!(matches!(logdet2_hpd(&ComplexMatrix::zeros(2, 3)), Err(MatError::Shape(_))));
    }
}
