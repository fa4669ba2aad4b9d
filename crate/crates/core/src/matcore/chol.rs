use num_complex::Complex64;

use super::{ComplexMatrix, MatError};

/// Largest tolerated `‖A − Aᴴ‖_F / ‖A‖_F` for a matrix treated as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Lower-triangular Cholesky factor `L` with `A = L·Lᴴ`.
///
/// Only the lower triangle of `a` is read; callers are responsible for the
/// Hermitian check.
pub(crate) fn cholesky_lower(a: &ComplexMatrix) -> Result<ComplexMatrix, MatError> {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return Err(MatError::NotPositiveDefinite { minor: j + 1 });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

pub(crate) fn check_hermitian(m: &ComplexMatrix) -> Result<(), MatError> {
    if m.rows() != m.cols() {
        return Err(MatError::Shape(format!("expected a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    super::ensure_finite(m)?;
    let scale = m.frobenius_norm();
    let residual = m.sub(&m.adjoint()).frobenius_norm();
    if residual > HERMITIAN_TOLERANCE * scale {
        return Err(MatError::NotHermitian { relative_residual: residual / scale });
    }
    Ok(())
}
