//! One-sided (Hestenes) Jacobi SVD for small dense complex matrices.
//!
//! Columns of `A` are rotated pairwise until mutually orthogonal, so that
//! `A·V = U·Σ` with `V` accumulated from the rotations. Every right singular
//! vector comes out of the same process, including the ones spanning the null
//! space, which is what the beamformer construction needs. The method is
//! deterministic and gives small singular values to high relative accuracy.

use num_complex::Complex64;

use super::ComplexMatrix;

const MAX_SWEEPS: usize = 100;

/// Right singular system of a matrix.
#[derive(Debug, Clone)]
pub(crate) struct RightSvd {
    /// One value per column of the input, sorted descending. Entries beyond
    /// `min(rows, cols)` are numerically zero.
    pub values: Vec<f64>,
    /// `cols × cols` unitary; column `i` pairs with `values[i]`.
    pub v: ComplexMatrix,
}

pub(crate) fn right_svd(a: &ComplexMatrix) -> RightSvd {
    let m = a.rows();
    let n = a.cols();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    // Columns below this norm are zero at working precision; rotating two of
    // them only accumulates rounding in `V`.
    let negligible = f64::EPSILON * f64::EPSILON * a.frobenius_norm();
    if m > 0 {
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    if rotate_pair(&mut cols, &mut vcols, i, j, negligible) {
                        rotated = true;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in column order, so output is reproducible.
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let values = order.iter().map(|&k| norms[k]).collect();
    let sorted: Vec<Vec<Complex64>> = order.iter().map(|&k| vcols[k].clone()).collect();
    RightSvd { values, v: ComplexMatrix::from_columns(n, &sorted) }
}

fn norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonalizes columns `i` and `j`; returns whether a rotation was applied.
fn rotate_pair(cols: &mut [Vec<Complex64>], vcols: &mut [Vec<Complex64>], i: usize, j: usize, negligible: f64) -> bool {
    let (alpha, beta, gamma) = {
        let (ci, cj) = (&cols[i], &cols[j]);
        let mut alpha = 0.0;
        let mut beta = 0.0;
        let mut gamma = Complex64::new(0.0, 0.0);
        for (x, y) in ci.iter().zip(cj) {
            alpha += x.norm_sqr();
            beta += y.norm_sqr();
            gamma += x.conj() * y;
        }
        (alpha, beta, gamma)
    };
    let g = gamma.norm();
    let (na, nb) = (alpha.sqrt(), beta.sqrt());
    if g == 0.0 || g <= f64::EPSILON * na * nb || na.max(nb) <= negligible {
        return false;
    }

    // Remove the phase of the inner product, then apply a real rotation.
    let phase = Complex64::from_polar(1.0, -gamma.arg());
    let zeta = (beta - alpha) / (2.0 * g);
    let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;

    apply(cols, i, j, c, s, phase);
    apply(vcols, i, j, c, s, phase);
    true
}

fn apply(cols: &mut [Vec<Complex64>], i: usize, j: usize, c: f64, s: f64, phase: Complex64) {
    let (lo, hi) = cols.split_at_mut(j);
    let ci = &mut lo[i];
    let cj = &mut hi[0];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let xv = *x;
        let yv = *y * phase;
        *x = xv * c - yv * s;
        *y = xv * s + yv * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, derive_rng};

    fn unitarity_error(v: &ComplexMatrix) -> f64 {
        v.adjoint().matmul(v).sub(&ComplexMatrix::identity(v.cols())).frobenius_norm()
    }

    #[test]
    fn v_stays_unitary_for_wide_inputs() {
        // Wide inputs drive surplus columns to underflow-scale norms.
        for seed in 0..200 {
            let mut rng = derive_rng(seed, 0x5d, 0);
            let rows = 1 + (seed as usize % 4);
            let a = complex_gaussian_matrix(&mut rng, rows, rows + 2 + (seed as usize % 3));
            let s = right_svd(&a);
            assert!(unitarity_error(&s.v) < 1e-12, "seed {seed}");
            let residual = a.matmul(&s.v).frobenius_norm();
            assert!(residual.is_finite());
        }
    }
}
