use num_complex::Complex64;

use super::{AlgebraError, BinaryForm};

/// Sylvester resultant of two binary forms of a common degree `d ≥ 1`.
///
/// Normalized so that `Res(z0^d, z1^d) = 1`; homogeneous of degree `d` in the
/// coefficients of each argument. Vanishes exactly when the forms share a
/// projective zero.
pub fn sylvester_resultant(f0: &BinaryForm, f1: &BinaryForm) -> Result<Complex64, AlgebraError> {
    let d = f0.degree();
    if f1.degree() != d {
        return Err(AlgebraError::DegreeMismatch { left: d, right: f1.degree() });
    }
    if d == 0 {
        return Err(AlgebraError::DegreeMismatch { left: 0, right: 0 });
    }
    let n = 2 * d;
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    // coefficients of z0^{d-i} z1^i are the descending coefficients in z0
    for row in 0..d {
        for (i, &c) in f0.coeffs().iter().enumerate() {
            m[row * n + row + i] = c;
        }
        for (i, &c) in f1.coeffs().iter().enumerate() {
            m[(row + d) * n + row + i] = c;
        }
    }
    Ok(determinant(&mut m, n))
}

/// Determinant by LU with partial pivoting; destroys `m` (row-major `n×n`).
pub fn determinant(m: &mut [Complex64], n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].norm().total_cmp(&m[b * n + col].norm()))
            .unwrap();
        let p = m[pivot * n + col];
        if p.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= p;
        for r in (col + 1)..n {
            let factor = m[r * n + col] / p;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= factor * v;
            }
        }
    }
    det
}
