//! Dense complex Gaussian elimination with partial pivoting.
//!
//! The boundary-condition systems are at most a few dozen unknowns, and they
//! must be solvable in double-double precision as well, so this is a small
//! generic routine rather than a binding to a BLAS-backed crate.

use num_complex::Complex;

use crate::real::Real;

/// Solution of `A x = b` together with its normwise relative residual
/// `‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
#[derive(Debug, Clone)]
pub struct Solution<T: Real> {
    pub x: Vec<Complex<T>>,
    pub residual: T,
}

/// Solves the square system `a·x = b` (row-major `a`).
///
/// Rows are equilibrated by their largest modulus before elimination so that
/// pivot selection is not biased by the wildly different magnitudes of the
/// Hankel functions at small arguments. Returns `None` if a pivot is exactly
/// zero.
pub fn solve<T: Real>(a: &[Vec<Complex<T>>], b: &[Complex<T>]) -> Option<Solution<T>> {
    let n = b.len();
    assert_eq!(a.len(), n, "matrix/rhs dimension mismatch");

    let mut m: Vec<Vec<Complex<T>>> = a.to_vec();
    let mut rhs = b.to_vec();
    for (row, r) in m.iter_mut().zip(rhs.iter_mut()) {
        assert_eq!(row.len(), n, "matrix must be square");
        let scale = row.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        if scale > T::zero() {
            for v in row.iter_mut() {
                *v = *v / scale;
            }
            *r = *r / scale;
        }
    }

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm_sqr()
                    .partial_cmp(&m[j][col].norm_sqr())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if m[pivot][col].norm_sqr().is_zero() {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].inv();
        for row in col + 1..n {
            let factor = m[row][col] * inv;
            if factor.norm_sqr().is_zero() {
                continue;
            }
            let (upper, lower) = m.split_at_mut(row);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst = *dst - factor * *src;
            }
            let delta = factor * rhs[col];
            rhs[row] = rhs[row] - delta;
        }
    }

    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc = acc - m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }

    let residual = relative_residual(a, b, &x);
    Some(Solution { x, residual })
}

/// Normwise relative residual of a candidate solution.
pub fn relative_residual<T: Real>(a: &[Vec<Complex<T>>], b: &[Complex<T>], x: &[Complex<T>]) -> T {
    let inf = |v: &[Complex<T>]| v.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    let mut r_norm = T::zero();
    let mut a_norm = T::zero();
    for (row, bi) in a.iter().zip(b) {
        let mut acc = -*bi;
        let mut row_sum = T::zero();
        for (aij, xj) in row.iter().zip(x) {
            acc = acc + *aij * *xj;
            row_sum = row_sum + aij.norm();
        }
        r_norm = r_norm.max(acc.norm());
        a_norm = a_norm.max(row_sum);
    }
    let denom = a_norm * inf(x) + inf(b);
    if denom.is_zero() {
        r_norm
    } else {
        r_norm / denom
    }
}
