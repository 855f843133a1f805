use num_complex::Complex;

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Determinant by LU factorisation with partial pivoting; `0` for singular input.
///
/// Rows are first scaled by powers of two to unit size, which is exact and
/// makes the result insensitive to diagonal scalings `DAD`.
pub fn det<T: Real>(g: &CMatrix<T>) -> Complex<T> {
    let n = g.n();
    let mut a = g.clone();
    let mut exponent = 0i32;
    for i in 0..n {
        let row_max = (0..n).fold(T::zero(), |m, j| m.max(a[(i, j)].norm()));
        if row_max == T::zero() || !row_max.is_finite() {
            continue;
        }
        let e = row_max.log2().floor().to_i32().unwrap_or(0);
        let scale = T::lit(2.0).powi(-e);
        for j in 0..n {
            a[(i, j)] *= scale;
        }
        exponent += e;
    }
    let d = det_unscaled(a);
    d * T::lit(2.0).powi(exponent)
}

fn det_unscaled<T: Real>(mut a: CMatrix<T>) -> Complex<T> {
    let n = a.n();
    let mut d = Complex::new(T::one(), T::zero());
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                a[(i, k)]
                    .norm()
                    .partial_cmp(&a[(j, k)].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        let pivot = a[(piv, k)];
        if pivot.norm() == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        if piv != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            d = -d;
        }
        d *= pivot;
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            for j in k + 1..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
        }
    }
    d
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse<T: Real>(g: &CMatrix<T>) -> Result<CMatrix<T>> {
    g.ensure_finite("inverse input")?;
    let n = g.n();
    let mut a = g.clone();
    let mut inv = CMatrix::<T>::identity(n);
    let floor = g.norm_max() * T::epsilon() * T::lit(1e-6);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                a[(i, k)]
                    .norm()
                    .partial_cmp(&a[(j, k)].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        if !(a[(piv, k)].norm() > floor) {
            return Err(Error::SingularMatrix);
        }
        if piv != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = t;
                let t = inv[(k, j)];
                inv[(k, j)] = inv[(piv, j)];
                inv[(piv, j)] = t;
            }
        }
        let pinv = Complex::new(T::one(), T::zero()) / a[(k, k)];
        for j in 0..n {
            a[(k, j)] *= pinv;
            inv[(k, j)] *= pinv;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = a[(i, k)];
            if f.norm() == T::zero() {
                continue;
            }
            for j in 0..n {
                let akj = a[(k, j)];
                let ikj = inv[(k, j)];
                a[(i, j)] -= f * akj;
                inv[(i, j)] -= f * ikj;
            }
        }
    }
    inv.ensure_finite("inverse output")?;
    Ok(inv)
}
