use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from row-major nested rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from separate real and imaginary row-major parts.
    pub fn from_parts(re: &[Vec<T>], im: &[Vec<T>]) -> Result<Self> {
        let n = re.len();
        if im.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: im.len(),
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for (r, i) in re.iter().zip(im) {
            if r.len() != n || i.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len().min(i.len()),
                });
            }
            data.extend(r.iter().zip(i).map(|(&a, &b)| Complex::new(a, b)));
        }
        Ok(Self { n, data })
    }

    pub fn from_real_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex::new(x, T::zero());
        }
        m
    }

    pub fn from_diagonal(d: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
            acc + self[(i, i)]
        })
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    /// Anti-Hermitian part `(A − A†)/2`.
    pub fn anti_hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.n, |i, j| (self[(i, j)] - self[(j, i)].conj()) * half)
    }

    /// Largest entry modulus, the elementwise ∞-norm used for all residuals.
    pub fn norm_max(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `max |A − A†|` entrywise.
    pub fn asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in i..self.n {
                m = m.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    /// Checks `‖A − A†‖ ≤ 1e-12·‖A‖` (precision-scaled).
    pub fn ensure_hermitian(&self) -> Result<()> {
        self.ensure_finite("matrix entries")?;
        let asym = self.asymmetry();
        let tol = T::tol(1e-12) * self.norm_max();
        if asym > tol {
            return Err(Error::NonHermitianInput {
                asymmetry: asym.as_f64(),
                tolerance: tol.as_f64(),
            });
        }
        Ok(())
    }

    /// Largest entry of `U†U − 1`.
    pub fn unitarity_defect(&self) -> T {
        (&(&self.adjoint() * self) - &Self::identity(self.n)).norm_max()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert_eq!(v.len(), self.n);
        self.rows()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `D A D'` for diagonal `D`, `D'` given by their entries.
    pub fn scale_rows_cols(&self, left: &[Complex<T>], right: &[Complex<T>]) -> Self {
        Self::from_fn(self.n, |i, j| left[i] * self[(i, j)] * right[j])
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "matrix dimensions differ");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "matrix dimensions differ");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "matrix dimensions differ");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn neg(self) -> CMatrix<T> {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|&a| -a).collect(),
        }
    }
}

/// `Σ |v_i|²`.
pub fn norm_sq<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Largest `|a_i − b_i|`.
pub fn max_abs_diff<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn product_and_adjoint() {
        let a = CMatrix::from_rows(&[vec![c(1., 1.), c(0., 2.)], vec![c(3., 0.), c(0., -1.)]]).unwrap();
        let b = a.adjoint();
        assert_eq!(b[(0, 1)], c(3., 0.));
        assert_eq!(b[(1, 0)], c(0., -2.));
        let p = &a * &CMatrix::identity(2);
        assert_eq!(p, a);
        let aa = &a * &b;
        assert!(aa.asymmetry() == 0.0);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = CMatrix::from_rows(&[vec![c(1., 0.)], vec![c(1., 0.), c(2., 0.)]]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cartan_parts_recombine() {
        let a = CMatrix::from_fn(3, |i, j| c(i as f64 - 2.0 * j as f64, (i * j) as f64 + 0.5));
        let sum = &a.hermitian_part() + &a.anti_hermitian_part();
        assert!((&sum - &a).norm_max() < 1e-15);
        assert!(a.hermitian_part().asymmetry() < 1e-15);
        assert!(a.anti_hermitian_part().scale_complex(c(0., 1.)).asymmetry() < 1e-15);
    }

    #[test]
    fn hermiticity_check() {
        let h = CMatrix::from_rows(&[vec![c(1., 0.), c(0., -1.)], vec![c(0., 1.), c(2., 0.)]]).unwrap();
        assert!(h.ensure_hermitian().is_ok());
        let mut bad = h.clone();
        bad[(0, 1)] = c(0.5, -1.0);
        assert!(matches!(bad.ensure_hermitian(), Err(Error::NonHermitianInput { .. })));
    }
}
