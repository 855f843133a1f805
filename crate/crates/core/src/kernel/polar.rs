use super::eigen::eigh_desc;
use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn gram_spectrum_guard<T: Real>(values: &[T]) -> Result<()> {
    let max = values.first().copied().unwrap_or_else(T::zero);
    let min = values.last().copied().unwrap_or_else(T::zero);
    let floor = T::epsilon() * T::lit(16.0);
    if !(min > T::zero()) || min < max * floor * floor {
        return Err(Error::SingularMatrix);
    }
    Ok(())
}

/// `g = g₋ g₊` with `g₋` positive definite and `g₊` unitary.
pub fn polar_right<T: Real>(g: &CMatrix<T>) -> Result<(CMatrix<T>, CMatrix<T>)> {
    g.ensure_finite("polar_right input")?;
    let e = eigh_desc(&(g * &g.adjoint()))?;
    gram_spectrum_guard(&e.values)?;
    let positive = e.map(|x| x.sqrt());
    let unitary = &e.map(|x| T::one() / x.sqrt()) * g;
    Ok((positive, unitary))
}

/// `g = h₊ h₋` with `h₊` unitary and `h₋` positive definite.
pub fn polar_left<T: Real>(g: &CMatrix<T>) -> Result<(CMatrix<T>, CMatrix<T>)> {
    g.ensure_finite("polar_left input")?;
    let e = eigh_desc(&(&g.adjoint() * g))?;
    gram_spectrum_guard(&e.values)?;
    let positive = e.map(|x| x.sqrt());
    let unitary = g * &e.map(|x| T::one() / x.sqrt());
    Ok((unitary, positive))
}
