//! Phase-space states, Lax matrices, orbit vectors and Hamiltonians of the
//! hyperbolic Sutherland and rational Ruijsenaars-Schneider models.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernel::{self, eigh_desc, CMatrix};
use crate::scalar::Real;

/// Coupling constant `κ` together with the particle number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling<T> {
    kappa: T,
    n: usize,
}

impl<T: Real> Coupling<T> {
    pub fn new(kappa: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCoupling("particle number must be at least 1".into()));
        }
        if !kappa.is_finite() || kappa.abs() < T::lit(1e-12) {
            return Err(Error::InvalidCoupling(format!("kappa = {kappa} must be finite and nonzero")));
        }
        Ok(Self { kappa, n })
    }

    #[inline]
    pub fn kappa(&self) -> T {
        self.kappa
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found });
        }
        Ok(())
    }
}

/// Strict Weyl-chamber test: `x[i] − x[i+1] > 1e-10·(1 + max|x|)`.
pub fn ensure_chamber<T: Real>(x: &[T]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("chamber coordinates".into()));
    }
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    kernel::ensure_strictly_decreasing(x, T::tol(1e-10) * (T::one() + scale))
        .map_err(|(index, gap)| Error::ChamberViolation { index, gap })
}

fn ensure_finite_vec<T: Real>(x: &[T], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Point `(q, p)` of the Sutherland slice; `q` lies in the open Weyl chamber.
#[derive(Debug, Clone, PartialEq)]
pub struct SutherlandState<T> {
    pub q: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> SutherlandState<T> {
    pub fn new(q: Vec<T>, p: Vec<T>) -> Result<Self> {
        let s = Self { q, p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::InvalidInput("empty state".into()));
        }
        if self.p.len() != self.q.len() {
            return Err(Error::DimensionMismatch {
                expected: self.q.len(),
                found: self.p.len(),
            });
        }
        ensure_finite_vec(&self.p, "momenta")?;
        ensure_chamber(&self.q)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Largest coordinate difference against another state.
    pub fn distance(&self, other: &Self) -> T {
        max_diff(&self.q, &other.q).max(max_diff(&self.p, &other.p))
    }
}

/// Point `(p̂, q̂)` of the Ruijsenaars slice; `p̂` lies in the open Weyl chamber.
#[derive(Debug, Clone, PartialEq)]
pub struct RsState<T> {
    pub p_hat: Vec<T>,
    pub q_hat: Vec<T>,
}

impl<T: Real> RsState<T> {
    pub fn new(p_hat: Vec<T>, q_hat: Vec<T>) -> Result<Self> {
        let s = Self { p_hat, q_hat };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_hat.is_empty() {
            return Err(Error::InvalidInput("empty state".into()));
        }
        if self.q_hat.len() != self.p_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: self.p_hat.len(),
                found: self.q_hat.len(),
            });
        }
        ensure_finite_vec(&self.q_hat, "rapidities")?;
        ensure_chamber(&self.p_hat)
    }

    pub fn n(&self) -> usize {
        self.p_hat.len()
    }

    pub fn distance(&self, other: &Self) -> T {
        max_diff(&self.p_hat, &other.p_hat).max(max_diff(&self.q_hat, &other.q_hat))
    }
}

pub(crate) fn max_diff<T: Real>(a: &[T], b: &[T]) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// A state on either slice.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelState<T> {
    Sutherland(SutherlandState<T>),
    Rs(RsState<T>),
}

impl<T: Real> ModelState<T> {
    pub fn n(&self) -> usize {
        match self {
            ModelState::Sutherland(s) => s.n(),
            ModelState::Rs(s) => s.n(),
        }
    }

    /// Coordinates ordered `(x, y)` so that the slice form is `Σ dy ∧ dx`:
    /// `(q, p)` on the Sutherland slice and `(p̂, q̂)` on the Ruijsenaars slice.
    pub fn darboux(&self) -> Vec<T> {
        match self {
            ModelState::Sutherland(s) => s.q.iter().chain(&s.p).copied().collect(),
            ModelState::Rs(s) => s.p_hat.iter().chain(&s.q_hat).copied().collect(),
        }
    }

    /// Inverse of [`ModelState::darboux`] for the same model; validates the chamber.
    pub fn with_darboux(&self, z: &[T]) -> Result<Self> {
        let n = self.n();
        if z.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: z.len() });
        }
        let (x, y) = z.split_at(n);
        Ok(match self {
            ModelState::Sutherland(_) => ModelState::Sutherland(SutherlandState::new(x.to_vec(), y.to_vec())?),
            ModelState::Rs(_) => ModelState::Rs(RsState::new(x.to_vec(), y.to_vec())?),
        })
    }

    pub fn distance(&self, other: &Self) -> T {
        max_diff(&self.darboux(), &other.darboux())
    }
}

/// Vector `v ∈ ℂⁿ` with `|v|² = n`, parametrising the rank-one orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitVector<T>(Vec<Complex<T>>);

impl<T: Real> OrbitVector<T> {
    pub fn new(v: Vec<Complex<T>>) -> Result<Self> {
        ensure_orbit_norm(&v)?;
        Ok(Self(v))
    }

    /// The all-ones vector `w`.
    pub fn ones(n: usize) -> Self {
        Self(vec![Complex::new(T::one(), T::zero()); n])
    }

    pub(crate) fn from_raw(v: Vec<Complex<T>>) -> Self {
        Self(v)
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex<T>> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn ensure_orbit_norm<T: Real>(v: &[Complex<T>]) -> Result<()> {
    let n = T::from_usize(v.len()).unwrap_or_else(T::one);
    let norm_sq = kernel::norm_sq(v);
    if !((norm_sq - n).abs() <= T::tol(1e-10) * n) {
        return Err(Error::OrbitViolation {
            norm_sq: norm_sq.as_f64(),
            expected: n.as_f64(),
        });
    }
    Ok(())
}

/// Family selector for the two commuting Hamiltonian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `H_j = (1/j) tr L₁ʲ`, `1 ≤ j ≤ n`.
    H,
    /// `Ĥ_k = (1/2k) tr L₂ᵏ`, `k ∈ {±1, …, ±n}`.
    HHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HamiltonianId {
    pub family: Family,
    pub index: i32,
}

impl HamiltonianId {
    pub fn h(j: i32) -> Self {
        Self { family: Family::H, index: j }
    }

    pub fn h_hat(k: i32) -> Self {
        Self { family: Family::HHat, index: k }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let n = n as i64;
        let i = self.index as i64;
        let ok = match self.family {
            Family::H => (1..=n).contains(&i),
            Family::HHat => i != 0 && i.abs() <= n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!("{:?} index {} for n = {}", self.family, self.index, n)))
        }
    }

    /// Exponent check for flows, which stay well defined beyond `n`:
    /// `j ≥ 1` for `H`, `k ≠ 0` for `Ĥ`.
    pub fn validate_exponent(&self) -> Result<()> {
        let ok = match self.family {
            Family::H => self.index >= 1,
            Family::HHat => self.index != 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!("{:?} exponent {}", self.family, self.index)))
        }
    }
}

fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// `μ_κ = iκ(1 − w w†)`.
pub fn mu_kappa<T: Real>(c0: &Coupling<T>) -> CMatrix<T> {
    let k = c0.kappa();
    CMatrix::from_fn(c0.n(), |i, j| {
        if i == j {
            c(T::zero(), T::zero())
        } else {
            c(T::zero(), -k)
        }
    })
}

/// `ξ(v) = iκ(v v† − 1)`.
pub fn xi_of_v<T: Real>(v: &[Complex<T>], c0: &Coupling<T>) -> Result<CMatrix<T>> {
    c0.check_dim(v.len())?;
    ensure_orbit_norm(v)?;
    Ok(xi_unchecked(v, c0.kappa()))
}

pub(crate) fn xi_unchecked<T: Real>(v: &[Complex<T>], kappa: T) -> CMatrix<T> {
    let ik = c(T::zero(), kappa);
    CMatrix::from_fn(v.len(), |i, j| {
        let mut z = v[i] * v[j].conj();
        if i == j {
            z = c(z.re - T::one(), T::zero());
        }
        ik * z
    })
}

/// Sutherland Lax matrix `L₁(q, p)`.
pub fn lax_suth<T: Real>(s: &SutherlandState<T>, c0: &Coupling<T>) -> Result<CMatrix<T>> {
    c0.check_dim(s.n())?;
    ensure_chamber(&s.q)?;
    let k = c0.kappa();
    Ok(CMatrix::from_fn(s.n(), |i, j| {
        if i == j {
            c(s.p[i], T::zero())
        } else {
            c(T::zero(), -k / (s.q[i] - s.q[j]).sinh())
        }
    }))
}

/// `¼ Σ_{m≠j} ln(1 + 4κ²/(p̂ʲ − p̂ᵐ)²)` for every `j`.
pub(crate) fn log_dressing<T: Real>(p_hat: &[T], kappa: T) -> Vec<T> {
    let four_k2 = T::lit(4.0) * kappa * kappa;
    (0..p_hat.len())
        .map(|j| {
            let mut acc = T::zero();
            for (m, &pm) in p_hat.iter().enumerate() {
                if m != j {
                    let d = p_hat[j] - pm;
                    acc += (four_k2 / (d * d)).ln_1p();
                }
            }
            acc * T::lit(0.25)
        })
        .collect()
}

/// Positive weights `u_j(p̂, q̂)` of the Ruijsenaars Lax matrix.
pub fn u_vec<T: Real>(s: &RsState<T>, c0: &Coupling<T>) -> Result<Vec<T>> {
    c0.check_dim(s.n())?;
    ensure_chamber(&s.p_hat)?;
    Ok(log_dressing(&s.p_hat, c0.kappa())
        .into_iter()
        .zip(&s.q_hat)
        .map(|(d, &q)| (d - q).exp())
        .collect())
}

/// Cauchy-like kernel `2iκ/(2iκ + p̂ʲ − p̂ᵏ)`.
pub(crate) fn rs_kernel<T: Real>(p_hat: &[T], kappa: T) -> CMatrix<T> {
    let num = c(T::zero(), T::lit(2.0) * kappa);
    CMatrix::from_fn(p_hat.len(), |j, k| num / c(p_hat[j] - p_hat[k], T::lit(2.0) * kappa))
}

fn lax_rs_unchecked<T: Real>(s: &RsState<T>, c0: &Coupling<T>) -> Result<(CMatrix<T>, Vec<T>)> {
    let u = u_vec(s, c0)?;
    let uc: Vec<Complex<T>> = u.iter().map(|&x| c(x, T::zero())).collect();
    let mut l = rs_kernel(&s.p_hat, c0.kappa()).scale_rows_cols(&uc, &uc);
    for i in 0..l.n() {
        l[(i, i)].im = T::zero();
    }
    l.ensure_finite("Ruijsenaars Lax matrix")?;
    Ok((l, u))
}

/// Ruijsenaars-Schneider Lax matrix `L₂(p̂, q̂)`, positive definite.
pub fn lax_rs<T: Real>(s: &RsState<T>, c0: &Coupling<T>) -> Result<CMatrix<T>> {
    let (l, _) = lax_rs_unchecked(s, c0)?;
    ensure_cholesky(&l)?;
    Ok(l)
}

/// Cholesky sweep used as a cheap positive definiteness test.
fn ensure_cholesky<T: Real>(a: &CMatrix<T>) -> Result<()> {
    let n = a.n();
    let mut l = CMatrix::<T>::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: d.as_f64() });
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj, T::zero());
        for i in j + 1..n {
            let mut z = a[(i, j)];
            for k in 0..j {
                z -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = z / djj;
        }
    }
    Ok(())
}

/// `v = L₂^{-1/2} u`; lies on the orbit sphere `|v|² = n`.
pub fn v_vec<T: Real>(s: &RsState<T>, c0: &Coupling<T>) -> Result<OrbitVector<T>> {
    let (l, u) = lax_rs_unchecked(s, c0)?;
    let e = eigh_desc(&l)?;
    if !(e.min_value() > T::zero()) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: e.min_value().as_f64() });
    }
    let uc: Vec<Complex<T>> = u.iter().map(|&x| c(x, T::zero())).collect();
    let v = e.map(|x| T::one() / x.sqrt()).mul_vec(&uc);
    Ok(OrbitVector::from_raw(v))
}

/// `½ Σ p² + (κ²/2) Σ_{j≠k} sinh⁻²(qʲ − qᵏ)`.
pub fn ham_suth<T: Real>(s: &SutherlandState<T>, c0: &Coupling<T>) -> Result<T> {
    c0.check_dim(s.n())?;
    ensure_chamber(&s.q)?;
    let half = T::lit(0.5);
    let k2 = c0.kappa() * c0.kappa();
    let kinetic = s.p.iter().fold(T::zero(), |a, &p| a + p * p) * half;
    let mut potential = T::zero();
    for j in 0..s.n() {
        for k in 0..s.n() {
            if j != k {
                let sh = (s.q[j] - s.q[k]).sinh();
                potential += T::one() / (sh * sh);
            }
        }
    }
    Ok(kinetic + half * k2 * potential)
}

/// `½ tr(L₂ + L₂⁻¹)`.
pub fn ham_rs<T: Real>(s: &RsState<T>, c0: &Coupling<T>) -> Result<T> {
    let l = lax_rs(s, c0)?;
    let e = eigh_desc(&l)?;
    Ok(e.values.iter().fold(T::zero(), |a, &x| a + x + T::one() / x) * T::lit(0.5))
}

/// `Σ_k cosh(2q̂_k) ∏_{j≠k} [1 + 4κ²/(p̂ᵏ − p̂ʲ)²]^{1/2}`, the particle form of [`ham_rs`].
pub fn ham_rs_particle_form<T: Real>(s: &RsState<T>, c0: &Coupling<T>) -> Result<T> {
    c0.check_dim(s.n())?;
    ensure_chamber(&s.p_hat)?;
    let two = T::lit(2.0);
    Ok(log_dressing(&s.p_hat, c0.kappa())
        .into_iter()
        .zip(&s.q_hat)
        .fold(T::zero(), |acc, (d, &q)| acc + (two * q).cosh() * (two * d).exp()))
}

/// Reduced Hamiltonian from a Lax matrix: `(1/j) tr Lʲ` or `(1/2k) tr Lᵏ`.
///
/// Powers are taken through the spectrum, which stays accurate for large `|k|`.
pub fn reduced_hamiltonian<T: Real>(l: &CMatrix<T>, id: HamiltonianId) -> Result<T> {
    id.validate(l.n())?;
    let e = eigh_desc(l)?;
    if id.family == Family::HHat && !(e.min_value() > T::zero()) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: e.min_value().as_f64() });
    }
    Ok(hamiltonian_from_spectrum(&e.values, id))
}

/// Same as [`reduced_hamiltonian`] given the Lax spectrum; no validation.
pub fn hamiltonian_from_spectrum<T: Real>(values: &[T], id: HamiltonianId) -> T {
    let k = id.index;
    let sum = values.iter().fold(T::zero(), |a, &x| a + x.powi(k));
    let denom = match id.family {
        Family::H => T::lit(k as f64),
        Family::HHat => T::lit(2.0 * k as f64),
    };
    sum / denom
}
