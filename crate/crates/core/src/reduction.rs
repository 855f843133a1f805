//! Extended phase space `T*GL(n,ℂ) × O`, its `U(n) × U(n)` action and
//! moment map, the two slice embeddings, and the constructive gauge fixing
//! that brings any point of the constraint surface onto either slice.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernel::{self, eigh_desc, inverse, polar_left, polar_right, CMatrix};
use crate::model::{
    self, ensure_chamber, lax_rs, lax_suth, log_dressing, Coupling, OrbitVector, RsState,
    SutherlandState,
};
use crate::scalar::Real;

/// Point `(g, J, v)` of the extended phase space in left trivialisation.
///
/// The orbit element is `ξ(v) = iκ(vv† − 1)`, so only `v` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct UnreducedPoint<T> {
    /// Group element `g ∈ GL(n, ℂ)`.
    pub group: CMatrix<T>,
    /// Right-trivialised momentum `Jᴿ ∈ gl(n, ℂ)`.
    pub momentum: CMatrix<T>,
    pub orbit: OrbitVector<T>,
}

impl<T: Real> UnreducedPoint<T> {
    pub fn n(&self) -> usize {
        self.group.n()
    }

    /// Largest componentwise difference, with `g` and `J` measured relative
    /// to their own size (floored at one).
    pub fn distance(&self, other: &Self) -> T {
        let rel = |a: &CMatrix<T>, b: &CMatrix<T>| (a - b).norm_max() / T::one().max(b.norm_max());
        rel(&self.group, &other.group)
            .max(rel(&self.momentum, &other.momentum))
            .max(kernel::max_abs_diff(self.orbit.as_slice(), other.orbit.as_slice()))
    }
}

/// Gauge transformation `(η_L, η_R) ∈ U(n) × U(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KElement<T> {
    pub eta_l: CMatrix<T>,
    pub eta_r: CMatrix<T>,
}

impl<T: Real> KElement<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            eta_l: CMatrix::identity(n),
            eta_r: CMatrix::identity(n),
        }
    }

    /// Diagonally embedded torus element `(τ, τ)`.
    pub fn torus(phases: &[Complex<T>]) -> Self {
        let t = CMatrix::from_diagonal(phases);
        Self {
            eta_l: t.clone(),
            eta_r: t,
        }
    }

    /// `self ∘ first`: acting with the result equals acting with `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Self {
        Self {
            eta_l: &self.eta_l * &first.eta_l,
            eta_r: &self.eta_r * &first.eta_r,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            eta_l: self.eta_l.adjoint(),
            eta_r: self.eta_r.adjoint(),
        }
    }

    pub fn unitarity_defect(&self) -> T {
        self.eta_l.unitarity_defect().max(self.eta_r.unitarity_defect())
    }
}

/// `(η_L g η_R⁻¹, η_R J η_R⁻¹, η_L v)`.
pub fn act<T: Real>(k: &KElement<T>, pt: &UnreducedPoint<T>) -> UnreducedPoint<T> {
    let r_inv = k.eta_r.adjoint();
    UnreducedPoint {
        group: &(&k.eta_l * &pt.group) * &r_inv,
        momentum: &(&k.eta_r * &pt.momentum) * &r_inv,
        orbit: OrbitVector::from_raw(k.eta_l.mul_vec(pt.orbit.as_slice())),
    }
}

/// `‖(g J g⁻¹)₊ + ξ(v)‖ + ‖J₊‖`, with `X₊` the anti-Hermitian part.
///
/// Vanishes exactly on the constraint surface. A singular `g` yields `+∞`.
pub fn moment_residual<T: Real>(pt: &UnreducedPoint<T>, c: &Coupling<T>) -> T {
    if c.check_dim(pt.n()).is_err() || pt.orbit.len() != pt.n() || pt.momentum.n() != pt.n() {
        return T::infinity();
    }
    let g_inv = match inverse(&pt.group) {
        Ok(m) => m,
        Err(_) => return T::infinity(),
    };
    let x = &(&pt.group * &pt.momentum) * &g_inv;
    let xi = model::xi_unchecked(pt.orbit.as_slice(), c.kappa());
    let left = (&x.anti_hermitian_part() + &xi).norm_max();
    let right = pt.momentum.anti_hermitian_part().norm_max();
    let r = left + right;
    if r.is_finite() {
        r
    } else {
        T::infinity()
    }
}

/// Sutherland slice point `(e^𝐪, L₁(q, p), w)`.
pub fn embed_s1<T: Real>(s: &SutherlandState<T>, c: &Coupling<T>) -> Result<UnreducedPoint<T>> {
    let momentum = lax_suth(s, c)?;
    let eq: Vec<T> = s.q.iter().map(|x| x.exp()).collect();
    Ok(UnreducedPoint {
        group: CMatrix::from_real_diagonal(&eq),
        momentum,
        orbit: OrbitVector::ones(s.n()),
    })
}

/// Ruijsenaars slice point `(L₂^{1/2}, 𝐩̂, L₂^{-1/2} u)`.
pub fn embed_s2<T: Real>(s: &RsState<T>, c: &Coupling<T>) -> Result<UnreducedPoint<T>> {
    let l = lax_rs(s, c)?;
    let u = model::u_vec(s, c)?;
    let e = eigh_desc(&l)?;
    if !(e.min_value() > T::zero()) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: e.min_value().as_f64(),
        });
    }
    let uc: Vec<Complex<T>> = u.iter().map(|&x| Complex::new(x, T::zero())).collect();
    Ok(UnreducedPoint {
        group: e.map(|x| x.sqrt()),
        momentum: CMatrix::from_real_diagonal(&s.p_hat),
        orbit: OrbitVector::from_raw(e.map(|x| T::one() / x.sqrt()).mul_vec(&uc)),
    })
}

/// Tolerances for gauge fixing, expressed for `f64` and rescaled per scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeOptions {
    /// Accepted moment-map residual, multiplied by `n·(1 + ‖J‖)`.
    pub constraint_tol: f64,
    /// Accepted deviation of `|v'_j|` from one on the Sutherland slice.
    pub phase_tol: f64,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        Self {
            constraint_tol: 1e-8,
            phase_tol: 1e-6,
        }
    }
}

/// Residuals recorded by every gauge fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeDiagnostics<T> {
    /// Moment-map residual of the input point.
    pub constraint_residual: T,
    /// Deviation of the gauge-fixed matrix from the slice formula, relative to its size.
    pub slice_residual: T,
    /// Distance between `act(transform, input)` and the embedded slice point.
    pub transform_residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFixResult<S, T> {
    pub state: S,
    pub transform: KElement<T>,
    pub diagnostics: GaugeDiagnostics<T>,
}

fn check_constraint<T: Real>(
    pt: &UnreducedPoint<T>,
    c: &Coupling<T>,
    opts: &GaugeOptions,
) -> Result<T> {
    c.check_dim(pt.n())?;
    if pt.orbit.len() != pt.n() || pt.momentum.n() != pt.n() {
        return Err(Error::DimensionMismatch {
            expected: pt.n(),
            found: pt.orbit.len().min(pt.momentum.n()),
        });
    }
    pt.group.ensure_finite("group element")?;
    pt.momentum.ensure_finite("momentum")?;
    let residual = moment_residual(pt, c);
    let n = T::from_usize(pt.n()).unwrap_or_else(T::one);
    let tol = T::tol(opts.constraint_tol) * n * (T::one() + pt.momentum.norm_max());
    if !(residual <= tol) {
        return Err(Error::ConstraintViolated {
            residual: residual.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(residual)
}

fn relative<T: Real>(diff: T, scale: T) -> T {
    diff / T::one().max(scale)
}

pub fn gauge_fix_s1<T: Real>(
    pt: &UnreducedPoint<T>,
    c: &Coupling<T>,
) -> Result<GaugeFixResult<SutherlandState<T>, T>> {
    gauge_fix_s1_with(pt, c, &GaugeOptions::default())
}

/// Brings a constraint-surface point onto the Sutherland slice.
///
/// Polar decomposition `g = g₋g₊`, diagonalisation `g₋ = V e^𝐪 V†`, then the
/// residual torus is fixed by sending `V†v` to the all-ones vector.
pub fn gauge_fix_s1_with<T: Real>(
    pt: &UnreducedPoint<T>,
    c: &Coupling<T>,
    opts: &GaugeOptions,
) -> Result<GaugeFixResult<SutherlandState<T>, T>> {
    let constraint_residual = check_constraint(pt, c, opts)?;
    let n = pt.n();

    let (g_minus, g_plus) = polar_right(&pt.group)?;
    let e = eigh_desc(&g_minus)?;
    if !(e.min_value() > T::zero()) {
        return Err(Error::SingularMatrix);
    }
    let q: Vec<T> = e.values.iter().map(|x| x.ln()).collect();
    let q_scale = q.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    kernel::ensure_strictly_decreasing(&q, T::tol(1e-10) * (T::one() + q_scale))
        .map_err(|(index, gap)| Error::CollidingEigenvalues { index, gap })?;

    let v_dag = e.basis.adjoint();
    let step = KElement {
        eta_r: &v_dag * &g_plus,
        eta_l: v_dag,
    };
    let rotated = act(&step, pt);

    let phase_tol = T::tol(opts.phase_tol);
    let mut tau = Vec::with_capacity(n);
    for (index, z) in rotated.orbit.as_slice().iter().enumerate() {
        let modulus = z.norm();
        if !((modulus - T::one()).abs() <= phase_tol) {
            return Err(Error::PhaseDegeneracy {
                index,
                modulus: modulus.as_f64(),
            });
        }
        tau.push(z.conj() / modulus);
    }
    let transform = KElement::torus(&tau).compose(&step);
    let fixed = act(&transform, pt);
    let j_fixed = fixed.momentum.hermitian_part();
    let p: Vec<T> = j_fixed.diagonal().iter().map(|z| z.re).collect();
    let state = SutherlandState::new(q, p)?;

    let slice = embed_s1(&state, c)?;
    let slice_residual = relative((&j_fixed - &slice.momentum).norm_max(), slice.momentum.norm_max());
    let transform_residual = fixed.distance(&slice);
    Ok(GaugeFixResult {
        state,
        transform,
        diagnostics: GaugeDiagnostics {
            constraint_residual,
            slice_residual,
            transform_residual,
        },
    })
}

pub fn gauge_fix_s2<T: Real>(
    pt: &UnreducedPoint<T>,
    c: &Coupling<T>,
) -> Result<GaugeFixResult<RsState<T>, T>> {
    gauge_fix_s2_with(pt, c, &GaugeOptions::default())
}

/// Brings a constraint-surface point onto the Ruijsenaars slice.
///
/// Diagonalise `J = W 𝐩̂ W†`, take the left polar form `gW = h₊h₋`, then fix
/// the residual torus by making `u = h₋ h₊† v` componentwise positive.
pub fn gauge_fix_s2_with<T: Real>(
    pt: &UnreducedPoint<T>,
    c: &Coupling<T>,
    opts: &GaugeOptions,
) -> Result<GaugeFixResult<RsState<T>, T>> {
    let constraint_residual = check_constraint(pt, c, opts)?;
    let n = pt.n();

    let e = eigh_desc(&pt.momentum.hermitian_part())?;
    let p_hat = e.values.clone();
    let p_scale = p_hat.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    e.ensure_distinct(p_scale)?;
    let w = e.basis;

    let (h_plus, h_minus) = polar_left(&(&pt.group * &w))?;
    let v_rot = h_plus.adjoint().mul_vec(pt.orbit.as_slice());
    let u_rot = h_minus.mul_vec(&v_rot);

    let u_scale = kernel::norm_sq(&u_rot).sqrt();
    let floor = T::tol(1e-12) * u_scale;
    let mut tau = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for (index, z) in u_rot.iter().enumerate() {
        let modulus = z.norm();
        if !(modulus > floor) {
            return Err(Error::PhaseDegeneracy {
                index,
                modulus: modulus.as_f64(),
            });
        }
        tau.push(z.conj() / modulus);
        u.push(modulus);
    }
    let q_hat: Vec<T> = log_dressing(&p_hat, c.kappa())
        .into_iter()
        .zip(&u)
        .map(|(d, &uj)| d - uj.ln())
        .collect();
    ensure_chamber(&p_hat)
        .map_err(|_| Error::CollidingEigenvalues { index: 0, gap: 0.0 })?;
    let state = RsState::new(p_hat, q_hat)?;

    let step = KElement {
        eta_l: h_plus.adjoint(),
        eta_r: w.adjoint(),
    };
    let transform = KElement::torus(&tau).compose(&step);
    let fixed = act(&transform, pt);

    let slice = embed_s2(&state, c)?;
    let l2 = lax_rs(&state, c)?;
    let g_fixed = fixed.group.hermitian_part();
    let slice_residual = relative((&(&g_fixed * &g_fixed) - &l2).norm_max(), l2.norm_max());
    let transform_residual = fixed.distance(&slice);
    Ok(GaugeFixResult {
        state,
        transform,
        diagnostics: GaugeDiagnostics {
            constraint_residual,
            slice_residual,
            transform_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{SamplerConfig, StateSampler};

    fn cp(kappa: f64, n: usize) -> Coupling<f64> {
        Coupling::new(kappa, n).unwrap()
    }

    fn dual_sampler(seed: u64, kappa: f64, n: usize) -> StateSampler {
        StateSampler::new(seed, SamplerConfig::default().with_dual_gap(kappa, n))
    }

    fn z(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identity_action_is_trivial() {
        let c = cp(0.8, 3);
        let mut smp = StateSampler::new(1, SamplerConfig::default());
        let pt = embed_s1(&smp.sutherland(3), &c).unwrap();
        assert_eq!(act(&KElement::identity(3), &pt), pt);
    }

    #[test]
    fn torus_keeps_diagonal_group_element() {
        let c = cp(1.0, 2);
        let pt = embed_s1(&SutherlandState::new(vec![0.3, -0.2], vec![0.1, 0.4]).unwrap(), &c).unwrap();
        let tau = [z(0.6, 0.8), z(0.0, 1.0)];
        let moved = act(&KElement::torus(&tau), &pt);
        assert!((&moved.group - &pt.group).norm_max() < 1e-15);
        assert!((moved.orbit.as_slice()[0] - tau[0]).norm() < 1e-15);
    }

    #[test]
    fn action_composition_law() {
        let mut smp = StateSampler::new(2, SamplerConfig::default());
        for n in 1..=5 {
            let c = cp(1.0, n);
            let pt = embed_s1(&smp.sutherland(n), &c).unwrap();
            let k1 = smp.k_element(n);
            let k2 = smp.k_element(n);
            let lhs = act(&k2, &act(&k1, &pt));
            let rhs = act(&k2.compose(&k1), &pt);
            assert!(lhs.distance(&rhs) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn residual_off_the_surface() {
        // (1, i·1, w): (gJg⁻¹)₊ = i·1, J₊ = i·1
        let c = cp(1.0, 2);
        let pt = UnreducedPoint {
            group: CMatrix::identity(2),
            momentum: CMatrix::identity(2).scale_complex(z(0.0, 1.0)),
            orbit: OrbitVector::ones(2),
        };
        let xi = model::xi_of_v(OrbitVector::ones(2).as_slice(), &c).unwrap();
        let expected = (&CMatrix::identity(2).scale_complex(z(0.0, 1.0)) + &xi).norm_max() + 1.0;
        assert!((moment_residual(&pt, &c) - expected).abs() < 1e-15);
        assert!(moment_residual(&pt, &c) > 0.0);
    }

    #[test]
    fn embeddings_lie_on_constraint_surface() {
        let mut smp = StateSampler::new(3, SamplerConfig::default());
        for n in [1, 2, 3, 5, 8] {
            for kappa in [0.5, 1.0, -2.0] {
                let c = cp(kappa, n);
                let mut rs = dual_sampler(3, kappa, n);
                for _ in 0..20 {
                    let s = smp.sutherland(n);
                    assert!(moment_residual(&embed_s1(&s, &c).unwrap(), &c) < 1e-12);
                    let r = rs.rs(n);
                    let pt = embed_s2(&r, &c).unwrap();
                    let tol = if n == 8 && kappa.abs() == 2.0 { 1e-8 } else { 1e-10 };
                    assert!(moment_residual(&pt, &c) < tol, "{}", moment_residual(&pt, &c));
                }
            }
        }
    }

    #[test]
    fn embed_s1_example() {
        let a = 1f64.asinh() / 2.0;
        let pt = embed_s1(&SutherlandState::new(vec![a, -a], vec![0.0, 0.0]).unwrap(), &cp(1.0, 2)).unwrap();
        assert!((pt.group[(0, 0)].re - 1.5537740).abs() < 1e-7);
        assert!((pt.group[(1, 1)].re - 0.6435943).abs() < 1e-7);
        assert!((pt.momentum[(0, 1)] - z(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn one_particle_closed_forms() {
        let c = cp(1.0, 1);
        let pt = embed_s2(&RsState::new(vec![0.4], vec![-0.3]).unwrap(), &c).unwrap();
        assert!((pt.group[(0, 0)].re - 0.3f64.exp()).abs() < 1e-15);
        assert!((pt.orbit.as_slice()[0] - z(1.0, 0.0)).norm() < 1e-15);

        // arbitrary constraint-surface point: g = r e^{iθ}, J real, |v| = 1
        let pt = UnreducedPoint {
            group: CMatrix::from_diagonal(&[z(0.7, -1.1)]),
            momentum: CMatrix::from_real_diagonal(&[0.25]),
            orbit: OrbitVector::new(vec![z(0.0, -1.0)]).unwrap(),
        };
        let r = z(0.7, -1.1).norm();
        let s1 = gauge_fix_s1(&pt, &c).unwrap().state;
        assert!((s1.q[0] - r.ln()).abs() < 1e-15 && (s1.p[0] - 0.25).abs() < 1e-15);
        let s2 = gauge_fix_s2(&pt, &c).unwrap().state;
        assert!((s2.q_hat[0] + r.ln()).abs() < 1e-15 && (s2.p_hat[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn slice_points_are_their_own_normal_form() {
        let mut smp = StateSampler::new(4, SamplerConfig::default());
        for n in [2, 3, 5, 8] {
            for kappa in [0.5, 1.0, 2.0] {
                let c = cp(kappa, n);
                let mut rs = dual_sampler(4, kappa, n);
                for _ in 0..10 {
                    let s = smp.sutherland(n);
                    let fx = gauge_fix_s1(&embed_s1(&s, &c).unwrap(), &c).unwrap();
                    assert!(fx.state.distance(&s) < 1e-10);
                    assert!(fx.diagnostics.slice_residual < 1e-9);
                    let r = rs.rs(n);
                    let fx = gauge_fix_s2(&embed_s2(&r, &c).unwrap(), &c).unwrap();
                    assert!(fx.state.distance(&r) < 1e-9, "{}", fx.state.distance(&r));
                    assert!(fx.diagnostics.slice_residual < 1e-9);
                }
            }
        }
    }

    #[test]
    fn gauge_fixing_is_constant_on_orbits() {
        let mut smp = StateSampler::new(5, SamplerConfig::default());
        for n in [2, 3, 5, 8] {
            for kappa in [0.5, 1.0, 2.0] {
                let c = cp(kappa, n);
                let mut rs = dual_sampler(5, kappa, n);
                for _ in 0..10 {
                    let s = smp.sutherland(n);
                    let k = smp.k_element(n);
                    let pt = act(&k, &embed_s1(&s, &c).unwrap());
                    let fx = gauge_fix_s1(&pt, &c).unwrap();
                    assert!(fx.state.distance(&s) < 1e-9, "{}", fx.state.distance(&s));
                    assert!(fx.diagnostics.transform_residual < 1e-9);

                    let r = rs.rs(n);
                    let k = smp.k_element(n);
                    let pt = act(&k, &embed_s2(&r, &c).unwrap());
                    let fx = gauge_fix_s2(&pt, &c).unwrap();
                    assert!(fx.state.distance(&r) < 1e-8, "{}", fx.state.distance(&r));
                    assert!(fx.diagnostics.transform_residual < 1e-9);
                }
            }
        }
    }

    #[test]
    fn residual_is_gauge_invariant() {
        // the entrywise max-norm is not unitarily invariant, so compare on the surface
        let mut smp = StateSampler::new(6, SamplerConfig::default());
        for n in 1..=6 {
            let c = cp(1.5, n);
            let pt = embed_s1(&smp.sutherland(n), &c).unwrap();
            let base = moment_residual(&pt, &c);
            let moved = moment_residual(&act(&smp.k_element(n), &pt), &c);
            assert!((base - moved).abs() < 1e-11, "{base} {moved}");
        }
    }

    #[test]
    fn off_surface_points_are_refused() {
        let c = cp(1.0, 2);
        let mut pt = embed_s1(&SutherlandState::new(vec![0.5, -0.5], vec![0.0, 0.0]).unwrap(), &c).unwrap();
        pt.momentum[(0, 1)] = z(0.0, -2.0);
        assert!(matches!(gauge_fix_s1(&pt, &c), Err(Error::ConstraintViolated { .. })));
        assert!(matches!(gauge_fix_s2(&pt, &c), Err(Error::ConstraintViolated { .. })));
    }
}
