//! The action-angle duality between the two slices, realised as embedding
//! followed by gauge fixing, and a finite-difference canonicity certificate.

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{Coupling, ModelState, RsState, SutherlandState};
use crate::reduction::{
    embed_s1, embed_s2, gauge_fix_s1, gauge_fix_s2, GaugeDiagnostics, KElement,
};
use crate::scalar::Real;

/// Consistency figures attached to every duality map evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityResiduals<T> {
    /// Moment-map residual of the embedded source point.
    pub constraint: T,
    /// Relative deviation of the gauge-fixed matrix from the target slice formula.
    pub slice: T,
    /// Distance between the transformed source point and the embedded target.
    pub transform: T,
    /// Coordinate distance after mapping the result back.
    pub roundtrip: T,
}

impl<T: Real> DualityResiduals<T> {
    fn zero() -> Self {
        Self {
            constraint: T::zero(),
            slice: T::zero(),
            transform: T::zero(),
            roundtrip: T::zero(),
        }
    }

    fn from_gauge(d: GaugeDiagnostics<T>, roundtrip: T) -> Self {
        Self {
            constraint: d.constraint_residual,
            slice: d.slice_residual,
            transform: d.transform_residual,
            roundtrip,
        }
    }

    pub fn max(&self) -> T {
        self.constraint.max(self.slice).max(self.transform).max(self.roundtrip)
    }
}

/// Mapped state with the gauge transformation relating the two slice points.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityResult<S, T> {
    pub state: S,
    pub transform: KElement<T>,
    pub residuals: DualityResiduals<T>,
}

fn suth_to_rs_bare<T: Real>(
    s: &SutherlandState<T>,
    c: &Coupling<T>,
) -> Result<(RsState<T>, KElement<T>, GaugeDiagnostics<T>)> {
    let fx = gauge_fix_s2(&embed_s1(s, c)?, c)?;
    Ok((fx.state, fx.transform, fx.diagnostics))
}

fn rs_to_suth_bare<T: Real>(
    s: &RsState<T>,
    c: &Coupling<T>,
) -> Result<(SutherlandState<T>, KElement<T>, GaugeDiagnostics<T>)> {
    let fx = gauge_fix_s1(&embed_s2(s, c)?, c)?;
    Ok((fx.state, fx.transform, fx.diagnostics))
}

/// Sutherland state to its dual: `p̂` are the Lax eigenvalues, `q̂` the conjugate angles.
///
/// A single particle maps by `(q, p) ↦ (p̂, q̂) = (p, −q)` without rounding.
pub fn suth_to_rs<T: Real>(
    s: &SutherlandState<T>,
    c: &Coupling<T>,
) -> Result<DualityResult<RsState<T>, T>> {
    s.validate()?;
    c.check_dim(s.n())?;
    if s.n() == 1 {
        return Ok(DualityResult {
            state: RsState::new(s.p.clone(), vec![-s.q[0]])?,
            transform: KElement::identity(1),
            residuals: DualityResiduals::zero(),
        });
    }
    let (state, transform, diag) = suth_to_rs_bare(s, c)?;
    let roundtrip = rs_to_suth_bare(&state, c)
        .map(|(back, _, _)| back.distance(s))
        .unwrap_or_else(|_| T::infinity());
    Ok(DualityResult {
        state,
        transform,
        residuals: DualityResiduals::from_gauge(diag, roundtrip),
    })
}

/// Ruijsenaars state to its dual: `e^{2q}` are the eigenvalues of `L₂`.
///
/// A single particle maps by `(p̂, q̂) ↦ (q, p) = (−q̂, p̂)` without rounding.
pub fn rs_to_suth<T: Real>(
    s: &RsState<T>,
    c: &Coupling<T>,
) -> Result<DualityResult<SutherlandState<T>, T>> {
    s.validate()?;
    c.check_dim(s.n())?;
    if s.n() == 1 {
        return Ok(DualityResult {
            state: SutherlandState::new(vec![-s.q_hat[0]], s.p_hat.clone())?,
            transform: KElement::identity(1),
            residuals: DualityResiduals::zero(),
        });
    }
    let (state, transform, diag) = rs_to_suth_bare(s, c)?;
    let roundtrip = suth_to_rs_bare(&state, c)
        .map(|(back, _, _)| back.distance(s))
        .unwrap_or_else(|_| T::infinity());
    Ok(DualityResult {
        state,
        transform,
        residuals: DualityResiduals::from_gauge(diag, roundtrip),
    })
}

/// Maps a state of either model to the other one.
pub fn dual<T: Real>(s: &ModelState<T>, c: &Coupling<T>) -> Result<(ModelState<T>, KElement<T>, DualityResiduals<T>)> {
    Ok(match s {
        ModelState::Sutherland(x) => {
            let r = suth_to_rs(x, c)?;
            (ModelState::Rs(r.state), r.transform, r.residuals)
        }
        ModelState::Rs(x) => {
            let r = rs_to_suth(x, c)?;
            (ModelState::Sutherland(r.state), r.transform, r.residuals)
        }
    })
}

/// Central-difference Jacobian of `(q, p) ↦ (p̂, q̂)`, column `i` holding
/// the derivatives with respect to the `i`-th source coordinate.
///
/// The divisor is the floating-point distance between the two stencil
/// points, so exactly linear maps yield exact columns.
pub fn duality_jacobian<T: Real>(s: &SutherlandState<T>, c: &Coupling<T>, h: T) -> Result<Vec<Vec<T>>> {
    s.validate()?;
    let z = ModelState::Sutherland(s.clone()).darboux();
    (0..z.len())
        .into_par_iter()
        .map(|i| {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] = z[i] + h;
            zm[i] = z[i] - h;
            let denom = zp[i] - zm[i];
            let image = |w: &[T]| -> Result<Vec<T>> {
                let (q, p) = w.split_at(s.n());
                let src = SutherlandState::new(q.to_vec(), p.to_vec())?;
                Ok(ModelState::Rs(suth_to_rs(&src, c)?.state).darboux())
            };
            let fp = image(&zp)?;
            let fm = image(&zm)?;
            Ok(fp.iter().zip(&fm).map(|(a, b)| (*a - *b) / denom).collect())
        })
        .collect()
}

/// `‖MᵀAM − A‖∞` for the central-difference Jacobian `M` of the duality map,
/// with `A = [[0, −1], [1, 0]]` in the coordinate orders `(q, p)` and `(p̂, q̂)`.
pub fn symplectic_certificate<T: Real>(s: &SutherlandState<T>, c: &Coupling<T>, h: T) -> Result<T> {
    let cols = duality_jacobian(s, c, h)?;
    let n = s.n();
    let dim = 2 * n;
    // (AM)_{r,b}: −M_{r+n,b} for r < n, M_{r−n,b} otherwise
    let am = |r: usize, b: usize| if r < n { -cols[b][r + n] } else { cols[b][r - n] };
    let a = |r: usize, b: usize| {
        if r < n && b == r + n {
            -T::one()
        } else if r >= n && b + n == r {
            T::one()
        } else {
            T::zero()
        }
    };
    let mut worst = T::zero();
    for i in 0..dim {
        for j in 0..dim {
            let v = (0..dim).fold(T::zero(), |acc, r| acc + cols[i][r] * am(r, j));
            worst = worst.max((v - a(i, j)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::eigh_desc;
    use crate::model::lax_suth;
    use crate::sampling::{SamplerConfig, StateSampler};

    fn cp(kappa: f64, n: usize) -> Coupling<f64> {
        Coupling::new(kappa, n).unwrap()
    }

    fn a0() -> f64 {
        1f64.asinh() / 2.0
    }

    #[test]
    fn one_particle_maps_are_exact() {
        let c = cp(1.3, 1);
        let s = SutherlandState::new(vec![0.7], vec![-0.3]).unwrap();
        let r = suth_to_rs(&s, &c).unwrap().state;
        assert_eq!(r, RsState::new(vec![-0.3], vec![-0.7]).unwrap());
        assert_eq!(rs_to_suth(&r, &c).unwrap().state, s);
        assert_eq!(symplectic_certificate(&s, &c, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn two_particle_example() {
        let c = cp(1.0, 2);
        let s = SutherlandState::new(vec![a0(), -a0()], vec![0.0, 0.0]).unwrap();
        let r = suth_to_rs(&s, &c).unwrap();
        assert!(r.state.distance(&RsState::new(vec![1.0, -1.0], vec![0.0, 0.0]).unwrap()) < 1e-10);
        let back = rs_to_suth(&r.state, &c).unwrap();
        assert!(back.state.distance(&s) < 1e-10);
        assert!(r.residuals.max() < 1e-10);
        assert!(symplectic_certificate(&s, &c, 1e-5).unwrap() < 1e-5);
    }

    #[test]
    fn spectrum_exchange_and_sum_rules() {
        let mut smp = StateSampler::new(11, SamplerConfig::default());
        for n in [2, 3, 5] {
            for kappa in [0.5, 1.0, 2.0] {
                let c = cp(kappa, n);
                for _ in 0..20 {
                    let s = smp.sutherland(n);
                    let r = suth_to_rs(&s, &c).unwrap();
                    let e = eigh_desc(&lax_suth(&s, &c).unwrap()).unwrap();
                    assert_eq!(e.values, r.state.p_hat);
                    let sp: f64 = s.p.iter().sum();
                    let sph: f64 = r.state.p_hat.iter().sum();
                    assert!((sp - sph).abs() < 1e-10);
                    let sq: f64 = s.q.iter().sum();
                    let sqh: f64 = r.state.q_hat.iter().sum();
                    assert!((sq + sqh).abs() < 1e-9, "{}", sq + sqh);
                    assert!(r.residuals.roundtrip < 1e-8);
                }
            }
        }
    }

    #[test]
    fn left_and_right_factors_agree() {
        // η_L e^𝐪 η_R† is positive definite, which forces η_L = η_R
        let mut smp = StateSampler::new(12, SamplerConfig::moderate());
        for n in [2, 3, 5] {
            let c = cp(0.7, n);
            for _ in 0..10 {
                let k = suth_to_rs(&smp.sutherland(n), &c).unwrap().transform;
                assert!(k.unitarity_defect() < 1e-12);
                assert!((&k.eta_l - &k.eta_r).norm_max() < 1e-10);
            }
        }
    }

    #[test]
    fn certificate_converges_quadratically() {
        let c = cp(1.0, 3);
        let s = SutherlandState::new(vec![1.0, 0.1, -0.8], vec![0.3, -0.2, 0.5]).unwrap();
        let d3 = symplectic_certificate(&s, &c, 1e-3).unwrap();
        let d4 = symplectic_certificate(&s, &c, 1e-4).unwrap();
        let ratio = d3 / d4;
        assert!(ratio > 100.0 / 3.0 && ratio < 300.0, "{d3} {d4} {ratio}");
    }

    #[test]
    fn stencil_breach_is_reported() {
        let c = cp(1.0, 2);
        let s = SutherlandState::new(vec![1e-4, -1e-4], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            symplectic_certificate(&s, &c, 1e-3),
            Err(crate::Error::ChamberViolation { .. })
        ));
    }
}
