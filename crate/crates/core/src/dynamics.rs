//! Exact flows of both commuting families on the extended phase space, their
//! projections to either slice, trajectory sampling, and an RK4 oracle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{eigh_desc, exp_herm, powi_herm, CMatrix};
use crate::model::{
    hamiltonian_from_spectrum, lax_rs, lax_suth, Coupling, Family, HamiltonianId, ModelState,
    RsState, SutherlandState,
};
use crate::reduction::{embed_s1, embed_s2, gauge_fix_s1, gauge_fix_s2, UnreducedPoint};
use crate::scalar::Real;

/// Finite-difference step of the oracle's gradients.
pub const ORACLE_GRADIENT_STEP: f64 = 1e-6;

fn ensure_time<T: Real>(t: T) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("flow time".into()))
    }
}

/// `g ↦ g·exp(t Jʲ⁻¹)` with `J` and `v` fixed.
pub fn flow_unreduced_h<T: Real>(pt: &UnreducedPoint<T>, j: i32, t: T) -> Result<UnreducedPoint<T>> {
    HamiltonianId::h(j).validate_exponent()?;
    ensure_time(t)?;
    pt.momentum.ensure_hermitian()?;
    let gen = powi_herm(&pt.momentum.hermitian_part(), j - 1)?;
    Ok(UnreducedPoint {
        group: &pt.group * &exp_herm(&gen, t)?,
        momentum: pt.momentum.clone(),
        orbit: pt.orbit.clone(),
    })
}

/// `J ↦ J − t(g†g)ᵏ` with `g` and `v` fixed.
pub fn flow_unreduced_hhat<T: Real>(pt: &UnreducedPoint<T>, k: i32, t: T) -> Result<UnreducedPoint<T>> {
    HamiltonianId::h_hat(k).validate_exponent()?;
    ensure_time(t)?;
    let gram = &pt.group.adjoint() * &pt.group;
    let shift = powi_herm(&gram.hermitian_part(), k)?;
    Ok(UnreducedPoint {
        group: pt.group.clone(),
        momentum: &pt.momentum - &shift.scale(t),
        orbit: pt.orbit.clone(),
    })
}

pub fn flow_unreduced<T: Real>(pt: &UnreducedPoint<T>, id: HamiltonianId, t: T) -> Result<UnreducedPoint<T>> {
    match id.family {
        Family::H => flow_unreduced_h(pt, id.index, t),
        Family::HHat => flow_unreduced_hhat(pt, id.index, t),
    }
}

/// Flow of `H_j` projected to the Sutherland slice.
pub fn flow_suth<T: Real>(s: &SutherlandState<T>, c: &Coupling<T>, j: i32, t: T) -> Result<SutherlandState<T>> {
    let pt = flow_unreduced_h(&embed_s1(s, c)?, j, t)?;
    Ok(gauge_fix_s1(&pt, c)?.state)
}

/// Flow of `Ĥ_k` projected to the Ruijsenaars slice.
pub fn flow_rs<T: Real>(s: &RsState<T>, c: &Coupling<T>, k: i32, t: T) -> Result<RsState<T>> {
    let pt = flow_unreduced_hhat(&embed_s2(s, c)?, k, t)?;
    Ok(gauge_fix_s2(&pt, c)?.state)
}

/// Flow of any Hamiltonian of either family, projected back to the slice of the input state.
///
/// At `t = 0` the input is returned unchanged.
pub fn flow<T: Real>(s: &ModelState<T>, c: &Coupling<T>, id: HamiltonianId, t: T) -> Result<ModelState<T>> {
    if t == T::zero() {
        id.validate_exponent()?;
        c.check_dim(s.n())?;
        return Ok(s.clone());
    }
    Ok(match s {
        ModelState::Sutherland(x) => {
            let pt = flow_unreduced(&embed_s1(x, c)?, id, t)?;
            ModelState::Sutherland(gauge_fix_s1(&pt, c)?.state)
        }
        ModelState::Rs(x) => {
            let pt = flow_unreduced(&embed_s2(x, c)?, id, t)?;
            ModelState::Rs(gauge_fix_s2(&pt, c)?.state)
        }
    })
}

/// Positions along the `H_j` flow: `e^{2𝐪(t)}` is the descending spectrum of
/// `e^𝐪 exp(2t L₁ʲ⁻¹) e^𝐪`.
pub fn suth_positions_closed_form<T: Real>(
    s: &SutherlandState<T>,
    c: &Coupling<T>,
    j: i32,
    t: T,
) -> Result<Vec<T>> {
    HamiltonianId::h(j).validate_exponent()?;
    let l1 = lax_suth(s, c)?;
    let m = exp_herm(&powi_herm(&l1, j - 1)?, T::lit(2.0) * t)?;
    let eq: Vec<_> = s.q.iter().map(|x| num_complex::Complex::new(x.exp(), T::zero())).collect();
    let a = m.scale_rows_cols(&eq, &eq).hermitian_part();
    let e = eigh_desc(&a)?;
    if !(e.min_value() > T::zero()) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: e.min_value().as_f64() });
    }
    Ok(e.values.iter().map(|x| x.ln() * T::lit(0.5)).collect())
}

/// Rapidities along the `Ĥ_k` flow: `𝐩̂(t)` is the descending spectrum of `𝐩̂ − t L₂ᵏ`.
pub fn rs_momenta_closed_form<T: Real>(s: &RsState<T>, c: &Coupling<T>, k: i32, t: T) -> Result<Vec<T>> {
    HamiltonianId::h_hat(k).validate_exponent()?;
    let l2 = lax_rs(s, c)?;
    let a = &CMatrix::from_real_diagonal(&s.p_hat) - &powi_herm(&l2, k)?.scale(t);
    Ok(eigh_desc(&a.hermitian_part())?.values)
}

/// Reduced Hamiltonian of either family at a state of either model.
///
/// The spectrum of the dual Lax matrix is read from the coordinates:
/// `p̂` for `L₁` on the Ruijsenaars slice and `e^{2q}` for `L₂` on the Sutherland slice.
pub fn state_hamiltonian<T: Real>(s: &ModelState<T>, c: &Coupling<T>, id: HamiltonianId) -> Result<T> {
    id.validate_exponent()?;
    c.check_dim(s.n())?;
    let spectrum = match (s, id.family) {
        (ModelState::Sutherland(x), Family::H) => eigh_desc(&lax_suth(x, c)?)?.values,
        (ModelState::Sutherland(x), Family::HHat) => {
            x.validate()?;
            x.q.iter().map(|q| (T::lit(2.0) * *q).exp()).collect()
        }
        (ModelState::Rs(x), Family::H) => {
            x.validate()?;
            x.p_hat.clone()
        }
        (ModelState::Rs(x), Family::HHat) => eigh_desc(&lax_rs(x, c)?)?.values,
    };
    Ok(hamiltonian_from_spectrum(&spectrum, id))
}

/// The state's own family `H_1…H_n` (Sutherland) or `Ĥ_1…Ĥ_n` (Ruijsenaars).
pub fn conserved_quantities<T: Real>(s: &ModelState<T>, c: &Coupling<T>) -> Result<Vec<T>> {
    let (l, family) = match s {
        ModelState::Sutherland(x) => (lax_suth(x, c)?, Family::H),
        ModelState::Rs(x) => (lax_rs(x, c)?, Family::HHat),
    };
    let values = eigh_desc(&l)?.values;
    Ok((1..=s.n() as i32)
        .map(|i| hamiltonian_from_spectrum(&values, HamiltonianId { family, index: i }))
        .collect())
}

/// `(∂H/∂y, −∂H/∂x)` in the Darboux order of [`ModelState::darboux`],
/// gradients by central differences.
fn hamiltonian_field<T: Real>(
    template: &ModelState<T>,
    z: &[T],
    c: &Coupling<T>,
    id: HamiltonianId,
    step: T,
) -> Result<Vec<T>> {
    let n = template.n();
    let grad = (0..2 * n)
        .map(|i| {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[i] = z[i] + step;
            zm[i] = z[i] - step;
            let hp = state_hamiltonian(&template.with_darboux(&zp)?, c, id)?;
            let hm = state_hamiltonian(&template.with_darboux(&zm)?, c, id)?;
            Ok((hp - hm) / (zp[i] - zm[i]))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((0..2 * n).map(|i| if i < n { grad[i + n] } else { -grad[i - n] }).collect())
}

/// Classic fourth-order Runge-Kutta integration of Hamilton's equations
/// `x' = ∂H/∂y`, `y' = −∂H/∂x` in the slice Darboux coordinates.
pub fn rk4_oracle<T: Real>(
    s: &ModelState<T>,
    c: &Coupling<T>,
    id: HamiltonianId,
    t: T,
    steps: usize,
) -> Result<ModelState<T>> {
    if steps == 0 {
        return Err(Error::InvalidInput("oracle needs at least one step".into()));
    }
    ensure_time(t)?;
    id.validate_exponent()?;
    let h = t / T::from_usize(steps).unwrap_or_else(T::one);
    let grad_step = T::lit(ORACLE_GRADIENT_STEP);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let axpy = |z: &[T], a: T, k: &[T]| -> Vec<T> { z.iter().zip(k).map(|(x, d)| *x + a * *d).collect() };

    let mut z = s.darboux();
    for _ in 0..steps {
        let k1 = hamiltonian_field(s, &z, c, id, grad_step)?;
        let k2 = hamiltonian_field(s, &axpy(&z, half * h, &k1), c, id, grad_step)?;
        let k3 = hamiltonian_field(s, &axpy(&z, half * h, &k2), c, id, grad_step)?;
        let k4 = hamiltonian_field(s, &axpy(&z, h, &k3), c, id, grad_step)?;
        for i in 0..z.len() {
            z[i] += h * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
    }
    s.with_darboux(&z)
}

/// Which Hamiltonian to follow, for how long, and how many output intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec<T> {
    pub hamiltonian: HamiltonianId,
    pub t: T,
    pub steps: usize,
}

impl<T: Real> FlowSpec<T> {
    pub fn validate(&self) -> Result<()> {
        self.hamiltonian.validate_exponent()?;
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if !(self.t.is_finite() && self.t > T::zero()) {
            return Err(Error::InvalidInput(format!("flow time {} must be positive and finite", self.t)));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<T> {
        let steps = T::from_usize(self.steps).unwrap_or_else(T::one);
        (0..=self.steps)
            .map(|i| {
                if i == self.steps {
                    self.t
                } else {
                    self.t * T::from_usize(i).unwrap_or_else(T::zero) / steps
                }
            })
            .collect()
    }
}

/// Sample time at which the flow could not be projected to the slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSample<T> {
    pub time: T,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<ModelState<T>>,
    /// The state's own family `H_1…H_n` or `Ĥ_1…Ĥ_n` at each sample.
    pub conserved: Vec<Vec<T>>,
    /// Exceptional times, where eigenvalues collide.
    pub skipped: Vec<SkippedSample<T>>,
}

/// Exact flow evaluated at `i·t/steps`, `i = 0…steps`.
///
/// Degenerate samples are skipped and reported; other errors abort.
pub fn sample_trajectory<T: Real>(s: &ModelState<T>, c: &Coupling<T>, spec: &FlowSpec<T>) -> Result<Trajectory<T>> {
    spec.validate()?;
    c.check_dim(s.n())?;
    let samples: Vec<(T, Result<(ModelState<T>, Vec<T>)>)> = spec
        .times()
        .into_par_iter()
        .map(|time| {
            let r = flow(s, c, spec.hamiltonian, time).and_then(|x| {
                let h = conserved_quantities(&x, c)?;
                Ok((x, h))
            });
            (time, r)
        })
        .collect();
    let mut out = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        conserved: Vec::new(),
        skipped: Vec::new(),
    };
    for (time, r) in samples {
        match r {
            Ok((x, h)) => {
                out.times.push(time);
                out.states.push(x);
                out.conserved.push(h);
            }
            Err(e) if e.is_degeneracy() => out.skipped.push(SkippedSample {
                time,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
