//! Numerical checks of the identities relating the two models, and a seeded
//! batch runner that aggregates them into a deterministic report.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duality::{rs_to_suth, suth_to_rs, symplectic_certificate};
use crate::dynamics::{
    conserved_quantities, flow_rs, flow_suth, rk4_oracle, rs_momenta_closed_form,
    suth_positions_closed_form,
};
use crate::error::{Error, Result};
use crate::kernel::{det, eigh_desc, powi_herm, CMatrix};
use crate::model::{
    ham_rs, ham_rs_particle_form, ham_suth, lax_rs, lax_suth, reduced_hamiltonian, u_vec,
    Coupling, HamiltonianId, ModelState, RsState, SutherlandState,
};
use crate::reduction::{embed_s1, embed_s2, moment_residual};
use crate::sampling::{SamplerConfig, StateSampler};
use crate::scalar::Real;

/// `[e^{2𝐪}, L₁] + 2iκ((e^𝐪 w)(e^𝐪 w)† − e^{2𝐪})`, largest entry.
pub fn check_commutation_s1<T: Real>(s: &SutherlandState<T>, c: &Coupling<T>) -> Result<T> {
    let l1 = lax_suth(s, c)?;
    let eq: Vec<T> = s.q.iter().map(|x| x.exp()).collect();
    let e2: Vec<T> = eq.iter().map(|x| *x * *x).collect();
    let two_ik = Complex::new(T::zero(), T::lit(2.0) * c.kappa());
    let r = CMatrix::from_fn(s.n(), |i, j| {
        let comm = l1[(i, j)] * (e2[i] - e2[j]);
        let diag = if i == j { e2[i] } else { T::zero() };
        comm + two_ik * (eq[i] * eq[j] - diag)
    });
    Ok(r.norm_max())
}

/// `[L₂, 𝐩̂] + 2iκ(uu† − L₂)`, largest entry.
pub fn check_commutation_s2<T: Real>(s: &RsState<T>, c: &Coupling<T>) -> Result<T> {
    let l2 = lax_rs(s, c)?;
    let u = u_vec(s, c)?;
    let two_ik = Complex::new(T::zero(), T::lit(2.0) * c.kappa());
    let r = CMatrix::from_fn(s.n(), |i, j| {
        let comm = l2[(i, j)] * (s.p_hat[j] - s.p_hat[i]);
        comm + two_ik * (Complex::new(u[i] * u[j], T::zero()) - l2[(i, j)])
    });
    Ok(r.norm_max())
}

fn relative_error<T: Real>(value: T, reference: T) -> T {
    (value - reference).abs() / reference.abs()
}

/// Relative error of `det L₂` against both `∏u² ∏_{j<k} Δ²/(Δ² + 4κ²)` and `e^{−2Σq̂}`.
pub fn check_det_identity<T: Real>(s: &RsState<T>, c: &Coupling<T>) -> Result<T> {
    let l2 = lax_rs(s, c)?;
    let d = det(&l2);
    let u = u_vec(s, c)?;
    let four_k2 = T::lit(4.0) * c.kappa() * c.kappa();
    let mut cauchy = u.iter().fold(T::one(), |a, x| a * *x * *x);
    for j in 0..s.n() {
        for k in j + 1..s.n() {
            let d2 = (s.p_hat[j] - s.p_hat[k]).powi(2);
            cauchy *= d2 / (d2 + four_k2);
        }
    }
    let sum_q = s.q_hat.iter().fold(T::zero(), |a, x| a + *x);
    let exp_form = (T::lit(-2.0) * sum_q).exp();
    let imag = d.im.abs() / d.norm();
    Ok(relative_error(d.re, cauchy)
        .max(relative_error(d.re, exp_form))
        .max(imag))
}

/// Spectral invariants on the Ruijsenaars slice:
/// `𝓔ᵃ = (1/a) tr L₂ᵃ` and `𝓕ᵃ = (1/a) Σ (p̂ʲ)ᵃ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    E(i32),
    F(i32),
}

impl Observable {
    pub fn evaluate<T: Real>(&self, s: &RsState<T>, c: &Coupling<T>) -> Result<T> {
        match *self {
            Observable::E(a) => {
                let values = eigh_desc(&lax_rs(s, c)?)?.values;
                let sum = values.iter().fold(T::zero(), |acc, x| acc + x.powi(a));
                Ok(sum / T::lit(a as f64))
            }
            Observable::F(a) => {
                s.validate()?;
                let sum = s.p_hat.iter().fold(T::zero(), |acc, x| acc + x.powi(a));
                Ok(sum / T::lit(a as f64))
            }
        }
    }
}

/// Central-difference partials `(∂/∂p̂, ∂/∂q̂)` of an observable.
fn partials<T: Real>(obs: Observable, s: &RsState<T>, c: &Coupling<T>, h: T) -> Result<(Vec<T>, Vec<T>)> {
    let n = s.n();
    let mut dp = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    for k in 0..n {
        for (coords, out) in [(0usize, &mut dp), (1usize, &mut dq)] {
            let mut plus = s.clone();
            let mut minus = s.clone();
            let (xp, xm) = if coords == 0 {
                (&mut plus.p_hat[k], &mut minus.p_hat[k])
            } else {
                (&mut plus.q_hat[k], &mut minus.q_hat[k])
            };
            *xp += h;
            *xm -= h;
            let denom = *xp - *xm;
            plus.validate()?;
            minus.validate()?;
            out.push((obs.evaluate(&plus, c)? - obs.evaluate(&minus, c)?) / denom);
        }
    }
    Ok((dp, dq))
}

/// Bracket terms `∂f/∂p̂ ∂g/∂q̂ − ∂f/∂q̂ ∂g/∂p̂` for each particle.
fn bracket_terms<T: Real>(f: &(Vec<T>, Vec<T>), g: &(Vec<T>, Vec<T>)) -> Vec<(T, T)> {
    (0..f.0.len())
        .map(|k| (f.0[k] * g.1[k], f.1[k] * g.0[k]))
        .collect()
}

/// Finite-difference Poisson bracket `Σ_k (∂f/∂p̂ᵏ ∂g/∂q̂_k − ∂f/∂q̂_k ∂g/∂p̂ᵏ)`.
pub fn poisson_fd<T: Real>(f: Observable, g: Observable, s: &RsState<T>, c: &Coupling<T>, h: T) -> Result<T> {
    let df = partials(f, s, c, h)?;
    let dg = partials(g, s, c, h)?;
    Ok(bracket_terms(&df, &dg).into_iter().fold(T::zero(), |acc, (a, b)| acc + (a - b)))
}

/// Closed-form brackets: `{𝓔ᵃ, 𝓕ᵇ} = 2 tr(𝐩̂ᵇ⁻¹ L₂ᵃ)`, the rest vanish.
pub fn poisson_exact<T: Real>(f: Observable, g: Observable, s: &RsState<T>, c: &Coupling<T>) -> Result<T> {
    let mixed = |a: i32, b: i32| -> Result<T> {
        let la = powi_herm(&lax_rs(s, c)?, a)?;
        let diag = la.diagonal();
        Ok(s.p_hat.iter().zip(&diag).fold(T::zero(), |acc, (p, l)| acc + p.powi(b - 1) * l.re) * T::lit(2.0))
    };
    match (f, g) {
        (Observable::E(a), Observable::F(b)) => mixed(a, b),
        (Observable::F(b), Observable::E(a)) => Ok(-mixed(a, b)?),
        _ => Ok(T::zero()),
    }
}

/// Worst deviations of the finite-difference bracket table from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDeviation<T> {
    /// `|fd − exact| / max(|exact|, Σ_k |terms|)` over all pairs.
    pub relative: T,
    /// Largest `|{𝓔ᵃ, 𝓔ᵇ}|` or `|{𝓕ᵃ, 𝓕ᵇ}|`.
    pub commuting_abs: T,
    /// Same brackets divided by `max(1, Σ_k |terms|)`.
    pub commuting_scaled: T,
}

pub fn poisson_table_deviation<T: Real>(s: &RsState<T>, c: &Coupling<T>, h: T) -> Result<PoissonDeviation<T>> {
    let m = s.n().min(3) as i32;
    let mut cache = BTreeMap::new();
    for a in 1..=m {
        cache.insert((0, a), partials(Observable::E(a), s, c, h)?);
        cache.insert((1, a), partials(Observable::F(a), s, c, h)?);
    }
    let obs = |kind: i32, a: i32| if kind == 0 { Observable::E(a) } else { Observable::F(a) };
    let mut out = PoissonDeviation {
        relative: T::zero(),
        commuting_abs: T::zero(),
        commuting_scaled: T::zero(),
    };
    for kf in 0..2 {
        for kg in 0..2 {
            for a in 1..=m {
                for b in 1..=m {
                    let terms = bracket_terms(&cache[&(kf, a)], &cache[&(kg, b)]);
                    let fd = terms.iter().fold(T::zero(), |acc, (x, y)| acc + (*x - *y));
                    let scale = terms.iter().fold(T::zero(), |acc, (x, y)| acc + x.abs() + y.abs());
                    let exact = poisson_exact(obs(kf, a), obs(kg, b), s, c)?;
                    let denom = exact.abs().max(scale);
                    let dev = (fd - exact).abs();
                    if denom > T::zero() {
                        out.relative = out.relative.max(dev / denom);
                    } else if dev > T::zero() {
                        out.relative = T::infinity();
                    }
                    if kf == kg {
                        out.commuting_abs = out.commuting_abs.max(fd.abs());
                        out.commuting_scaled = out.commuting_scaled.max(fd.abs() / scale.max(T::one()));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Largest relative deviation of the bracket table over `a, b ≤ min(n, 3)`.
pub fn check_poisson_table<T: Real>(s: &RsState<T>, c: &Coupling<T>, h: T) -> Result<T> {
    Ok(poisson_table_deviation(s, c, h)?.relative)
}

/// Environment variable multiplying every tolerance of [`Tolerances`].
pub const TOL_SCALE_ENV: &str = "DUALAX_TOL_SCALE";

/// Named tolerances of the batch checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    values: BTreeMap<String, f64>,
    scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let values = [
            ("commutation_s1", 1e-9),
            ("commutation_s2", 1e-9),
            ("det_identity", 1e-9),
            ("duality_roundtrip", 1e-8),
            ("embedding_residual", 1e-10),
            ("flow_closed_form", 1e-9),
            ("flow_conservation", 1e-9),
            ("hamiltonian_identity", 1e-9),
            ("linearization_curvature", 1e-8),
            ("linearization_drift", 1e-9),
            ("linearization_slope", 1e-8),
            ("poisson_commuting", 1e-7),
            ("poisson_table", 1e-5),
            ("rk4_oracle", 1e-5),
            ("spectrum_exchange", 1e-10),
            ("symplectic_certificate", 1e-4),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { values, scale: 1.0 }
    }
}

impl Tolerances {
    /// Defaults multiplied by `DUALAX_TOL_SCALE` when it is set.
    pub fn from_env() -> Result<Self> {
        let mut t = Self::default();
        if let Ok(raw) = std::env::var(TOL_SCALE_ENV) {
            let scale: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("{TOL_SCALE_ENV}={raw} is not a number")))?;
            t.set_scale(scale)?;
        }
        Ok(t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Effective tolerance, including the global scale.
    pub fn get(&self, name: &str) -> f64 {
        self.values.get(name).copied().unwrap_or(0.0) * self.scale
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) -> Result<()> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance scale {scale} must be positive")));
        }
        self.scale = scale;
        Ok(())
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance {name}={value} must be positive")));
        }
        match self.values.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::InvalidInput(format!("unknown tolerance name {name}"))),
        }
    }

    /// Parses `NAME=VALUE`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("tolerance override {spec} is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("tolerance override {spec} has no numeric value")))?;
        self.set(name.trim(), value)
    }
}

/// Batch configuration of [`run_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n_list: Vec<usize>,
    pub kappa_list: Vec<f64>,
    /// Random states per check and parameter pair.
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Worker threads; `1` runs everything on the calling thread.
    pub jobs: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_list: vec![2, 3, 5],
            kappa_list: vec![0.5, 1.0, 2.0],
            samples: 50,
            seed: 42,
            tolerances: Tolerances::default(),
            jobs: 1,
        }
    }
}

impl VerifyConfig {
    /// States per check for the expensive finite-difference oracles.
    pub fn oracle_samples(&self) -> usize {
        self.samples.div_ceil(10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidInput("particle numbers must be positive".into()));
        }
        if self.kappa_list.is_empty() {
            return Err(Error::InvalidInput("at least one coupling is required".into()));
        }
        for &k in &self.kappa_list {
            Coupling::new(k, 1)?;
        }
        if self.jobs == 0 {
            return Err(Error::InvalidInput("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub n: Vec<usize>,
    pub kappa: Vec<f64>,
    pub samples: usize,
    pub oracle_samples: usize,
    pub tol_scale: f64,
}

/// Global signs of the angle drift observed along the flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSigns {
    /// `σ` in `dq̂/dt = σ·(p̂)ʲ⁻¹` along Sutherland flows.
    pub sutherland_flow: Option<i8>,
    /// `σ` in `dp/dt = σ·e^{2kq}` along Ruijsenaars flows.
    pub rs_flow: Option<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub config: ReportConfig,
    pub checks: Vec<CheckResult>,
    pub drift_signs: DriftSigns,
    pub pass: bool,
}

/// One parameter point of one check family.
#[derive(Debug, Clone, Copy)]
struct Task {
    family: &'static str,
    n: usize,
    kappa: f64,
    samples: usize,
}

impl Task {
    fn name(&self) -> String {
        format!("{}[n={},kappa={}]", self.family, self.n, self.kappa)
    }
}

/// FNV-1a, so per-check seeds do not depend on the standard library's hasher.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Outcome of one sample: the residual and, for the drift checks, an observed sign.
struct Sample {
    residual: f64,
    sign: Option<i8>,
}

impl From<f64> for Sample {
    fn from(residual: f64) -> Self {
        Self { residual, sign: None }
    }
}

const RESAMPLE_ATTEMPTS: usize = 20;
const POISSON_STEP: f64 = 1e-5;
const CERTIFICATE_STEP: f64 = 1e-5;
const FLOW_TIME: f64 = 1.0;
/// Horizon of the conservation and linearization checks; `exp(t L₁²)` loses
/// about `t·spread(L₁)²` digits.
const DRIFT_TIME: f64 = 0.5;
const ORACLE_STEPS: usize = 1000;
const LINEARIZATION_TIMES: [f64; 5] = [0.0, 0.125, 0.25, 0.375, 0.5];

/// Random states for each check family: wide boxes for the algebraic
/// identities, moderate ones for flows and finite differences.
fn sampler_for(family: &str, seed: u64, n: usize, kappa: f64) -> StateSampler {
    let base = match family {
        "commutation_s1" | "commutation_s2" | "det_identity" | "duality_roundtrip" | "embedding_residual"
        | "spectrum_exchange" | "hamiltonian_identity" => SamplerConfig::default(),
        _ => SamplerConfig::moderate(),
    };
    StateSampler::new(seed, base.with_dual_gap(kappa, n))
}

fn run_sample(family: &str, smp: &mut StateSampler, c: &Coupling<f64>) -> Result<Sample> {
    let n = c.n();
    match family {
        "commutation_s1" => Ok(check_commutation_s1(&smp.sutherland(n), c)?.into()),
        "commutation_s2" => Ok(check_commutation_s2(&smp.rs(n), c)?.into()),
        "det_identity" => Ok(check_det_identity(&smp.rs(n), c)?.into()),
        "embedding_residual" => {
            let a = moment_residual(&embed_s1(&smp.sutherland(n), c)?, c);
            let b = moment_residual(&embed_s2(&smp.rs(n), c)?, c);
            Ok(a.max(b).into())
        }
        "duality_roundtrip" => {
            let s = smp.sutherland(n);
            let back = rs_to_suth(&suth_to_rs(&s, c)?.state, c)?.state;
            let r = smp.rs(n);
            let back_r = suth_to_rs(&rs_to_suth(&r, c)?.state, c)?.state;
            Ok(back.distance(&s).max(back_r.distance(&r)).into())
        }
        "spectrum_exchange" => {
            let r = smp.rs(n);
            let values = eigh_desc(&lax_rs(&r, c)?)?.values;
            let q = rs_to_suth(&r, c)?.state.q;
            Ok(values
                .iter()
                .zip(&q)
                .fold(0.0f64, |m, (l, q)| m.max(((2.0 * q).exp() - l).abs() / l))
                .into())
        }
        "hamiltonian_identity" => {
            let s = smp.sutherland(n);
            let h = ham_suth(&s, c)?;
            let a = (h - reduced_hamiltonian(&lax_suth(&s, c)?, HamiltonianId::h(2.min(n as i32)))?).abs();
            let a = if n >= 2 { a / (1.0 + h.abs()) } else { 0.0 };
            let r = smp.rs(n);
            let hr = ham_rs(&r, c)?;
            let b = (hr - ham_rs_particle_form(&r, c)?).abs() / hr.abs();
            Ok(a.max(b).into())
        }
        "poisson_table" => Ok(check_poisson_table(&smp.rs(n), c, POISSON_STEP)?.into()),
        "poisson_commuting" => Ok(poisson_table_deviation(&smp.rs(n), c, POISSON_STEP)?.commuting_scaled.into()),
        "symplectic_certificate" => Ok(symplectic_certificate(&smp.sutherland(n), c, CERTIFICATE_STEP)?.into()),
        "flow_closed_form" => {
            let s = smp.sutherland(n);
            let j = 2.min(n as i32);
            let f = flow_suth(&s, c, j, FLOW_TIME)?;
            let a = crate::model::max_diff(&f.q, &suth_positions_closed_form(&s, c, j, FLOW_TIME)?);
            let r = smp.rs(n);
            let g = flow_rs(&r, c, 1, FLOW_TIME)?;
            let b = crate::model::max_diff(&g.p_hat, &rs_momenta_closed_form(&r, c, 1, FLOW_TIME)?);
            Ok(a.max(b).into())
        }
        "flow_conservation" => {
            let s = smp.sutherland(n);
            let j = 1 + smp.index(n.min(3)) as i32;
            let x0 = ModelState::Sutherland(s.clone());
            let x1 = ModelState::Sutherland(flow_suth(&s, c, j, DRIFT_TIME)?);
            let r = smp.rs(n);
            let y0 = ModelState::Rs(r.clone());
            let y1 = ModelState::Rs(flow_rs(&r, c, 1, DRIFT_TIME)?);
            let mut worst = 0.0f64;
            for (a, b) in [(x0, x1), (y0, y1)] {
                let h0 = conserved_quantities(&a, c)?;
                let h1 = conserved_quantities(&b, c)?;
                for (u, v) in h0.iter().zip(&h1) {
                    worst = worst.max((u - v).abs() / (1.0 + u.abs()));
                }
            }
            Ok(worst.into())
        }
        "rk4_oracle" => {
            let s = ModelState::Sutherland(smp.sutherland(n));
            let id = HamiltonianId::h(2.min(n as i32));
            let exact = crate::dynamics::flow(&s, c, id, FLOW_TIME)?;
            let a = rk4_oracle(&s, c, id, FLOW_TIME, ORACLE_STEPS)?.distance(&exact);
            let r = ModelState::Rs(smp.rs(n));
            let id = HamiltonianId::h_hat(1);
            let exact = crate::dynamics::flow(&r, c, id, FLOW_TIME)?;
            let b = rk4_oracle(&r, c, id, FLOW_TIME, ORACLE_STEPS)?.distance(&exact);
            Ok(a.max(b).into())
        }
        "linearization_drift" | "linearization_curvature" | "linearization_slope" => {
            linearization_sample(family, smp, c)
        }
        "linearization_drift_rs" | "linearization_curvature_rs" | "linearization_slope_rs" => {
            linearization_sample_rs(family, smp, c)
        }
        other => Err(Error::InvalidInput(format!("unknown check {other}"))),
    }
}

/// Along a Sutherland flow the dual `p̂` stay put and `q̂` move linearly.
fn linearization_sample(family: &str, smp: &mut StateSampler, c: &Coupling<f64>) -> Result<Sample> {
    let n = c.n();
    let s = smp.sutherland(n);
    let j = 1 + smp.index(n.min(3)) as i32;
    let mut duals = Vec::with_capacity(LINEARIZATION_TIMES.len());
    for &t in &LINEARIZATION_TIMES {
        duals.push(suth_to_rs(&flow_suth(&s, c, j, t)?, c)?.state);
    }
    let xs: Vec<&[f64]> = duals.iter().map(|d| d.p_hat.as_slice()).collect();
    let ys: Vec<&[f64]> = duals.iter().map(|d| d.q_hat.as_slice()).collect();
    let rate: Vec<f64> = duals[0].p_hat.iter().map(|p| p.powi(j - 1)).collect();
    Ok(affine_statistics(family.trim_end_matches("_rs"), &xs, &ys, &rate))
}

/// Along a Ruijsenaars flow the dual `q` stay put and `p` move linearly.
fn linearization_sample_rs(family: &str, smp: &mut StateSampler, c: &Coupling<f64>) -> Result<Sample> {
    let n = c.n();
    let r = smp.rs(n);
    // L₂³ flows lose about 3·log₁₀ cond(L₂) digits, beyond the tolerances here
    let k = 1 + smp.index(n.min(2)) as i32;
    let mut duals = Vec::with_capacity(LINEARIZATION_TIMES.len());
    for &t in &LINEARIZATION_TIMES {
        duals.push(rs_to_suth(&flow_rs(&r, c, k, t)?, c)?.state);
    }
    let xs: Vec<&[f64]> = duals.iter().map(|d| d.q.as_slice()).collect();
    let ys: Vec<&[f64]> = duals.iter().map(|d| d.p.as_slice()).collect();
    let rate: Vec<f64> = duals[0].q.iter().map(|q| (2.0 * k as f64 * q).exp()).collect();
    Ok(affine_statistics(family.trim_end_matches("_rs"), &xs, &ys, &rate))
}

/// Drift of the constant coordinates, second differences of the moving ones,
/// or deviation of the moving ones' slope from `σ·rate` with `σ = ±1` fitted.
fn affine_statistics(stat: &str, xs: &[&[f64]], ys: &[&[f64]], rate: &[f64]) -> Sample {
    let dt = LINEARIZATION_TIMES[1] - LINEARIZATION_TIMES[0];
    match stat {
        "linearization_drift" => xs
            .iter()
            .map(|x| crate::model::max_diff(x, xs[0]))
            .fold(0.0, f64::max)
            .into(),
        "linearization_curvature" => ys
            .windows(3)
            .flat_map(|w| (0..w[0].len()).map(move |i| (w[2][i] - 2.0 * w[1][i] + w[0][i]).abs()))
            .fold(0.0, f64::max)
            .into(),
        _ => {
            let last = ys.len() - 1;
            let span = dt * last as f64;
            let slope: Vec<f64> = (0..rate.len()).map(|i| (ys[last][i] - ys[0][i]) / span).collect();
            let dot: f64 = slope.iter().zip(rate).map(|(s, r)| s * r).sum();
            let sigma = if dot < 0.0 { -1.0 } else { 1.0 };
            let residual = slope
                .iter()
                .zip(rate)
                .fold(0.0f64, |m, (s, r)| m.max((s - sigma * r).abs() / (1.0 + r.abs())));
            Sample {
                residual,
                sign: Some(sigma as i8),
            }
        }
    }
}

const FAMILIES: [&str; 19] = [
    "commutation_s1",
    "commutation_s2",
    "det_identity",
    "duality_roundtrip",
    "embedding_residual",
    "flow_closed_form",
    "flow_conservation",
    "hamiltonian_identity",
    "linearization_curvature",
    "linearization_curvature_rs",
    "linearization_drift",
    "linearization_drift_rs",
    "linearization_slope",
    "linearization_slope_rs",
    "poisson_commuting",
    "poisson_table",
    "rk4_oracle",
    "spectrum_exchange",
    "symplectic_certificate",
];

fn tolerance_key(family: &str) -> &str {
    family.trim_end_matches("_rs")
}

/// Largest `n` at which the finite-difference RK4 oracle is run.
pub const ORACLE_MAX_N: usize = 4;

struct TaskOutcome {
    result: CheckResult,
    signs: Vec<(&'static str, i8)>,
}

fn run_task(task: &Task, config: &VerifyConfig) -> TaskOutcome {
    let name = task.name();
    let tol = config.tolerances.get(tolerance_key(task.family));
    let seed = config.seed ^ stable_hash(&name);
    let mut smp = sampler_for(task.family, seed, task.n, task.kappa);
    let mut worst = 0.0f64;
    let mut signs = Vec::new();
    let c = Coupling::new(task.kappa, task.n);
    for _ in 0..task.samples {
        let outcome = match &c {
            Ok(c) => {
                let mut attempt = run_sample(task.family, &mut smp, c);
                for _ in 1..RESAMPLE_ATTEMPTS {
                    match &attempt {
                        Err(e) if e.is_degeneracy() => attempt = run_sample(task.family, &mut smp, c),
                        _ => break,
                    }
                }
                attempt
            }
            Err(e) => Err(e.clone()),
        };
        let residual = match outcome {
            Ok(s) => {
                if let Some(sign) = s.sign {
                    let key = if task.family.ends_with("_rs") { "rs" } else { "sutherland" };
                    signs.push((key, sign));
                }
                s.residual
            }
            Err(_) => f64::INFINITY,
        };
        worst = if residual.is_nan() { f64::INFINITY } else { worst.max(residual) };
    }
    TaskOutcome {
        result: CheckResult {
            name,
            samples: task.samples,
            max_residual: worst,
            tol,
            pass: worst <= tol,
        },
        signs,
    }
}

fn tasks(config: &VerifyConfig) -> Vec<Task> {
    let mut out = Vec::new();
    if config.samples == 0 {
        return out;
    }
    for &family in FAMILIES.iter() {
        let oracle = matches!(family, "rk4_oracle" | "symplectic_certificate");
        for &n in &config.n_list {
            if family == "rk4_oracle" && n > ORACLE_MAX_N {
                continue;
            }
            for &kappa in &config.kappa_list {
                out.push(Task {
                    family,
                    n,
                    kappa,
                    samples: if oracle { config.oracle_samples() } else { config.samples },
                });
            }
        }
    }
    out
}

/// Runs every check family over the configured grid.
///
/// Each check draws from its own stream seeded by the global seed and the
/// check name, so the report does not depend on scheduling.
pub fn run_all(config: &VerifyConfig) -> Result<VerifyReport> {
    config.validate()?;
    let tasks = tasks(config);
    let outcomes: Vec<TaskOutcome> = if config.jobs <= 1 {
        tasks.iter().map(|t| run_task(t, config)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(|t| run_task(t, config)).collect())
    };
    let mut signs: BTreeMap<&str, Vec<i8>> = BTreeMap::new();
    let mut checks = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for (k, s) in o.signs {
            signs.entry(k).or_default().push(s);
        }
        checks.push(o.result);
    }
    let common = |v: Option<&Vec<i8>>| -> Option<i8> {
        let v = v?;
        let first = *v.first()?;
        v.iter().all(|&s| s == first).then_some(first)
    };
    let drift_signs = DriftSigns {
        sutherland_flow: common(signs.get("sutherland")),
        rs_flow: common(signs.get("rs")),
    };
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let signs_consistent = [("sutherland", drift_signs.sutherland_flow), ("rs", drift_signs.rs_flow)]
        .iter()
        .all(|(k, s)| s.is_some() || !signs.contains_key(k));
    let pass = checks.iter().all(|c| c.pass) && signs_consistent;
    Ok(VerifyReport {
        seed: config.seed,
        config: ReportConfig {
            n: config.n_list.clone(),
            kappa: config.kappa_list.clone(),
            samples: config.samples,
            oracle_samples: if config.samples == 0 { 0 } else { config.oracle_samples() },
            tol_scale: config.tolerances.scale(),
        },
        checks,
        drift_signs,
        pass,
    })
}
