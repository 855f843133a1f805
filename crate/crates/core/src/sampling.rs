//! Seeded random generation of chamber states and gauge transformations.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{polar_right, CMatrix};
use crate::model::{RsState, SutherlandState};
use crate::reduction::KElement;
use crate::scalar::Real;

/// Box and margins for random states.
///
/// Chamber coordinates are drawn uniformly from the subset of
/// `[−half_width, half_width]ⁿ` whose consecutive gaps are at least `min_gap`;
/// conjugate coordinates are uniform in `[−momentum_half_width, momentum_half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub half_width: f64,
    pub min_gap: f64,
    pub momentum_half_width: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            half_width: 3.0,
            min_gap: 0.05,
            momentum_half_width: 3.0,
        }
    }
}

impl SamplerConfig {
    /// Well-separated states of moderate size, for checks whose error budget
    /// grows with the magnitude of the Lax matrices (finite differences, flows).
    pub fn moderate() -> Self {
        Self {
            half_width: 2.0,
            min_gap: 0.5,
            momentum_half_width: 1.0,
        }
    }

    /// Widens the chamber gap to `min(|κ|, 0.85·w/(n−1))` for the dual model,
    /// whose Lax matrix loses conditioning when momenta gaps fall below `|κ|`.
    pub fn with_dual_gap(self, kappa: f64, n: usize) -> Self {
        let spread = 0.85 * 2.0 * self.half_width / (n.max(2) - 1) as f64;
        Self {
            min_gap: self.min_gap.max(kappa.abs().min(spread)),
            ..self
        }
    }
}

pub struct StateSampler {
    rng: ChaCha8Rng,
    config: SamplerConfig,
}

impl StateSampler {
    pub fn new(seed: u64, config: SamplerConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
        }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Strictly decreasing vector respecting the configured margins.
    pub fn chamber<T: Real>(&mut self, n: usize) -> Vec<T> {
        let w = 2.0 * self.config.half_width;
        let gaps = self.config.min_gap * (n.saturating_sub(1)) as f64;
        let free = (w - gaps).max(0.0);
        let mut x: Vec<f64> = (0..n).map(|_| self.rng.gen::<f64>() * free).collect();
        x.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        x.iter()
            .enumerate()
            .rev()
            .map(|(i, &xi)| T::lit(xi + i as f64 * self.config.min_gap - self.config.half_width))
            .collect()
    }

    pub fn uniform<T: Real>(&mut self, n: usize, half_width: f64) -> Vec<T> {
        (0..n)
            .map(|_| T::lit(self.rng.gen_range(-half_width..=half_width)))
            .collect()
    }

    pub fn sutherland<T: Real>(&mut self, n: usize) -> SutherlandState<T> {
        let q = self.chamber(n);
        let p = self.uniform(n, self.config.momentum_half_width);
        SutherlandState { q, p }
    }

    pub fn rs<T: Real>(&mut self, n: usize) -> RsState<T> {
        let p_hat = self.chamber(n);
        let q_hat = self.uniform(n, self.config.momentum_half_width);
        RsState { p_hat, q_hat }
    }

    /// Unitary factor of a random complex matrix.
    pub fn unitary<T: Real>(&mut self, n: usize) -> CMatrix<T> {
        loop {
            let m = CMatrix::from_fn(n, |_, _| {
                Complex::new(
                    T::lit(self.rng.gen_range(-1.0..1.0)),
                    T::lit(self.rng.gen_range(-1.0..1.0)),
                )
            });
            if let Ok((_, u)) = polar_right(&m) {
                return u;
            }
        }
    }

    pub fn k_element<T: Real>(&mut self, n: usize) -> KElement<T> {
        KElement {
            eta_l: self.unitary(n),
            eta_r: self.unitary(n),
        }
    }

    pub fn uniform_scalar(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, upper: usize) -> usize {
        self.rng.gen_range(0..upper)
    }
}
