//! Compactly supported Gaussian bumps used as test functions and initial
//! data. A bump is exp(−s·r²) shifted down to vanish at its cutoff radius
//! and clamped to zero outside, so the lattice trace on the box boundary is
//! exactly zero whenever the cutoff ball fits inside the box.

use crate::grid::{Grid, ScalarField};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct GaussBump {
    pub center: Vec<f64>,
    /// Exponent s in exp(−s r²).
    pub sharpness: f64,
    /// Support radius; the bump vanishes at and beyond it.
    pub cutoff: f64,
    pub amplitude: f64,
}

impl GaussBump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2 = crate::util::dist2(x, &self.center);
        if r2 >= self.cutoff * self.cutoff {
            return 0.0;
        }
        let tail = (-self.sharpness * self.cutoff * self.cutoff).exp();
        self.amplitude * ((-self.sharpness * r2).exp() - tail)
    }

    pub fn field(&self, grid: Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x)).expect("bump values are finite")
    }
}

/// Deterministic suite of random bumps whose supports stay inside the box
/// of the given radius around `center`, with truncation tails below 1e−10.
pub fn random_bumps(
    center: &[f64],
    box_radius: f64,
    count: usize,
    seed: u64,
) -> Vec<GaussBump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = center.len();
    (0..count)
        .map(|_| {
            let spread = 0.35 * box_radius;
            let c: Vec<f64> = center
                .iter()
                .map(|&m| m + rng.gen_range(-spread..spread))
                .collect();
            let max_off = c
                .iter()
                .zip(center)
                .map(|(a, m)| (a - m).abs())
                .fold(0.0_f64, f64::max);
            let cutoff = 0.9 * (box_radius - max_off);
            let sharpness = rng.gen_range(1.0..8.0_f64).max(24.0 / (cutoff * cutoff));
            let _ = dim;
            GaussBump {
                center: c,
                sharpness,
                cutoff,
                amplitude: rng.gen_range(0.5..2.0),
            }
        })
        .collect()
}
