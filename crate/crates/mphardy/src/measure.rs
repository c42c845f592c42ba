//! The Gaussian invariant measure dμ = C·exp(−½ Σᵢ⟨A(x−aᵢ), x−aᵢ⟩) dx:
//! exact normalization, density and drift, deterministic sampling, weighted
//! integrals (including integrands with inverse-square singularities at the
//! poles), weight-equivalence bounds, and radial moment estimates.

use crate::config::{Derived, ProblemConfig};
use crate::error::{Error, Result};
use crate::grid::{quadrature_of, Grid, ScalarField};
use crate::special::{gamma, sphere_surface_area};
use crate::util::{dist, dist2, sharded_map};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Distance (in grid spacings) within which a pole explains a non-finite
/// integrand sample.
pub const POLE_SKIP_SPACINGS: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct WeightedGaussianMeasure {
    cfg: ProblemConfig,
    derived: Derived,
    normalization: f64,
}

impl WeightedGaussianMeasure {
    pub fn new(cfg: &ProblemConfig) -> Result<Self> {
        let derived = cfg.ensure_valid()?;
        let n = cfg.pole_count() as f64;
        let dim = cfg.dim as f64;
        // Completing the square: ∫ e^{−½Σ⟨A(x−aᵢ),x−aᵢ⟩} dx
        //   = e^{−D/2} (2π/n)^{N/2} det(A)^{−1/2}.
        let normalization =
            (derived.offset_d / 2.0).exp() * (n / (2.0 * PI)).powf(dim / 2.0) * derived.det_a.sqrt();
        Ok(WeightedGaussianMeasure {
            cfg: cfg.clone(),
            derived,
            normalization,
        })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.cfg
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }

    /// Exact normalization constant C.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// log of the unnormalized weight: −½ Σᵢ⟨A(x−aᵢ), x−aᵢ⟩.
    pub fn log_unnorm(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut diff = vec![0.0; self.cfg.dim];
        for p in &self.cfg.poles {
            for d in 0..self.cfg.dim {
                diff[d] = x[d] - p[d];
            }
            acc += self.cfg.matrix_a.quad_form(&diff);
        }
        -0.5 * acc
    }

    pub fn unnorm_weight(&self, x: &[f64]) -> f64 {
        self.log_unnorm(x).exp()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.normalization * self.unnorm_weight(x)
    }

    /// Density through the reduced form C·e^{−D/2}·e^{−(n/2)⟨A(x−ā),x−ā⟩};
    /// must agree with [`Self::density`] to rounding.
    pub fn density_via_barycenter(&self, x: &[f64]) -> f64 {
        let n = self.cfg.pole_count() as f64;
        let diff: Vec<f64> = x
            .iter()
            .zip(&self.derived.barycenter)
            .map(|(a, b)| a - b)
            .collect();
        self.normalization
            * (-0.5 * self.derived.offset_d).exp()
            * (-0.5 * n * self.cfg.matrix_a.quad_form(&diff)).exp()
    }

    /// ∇μ/μ = −Σⱼ A(x−aⱼ).
    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        let dim = self.cfg.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut diff = vec![0.0; dim];
        let mut av = vec![0.0; dim];
        for p in &self.cfg.poles {
            for d in 0..dim {
                diff[d] = x[d] - p[d];
            }
            self.cfg.matrix_a.matvec(&diff, &mut av);
            for d in 0..dim {
                out[d] -= av[d];
            }
        }
    }

    /// ¼|∇μ/μ|² − ½Δμ/μ = (n/2)Tr A − ¼|Σⱼ A(x−aⱼ)|².
    pub fn drift_gap(&self, x: &[f64]) -> f64 {
        let mut b = vec![0.0; self.cfg.dim];
        self.drift(x, &mut b);
        self.drift_gap_bound() - 0.25 * crate::util::dot(&b, &b)
    }

    /// The uniform upper bound (n/2)Tr A for the drift gap.
    pub fn drift_gap_bound(&self) -> f64 {
        0.5 * self.cfg.pole_count() as f64 * self.derived.trace_a
    }

    /// Relative disagreement between the closed-form C and the reciprocal of
    /// the quadrature of the unnormalized weight.
    pub fn normalization_rel_error(&self, grid: &Grid) -> f64 {
        let q = quadrature_of(grid, |x| self.unnorm_weight(x));
        (self.normalization - 1.0 / q).abs() / self.normalization
    }

    pub fn check_normalization(&self, grid: &Grid, tol: f64) -> Result<f64> {
        let rel = self.normalization_rel_error(grid);
        if rel > tol {
            return Err(Error::Consistency(format!(
                "closed-form normalization disagrees with quadrature: rel error {rel:.3e} > {tol:.1e}"
            )));
        }
        Ok(rel)
    }

    /// i.i.d. draws from the Gaussian with mean ā and covariance (nA)⁻¹;
    /// deterministic for a given seed. Returned flat, `count × dim`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::Input("sample count must be at least 1".into()));
        }
        let n = self.cfg.pole_count() as f64;
        let factor = self.cfg.matrix_a.precision_sample_factor(n)?;
        let dim = self.cfg.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count * dim);
        let mut z = vec![0.0; dim];
        for _ in 0..count {
            for zd in z.iter_mut() {
                *zd = StandardNormal.sample(&mut rng);
            }
            for d in 0..dim {
                let mut x = self.derived.barycenter[d];
                for (k, zk) in z.iter().enumerate() {
                    x += factor[d][k] * zk;
                }
                out.push(x);
            }
        }
        Ok(out)
    }

    /// μ-weighted trapezoid integral of a node-sampled field.
    pub fn integral_mu_field(&self, field: &ScalarField) -> f64 {
        let grid = &field.grid;
        let mut acc = 0.0;
        grid.for_each(|flat, idx, x| {
            acc += grid.quad_weight(idx) * field.values[flat] * self.density(x);
        });
        acc
    }

    /// μ-weighted trapezoid integral of a smooth function.
    pub fn integral_mu(&self, grid: &Grid, f: impl Fn(&[f64]) -> f64) -> f64 {
        quadrature_of(grid, |x| f(x) * self.density(x))
    }

    /// ∫ f dμ by the requested method. Non-finite samples away from every
    /// pole are an input error; non-finite samples next to a pole are
    /// skipped (use [`Self::integral_mu_singular`] when the singular
    /// structure is known).
    pub fn weighted_integral(
        &self,
        grid: &Grid,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        method: &IntegralMethod,
    ) -> Result<f64> {
        match method {
            IntegralMethod::TensorQuadrature => {
                let eps = POLE_SKIP_SPACINGS * grid.spacing();
                let mut acc = 0.0;
                let mut bad: Option<Vec<f64>> = None;
                grid.for_each(|_, idx, x| {
                    let v = f(x);
                    if v.is_finite() {
                        acc += grid.quad_weight(idx) * v * self.density(x);
                    } else if self.cfg.poles.iter().all(|p| dist(x, p) > eps) && bad.is_none() {
                        bad = Some(x.to_vec());
                    }
                });
                if let Some(x) = bad {
                    return Err(Error::Input(format!(
                        "integrand is not finite at non-pole node {x:?}"
                    )));
                }
                Ok(acc)
            }
            IntegralMethod::MonteCarlo { samples, seed } => {
                Ok(self.monte_carlo_integral(f, *samples, *seed)?.0)
            }
        }
    }

    /// Monte Carlo mean of f over μ with a crude standard error from 64
    /// fixed shards. The shard structure is independent of the worker
    /// thread count, so results are reproducible.
    pub fn monte_carlo_integral(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        samples: u64,
        seed: u64,
    ) -> Result<(f64, f64)> {
        if samples == 0 {
            return Err(Error::Input("need at least one sample".into()));
        }
        const SHARDS: u64 = 64;
        let per = samples.div_ceil(SHARDS);
        let dim = self.cfg.dim;
        let this: &Self = self;
        let shard_means: Vec<(f64, u64)> = sharded_map(SHARDS as usize, |s| {
            let shard_seed = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(s as u64 + 1));
            let pts = this
                .sample(per as usize, shard_seed)
                .expect("validated config samples");
            let mut acc = 0.0;
            for i in 0..per as usize {
                acc += f(&pts[i * dim..(i + 1) * dim]);
            }
            (acc / per as f64, per)
        });
        let total: u64 = shard_means.iter().map(|s| s.1).sum();
        let mean = shard_means
            .iter()
            .map(|(m, c)| m * *c as f64)
            .sum::<f64>()
            / total as f64;
        let var = shard_means
            .iter()
            .map(|(m, _)| (m - mean) * (m - mean))
            .sum::<f64>()
            / (SHARDS as f64 - 1.0);
        Ok((mean, (var / SHARDS as f64).sqrt()))
    }

    /// μ-weighted integral of Πₖ |x−a_{pₖ}|^{2βₖ} · g(x), regularized by
    /// local singularity subtraction at each pole with a negative exponent.
    pub fn integral_mu_singular(
        &self,
        grid: &Grid,
        factors: &[(usize, f64)],
        g: &dyn Fn(&[f64]) -> f64,
    ) -> Result<f64> {
        let poles: Vec<(&[f64], f64)> = factors
            .iter()
            .map(|&(i, tb)| (self.cfg.poles[i].as_slice(), tb))
            .collect();
        singular_quadrature(grid, &poles, &|x| g(x) * self.density(x))
    }

    /// μ-weighted singular integral Πₖ|x−aₖ|^{2βₖ}·φ²(x) dμ for a node
    /// field φ: the subtracted local models take φ at the pole centers by
    /// multilinear interpolation.
    pub fn integral_mu_singular_sq_field(
        &self,
        field: &ScalarField,
        factors: &[(usize, f64)],
    ) -> Result<f64> {
        let grid = field.grid.clone();
        let dim = grid.dim();
        let sigma = sphere_surface_area(dim)?;
        let mut terms = Vec::new();
        for &(k, tb) in factors {
            if tb >= 0.0 {
                continue;
            }
            if tb + dim as f64 <= 0.0 {
                return Err(Error::DivergentMoment(format!(
                    "exponent 2β = {tb} is not integrable in dimension {dim}"
                )));
            }
            let pole = &self.cfg.poles[k];
            let blend = match pole_placement(&grid, pole) {
                PolePlacement::Outside => continue,
                PolePlacement::TooCloseToBoundary => {
                    return Err(Error::Resolution(
                        "singular pole too close to the box boundary for the local model".into(),
                    ))
                }
                PolePlacement::Inside { blend } => blend,
            };
            let phi_at = field.interp(pole);
            let mut value = phi_at * phi_at * self.density(pole);
            for &(l, tbl) in factors {
                if l != k {
                    value *= dist2(pole, &self.cfg.poles[l]).powf(tbl / 2.0);
                }
            }
            terms.push((k, tb, value, blend));
        }
        let mut acc = 0.0;
        grid.for_each(|flat, idx, x| {
            let mut v = field.values[flat];
            v *= v;
            v *= self.density(x);
            for &(k, tb) in factors {
                let r2 = dist2(x, &self.cfg.poles[k]);
                if r2 == 0.0 {
                    return;
                }
                v *= r2.powf(tb / 2.0);
            }
            if !v.is_finite() {
                return;
            }
            for &(k, tb, value, blend) in &terms {
                let r2 = dist2(x, &self.cfg.poles[k]);
                let window = (-r2 / (blend * blend)).exp();
                if window > 0.0 {
                    v -= value * window * r2.powf(tb / 2.0);
                }
            }
            acc += grid.quad_weight(idx) * v;
        });
        for &(_, tb, value, blend) in &terms {
            let half = dim as f64 / 2.0;
            acc += value * sigma * blend.powf(tb + dim as f64) * gamma(tb / 2.0 + half)? / 2.0;
        }
        Ok(acc)
    }

    pub fn equivalence_bounds(&self, pole: usize) -> EquivalenceBounds {
        let n = self.cfg.pole_count() as f64;
        let a1 = self.derived.alpha_min;
        let a2 = self.derived.alpha_max;
        let gap_sq: f64 = self
            .cfg
            .poles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != pole)
            .map(|(_, q)| dist2(&self.cfg.poles[pole], q))
            .sum();
        EquivalenceBounds {
            pole,
            alpha_min: a1,
            alpha_max: a2,
            alpha_tilde_min: a1 * (n + 1.0) / 2.0,
            alpha_tilde_max: a2 * (2.0 * n - 1.0),
            c1: (-a2 * gap_sq).exp(),
            c2: (0.5 * a1 * gap_sq).exp(),
            gap_sq,
        }
    }

    /// Checks, in log space, that the multi-pole weight is pinched between
    /// the two single-pole Gaussians at every given point; returns the worst
    /// log-margin on each side.
    pub fn equivalence_check(&self, pole: usize, points: &[Vec<f64>]) -> Result<EquivalenceReport> {
        let b = self.equivalence_bounds(pole);
        let mut worst_lower = f64::INFINITY;
        let mut worst_upper = f64::INFINITY;
        for x in points {
            let mid = self.log_unnorm(x);
            let r2 = dist2(x, &self.cfg.poles[pole]);
            let lo = b.c1.ln() - 0.5 * b.alpha_tilde_max * r2;
            let hi = b.c2.ln() - 0.5 * b.alpha_tilde_min * r2;
            worst_lower = worst_lower.min(mid - lo);
            worst_upper = worst_upper.min(hi - mid);
        }
        let report = EquivalenceReport {
            bounds: b,
            worst_lower_margin: worst_lower,
            worst_upper_margin: worst_upper,
            points: points.len(),
        };
        if worst_lower < -1e-12 || worst_upper < -1e-12 {
            return Err(Error::InequalityViolation(format!(
                "weight equivalence violated: margins {:.3e} / {:.3e}",
                worst_lower, worst_upper
            )));
        }
        Ok(report)
    }

    /// The pole-sum estimate −Σ_{j≠i}|aᵢ−aⱼ|² + ((n+1)/2)|x−aᵢ|²
    /// ≤ Σⱼ|x−aⱼ|² ≤ (2n−1)|x−aᵢ|² + 2Σ_{j≠i}|aᵢ−aⱼ|².
    pub fn appendix_check(&self, pole: usize, x: &[f64]) -> Result<AppendixReport> {
        let n = self.cfg.pole_count();
        if n < 2 {
            return Err(Error::Geometry("pole-sum estimate needs n ≥ 2".into()));
        }
        let gap_sq: f64 = self
            .cfg
            .poles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != pole)
            .map(|(_, q)| dist2(&self.cfg.poles[pole], q))
            .sum();
        let ri2 = dist2(x, &self.cfg.poles[pole]);
        let mid: f64 = self.cfg.poles.iter().map(|p| dist2(x, p)).sum();
        let lower = -gap_sq + (n as f64 + 1.0) / 2.0 * ri2;
        let upper = (2.0 * n as f64 - 1.0) * ri2 + 2.0 * gap_sq;
        let scale = 1.0 + mid.abs() + gap_sq;
        if mid < lower - 1e-12 * scale || mid > upper + 1e-12 * scale {
            return Err(Error::InequalityViolation(format!(
                "pole-sum estimate violated at {x:?}: {lower} ≤ {mid} ≤ {upper}"
            )));
        }
        Ok(AppendixReport { lower, mid, upper })
    }

    /// Unnormalized moment I(β) = ∫|x−aᵢ|^{2β} e^{−½Σⱼ⟨A(x−aⱼ),x−aⱼ⟩} dx.
    /// Subtracting the first-order local model of the weight keeps the
    /// lattice remainder O(h²) even for β near −N/2.
    pub fn moment_integral(&self, beta: f64, pole: usize, grid: &Grid) -> Result<f64> {
        if beta + self.cfg.dim as f64 / 2.0 <= 0.0 {
            return Err(Error::DivergentMoment(format!(
                "moment diverges: β = {beta} with N = {}",
                self.cfg.dim
            )));
        }
        let p = self.cfg.poles[pole].as_slice();
        let blend = match pole_placement(grid, p) {
            PolePlacement::Inside { blend } => blend,
            _ => {
                return Err(Error::Resolution(
                    "the moment grid must contain the pole well inside the box".into(),
                ))
            }
        };
        let w_at = self.unnorm_weight(p);
        let mut grad = vec![0.0; self.cfg.dim];
        self.drift(p, &mut grad);
        grad.iter_mut().for_each(|g| *g *= w_at); // ∇W = W·(∇μ/μ)
        let term = SubtractionTerm {
            pole: p,
            two_beta: 2.0 * beta,
            value: w_at,
            grad: Some(grad),
            blend,
        };
        subtracted_quadrature(
            grid,
            &|x| dist2(x, p).powf(beta) * self.unnorm_weight(x),
            &[term],
        )
    }

    /// Moment value with its closed-form radial bracket.
    pub fn moment_bounds(&self, beta: f64, pole: usize, grid: &Grid) -> Result<MomentReport> {
        let dim = self.cfg.dim as f64;
        let value = self.moment_integral(beta, pole, grid)?;
        let b = self.equivalence_bounds(pole);
        let sigma_n = sphere_surface_area(self.cfg.dim)?;
        let gamma_term = gamma(beta + dim / 2.0)?;
        let lower = b.c1
            * 2.0f64.powf(beta + dim / 2.0 - 1.0)
            * b.alpha_tilde_max.powf(-beta - dim / 2.0)
            * sigma_n
            * gamma_term;
        let upper = b.c2
            * 2.0f64.powf(2.0 * beta + dim - 1.0)
            * b.alpha_tilde_min.powf(-beta - dim / 2.0)
            * sigma_n
            * gamma_term;
        let report = MomentReport {
            beta,
            pole,
            value,
            lower,
            upper,
            sigma_n,
        };
        // Quadrature slack: the bracket is wide, so a small relative margin
        // only guards against implementation errors.
        let slack = 1e-6 * upper.abs().max(value.abs());
        if value < lower - slack || value > upper + slack {
            return Err(Error::InequalityViolation(format!(
                "moment bracket violated: {lower:.6e} ≤ {value:.6e} ≤ {upper:.6e} (β = {beta})"
            )));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone)]
pub enum IntegralMethod {
    TensorQuadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct EquivalenceBounds {
    pub pole: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// α₁(n+1)/2.
    pub alpha_tilde_min: f64,
    /// α₂(2n−1).
    pub alpha_tilde_max: f64,
    /// e^{−α₂ Σ_{j≠i}|aᵢ−aⱼ|²} ≤ 1.
    pub c1: f64,
    /// e^{(α₁/2) Σ_{j≠i}|aᵢ−aⱼ|²} ≥ 1.
    pub c2: f64,
    pub gap_sq: f64,
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub bounds: EquivalenceBounds,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AppendixReport {
    pub lower: f64,
    pub mid: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct MomentReport {
    pub beta: f64,
    pub pole: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub sigma_n: f64,
}

/// Radial Gaussian moment ∫|x|^{2β} e^{−|x|²/2} dx = σ_N 2^{β+N/2−1} Γ(β+N/2).
pub fn gamma_moment(beta: f64, dim: usize) -> Result<f64> {
    let half = dim as f64 / 2.0;
    if beta + half <= 0.0 {
        return Err(Error::DivergentMoment(format!(
            "radial moment diverges: β = {beta}, N = {dim}"
        )));
    }
    Ok(sphere_surface_area(dim)? * 2.0f64.powf(beta + half - 1.0) * gamma(beta + half)?)
}

/// Independent radial-quadrature route for the same moment:
/// σ_N ∫₀^∞ r^{2β+N−1} e^{−r²/2} dr with an analytic head for the
/// (integrable) singular part near r = 0.
pub fn radial_moment_quadrature(beta: f64, dim: usize) -> Result<f64> {
    let p = 2.0 * beta + dim as f64 - 1.0;
    if p <= -1.0 {
        return Err(Error::DivergentMoment(format!(
            "radial moment diverges: β = {beta}, N = {dim}"
        )));
    }
    let sigma = sphere_surface_area(dim)?;
    let delta: f64 = 1e-3;
    // ∫₀^δ r^p e^{−r²/2} dr ≈ δ^{p+1}/(p+1) − δ^{p+3}/(2(p+3)) + δ^{p+5}/(8(p+5)).
    let head = delta.powf(p + 1.0) / (p + 1.0) - delta.powf(p + 3.0) / (2.0 * (p + 3.0))
        + delta.powf(p + 5.0) / (8.0 * (p + 5.0));
    let upper = 15.0;
    let steps = 600_000usize;
    let h = (upper - delta) / steps as f64;
    let f = |r: f64| r.powf(p) * (-0.5 * r * r).exp();
    let mut tail = 0.5 * (f(delta) + f(upper));
    for i in 1..steps {
        tail += f(delta + i as f64 * h);
    }
    tail *= h;
    Ok(sigma * (head + tail))
}

/// One subtraction term per singular pole: the local model
/// [value + grad·(x−a)]·exp(−|x−a|²/s²)·|x−a|^{2β} whose full-space integral
/// is known in closed form (the gradient part integrates to zero by parity).
pub(crate) struct SubtractionTerm<'a> {
    pub pole: &'a [f64],
    pub two_beta: f64,
    /// Value of the smooth cofactor at the pole.
    pub value: f64,
    /// Gradient of the smooth cofactor at the pole, when available; the
    /// second-order subtraction is needed for exponents below −(N−1).
    pub grad: Option<Vec<f64>>,
    /// Blend radius s of the Gaussian window.
    pub blend: f64,
}

/// Placement of a singular point relative to the integration box: outside
/// poles need no local model, poles hugging the boundary cannot carry one,
/// and interior poles get a blend radius of a third of the boundary margin
/// (so the window's tail outside the box is negligible).
pub(crate) enum PolePlacement {
    Outside,
    TooCloseToBoundary,
    Inside { blend: f64 },
}

pub(crate) fn pole_placement(grid: &Grid, pole: &[f64]) -> PolePlacement {
    let mut margin = f64::INFINITY;
    for d in 0..grid.dim() {
        margin = margin.min(grid.radius() - (pole[d] - grid.center()[d]).abs());
    }
    if margin <= 0.0 {
        PolePlacement::Outside
    } else if margin < 4.0 * grid.spacing() {
        PolePlacement::TooCloseToBoundary
    } else {
        PolePlacement::Inside { blend: margin / 3.0 }
    }
}

/// Quadrature of an integrand with inverse-power singularities by local
/// singularity subtraction: the lattice sums F(x) − Σₖ Tₖ(x) (regular up to
/// an integrable remainder) and each model term is integrated analytically,
/// ∫ e^{−r²/s²} r^{2β} dx = σ_N s^{2β+N} Γ(β+N/2)/2.
pub(crate) fn subtracted_quadrature(
    grid: &Grid,
    full: &dyn Fn(&[f64]) -> f64,
    terms: &[SubtractionTerm],
) -> Result<f64> {
    let dim = grid.dim();
    let sigma = sphere_surface_area(dim)?;
    for t in terms {
        if t.two_beta + dim as f64 <= 0.0 {
            return Err(Error::DivergentMoment(format!(
                "exponent 2β = {} is not integrable in dimension {dim}",
                t.two_beta
            )));
        }
    }
    let mut acc = 0.0;
    grid.for_each(|_, idx, x| {
        let mut v = full(x);
        if !v.is_finite() {
            // A node sitting exactly on a pole: the subtracted integrand has
            // an integrable limit; dropping the node costs O(h^{2β+2+N}).
            return;
        }
        for t in terms {
            let r2 = dist2(x, t.pole);
            if r2 == 0.0 {
                return;
            }
            let window = (-r2 / (t.blend * t.blend)).exp();
            if window > 0.0 {
                let mut local = t.value;
                if let Some(g) = &t.grad {
                    for d in 0..dim {
                        local += g[d] * (x[d] - t.pole[d]);
                    }
                }
                v -= local * window * r2.powf(t.two_beta / 2.0);
            }
        }
        acc += grid.quad_weight(idx) * v;
    });
    for t in terms {
        let half = dim as f64 / 2.0;
        acc += t.value * sigma * t.blend.powf(t.two_beta + dim as f64)
            * gamma(t.two_beta / 2.0 + half)?
            / 2.0;
    }
    Ok(acc)
}

/// Quadrature of Πₖ |x−aₖ|^{2βₖ}·w(x) with value-level subtraction at each
/// singular pole (w and the off-pole power factors form the smooth cofactor).
pub(crate) fn singular_quadrature(
    grid: &Grid,
    factors: &[(&[f64], f64)],
    w: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    let full = |x: &[f64]| {
        let mut v = w(x);
        for (p, tb) in factors {
            v *= dist2(x, p).powf(tb / 2.0);
        }
        v
    };
    let mut terms = Vec::new();
    for (p, tb) in factors {
        if *tb >= 0.0 {
            continue;
        }
        let blend = match pole_placement(grid, p) {
            PolePlacement::Outside => continue,
            PolePlacement::TooCloseToBoundary => {
                return Err(Error::Resolution(
                    "singular pole too close to the box boundary for the local model".into(),
                ))
            }
            PolePlacement::Inside { blend } => blend,
        };
        let mut value = w(p);
        for (q, tbq) in factors {
            if std::ptr::eq(*q, *p) {
                continue;
            }
            value *= dist2(p, q).powf(tbq / 2.0);
        }
        terms.push(SubtractionTerm {
            pole: p,
            two_beta: *tb,
            value,
            grad: None,
            blend,
        });
    }
    subtracted_quadrature(grid, &full, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use crate::config::s1_config;
    use rand::Rng;

    fn s1_measure() -> WeightedGaussianMeasure {
        WeightedGaussianMeasure::new(&s1_config(0.25)).unwrap()
    }

    fn s1_grid(m: usize, r: f64) -> Arc<Grid> {
        Arc::new(Grid::new(vec![0.0; 3], r, m).unwrap())
    }

    #[test]
    fn normalization_s1_closed_form() {
        let m = s1_measure();
        let expect = std::f64::consts::E * PI.powf(-1.5);
        assert!((m.normalization() - expect).abs() / expect < 1e-14);
        assert!((expect - 0.48817).abs() < 1e-5);
    }

    #[test]
    fn normalization_matches_quadrature() {
        let m = s1_measure();
        let rel = m.normalization_rel_error(&s1_grid(96, 6.0));
        assert!(rel < 1e-4, "rel = {rel:.3e}");
        assert!(m.check_normalization(&s1_grid(96, 6.0), 1e-4).is_ok());
    }

    #[test]
    fn normalization_single_pole_standard() {
        let cfg = ProblemConfig {
            poles: vec![vec![0.0; 3]],
            ..s1_config(0.25)
        };
        let m = WeightedGaussianMeasure::new(&cfg).unwrap();
        let expect = (2.0 * PI).powf(-1.5);
        assert!((m.normalization() - expect).abs() / expect < 1e-14);
    }

    #[test]
    fn normalization_single_pole_scaled() {
        let cfg = ProblemConfig {
            poles: vec![vec![0.0; 3]],
            matrix_a: crate::linalg::SymMatrix::diagonal(&[2.0, 2.0, 2.0]),
            ..s1_config(0.25)
        };
        let m = WeightedGaussianMeasure::new(&cfg).unwrap();
        let expect = (2.0 * PI).powf(-1.5) * 8.0f64.sqrt();
        assert!((m.normalization() - expect).abs() / expect < 1e-14);
        assert!((expect - 0.17959).abs() < 1e-5);
    }

    #[test]
    fn density_values_and_symmetry() {
        let m = s1_measure();
        let at0 = m.density(&[0.0, 0.0, 0.0]);
        assert!((at0 - 0.179_587_122_125_166_56).abs() < 1e-12);
        let a = m.density(&[1.0, 0.0, 0.0]);
        let b = m.density(&[-1.0, 0.0, 0.0]);
        assert!((a - b).abs() < 1e-15);
        // Two evaluation routes agree.
        let x = [0.3, -0.7, 0.2];
        assert!((m.density(&x) - m.density_via_barycenter(&x)).abs() < 1e-15);
    }

    #[test]
    fn density_mode_at_barycenter() {
        let m = s1_measure();
        let peak = m.density(&[0.0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let x = [
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            ];
            assert!(m.density(&x) <= peak + 1e-15);
        }
    }

    #[test]
    fn drift_closed_form_and_gap() {
        let m = s1_measure();
        let mut b = vec![0.0; 3];
        m.drift(&[0.0; 3], &mut b);
        assert!(b.iter().all(|v| v.abs() < 1e-15));
        assert!((m.drift_gap(&[0.0; 3]) - 3.0).abs() < 1e-14);
        m.drift(&[1.0, 0.0, 0.0], &mut b);
        assert!((b[0] + 2.0).abs() < 1e-14 && b[1].abs() < 1e-15);
        assert!((m.drift_gap(&[1.0, 0.0, 0.0]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn drift_gap_never_exceeds_bound() {
        let m = s1_measure();
        let bound = m.drift_gap_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = [
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
            ];
            assert!(m.drift_gap(&x) <= bound + 1e-10);
        }
    }

    #[test]
    fn drift_matches_log_density_differences() {
        let m = s1_measure();
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = vec![0.0; 3];
        for _ in 0..100 {
            let x = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            m.drift(&x, &mut b);
            for d in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (m.log_unnorm(&xp) - m.log_unnorm(&xm)) / (2.0 * h);
                assert!((fd - b[d]).abs() < 1e-7, "axis {d}: fd {fd} vs {}", b[d]);
            }
        }
    }

    #[test]
    fn sampling_moments_and_determinism() {
        let m = s1_measure();
        let count = 100_000;
        let pts = m.sample(count, 42).unwrap();
        let again = m.sample(count, 42).unwrap();
        assert_eq!(pts, again);
        let dim = 3;
        let mut mean = [0.0f64; 3];
        for i in 0..count {
            for d in 0..dim {
                mean[d] += pts[i * dim + d];
            }
        }
        mean.iter_mut().for_each(|v| *v /= count as f64);
        // CLT bound: 3σ/√n per axis with σ² = 1/2.
        let bound = 3.0 * (0.5 / count as f64).sqrt() * (3.0f64).sqrt();
        assert!(mean.iter().map(|v| v * v).sum::<f64>().sqrt() < bound);
        let mut cov = [[0.0f64; 3]; 3];
        for i in 0..count {
            for d in 0..dim {
                for e in 0..dim {
                    cov[d][e] += (pts[i * dim + d] - mean[d]) * (pts[i * dim + e] - mean[e]);
                }
            }
        }
        for d in 0..3 {
            for e in 0..3 {
                cov[d][e] /= count as f64 - 1.0;
                let expect = if d == e { 0.5 } else { 0.0 };
                assert!(
                    (cov[d][e] - expect).abs() < 0.01,
                    "cov[{d}][{e}] = {}",
                    cov[d][e]
                );
            }
        }
    }

    #[test]
    fn weighted_integrals_of_smooth_functions() {
        let m = s1_measure();
        let grid = s1_grid(64, 5.0);
        let total = m
            .weighted_integral(&grid, &|_| 1.0, &IntegralMethod::TensorQuadrature)
            .unwrap();
        assert!((total - 1.0).abs() < 1e-4, "total = {total}");
        let second = m
            .weighted_integral(
                &grid,
                &|x| x.iter().map(|v| v * v).sum::<f64>(),
                &IntegralMethod::TensorQuadrature,
            )
            .unwrap();
        assert!((second - 1.5).abs() < 1e-3, "second moment = {second}");
        let (mc, err) = m
            .monte_carlo_integral(&|x| x.iter().map(|v| v * v).sum::<f64>(), 200_000, 9)
            .unwrap();
        assert!((mc - 1.5).abs() < 5.0 * err.max(3e-3), "mc = {mc} ± {err}");
    }

    #[test]
    fn nan_off_pole_is_input_error() {
        let m = s1_measure();
        let grid = s1_grid(16, 4.0);
        let res = m.weighted_integral(
            &grid,
            &|x| if (x[0] - 2.0).abs() < 0.2 { f64::NAN } else { 1.0 },
            &IntegralMethod::TensorQuadrature,
        );
        assert!(matches!(res, Err(Error::Input(_))));
    }

    #[test]
    fn singular_integral_self_converges() {
        let m = s1_measure();
        let coarse = m
            .integral_mu_singular(&s1_grid(32, 4.0), &[(0, -2.0)], &|_| 1.0)
            .unwrap();
        let fine = m
            .integral_mu_singular(&s1_grid(64, 4.0), &[(0, -2.0)], &|_| 1.0)
            .unwrap();
        assert!(fine.is_finite() && fine > 0.0);
        assert!(
            (fine - coarse).abs() / fine < 0.02,
            "coarse {coarse}, fine {fine}"
        );
    }

    #[test]
    fn equivalence_holds_at_random_points() {
        let m = s1_measure();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let rep = m.equivalence_check(0, &pts).unwrap();
        assert!(rep.worst_lower_margin >= 0.0);
        assert!(rep.worst_upper_margin >= 0.0);
        // n = 2, α = 1: ᾶ₁ = 1.5, ᾶ₂ = 3, C₁ = e⁻⁴, C₂ = e².
        assert!((rep.bounds.alpha_tilde_min - 1.5).abs() < 1e-14);
        assert!((rep.bounds.alpha_tilde_max - 3.0).abs() < 1e-14);
        assert!((rep.bounds.c1 - (-4.0f64).exp()).abs() < 1e-14);
        assert!((rep.bounds.c2 - (2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn equivalence_collapses_at_pole_and_single_pole() {
        let m = s1_measure();
        // x = aᵢ: the chain reduces to C₁ ≤ e^{−Σ_{j≠i}|A^{1/2}(aᵢ−aⱼ)|²/2} ≤ C₂.
        let rep = m
            .equivalence_check(0, &[vec![1.0, 0.0, 0.0]])
            .unwrap();
        assert!(rep.worst_lower_margin >= 0.0 && rep.worst_upper_margin >= 0.0);
        let single = WeightedGaussianMeasure::new(&ProblemConfig {
            poles: vec![vec![0.0; 3]],
            ..s1_config(0.25)
        })
        .unwrap();
        let b = single.equivalence_bounds(0);
        assert_eq!(b.c1, 1.0);
        assert_eq!(b.c2, 1.0);
    }

    #[test]
    fn appendix_hand_values() {
        let m = s1_measure();
        // x = a₁: −4 ≤ 4 ≤ 8.
        let r = m.appendix_check(0, &[1.0, 0.0, 0.0]).unwrap();
        assert!((r.lower + 4.0).abs() < 1e-14);
        assert!((r.mid - 4.0).abs() < 1e-14);
        assert!((r.upper - 8.0).abs() < 1e-14);
        // x = 0: −2.5 ≤ 2 ≤ 11.
        let r = m.appendix_check(0, &[0.0, 0.0, 0.0]).unwrap();
        assert!((r.lower + 2.5).abs() < 1e-14);
        assert!((r.mid - 2.0).abs() < 1e-14);
        assert!((r.upper - 11.0).abs() < 1e-14);
    }

    #[test]
    fn appendix_random_pole_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5usize);
            let poles: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let cfg = ProblemConfig {
                poles,
                ..s1_config(0.25)
            };
            if cfg.ensure_valid().is_err() {
                continue;
            }
            let m = WeightedGaussianMeasure::new(&cfg).unwrap();
            for _ in 0..500 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
                let i = rng.gen_range(0..n);
                m.appendix_check(i, &x).unwrap();
            }
        }
    }

    #[test]
    fn gamma_moment_known_values() {
        let g0 = gamma_moment(0.0, 3).unwrap();
        let expect = (2.0 * PI).powf(1.5);
        assert!((g0 - expect).abs() / expect < 1e-13);
        let g1 = gamma_moment(1.0, 3).unwrap();
        assert!((g1 - 3.0 * expect).abs() / (3.0 * expect) < 1e-13);
        assert!((g1 - 47.2488).abs() < 1e-3);
        assert!(gamma_moment(-1.5, 3).is_err());
    }

    #[test]
    fn gamma_moment_matches_radial_quadrature() {
        for &dim in &[3usize, 4, 5] {
            for &beta in &[0.0, 0.5, 1.0, 2.0] {
                let closed = gamma_moment(beta, dim).unwrap();
                let quad = radial_moment_quadrature(beta, dim).unwrap();
                let rel = (closed - quad).abs() / closed;
                assert!(rel < 1e-6, "β={beta} N={dim}: rel={rel:.2e}");
            }
        }
    }

    #[test]
    fn moment_bracket_holds() {
        let m = s1_measure();
        let grid = s1_grid(64, 5.0);
        let rep = m.moment_bounds(-0.4, 0, &grid).unwrap();
        assert!(rep.lower <= rep.value && rep.value <= rep.upper);
        assert!(rep.value > 0.0);
        // β must stay above −N/2.
        assert!(m.moment_bounds(-1.5, 0, &grid).is_err());
    }
}
