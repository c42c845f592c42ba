//! Hardy functionals: the multipolar inverse-square potential, the weighted
//! inequality reports, bottom-of-the-spectrum estimation on the lattice, and
//! the power-law probe that exhibits divergence above the critical coupling.

use crate::config::ProblemConfig;
use crate::eig::{smallest_eigenpair, EigOptions};
use crate::error::{Error, Result};
use crate::grid::{gradient, Grid, ScalarField};
use crate::measure::WeightedGaussianMeasure;
use crate::operator::{DiscreteOperator, DriftScheme, PotentialMode};
use crate::util::dist2;
use std::sync::Arc;

/// Boundary-trace tolerance (relative to the field maximum) for compactly
/// supported test functions.
pub const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HardyConstants {
    pub coupling: f64,
    pub ims_k: f64,
    pub r0: f64,
    /// Right-hand constant (k+(n+1)c)/r₀² + (n/2)Tr A.
    pub k_const: f64,
    /// Improved right-hand constant (n/2)Tr A valid at coupling c₀/n.
    pub k_improved: f64,
    pub c0: f64,
}

impl HardyConstants {
    pub fn new(cfg: &ProblemConfig) -> Result<Self> {
        let derived = cfg.ensure_valid()?;
        let r0 = derived.r0.ok_or_else(|| {
            Error::Geometry("the multipolar constant needs at least two poles".into())
        })?;
        let n = cfg.pole_count() as f64;
        let k_improved = 0.5 * n * derived.trace_a;
        let k_const = (cfg.ims_k + (n + 1.0) * cfg.coupling) / (r0 * r0) + k_improved;
        if !(k_const.is_finite() && k_const > 0.0) {
            return Err(Error::Input(format!("right-hand constant must be positive, got {k_const}")));
        }
        Ok(HardyConstants {
            coupling: cfg.coupling,
            ims_k: cfg.ims_k,
            r0,
            k_const,
            k_improved,
            c0: derived.c0,
        })
    }
}

/// V(x) = c Σᵢ |x−aᵢ|⁻²; errors when x coincides with a pole.
pub fn potential(x: &[f64], cfg: &ProblemConfig) -> Result<f64> {
    let mut acc = 0.0;
    for (i, p) in cfg.poles.iter().enumerate() {
        let d2 = dist2(x, p);
        if d2 < 1e-28 {
            return Err(Error::Singularity(format!("potential evaluated at pole {i}")));
        }
        acc += 1.0 / d2;
    }
    Ok(cfg.coupling * acc)
}

#[derive(Debug, Clone)]
pub struct HardyReport {
    /// c Σᵢ ∫ φ²/|x−aᵢ|² dμ.
    pub lhs: f64,
    /// ∫ |∇φ|² dμ.
    pub dirichlet: f64,
    /// ∫ φ² dμ.
    pub mass: f64,
    /// Constant multiplying the mass on the right-hand side.
    pub rhs_constant: f64,
    pub rhs: f64,
    /// rhs − lhs; the inequality claims this is nonnegative.
    pub margin: f64,
    pub coupling: f64,
    /// Points per axis of the quadrature grid.
    pub resolution: usize,
}

fn check_test_function(phi: &ScalarField) -> Result<()> {
    let peak = phi.max_abs();
    if peak == 0.0 {
        return Err(Error::DegenerateInput("test function is identically zero".into()));
    }
    let trace = phi.boundary_max_abs();
    if trace > TRACE_TOL * peak {
        return Err(Error::Input(format!(
            "test function is not compactly supported in the box: boundary trace {trace:.3e} vs peak {peak:.3e}"
        )));
    }
    Ok(())
}

fn inequality_report(
    phi: &ScalarField,
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
    coupling: f64,
    rhs_constant: f64,
) -> Result<HardyReport> {
    check_test_function(phi)?;
    let mass = measure.integral_mu_field(&ScalarField::from_values(
        phi.grid.clone(),
        phi.values.iter().map(|v| v * v).collect(),
        crate::grid::FieldKind::Smooth,
    )?);
    let grad = gradient(phi)?;
    let grid = &phi.grid;
    let mut dirichlet = 0.0;
    grid.for_each(|flat, idx, x| {
        dirichlet += grid.quad_weight(idx) * grad.norm_sq_at(flat) * measure.density(x);
    });
    let mut lhs = 0.0;
    for i in 0..cfg.pole_count() {
        lhs += coupling * measure.integral_mu_singular_sq_field(phi, &[(i, -2.0)])?;
    }
    let rhs = dirichlet + rhs_constant * mass;
    Ok(HardyReport {
        lhs,
        dirichlet,
        mass,
        rhs_constant,
        rhs,
        margin: rhs - lhs,
        coupling,
        resolution: grid.points_per_axis(),
    })
}

/// Inequality report at the configured coupling with constant
/// (k+(n+1)c)/r₀² + (n/2)Tr A.
pub fn hardy_report(
    phi: &ScalarField,
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
) -> Result<HardyReport> {
    let consts = HardyConstants::new(cfg)?;
    inequality_report(phi, cfg, measure, cfg.coupling, consts.k_const)
}

/// Improved-constant report: coupling forced to c₀/n with right-hand
/// constant (n/2)Tr A; valid for a single pole as well.
pub fn improved_report(
    phi: &ScalarField,
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
) -> Result<HardyReport> {
    let derived = cfg.ensure_valid()?;
    let n = cfg.pole_count() as f64;
    let coupling = derived.c0 / n;
    inequality_report(phi, cfg, measure, coupling, 0.5 * n * derived.trace_a)
}

#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub lambda1: f64,
    pub k_cut: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Smallest eigenvalue of the discrete quadratic form
/// φ ↦ (∫|∇φ|²dμ − ∫Vφ²dμ)/∫φ²dμ over grid functions vanishing on the box
/// boundary, via shift-inverted Lanczos on the symmetric form operator.
pub fn lambda1_estimate(
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
    grid: &Arc<Grid>,
    k_cut: Option<f64>,
    opts: &EigOptions,
) -> Result<SpectralEstimate> {
    let derived = cfg.ensure_valid()?;
    if let Some(r0) = derived.r0 {
        if grid.spacing() > r0 / 8.0 {
            return Err(Error::Resolution(format!(
                "grid spacing {:.4} does not resolve r₀ = {r0} (need h ≤ r₀/8)",
                grid.spacing()
            )));
        }
    }
    let mode = match k_cut {
        Some(k) => PotentialMode::Capped(k),
        None => PotentialMode::Raw,
    };
    let op = DiscreteOperator::assemble_with(cfg, measure, grid.clone(), mode, DriftScheme::WeightedForm)?;
    let sol = smallest_eigenpair(&op, opts)?;
    if let Some(k) = k_cut {
        let floor = -cfg.coupling * k * cfg.pole_count() as f64;
        if sol.value < floor - 1e-6 {
            return Err(Error::Solver(format!(
                "eigenvalue {} fell below the bounded-potential floor {floor}",
                sol.value
            )));
        }
    }
    Ok(SpectralEstimate {
        lambda1: sol.value,
        k_cut,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

#[derive(Debug, Clone)]
pub struct OptimalityProbe {
    pub gamma: f64,
    pub pole: usize,
    /// (γ²−c)·I(γ−1)/I(γ): an upper bound for the bottom of the spectrum.
    pub r_bound: f64,
    /// Diagnostic quotient with the full multipolar potential (≤ r_bound).
    pub quotient_full: f64,
    pub moment_ratio: f64,
    /// Closed-form lower bound for the moment ratio.
    pub ratio_lower_bound: f64,
    pub i_gamma: f64,
    pub i_gamma_minus_1: f64,
}

/// Rayleigh-quotient probe with φ = |x−aᵢ|^γ, γ ∈ (1−N/2, 0), evaluated by
/// direct moment integrals (no grid truncation of φ).
pub fn optimality_probe(
    gamma_exp: f64,
    pole: usize,
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
    grid: &Grid,
) -> Result<OptimalityProbe> {
    let dim = cfg.dim as f64;
    if !(gamma_exp > 1.0 - dim / 2.0 && gamma_exp < 0.0) {
        return Err(Error::Domain(format!(
            "probe exponent must lie in (1−N/2, 0) = ({}, 0), got {gamma_exp}",
            1.0 - dim / 2.0
        )));
    }
    if pole >= cfg.pole_count() {
        return Err(Error::Input(format!("no pole with index {pole}")));
    }
    let c = cfg.coupling;
    let i_gamma = measure.moment_integral(gamma_exp, pole, grid)?;
    let i_gm1 = measure.moment_integral(gamma_exp - 1.0, pole, grid)?;
    let moment_ratio = i_gm1 / i_gamma;
    let b = measure.equivalence_bounds(pole);
    let half = dim / 2.0;
    // lower(I(γ−1)) / upper(I(γ)) with the Γ-ratio collapsed to (γ+N/2−1)⁻¹.
    let ratio_lower_bound = b.c1 * 2.0f64.powf(gamma_exp + half - 2.0)
        * b.alpha_tilde_max.powf(1.0 - gamma_exp - half)
        / (b.c2
            * 2.0f64.powf(2.0 * gamma_exp + dim - 1.0)
            * b.alpha_tilde_min.powf(-gamma_exp - half)
            * (gamma_exp + half - 1.0));
    if moment_ratio < ratio_lower_bound * (1.0 - 1e-6) {
        return Err(Error::InequalityViolation(format!(
            "moment ratio {moment_ratio:.6e} fell below its closed-form floor {ratio_lower_bound:.6e}"
        )));
    }
    let prefactor = gamma_exp * gamma_exp - c;
    let r_bound = prefactor * moment_ratio;
    if prefactor < 0.0 {
        let cap = prefactor * ratio_lower_bound;
        if r_bound > cap + 1e-9 * cap.abs().max(1.0) {
            return Err(Error::InequalityViolation(format!(
                "r_bound {r_bound:.6e} exceeds its closed-form cap {cap:.6e}"
            )));
        }
    }
    // Full-potential diagnostic: subtract the cross terms c∫|x−aᵢ|^{2γ}|x−aⱼ|⁻²dμ.
    let mut cross = 0.0;
    for j in 0..cfg.pole_count() {
        if j == pole {
            continue;
        }
        let factors = [
            (cfg.poles[pole].as_slice(), 2.0 * gamma_exp),
            (cfg.poles[j].as_slice(), -2.0),
        ];
        cross += crate::measure::singular_quadrature(grid, &factors, &|x| measure.unnorm_weight(x))?;
    }
    let quotient_full = r_bound - c * cross / i_gamma;
    Ok(OptimalityProbe {
        gamma: gamma_exp,
        pole,
        r_bound,
        quotient_full,
        moment_ratio,
        ratio_lower_bound,
        i_gamma,
        i_gamma_minus_1: i_gm1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::GaussBump;
    use crate::config::s1_config;

    fn setup(c: f64, m: usize, r: f64) -> (ProblemConfig, WeightedGaussianMeasure, Arc<Grid>) {
        let cfg = s1_config(c);
        let measure = WeightedGaussianMeasure::new(&cfg).unwrap();
        let grid = Arc::new(Grid::new(vec![0.0; 3], r, m).unwrap());
        (cfg, measure, grid)
    }

    #[test]
    fn constants_for_s1() {
        let consts = HardyConstants::new(&s1_config(0.25)).unwrap();
        assert!((consts.k_const - 7.75).abs() < 1e-14);
        assert!((consts.k_improved - 3.0).abs() < 1e-14);
        assert!((consts.r0 - 1.0).abs() < 1e-15);
        assert!(consts.k_const >= consts.k_improved);
    }

    #[test]
    fn potential_values_and_errors() {
        let cfg = s1_config(0.25);
        let v0 = potential(&[0.0; 3], &cfg).unwrap();
        assert!((v0 - 0.5).abs() < 1e-14);
        assert!(potential(&[1.0, 0.0, 0.0], &cfg).is_err());
        // Linearity in c.
        let cfg2 = cfg.with_coupling(0.5);
        let x = [0.3, 0.4, -0.2];
        let a = potential(&x, &cfg).unwrap();
        let b = potential(&x, &cfg2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-13);
    }

    #[test]
    fn potential_bounded_on_far_region() {
        // |x−aᵢ| ≥ r₀ for all i ⇒ V ≤ c·n/r₀².
        let cfg = s1_config(0.25);
        let bound = 0.25 * 2.0 / 1.0;
        let mut rng_state = 1u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 11) as f64) / ((1u64 << 53) as f64) * 8.0 - 4.0
        };
        let mut checked = 0;
        while checked < 2000 {
            let x = [next(), next(), next()];
            let far = cfg.poles.iter().all(|p| dist2(&x, p) >= 1.0);
            if far {
                assert!(potential(&x, &cfg).unwrap() <= bound + 1e-12);
                checked += 1;
            }
        }
    }

    #[test]
    fn centered_bump_satisfies_inequality() {
        let (cfg, measure, grid) = setup(0.25, 48, 4.0);
        let bump = GaussBump {
            center: vec![0.0; 3],
            sharpness: 4.0,
            cutoff: 2.0,
            amplitude: 1.0,
        };
        let phi = bump.field(grid);
        let rep = hardy_report(&phi, &cfg, &measure).unwrap();
        assert!((rep.rhs_constant - 7.75).abs() < 1e-13);
        assert!(rep.mass > 0.0 && rep.dirichlet > 0.0 && rep.lhs > 0.0);
        assert!(rep.margin >= 0.0, "margin = {}", rep.margin);
    }

    #[test]
    fn quadratic_homogeneity() {
        let (cfg, measure, grid) = setup(0.25, 32, 4.0);
        let bump = GaussBump {
            center: vec![0.2, -0.1, 0.0],
            sharpness: 5.0,
            cutoff: 2.0,
            amplitude: 1.0,
        };
        let phi = bump.field(grid);
        let rep1 = hardy_report(&phi, &cfg, &measure).unwrap();
        let rep5 = hardy_report(&phi.scaled(5.0), &cfg, &measure).unwrap();
        for (a, b) in [
            (rep5.lhs, rep1.lhs),
            (rep5.dirichlet, rep1.dirichlet),
            (rep5.mass, rep1.mass),
            (rep5.margin, rep1.margin),
        ] {
            assert!((a - 25.0 * b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn zero_function_rejected() {
        let (cfg, measure, grid) = setup(0.25, 16, 4.0);
        let phi = ScalarField::zeros(grid);
        assert!(matches!(
            hardy_report(&phi, &cfg, &measure),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn improved_constant_single_pole() {
        // n = 1, a₁ = 0, A = I, N = 3: constant Tr A/2 = 1.5 at coupling c₀.
        let cfg = ProblemConfig {
            poles: vec![vec![0.0; 3]],
            ..s1_config(0.25)
        };
        let measure = WeightedGaussianMeasure::new(&cfg).unwrap();
        let grid = Arc::new(Grid::new(vec![0.0; 3], 4.0, 48).unwrap());
        let bump = GaussBump {
            center: vec![0.3, 0.0, 0.0],
            sharpness: 4.0,
            cutoff: 2.0,
            amplitude: 1.0,
        };
        let rep = improved_report(&bump.field(grid), &cfg, &measure).unwrap();
        assert!((rep.rhs_constant - 1.5).abs() < 1e-13);
        assert!((rep.coupling - 0.25).abs() < 1e-14);
        assert!(rep.margin >= 0.0, "margin = {}", rep.margin);
    }

    #[test]
    fn far_support_dominated() {
        // A bump far from both poles sees lhs ≤ coupling·(n/dist²)·mass.
        let cfg = s1_config(0.25);
        let measure = WeightedGaussianMeasure::new(&cfg).unwrap();
        let grid = Arc::new(Grid::new(vec![12.0, 0.0, 0.0], 1.5, 24).unwrap());
        let bump = GaussBump {
            center: vec![12.0, 0.0, 0.0],
            sharpness: 8.0,
            cutoff: 1.2,
            amplitude: 1.0,
        };
        let rep = improved_report(&bump.field(grid), &cfg, &measure).unwrap();
        // min distance from support to a pole ≥ 12 − 1.2 − 1 ≈ 9.8.
        let cap = rep.coupling * 2.0 / (9.8 * 9.8) * rep.mass;
        assert!(rep.lhs <= cap * 1.05, "lhs = {}, cap = {cap}", rep.lhs);
    }

    #[test]
    fn probe_domain_checks() {
        let (cfg, measure, grid) = setup(0.375, 32, 4.0);
        assert!(matches!(
            optimality_probe(-0.6, 0, &cfg, &measure, &grid),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            optimality_probe(0.1, 0, &cfg, &measure, &grid),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn probe_sign_and_full_quotient() {
        let (cfg, measure, grid) = setup(0.375, 48, 4.0);
        let p = optimality_probe(-0.45, 0, &cfg, &measure, &grid).unwrap();
        // γ²−c = 0.2025−0.375 < 0 and the moment ratio is positive.
        assert!(p.r_bound < 0.0);
        assert!(p.moment_ratio > 0.0);
        assert!(p.quotient_full <= p.r_bound);
        assert!(p.moment_ratio >= p.ratio_lower_bound);
    }

    #[test]
    fn probe_endpoint_prefactor_vanishes() {
        // At c = c₀ the prefactor γ²−c₀ → 0 as γ → 1−N/2; report only.
        let (cfg, measure, grid) = setup(0.25, 32, 4.0);
        let p = optimality_probe(-0.4999, 0, &cfg, &measure, &grid).unwrap();
        assert!((p.gamma * p.gamma - 0.25).abs() < 1e-3);
        assert!(p.r_bound.is_finite());
    }
}
