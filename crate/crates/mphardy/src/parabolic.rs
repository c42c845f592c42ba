//! Positivity-preserving implicit evolution of ∂ₜu = Lu + min(V, c·k)u,
//! growth-rate fits against the quasi-accretivity constant, cutoff
//! monotonicity, and the bounded/growing dichotomy read off from the cutoff
//! scan (the norms of the cut-off evolutions either saturate or keep
//! growing with k).

use crate::bump::{random_bumps, GaussBump};
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::hardy::HardyConstants;
use crate::measure::WeightedGaussianMeasure;
use crate::operator::{DiscreteOperator, DriftScheme, PotentialMode};
use crate::util::linear_fit;
use std::sync::Arc;

/// Node values this large trigger a rescale; growth is tracked in log space.
const RESCALE_THRESHOLD: f64 = 1e120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Bounded => write!(f, "bounded"),
            Verdict::Growing => write!(f, "growing"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub solver_rel_tol: f64,
    pub solver_max_iters: usize,
    /// Relative positivity tolerance: values below −tol·max(u) abort.
    pub positivity_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            solver_rel_tol: 1e-12,
            solver_max_iters: 2_000,
            positivity_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionReport {
    pub times: Vec<f64>,
    /// ln‖u(t)‖_{L²_μ}; kept in log space so large growth cannot overflow.
    pub log_norms: Vec<f64>,
    /// Smallest node value at each recorded time (same rescaling as the
    /// log-norms).
    pub min_values: Vec<f64>,
    /// Fitted growth rate over the last half of the window.
    pub omega_hat: f64,
    /// Prefactor with ‖u(t)‖ ≤ M̂·e^{ω̂t}·‖u₀‖.
    pub m_hat: f64,
    pub k_cut: Option<f64>,
    pub positive: bool,
    /// Most negative value observed, relative to the scale of u at the time.
    pub worst_relative_min: f64,
    pub verdict: Verdict,
    pub dt: f64,
    /// Final state (values, log_scale): u_final = values·exp(log_scale).
    pub final_values: Vec<f64>,
    pub final_log_scale: f64,
}

impl EvolutionReport {
    pub fn final_log_norm(&self) -> f64 {
        *self.log_norms.last().expect("at least the initial norm")
    }
}

/// One implicit Euler step of the cut-off problem.
pub fn step(u: &ScalarField, op: &DiscreteOperator, dt: f64) -> Result<ScalarField> {
    let opts = EvolveOptions::default();
    if !Arc::ptr_eq(&u.grid, op.grid()) && u.values.len() != op.grid().len() {
        return Err(Error::Input("field and operator grids differ".into()));
    }
    let next = op.step(&u.values, dt, opts.solver_rel_tol, opts.solver_max_iters)?;
    ScalarField::from_values(u.grid.clone(), next, u.kind)
}

fn check_initial(u0: &ScalarField) -> Result<()> {
    if u0.values.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateInput("initial datum is identically zero".into()));
    }
    if u0.values.iter().any(|&v| v < 0.0) {
        return Err(Error::Input("initial datum must be nonnegative".into()));
    }
    if u0.boundary_max_abs() > 0.0 {
        return Err(Error::Input(
            "initial datum must vanish on the box boundary".into(),
        ));
    }
    Ok(())
}

/// March the trajectory, recording μ-norms and fitting the growth rate from
/// the last half of the time window.
pub fn evolve(
    u0: &ScalarField,
    op: &DiscreteOperator,
    dt: f64,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionReport> {
    check_initial(u0)?;
    if !(dt > 0.0 && t_final > dt) {
        return Err(Error::Input(format!(
            "need 0 < dt < t_final, got dt = {dt}, t_final = {t_final}"
        )));
    }
    let steps = (t_final / dt).round() as usize;
    let mut u = u0.values.clone();
    let mut log_scale = 0.0f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut log_norms = Vec::with_capacity(steps + 1);
    let mut min_values = Vec::with_capacity(steps + 1);
    times.push(0.0);
    log_norms.push(op.mu_norm(&u).ln());
    min_values.push(u.iter().copied().fold(f64::INFINITY, f64::min));
    let mut positive = true;
    let mut worst_rel: f64 = 0.0;
    for s in 1..=steps {
        u = op.step(&u, dt, opts.solver_rel_tol, opts.solver_max_iters)?;
        let maxabs = u.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let minval = u.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if minval < 0.0 {
            let rel = -minval / maxabs.max(f64::MIN_POSITIVE);
            worst_rel = worst_rel.max(rel);
            if rel > opts.positivity_tol {
                return Err(Error::PositivityViolation(format!(
                    "negative value {minval:.3e} (relative {rel:.3e}) at step {s}"
                )));
            }
            positive = false;
        }
        if maxabs > RESCALE_THRESHOLD {
            let inv = 1.0 / maxabs;
            u.iter_mut().for_each(|v| *v *= inv);
            log_scale += maxabs.ln();
        }
        times.push(s as f64 * dt);
        log_norms.push(op.mu_norm(&u).ln() + log_scale);
        min_values.push(u.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let half = log_norms.len() / 2;
    let (_, omega_hat) = linear_fit(&times[half..], &log_norms[half..]);
    let ln_u0 = log_norms[0];
    let m_hat = times
        .iter()
        .zip(&log_norms)
        .map(|(&t, &ln)| ln - ln_u0 - omega_hat * t)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp()
        .max(1.0);
    let growth = log_norms.last().unwrap() - ln_u0;
    let verdict = if steps < 8 {
        Verdict::Inconclusive
    } else if omega_hat > 0.25 && growth > 0.25 * t_final {
        Verdict::Growing
    } else {
        Verdict::Bounded
    };
    Ok(EvolutionReport {
        times,
        log_norms,
        min_values,
        omega_hat,
        m_hat,
        k_cut: op.k_cut(),
        positive,
        worst_relative_min: worst_rel,
        verdict,
        dt,
        final_values: u,
        final_log_scale: log_scale,
    })
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub k_cuts: Vec<f64>,
    pub final_log_norms: Vec<f64>,
    /// Most negative value of u_{k+1} − u_k over all nodes and levels.
    pub worst_pointwise_drop: f64,
    pub dt: f64,
}

/// Common dt for a family of cutoffs: the requested step clipped safely
/// below every positivity threshold.
fn common_dt(ops: &[DiscreteOperator], dt_request: f64) -> f64 {
    let mut dt = dt_request;
    for op in ops {
        dt = dt.min(0.9 * op.dt_threshold());
    }
    dt
}

/// Evolve the same initial datum under increasing cutoffs and verify the
/// solutions increase pointwise in the cutoff.
#[allow(clippy::too_many_arguments)]
pub fn monotonicity_scan(
    u0: &ScalarField,
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
    grid: &Arc<Grid>,
    k_cuts: &[f64],
    dt_request: f64,
    t_final: f64,
    scheme: DriftScheme,
) -> Result<MonotonicityReport> {
    if k_cuts.is_empty() {
        return Err(Error::Input("need at least one cutoff".into()));
    }
    let ops: Vec<DiscreteOperator> = k_cuts
        .iter()
        .map(|&k| {
            let mode = if cfg.coupling == 0.0 {
                PotentialMode::Zero
            } else {
                PotentialMode::Capped(k)
            };
            DiscreteOperator::assemble_with(cfg, measure, grid.clone(), mode, scheme)
        })
        .collect::<Result<_>>()?;
    let dt = common_dt(&ops, dt_request);
    let opts = EvolveOptions::default();
    let runs: Vec<EvolutionReport> = ops
        .iter()
        .map(|op| evolve(u0, op, dt, t_final, &opts))
        .collect::<Result<_>>()?;
    let mut worst_drop = 0.0f64;
    for w in runs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let scale_max = a.final_log_scale.max(b.final_log_scale);
        let fa = (a.final_log_scale - scale_max).exp();
        let fb = (b.final_log_scale - scale_max).exp();
        for i in 0..a.final_values.len() {
            let drop = a.final_values[i] * fa - b.final_values[i] * fb;
            worst_drop = worst_drop.max(drop);
        }
        if b.final_log_norm() < a.final_log_norm() - 1e-10 {
            return Err(Error::SchemeConsistency(format!(
                "norm decreased when raising the cutoff: {} → {}",
                a.final_log_norm(),
                b.final_log_norm()
            )));
        }
    }
    if worst_drop > 1e-8 {
        return Err(Error::SchemeConsistency(format!(
            "pointwise cutoff monotonicity violated by {worst_drop:.3e}"
        )));
    }
    Ok(MonotonicityReport {
        k_cuts: k_cuts.to_vec(),
        final_log_norms: runs.iter().map(|r| r.final_log_norm()).collect(),
        worst_pointwise_drop: worst_drop,
        dt,
    })
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub k_cut: f64,
    pub final_log_norm: f64,
    /// ln of the norm ratio against the previous cutoff level (0 for the first).
    pub ln_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub verdict: Verdict,
    pub delta: f64,
    pub dt: f64,
    pub positive: bool,
    /// Fitted growth rate of each run.
    pub omega_hats: Vec<f64>,
    /// Worst pointwise drop of u_{k+1}(T) against u_k(T) (cutoff
    /// monotonicity; should not exceed the solver noise floor).
    pub worst_pointwise_drop: f64,
}

/// Cutoff scan: evolve with each cutoff level and compare final norms. The
/// verdict is "growing" when the last three ratios all exceed 1+δ and do
/// not decrease, "bounded" when they all stay within 1+δ, and
/// "inconclusive" otherwise.
#[allow(clippy::too_many_arguments)]
pub fn blowup_scan(
    u0: &ScalarField,
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
    grid: &Arc<Grid>,
    k_cuts: &[f64],
    dt_request: f64,
    t_final: f64,
    delta: f64,
) -> Result<ScanReport> {
    if cfg.coupling < 0.0 {
        return Err(Error::Input("the cutoff scan needs a nonnegative coupling".into()));
    }
    if k_cuts.len() < 4 {
        return Err(Error::Input("need at least four cutoff levels".into()));
    }
    if k_cuts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("cutoff levels must increase".into()));
    }
    let ops: Vec<DiscreteOperator> = k_cuts
        .iter()
        .map(|&k| {
            // With zero coupling the cutoff is vacuous: every level runs the
            // same potential-free problem and the verdict is bounded.
            let mode = if cfg.coupling == 0.0 {
                PotentialMode::Zero
            } else {
                PotentialMode::Capped(k)
            };
            DiscreteOperator::assemble_with(cfg, measure, grid.clone(), mode, DriftScheme::WeightedForm)
        })
        .collect::<Result<_>>()?;
    let dt = common_dt(&ops, dt_request);
    let opts = EvolveOptions::default();
    let mut rows = Vec::with_capacity(k_cuts.len());
    let mut omega_hats = Vec::with_capacity(k_cuts.len());
    let mut positive = true;
    let mut prev: Option<f64> = None;
    let mut prev_final: Option<(Vec<f64>, f64)> = None;
    let mut worst_drop = 0.0f64;
    for (op, &k) in ops.iter().zip(k_cuts) {
        let rep = evolve(u0, op, dt, t_final, &opts)?;
        positive &= rep.positive;
        let ln_norm = rep.final_log_norm();
        omega_hats.push(rep.omega_hat);
        if let Some((pv, pls)) = &prev_final {
            let scale_max = pls.max(rep.final_log_scale);
            let fa = (pls - scale_max).exp();
            let fb = (rep.final_log_scale - scale_max).exp();
            for i in 0..pv.len() {
                worst_drop = worst_drop.max(pv[i] * fa - rep.final_values[i] * fb);
            }
        }
        prev_final = Some((rep.final_values.clone(), rep.final_log_scale));
        rows.push(ScanRow {
            k_cut: k,
            final_log_norm: ln_norm,
            ln_ratio: prev.map(|p| ln_norm - p).unwrap_or(0.0),
        });
        prev = Some(ln_norm);
    }
    let ratios: Vec<f64> = rows.iter().skip(1).map(|r| r.ln_ratio).collect();
    let last3 = &ratios[ratios.len() - 3..];
    let gate = (1.0 + delta).ln();
    let all_above = last3.iter().all(|&r| r > gate);
    let nondecreasing = last3.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let all_within = last3.iter().all(|&r| r <= gate);
    let verdict = if all_above && nondecreasing {
        Verdict::Growing
    } else if all_within {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(ScanReport {
        rows,
        verdict,
        delta,
        dt,
        positive,
        omega_hats,
        worst_pointwise_drop: worst_drop,
    })
}

#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub quotients: Vec<f64>,
    pub min_quotient: f64,
    /// Lower bound −K from the inequality constant.
    pub bound: f64,
    pub probes: usize,
}

/// Evaluate the bilinear form a_c(u,u) = ∫|∇u|²dμ − c Σᵢ∫u²/|x−aᵢ|²dμ on
/// random probe fields and check the quotient against −K (the inequality
/// restated on the lattice).
pub fn coercivity_check(
    cfg: &ProblemConfig,
    measure: &WeightedGaussianMeasure,
    grid: &Arc<Grid>,
    probe_count: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    let derived = cfg.ensure_valid()?;
    if cfg.coupling > derived.c0 {
        return Err(Error::Domain(format!(
            "coercivity check applies for coupling ≤ c₀ = {}, got {}",
            derived.c0, cfg.coupling
        )));
    }
    let consts = HardyConstants::new(cfg)?;
    let bound = -consts.k_const;
    let op = DiscreteOperator::assemble_with(
        cfg,
        measure,
        grid.clone(),
        if cfg.coupling == 0.0 {
            PotentialMode::Zero
        } else {
            PotentialMode::Raw
        },
        DriftScheme::WeightedForm,
    )?;
    let mut probes = random_bumps(&derived.barycenter, grid.radius(), probe_count.max(1), seed);
    // Stress probe hugging the first pole.
    probes.push(GaussBump {
        center: cfg.poles[0].clone(),
        sharpness: 100.0,
        cutoff: 0.5,
        amplitude: 1.0,
    });
    let mut quotients = Vec::with_capacity(probes.len());
    let mut min_q = f64::INFINITY;
    let mut worst = 0usize;
    for (i, bump) in probes.iter().enumerate() {
        let u = bump.field(grid.clone());
        let denom = op.mu_norm(&u.values).powi(2);
        if denom <= 0.0 {
            continue;
        }
        let q = op.form_value(&u.values) / denom;
        if q < min_q {
            min_q = q;
            worst = i;
        }
        quotients.push(q);
    }
    let tol = 1e-8 * (1.0 + bound.abs());
    if min_q < bound - tol {
        return Err(Error::InequalityViolation(format!(
            "coercivity quotient {min_q:.6} fell below −K = {bound:.6}; offending probe: {:?}",
            probes[worst]
        )));
    }
    Ok(CoercivityReport {
        min_quotient: min_q,
        quotients,
        bound,
        probes: probes.len(),
    })
}

/// Default nonnegative initial datum: a normalized bump at the barycenter.
pub fn default_u0(measure: &WeightedGaussianMeasure, grid: &Arc<Grid>) -> Result<ScalarField> {
    let bump = GaussBump {
        center: measure.derived().barycenter.clone(),
        sharpness: 8.0 / (grid.radius() * grid.radius()),
        cutoff: 0.9 * grid.radius(),
        amplitude: 1.0,
    };
    let mut f = bump.field(grid.clone());
    let norm = {
        let sq = ScalarField::from_values(
            grid.clone(),
            f.values.iter().map(|v| v * v).collect(),
            crate::grid::FieldKind::Smooth,
        )?;
        measure.integral_mu_field(&sq).sqrt()
    };
    if norm <= 0.0 {
        return Err(Error::DegenerateInput("default initial datum vanished".into()));
    }
    f.values.iter_mut().for_each(|v| *v /= norm);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::s1_config;

    fn setup(c: f64, m: usize, r: f64) -> (ProblemConfig, WeightedGaussianMeasure, Arc<Grid>) {
        let cfg = s1_config(c);
        let measure = WeightedGaussianMeasure::new(&cfg).unwrap();
        let grid = Arc::new(Grid::new(vec![0.0; 3], r, m).unwrap());
        (cfg, measure, grid)
    }

    #[test]
    fn dissipative_without_potential() {
        let (cfg, measure, grid) = setup(0.0, 20, 3.0);
        let op = DiscreteOperator::assemble_with(
            &cfg,
            &measure,
            grid.clone(),
            PotentialMode::Zero,
            DriftScheme::WeightedForm,
        )
        .unwrap();
        let u0 = default_u0(&measure, &grid).unwrap();
        let rep = evolve(&u0, &op, 2e-3, 0.1, &EvolveOptions::default()).unwrap();
        assert!(rep.positive);
        // The Dirichlet form dissipates: norms cannot increase.
        for w in rep.log_norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert_eq!(rep.verdict, Verdict::Bounded);
    }

    #[test]
    fn evolution_is_linear_in_the_datum() {
        let (cfg, measure, grid) = setup(0.25, 16, 3.0);
        let op = DiscreteOperator::assemble_with(
            &cfg,
            &measure,
            grid.clone(),
            PotentialMode::Capped(4.0),
            DriftScheme::WeightedForm,
        )
        .unwrap();
        let u0 = default_u0(&measure, &grid).unwrap();
        let rep1 = evolve(&u0, &op, 1e-3, 0.05, &EvolveOptions::default()).unwrap();
        let rep2 = evolve(&u0.scaled(2.0), &op, 1e-3, 0.05, &EvolveOptions::default()).unwrap();
        for (a, b) in rep1.log_norms.iter().zip(&rep2.log_norms) {
            assert!((b - a - 2.0f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvector_is_invariant_under_steps() {
        // With c = 0 the implicit step acts on the discrete ground state of
        // −L as division by 1 + dt·λ.
        let (cfg, measure, grid) = setup(0.0, 14, 3.0);
        let op = DiscreteOperator::assemble_with(
            &cfg,
            &measure,
            grid.clone(),
            PotentialMode::Zero,
            DriftScheme::WeightedForm,
        )
        .unwrap();
        let sol = crate::eig::smallest_eigenpair(&op, &crate::eig::EigOptions::default()).unwrap();
        let dt = 1e-3;
        let next = op.step(&sol.vector, dt, 1e-13, 4_000).unwrap();
        let expect: Vec<f64> = sol.vector.iter().map(|v| v / (1.0 + dt * sol.value)).collect();
        let num: f64 = next
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = expect.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 1e-6, "relative deviation {:.3e}", num / den);
    }

    #[test]
    fn identical_cutoffs_identical_trajectories() {
        let (cfg, measure, grid) = setup(0.25, 14, 3.0);
        let u0 = default_u0(&measure, &grid).unwrap();
        let rep =
            monotonicity_scan(&u0, &cfg, &measure, &grid, &[1.0, 1.0], 1e-3, 0.05, DriftScheme::WeightedForm);
        // Equal potentials: monotone by definition, zero drop.
        let rep = rep.unwrap();
        assert!(rep.worst_pointwise_drop <= 1e-12);
        assert!((rep.final_log_norms[0] - rep.final_log_norms[1]).abs() < 1e-10);
    }

    #[test]
    fn cutoff_monotonicity_small_case() {
        let (cfg, measure, grid) = setup(0.125, 16, 3.0);
        let u0 = default_u0(&measure, &grid).unwrap();
        let rep = monotonicity_scan(
            &u0,
            &cfg,
            &measure,
            &grid,
            &[2.0, 8.0, 32.0],
            1e-3,
            0.05,
            DriftScheme::WeightedForm,
        )
        .unwrap();
        assert!(rep.worst_pointwise_drop <= 1e-8);
        for w in rep.final_log_norms.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn coercivity_small_case() {
        let (cfg, measure, grid) = setup(0.25, 20, 4.0);
        let rep = coercivity_check(&cfg, &measure, &grid, 10, 3).unwrap();
        assert!(rep.min_quotient >= rep.bound);
        assert!((rep.bound + 7.75).abs() < 1e-12);
        // c above c₀ is out of hypothesis.
        let bad = s1_config(0.5);
        assert!(coercivity_check(&bad, &measure, &grid, 4, 3).is_err());
    }

    #[test]
    fn step_wrapper_matches_operator_step() {
        let (cfg, measure, grid) = setup(0.25, 12, 3.0);
        let op = DiscreteOperator::assemble_with(
            &cfg,
            &measure,
            grid.clone(),
            PotentialMode::Capped(4.0),
            DriftScheme::WeightedForm,
        )
        .unwrap();
        let u0 = default_u0(&measure, &grid).unwrap();
        let stepped = step(&u0, &op, 1e-3).unwrap();
        let direct = op.step(&u0.values, 1e-3, 1e-12, 2_000).unwrap();
        assert_eq!(stepped.values, direct);
    }

    #[test]
    fn zero_coupling_scan_is_trivially_bounded() {
        let (cfg, measure, grid) = setup(0.0, 12, 2.5);
        let u0 = default_u0(&measure, &grid).unwrap();
        let rep = blowup_scan(&u0, &cfg, &measure, &grid, &[1.0, 2.0, 4.0, 8.0], 2e-3, 0.05, 0.05)
            .unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded);
        for row in rep.rows.iter().skip(1) {
            assert!(row.ln_ratio.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_monotonicity_runs_identical() {
        let (cfg, measure, grid) = setup(0.0, 12, 2.5);
        let u0 = default_u0(&measure, &grid).unwrap();
        let rep = monotonicity_scan(
            &u0,
            &cfg,
            &measure,
            &grid,
            &[1.0, 16.0, 256.0],
            2e-3,
            0.05,
            DriftScheme::WeightedForm,
        )
        .unwrap();
        assert!(rep.worst_pointwise_drop <= 1e-14);
        for w in rep.final_log_norms.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn coercivity_without_potential_is_nonnegative() {
        let (cfg, measure, grid) = setup(0.0, 16, 3.0);
        let rep = coercivity_check(&cfg, &measure, &grid, 6, 5).unwrap();
        assert!(rep.min_quotient >= 0.0);
    }

    #[test]
    fn initial_datum_validation() {
        let (cfg, measure, grid) = setup(0.25, 12, 3.0);
        let op = DiscreteOperator::assemble_with(
            &cfg,
            &measure,
            grid.clone(),
            PotentialMode::Capped(4.0),
            DriftScheme::WeightedForm,
        )
        .unwrap();
        let zero = ScalarField::zeros(grid.clone());
        assert!(matches!(
            evolve(&zero, &op, 1e-3, 0.01, &EvolveOptions::default()),
            Err(Error::DegenerateInput(_))
        ));
        let mut neg = default_u0(&measure, &grid).unwrap();
        neg.values[grid.len() / 2] = -0.1;
        assert!(evolve(&neg, &op, 1e-3, 0.01, &EvolveOptions::default()).is_err());
    }
}
