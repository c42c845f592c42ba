//! Smallest eigenvalue of the symmetric form operator on the lattice via
//! shift-inverted Lanczos: the generalized problem S y = λ M y with diagonal
//! mass M is mapped to B = M^{−1/2} S M^{−1/2}, the certified lower bound
//! λ_min(B) ≥ −max(V) fixes an SPD shift, and every inverse application is a
//! Jacobi-preconditioned CG solve.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::operator::{DiscreteOperator, DriftScheme};
use crate::util::dot;

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Absolute residual target for ‖Bv − λv‖ with ‖v‖ = 1, scaled by 1+|λ|.
    pub residual_tol: f64,
    /// Maximum Lanczos steps (each one CG solve).
    pub max_steps: usize,
    pub cg_rel_tol: f64,
    pub cg_max_iters: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            residual_tol: 1e-8,
            max_steps: 200,
            cg_rel_tol: 1e-12,
            cg_max_iters: 20_000,
            seed: 0x5eed_1234,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

struct FormOperator<'a> {
    op: &'a DiscreteOperator,
    sqrt_mass: Vec<f64>,
    scratch_in: Vec<f64>,
    scratch_out: Vec<f64>,
}

impl<'a> FormOperator<'a> {
    fn new(op: &'a DiscreteOperator) -> Self {
        let sqrt_mass: Vec<f64> = op
            .mass()
            .iter()
            .zip(op.interior())
            .map(|(&m, &int)| if int { m.sqrt() } else { 1.0 })
            .collect();
        let len = sqrt_mass.len();
        FormOperator {
            op,
            sqrt_mass,
            scratch_in: vec![0.0; len],
            scratch_out: vec![0.0; len],
        }
    }

    /// y = Bx with B = M^{−1/2} S M^{−1/2} = −M^{1/2} (L+V) M^{−1/2}.
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            self.scratch_in[i] = if self.op.interior()[i] {
                x[i] / self.sqrt_mass[i]
            } else {
                0.0
            };
        }
        self.op.apply(&self.scratch_in, &mut self.scratch_out);
        for i in 0..x.len() {
            y[i] = if self.op.interior()[i] {
                -self.sqrt_mass[i] * self.scratch_out[i]
            } else {
                0.0
            };
        }
    }
}

/// Jacobi-preconditioned CG for (B − σ)x = b; B − σ is SPD because σ sits
/// strictly below the certified spectral floor.
#[allow(clippy::too_many_arguments)]
fn cg_solve(
    form: &mut FormOperator,
    diag_shifted: &[f64],
    interior: &[bool],
    sigma: f64,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
    x: &mut [f64],
) -> Result<usize> {
    let len = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = b.to_vec();
    for i in 0..len {
        if !interior[i] {
            r[i] = 0.0;
        }
    }
    let bnorm = dot(&r, &r).sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = (0..len)
        .map(|i| if interior[i] { r[i] / diag_shifted[i] } else { 0.0 })
        .collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; len];
    for it in 0..max_iters {
        form.apply(&p, &mut ap);
        for i in 0..len {
            if interior[i] {
                ap[i] -= sigma * p[i];
            } else {
                ap[i] = 0.0;
            }
        }
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver(format!(
                "CG lost positive definiteness (pᵀAp = {pap:.3e}); shift too aggressive"
            )));
        }
        let alpha = rz / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(it + 1);
        }
        for i in 0..len {
            z[i] = if interior[i] { r[i] / diag_shifted[i] } else { 0.0 };
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "CG did not converge to {rel_tol:.1e} in {max_iters} iterations"
    )))
}

/// Smallest eigenpair of the discrete quadratic form. Requires the
/// weighted-form scheme (the upwind operator is not symmetric).
pub fn smallest_eigenpair(op: &DiscreteOperator, opts: &EigOptions) -> Result<EigenSolution> {
    if op.scheme() != DriftScheme::WeightedForm {
        return Err(Error::Solver(
            "the eigensolver needs the symmetric weighted-form scheme".into(),
        ));
    }
    let len = op.grid().len();
    let interior = op.interior().to_vec();
    let mut form = FormOperator::new(op);
    let sigma = -op.max_potential() - 1.0;
    let diag_b = op.form_diag();
    let diag_shifted: Vec<f64> = diag_b
        .iter()
        .zip(&interior)
        .map(|(&d, &int)| if int { d - sigma } else { 1.0 })
        .collect();

    // Deterministic pseudo-random start vector on the interior.
    let mut state = opts.seed | 1;
    let mut v0 = vec![0.0; len];
    for (i, v) in v0.iter_mut().enumerate() {
        if interior[i] {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *v = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        }
    }
    let n0 = dot(&v0, &v0).sqrt();
    if n0 == 0.0 {
        return Err(Error::Solver("empty interior".into()));
    }
    v0.iter_mut().for_each(|v| *v /= n0);

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; len];
    let mut total_cg = 0usize;
    let mut best: Option<EigenSolution> = None;

    for step in 0..opts.max_steps {
        let vj = basis.last().expect("nonempty basis").clone();
        total_cg += cg_solve(
            &mut form,
            &diag_shifted,
            &interior,
            sigma,
            &vj,
            opts.cg_rel_tol,
            opts.cg_max_iters,
            &mut w,
        )?;
        let alpha = dot(&w, &vj);
        for i in 0..len {
            w[i] -= alpha * vj[i];
        }
        if let Some(prev) = betas.last() {
            let vprev = &basis[basis.len() - 2];
            for i in 0..len {
                w[i] -= prev * vprev[i];
            }
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for i in 0..len {
                    w[i] -= c * b[i];
                }
            }
        }
        alphas.push(alpha);
        let beta = dot(&w, &w).sqrt();

        // Ritz extraction from the tridiagonal block.
        let j = alphas.len();
        let mut t = vec![0.0; j * j];
        for (i, &a) in alphas.iter().enumerate() {
            t[i * j + i] = a;
        }
        for (i, &b) in betas.iter().enumerate() {
            t[i * j + i + 1] = b;
            t[(i + 1) * j + i] = b;
        }
        let (tvals, tvecs) = jacobi_eigen(j, &mut t);
        // Largest eigenvalue of (B−σ)⁻¹ ↔ smallest of B.
        let (theta, s) = (tvals[j - 1], &tvecs[j - 1]);
        if theta > 0.0 {
            let lambda = sigma + 1.0 / theta;
            let mut y = vec![0.0; len];
            for (k, b) in basis.iter().enumerate() {
                let c = s[k];
                for i in 0..len {
                    y[i] += c * b[i];
                }
            }
            let yn = dot(&y, &y).sqrt();
            if yn > 0.0 {
                y.iter_mut().for_each(|v| *v /= yn);
                let mut by = vec![0.0; len];
                form.apply(&y, &mut by);
                let mut res = 0.0;
                for i in 0..len {
                    let r = by[i] - lambda * y[i];
                    res += r * r;
                }
                let res = res.sqrt();
                let better = best.as_ref().map(|b| res < b.residual).unwrap_or(true);
                if better {
                    // Map back to the physical eigenvector u = M^{−1/2} y.
                    let u: Vec<f64> = (0..len)
                        .map(|i| if interior[i] { y[i] / form.sqrt_mass[i] } else { 0.0 })
                        .collect();
                    best = Some(EigenSolution {
                        value: lambda,
                        vector: u,
                        residual: res,
                        iterations: total_cg,
                    });
                }
                if res <= opts.residual_tol * (1.0 + lambda.abs()) {
                    return Ok(best.expect("just set"));
                }
            }
        }
        if beta < 1e-12 {
            // Invariant subspace found; the Ritz value is as good as it gets.
            break;
        }
        betas.push(beta);
        let mut vnext = w.clone();
        vnext.iter_mut().for_each(|v| *v /= beta);
        basis.push(vnext);
        let _ = step;
    }
    match best {
        Some(sol) if sol.residual <= opts.residual_tol * (1.0 + sol.value.abs()) * 10.0 => Ok(sol),
        Some(sol) => Err(Error::Solver(format!(
            "Lanczos stalled: best residual {:.3e} after {} steps (λ ≈ {:.6})",
            sol.residual,
            alphas.len(),
            sol.value
        ))),
        None => Err(Error::Solver("no Ritz pair produced".into())),
    }
}
