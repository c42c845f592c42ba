//! Problem configuration: dimension, pole set, drift matrix, coupling, and
//! the partition constant, together with validation and the derived
//! constants every other module reads.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::util::{dist, fnv1a};
use serde::Deserialize;
use std::f64::consts::PI;

/// Componentwise symmetry tolerance for the drift matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    /// Ambient dimension N ≥ 3.
    pub dim: usize,
    /// Pole locations a₁…a_n, each in ℝᴺ.
    pub poles: Vec<Vec<f64>>,
    /// Positive definite symmetric drift matrix A.
    pub matrix_a: SymMatrix,
    /// Coupling c > 0 in front of the inverse-square potential.
    pub coupling: f64,
    /// Partition constant k ∈ [0, π²) entering the right-hand constant K.
    pub ims_k: f64,
}

/// Constants derived from a valid configuration.
#[derive(Debug, Clone)]
pub struct Derived {
    /// Critical coupling ((N−2)/2)².
    pub c0: f64,
    /// Half the minimal pole gap; `None` for a single pole.
    pub r0: Option<f64>,
    pub trace_a: f64,
    /// Smallest and largest eigenvalues of A.
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub det_a: f64,
    /// Pole barycenter ā = (1/n)Σ aᵢ.
    pub barycenter: Vec<f64>,
    /// Offset D with Σᵢ⟨A(x−aᵢ),x−aᵢ⟩ = n⟨A(x−ā),x−ā⟩ + D.
    pub offset_d: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub derived: Option<Derived>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl ProblemConfig {
    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    pub fn with_coupling(&self, c: f64) -> Self {
        let mut cfg = self.clone();
        cfg.coupling = c;
        cfg
    }

    /// Critical coupling ((N−2)/2)².
    pub fn c0(&self) -> f64 {
        let half = (self.dim as f64 - 2.0) / 2.0;
        half * half
    }

    /// Per-invariant pass/fail report plus derived constants when they are
    /// well defined.
    pub fn validation_report(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let n = self.pole_count();

        let dim_ok = self.dim >= 3;
        checks.push(ValidationCheck {
            name: "dimension_at_least_3",
            passed: dim_ok,
            detail: format!("N = {}", self.dim),
        });

        let pole_dims_ok = n >= 1 && self.poles.iter().all(|p| p.len() == self.dim);
        checks.push(ValidationCheck {
            name: "poles_match_dimension",
            passed: pole_dims_ok,
            detail: format!("{} poles in ℝ^{}", n, self.dim),
        });

        let mut min_gap = f64::INFINITY;
        if pole_dims_ok {
            for i in 0..n {
                for j in (i + 1)..n {
                    min_gap = min_gap.min(dist(&self.poles[i], &self.poles[j]));
                }
            }
        }
        let poles_distinct = n == 1 || (pole_dims_ok && min_gap > 0.0);
        checks.push(ValidationCheck {
            name: "poles_pairwise_distinct",
            passed: poles_distinct,
            detail: if n == 1 {
                "single pole".into()
            } else {
                format!("min gap = {min_gap:.6e}")
            },
        });

        let sym_defect = self.matrix_a.symmetry_defect();
        let sym_ok = self.matrix_a.dim() == self.dim && sym_defect <= SYMMETRY_TOL;
        checks.push(ValidationCheck {
            name: "matrix_symmetric",
            passed: sym_ok,
            detail: format!("max asymmetry = {sym_defect:.3e}"),
        });

        let eigs = if self.matrix_a.dim() == self.dim {
            self.matrix_a.eigenvalues()
        } else {
            vec![]
        };
        let pd_ok = !eigs.is_empty() && eigs[0] > 0.0;
        checks.push(ValidationCheck {
            name: "matrix_positive_definite",
            passed: pd_ok,
            detail: format!("eigenvalues = {eigs:.4?}"),
        });

        // c = 0 switches the potential off; several diagnostics use it as a
        // baseline, so only negative couplings are rejected.
        let coupling_ok = self.coupling >= 0.0 && self.coupling.is_finite();
        checks.push(ValidationCheck {
            name: "coupling_nonnegative",
            passed: coupling_ok,
            detail: format!("c = {}", self.coupling),
        });

        let k_ok = self.ims_k >= 0.0 && self.ims_k < PI * PI;
        checks.push(ValidationCheck {
            name: "partition_constant_in_range",
            passed: k_ok,
            detail: format!("k = {} (must lie in [0, π²))", self.ims_k),
        });

        let all_ok = checks.iter().all(|c| c.passed);
        let derived = if all_ok {
            let trace_a = self.matrix_a.trace();
            let barycenter: Vec<f64> = (0..self.dim)
                .map(|d| self.poles.iter().map(|p| p[d]).sum::<f64>() / n as f64)
                .collect();
            let mut offset_d = 0.0;
            for p in &self.poles {
                offset_d += self.matrix_a.quad_form(p);
            }
            offset_d -= n as f64 * self.matrix_a.quad_form(&barycenter);
            Some(Derived {
                c0: self.c0(),
                r0: if n >= 2 { Some(min_gap / 2.0) } else { None },
                trace_a,
                alpha_min: eigs[0],
                alpha_max: eigs[self.dim - 1],
                det_a: eigs.iter().product(),
                barycenter,
                offset_d,
            })
        } else {
            None
        };
        ValidationReport { checks, derived }
    }

    /// Validate and return the derived constants, or the first failing
    /// invariant as a typed error.
    pub fn ensure_valid(&self) -> Result<Derived> {
        let report = self.validation_report();
        if let Some(d) = report.derived {
            return Ok(d);
        }
        let first = report
            .checks
            .iter()
            .find(|c| !c.passed)
            .expect("failed validation must have a failing check");
        Err(match first.name {
            "dimension_at_least_3" => Error::Dimension(first.detail.clone()),
            "matrix_symmetric" | "matrix_positive_definite" => {
                Error::DefiniteMatrix(format!("{}: {}", first.name, first.detail))
            }
            "poles_match_dimension" | "poles_pairwise_distinct" => {
                Error::Geometry(format!("{}: {}", first.name, first.detail))
            }
            other => Error::Input(format!("{}: {}", other, first.detail)),
        })
    }

    /// Stable hash of the full configuration, embedded in every report.
    pub fn hash(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dim={};", self.dim));
        for p in &self.poles {
            s.push_str("pole=");
            for x in p {
                s.push_str(&format!("{x:.17e},"));
            }
            s.push(';');
        }
        s.push_str("a=");
        for i in 0..self.matrix_a.dim() {
            for j in 0..self.matrix_a.dim() {
                s.push_str(&format!("{:.17e},", self.matrix_a.get(i, j)));
            }
        }
        s.push_str(&format!(";c={:.17e};k={:.17e}", self.coupling, self.ims_k));
        format!("{:016x}", fnv1a(s.as_bytes()))
    }
}

// ---------------------------------------------------------------------------
// Config file schema (TOML). Unknown keys are rejected.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dimension: usize,
    pub poles: Vec<Vec<f64>>,
    /// Row-major N² entries.
    pub matrix_a: Vec<f64>,
    pub coupling_c: f64,
    #[serde(default = "default_ims_k")]
    pub ims_k: f64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub evolve: EvolveSection,
}

fn default_ims_k() -> f64 {
    4.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub radius: Option<f64>,
    pub points_per_axis: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    /// "tensor" (default) or "monte-carlo".
    pub method: Option<String>,
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub cutoff_max: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn problem(&self) -> Result<ProblemConfig> {
        let matrix_a = SymMatrix::from_rows(self.dimension, self.matrix_a.clone())
            .map_err(|e| Error::config("matrix_a", e.to_string()))?;
        Ok(ProblemConfig {
            dim: self.dimension,
            poles: self.poles.clone(),
            matrix_a,
            coupling: self.coupling_c,
            ims_k: self.ims_k,
        })
    }
}

/// The running example used across the test suites: N = 3, two unit poles
/// on the x-axis, identity drift matrix.
pub fn s1_config(coupling: f64) -> ProblemConfig {
    ProblemConfig {
        dim: 3,
        poles: vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]],
        matrix_a: SymMatrix::identity(3),
        coupling,
        ims_k: 4.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s1_passes_with_expected_constants() {
        let cfg = s1_config(0.25);
        let d = cfg.ensure_valid().unwrap();
        assert!((d.c0 - 0.25).abs() < 1e-15);
        assert!((d.r0.unwrap() - 1.0).abs() < 1e-15);
        assert!((d.trace_a - 3.0).abs() < 1e-15);
        assert!((d.alpha_min - 1.0).abs() < 1e-13);
        assert!((d.alpha_max - 1.0).abs() < 1e-13);
        assert!((d.offset_d - 2.0).abs() < 1e-13);
        assert!(d.barycenter.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn duplicate_poles_rejected() {
        let mut cfg = s1_config(0.25);
        cfg.poles[1] = cfg.poles[0].clone();
        match cfg.ensure_valid() {
            Err(Error::Geometry(_)) => {}
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_matrix_constants() {
        let cfg = ProblemConfig {
            dim: 4,
            poles: vec![vec![0.0; 4]],
            matrix_a: SymMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0]),
            coupling: 0.5,
            ims_k: 1.0,
        };
        let d = cfg.ensure_valid().unwrap();
        assert!((d.c0 - 1.0).abs() < 1e-15);
        assert!((d.trace_a - 10.0).abs() < 1e-15);
        assert!((d.alpha_min - 1.0).abs() < 1e-13);
        assert!((d.alpha_max - 4.0).abs() < 1e-13);
        assert!(d.r0.is_none());
    }

    #[test]
    fn low_dimension_rejected() {
        let cfg = ProblemConfig {
            dim: 2,
            poles: vec![vec![0.0, 0.0]],
            matrix_a: SymMatrix::identity(2),
            coupling: 0.5,
            ims_k: 1.0,
        };
        match cfg.ensure_valid() {
            Err(Error::Dimension(_)) => {}
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let cfg = ProblemConfig {
            dim: 3,
            poles: vec![vec![0.0; 3]],
            matrix_a: SymMatrix::from_rows(
                3,
                vec![1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            )
            .unwrap(),
            coupling: 0.5,
            ims_k: 1.0,
        };
        match cfg.ensure_valid() {
            Err(Error::DefiniteMatrix(_)) => {}
            other => panic!("expected definite-matrix error, got {other:?}"),
        }
    }

    #[test]
    fn file_schema_rejects_unknown_keys() {
        let good = r#"
dimension = 3
poles = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]
matrix_a = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
coupling_c = 0.25
ims_k = 4.0
[grid]
radius = 4.0
points_per_axis = 48
"#;
        let fc = FileConfig::parse(good).unwrap();
        let cfg = fc.problem().unwrap();
        assert!(cfg.ensure_valid().is_ok());

        let bad = format!("{good}\nmystery_key = 1\n");
        assert!(FileConfig::parse(&bad).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = s1_config(0.25).hash();
        let b = s1_config(0.25).hash();
        let c = s1_config(0.5).hash();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
