//! Dense symmetric linear algebra for small matrices (drift matrices with
//! N ≤ 6, Lanczos tridiagonal blocks). Cyclic Jacobi is accurate and more
//! than fast enough at these sizes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>, // row-major dim×dim
}

impl SymMatrix {
    /// Build from row-major entries; the matrix is stored as given and
    /// symmetry is checked separately by validation.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Input(format!(
                "matrix needs {} row-major entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("matrix entries must be finite".into()));
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        SymMatrix { dim, data }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let dim = d.len();
        let mut m = Self::identity(dim);
        for i in 0..dim {
            m.data[i * dim + i] = d[i];
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Largest componentwise asymmetry max |a_ij − a_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = crate::util::dot(row, v);
        }
    }

    /// ⟨Av, v⟩.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            acc += v[i] * crate::util::dot(row, v);
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Eigenvalues in ascending order (symmetrized input).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// Full symmetric eigendecomposition; returns (values asc, vectors as
    /// rows matching the values).
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut a = self.data.clone();
        // Work on the symmetric part so a tiny asymmetry cannot break Jacobi.
        for i in 0..self.dim {
            for j in 0..i {
                let s = 0.5 * (a[i * self.dim + j] + a[j * self.dim + i]);
                a[i * self.dim + j] = s;
                a[j * self.dim + i] = s;
            }
        }
        jacobi_eigen(self.dim, &mut a)
    }

    pub fn det(&self) -> f64 {
        self.eigenvalues().iter().product()
    }

    /// Factor B with B·Bᵀ = (sA)⁻¹ for the positive scale `s`, used to draw
    /// Gaussian samples with precision matrix sA. Fails if A is not
    /// positive definite.
    pub fn precision_sample_factor(&self, s: f64) -> Result<Vec<Vec<f64>>> {
        let (vals, vecs) = self.eigen();
        if vals.iter().any(|&l| l <= 0.0) || s <= 0.0 {
            return Err(Error::DefiniteMatrix(format!(
                "cannot factor covariance: eigenvalues {:?}, scale {}",
                vals, s
            )));
        }
        // B = Q·diag(1/sqrt(s λ)); columns of Q are the eigenvectors.
        let n = self.dim;
        let mut b = vec![vec![0.0; n]; n];
        for (k, (lam, v)) in vals.iter().zip(&vecs).enumerate() {
            let scale = 1.0 / (s * lam).sqrt();
            for i in 0..n {
                b[i][k] = v[i] * scale;
            }
        }
        Ok(b)
    }
}

/// Cyclic Jacobi on a dense symmetric matrix (in place); returns sorted
/// eigenvalues and matching eigenvectors.
pub fn jacobi_eigen(dim: usize, a: &mut [f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let idx = |i: usize, j: usize| i * dim + j;
    let mut q = vec![0.0; dim * dim];
    for i in 0..dim {
        q[idx(i, i)] = 1.0;
    }
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                s += a[idx(i, j)] * a[idx(i, j)];
            }
        }
        s
    };
    let scale: f64 = (0..dim * dim).map(|k| a[k] * a[k]).sum::<f64>().max(1e-300);
    for _sweep in 0..100 {
        if off(a) <= 1e-30 * scale {
            break;
        }
        for p in 0..dim {
            for r in (p + 1)..dim {
                let apq = a[idx(p, r)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(r, r)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, r)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, r)] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(r, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(r, k)] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let qkp = q[idx(k, p)];
                    let qkq = q[idx(k, r)];
                    q[idx(k, p)] = c * qkp - s * qkq;
                    q[idx(k, r)] = s * qkp + c * qkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..dim)
        .map(|k| (a[idx(k, k)], (0..dim).map(|i| q[idx(i, k)]).collect()))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));
    let vals = pairs.iter().map(|p| p.0).collect();
    let vecs = pairs.into_iter().map(|p| p.1).collect();
    (vals, vecs)
}
