//! Tensor lattice on a box centered at the pole barycenter, node-sampled
//! scalar/vector fields, finite-difference gradients, and trapezoidal
//! tensor-product quadrature.

use crate::config::{Derived, ProblemConfig};
use crate::error::{Error, Result};
use std::sync::Arc;

const MAX_NODES: usize = 200_000_000;

#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    radius: f64,
    spacing: f64,
    center: Vec<f64>,
    len: usize,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(center: Vec<f64>, radius: f64, points_per_axis: usize) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(Error::Dimension("grid needs a positive dimension".into()));
        }
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::Input(format!("grid radius must be positive, got {radius}")));
        }
        if points_per_axis < 2 {
            return Err(Error::Resolution(format!(
                "need at least 2 points per axis, got {points_per_axis}"
            )));
        }
        let mut len: usize = 1;
        for _ in 0..dim {
            len = len
                .checked_mul(points_per_axis)
                .filter(|&l| l <= MAX_NODES)
                .ok_or_else(|| {
                    Error::Resolution(format!(
                        "grid of {points_per_axis}^{dim} nodes is too large"
                    ))
                })?;
        }
        let spacing = 2.0 * radius / (points_per_axis as f64 - 1.0);
        let mut strides = vec![0usize; dim];
        let mut s = 1;
        for d in (0..dim).rev() {
            strides[d] = s;
            s *= points_per_axis;
        }
        Ok(Grid {
            dim,
            points_per_axis,
            radius,
            spacing,
            center,
            len,
            strides,
        })
    }

    /// Default box radius 4·max(maxᵢ|aᵢ−ā|, α_min^{−1/2}): wide enough that
    /// the Gaussian weight leaves negligible mass outside.
    pub fn default_radius(cfg: &ProblemConfig, derived: &Derived) -> f64 {
        let spread = cfg
            .poles
            .iter()
            .map(|p| crate::util::dist(p, &derived.barycenter))
            .fold(0.0_f64, f64::max);
        4.0 * spread.max(1.0 / derived.alpha_min.sqrt())
    }

    /// Grid centered at the pole barycenter; errors if a pole is not
    /// strictly inside the box.
    pub fn for_config(cfg: &ProblemConfig, derived: &Derived, radius: Option<f64>, m: usize) -> Result<Arc<Self>> {
        let r = radius.unwrap_or_else(|| Self::default_radius(cfg, derived));
        let grid = Grid::new(derived.barycenter.clone(), r, m)?;
        for (i, p) in cfg.poles.iter().enumerate() {
            if !grid.contains_strictly(p, 1e-12) {
                return Err(Error::Geometry(format!(
                    "pole {i} at {p:?} is not strictly inside the box of radius {r}"
                )));
            }
        }
        Ok(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        self.center[axis] - self.radius + i as f64 * self.spacing
    }

    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        let mut rest = flat;
        for d in 0..self.dim {
            out[d] = rest / self.strides[d];
            rest %= self.strides[d];
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, idx: &[usize], out: &mut [f64]) {
        for d in 0..self.dim {
            out[d] = self.axis_coord(d, idx[d]);
        }
    }

    pub fn is_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().any(|&i| i == 0 || i == self.points_per_axis - 1)
    }

    /// Trapezoid quadrature weight of the node: h^N times ½ per boundary axis.
    pub fn quad_weight(&self, idx: &[usize]) -> f64 {
        let mut w = self.spacing.powi(self.dim as i32);
        for &i in idx {
            if i == 0 || i == self.points_per_axis - 1 {
                w *= 0.5;
            }
        }
        w
    }

    pub fn contains_strictly(&self, p: &[f64], margin: f64) -> bool {
        p.len() == self.dim
            && p.iter()
                .zip(&self.center)
                .all(|(x, c)| (x - c).abs() < self.radius - margin)
    }

    /// Nearest grid node to an arbitrary point; returns (flat index, distance).
    pub fn nearest_node(&self, p: &[f64]) -> (usize, f64) {
        let mut idx = vec![0usize; self.dim];
        for d in 0..self.dim {
            let t = (p[d] - (self.center[d] - self.radius)) / self.spacing;
            let i = t.round().clamp(0.0, (self.points_per_axis - 1) as f64) as usize;
            idx[d] = i;
        }
        let mut node = vec![0.0; self.dim];
        self.point(&idx, &mut node);
        (self.flat_index(&idx), crate::util::dist(p, &node))
    }

    /// Visit every node in flat order with its multi-index and coordinates.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[usize], &[f64])) {
        let mut idx = vec![0usize; self.dim];
        let mut x = vec![0.0; self.dim];
        self.point(&idx, &mut x);
        for flat in 0..self.len {
            f(flat, &idx, &x);
            // odometer increment
            for d in (0..self.dim).rev() {
                idx[d] += 1;
                if idx[d] < self.points_per_axis {
                    x[d] = self.axis_coord(d, idx[d]);
                    break;
                }
                idx[d] = 0;
                x[d] = self.axis_coord(d, 0);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Smooth,
    /// Singular integrand sampled away from poles; records the excluded
    /// ball radius around each pole.
    Singular { excluded_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl ScalarField {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("field values must be finite at every node".into()));
        }
        Ok(ScalarField { grid, values, kind })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        grid.for_each(|flat, _, x| values[flat] = f(x));
        Self::from_values(grid, values, FieldKind::Smooth)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; len],
            kind: FieldKind::Smooth,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest |value| over the outermost node layer.
    pub fn boundary_max_abs(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.grid.clone().for_each(|flat, idx, _| {
            if self.grid.is_boundary(idx) {
                worst = worst.max(self.values[flat].abs());
            }
        });
        worst
    }

    /// Multilinear interpolation at an arbitrary point of the box.
    pub fn interp(&self, p: &[f64]) -> f64 {
        let g = &self.grid;
        let dim = g.dim();
        let m = g.points_per_axis();
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0f64; dim];
        for d in 0..dim {
            let t = (p[d] - (g.center()[d] - g.radius())) / g.spacing();
            let t = t.clamp(0.0, (m - 1) as f64);
            let i = (t.floor() as usize).min(m - 2);
            base[d] = i;
            frac[d] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut flat = 0;
            for d in 0..dim {
                let hi = (corner >> d) & 1 == 1;
                w *= if hi { frac[d] } else { 1.0 - frac[d] };
                flat += (base[d] + usize::from(hi)) * g.strides()[d];
            }
            acc += w * self.values[flat];
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    /// One component vector per axis.
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn norm_sq_at(&self, flat: usize) -> f64 {
        self.comps.iter().map(|c| c[flat] * c[flat]).sum()
    }
}

/// Finite-difference gradient: central differences in the interior,
/// second-order one-sided stencils on the box boundary.
pub fn gradient(field: &ScalarField) -> Result<VectorField> {
    let grid = &field.grid;
    let m = grid.points_per_axis();
    if m < 3 {
        return Err(Error::Resolution(format!(
            "gradient needs at least 3 points per axis, got {m}"
        )));
    }
    let h = grid.spacing();
    let vals = &field.values;
    let mut comps = vec![vec![0.0; grid.len()]; grid.dim()];
    let mut idx = vec![0usize; grid.dim()];
    for flat in 0..grid.len() {
        grid.multi_index(flat, &mut idx);
        for d in 0..grid.dim() {
            let s = grid.strides()[d];
            let i = idx[d];
            comps[d][flat] = if i == 0 {
                (-3.0 * vals[flat] + 4.0 * vals[flat + s] - vals[flat + 2 * s]) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * vals[flat] - 4.0 * vals[flat - s] + vals[flat - 2 * s]) / (2.0 * h)
            } else {
                (vals[flat + s] - vals[flat - s]) / (2.0 * h)
            };
        }
    }
    Ok(VectorField {
        grid: grid.clone(),
        comps,
    })
}

/// Trapezoidal tensor-product approximation of ∫_box f dx from node samples.
pub fn tensor_quadrature(field: &ScalarField) -> f64 {
    let grid = &field.grid;
    let mut acc = 0.0;
    grid.for_each(|flat, idx, _| {
        acc += grid.quad_weight(idx) * field.values[flat];
    });
    acc
}

/// Same as [`tensor_quadrature`] but sampling a function directly.
pub fn quadrature_of(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut acc = 0.0;
    grid.for_each(|_, idx, x| {
        acc += grid.quad_weight(idx) * f(x);
    });
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(radius: f64, m: usize) -> Arc<Grid> {
        Arc::new(Grid::new(vec![0.0, 0.0, 0.0], radius, m).unwrap())
    }

    #[test]
    fn index_round_trip() {
        let g = cube(2.0, 5);
        let mut idx = vec![0usize; 3];
        for flat in [0usize, 7, 63, 124] {
            g.multi_index(flat, &mut idx);
            assert_eq!(g.flat_index(&idx), flat);
        }
    }

    #[test]
    fn unit_box_volume() {
        let g = cube(1.0, 21);
        let one = ScalarField::from_fn(g, |_| 1.0).unwrap();
        assert!((tensor_quadrature(&one) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_integral_matches_closed_form() {
        let g = cube(6.0, 96);
        let f = ScalarField::from_fn(g, |x| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp())
            .unwrap();
        let got = tensor_quadrature(&f);
        let expect = (2.0 * std::f64::consts::PI).powf(1.5);
        assert!(
            (got - expect).abs() / expect < 1e-4,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn odd_integrand_cancels() {
        let g = cube(3.0, 33);
        let f = ScalarField::from_fn(g, |x| {
            x[0] * (-x.iter().map(|v| v * v).sum::<f64>()).exp()
        })
        .unwrap();
        assert!(tensor_quadrature(&f).abs() < 1e-12);
    }

    #[test]
    fn quadrature_linear_in_integrand() {
        let g = cube(2.0, 17);
        let f1 = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] + 0.3).unwrap();
        let f2 = ScalarField::from_fn(g.clone(), |x| (x[1] - 0.2).cos()).unwrap();
        let combo = ScalarField::from_fn(g, |x| {
            2.0 * (x[0] * x[0] + 0.3) - 0.7 * (x[1] - 0.2).cos()
        })
        .unwrap();
        let lhs = tensor_quadrature(&combo);
        let rhs = 2.0 * tensor_quadrature(&f1) - 0.7 * tensor_quadrature(&f2);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn quadrature_invariant_under_axis_relabel() {
        let g = cube(2.0, 17);
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) * (x[1] + 0.1).cos() + x[2];
        let swapped = |x: &[f64]| (x[2] - 0.3).powi(2) * (x[0] + 0.1).cos() + x[1];
        let a = quadrature_of(&g, f);
        let b = quadrature_of(&g, swapped);
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn gradient_exact_on_linear_and_quadratic() {
        let g = cube(2.0, 9);
        let lin = ScalarField::from_fn(g.clone(), |x| x[0]).unwrap();
        let gl = gradient(&lin).unwrap();
        g.clone().for_each(|flat, idx, _| {
            if !g.is_boundary(idx) {
                assert!((gl.comps[0][flat] - 1.0).abs() < 1e-12);
                assert!(gl.comps[1][flat].abs() < 1e-12);
                assert!(gl.comps[2][flat].abs() < 1e-12);
            }
        });
        let quad = ScalarField::from_fn(g.clone(), |x| x.iter().map(|v| v * v).sum()).unwrap();
        let gq = gradient(&quad).unwrap();
        let mut x = [0.0; 3];
        g.clone().for_each(|flat, idx, xs| {
            x.copy_from_slice(xs);
            if !g.is_boundary(idx) {
                for d in 0..3 {
                    assert!((gq.comps[d][flat] - 2.0 * x[d]).abs() < 1e-11);
                }
            }
        });
    }

    #[test]
    fn gradient_error_bounded_by_taylor_remainder() {
        // sin(x₁): central-difference error ≤ h²/6 · max|f‴|.
        let g = cube(4.0, 64);
        let f = ScalarField::from_fn(g.clone(), |x| x[0].sin()).unwrap();
        let gf = gradient(&f).unwrap();
        let h = g.spacing();
        let bound = h * h / 6.0 + 1e-12;
        let mut worst: f64 = 0.0;
        g.clone().for_each(|flat, idx, x| {
            if !g.is_boundary(idx) {
                worst = worst.max((gf.comps[0][flat] - x[0].cos()).abs());
            }
        });
        assert!(worst <= bound, "worst = {worst:.3e}, bound = {bound:.3e}");
    }

    #[test]
    fn gradient_rejects_tiny_grids() {
        let g = Arc::new(Grid::new(vec![0.0], 1.0, 2).unwrap());
        let f = ScalarField::from_fn(g, |x| x[0]).unwrap();
        match gradient(&f) {
            Err(Error::Resolution(_)) => {}
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn nearest_node_and_boundary() {
        let g = cube(2.0, 5);
        let (flat, d) = g.nearest_node(&[0.1, 0.1, 0.1]);
        let mut idx = vec![0usize; 3];
        g.multi_index(flat, &mut idx);
        assert_eq!(idx, vec![2, 2, 2]);
        assert!((d - (3.0_f64).sqrt() * 0.1).abs() < 1e-12);
        assert!(!g.is_boundary(&idx));
        assert!(g.is_boundary(&[0, 2, 2]));
    }

    #[test]
    fn nonfinite_field_rejected() {
        let g = cube(1.0, 4);
        let mut vals = vec![0.0; g.len()];
        vals[5] = f64::NAN;
        assert!(ScalarField::from_values(g, vals, FieldKind::Smooth).is_err());
    }
}
