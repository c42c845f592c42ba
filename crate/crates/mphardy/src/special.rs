//! Special functions: the Gamma function (Lanczos approximation) and the
//! surface area of the unit sphere.

use crate::error::{Error, Result};
use std::f64::consts::PI;

// Lanczos coefficients for g = 7, n = 9 (double precision).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real x (poles at nonpositive integers return an error).
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma argument must be finite, got {x}")));
    }
    if x <= 0.0 && (x - x.round()).abs() < 1e-300 {
        return Err(Error::Domain(format!("gamma pole at nonpositive integer {x}")));
    }
    if x < 0.5 {
        // Reflection Γ(x)Γ(1−x) = π / sin(πx).
        let s = (PI * x).sin();
        if s == 0.0 {
            return Err(Error::Domain(format!("gamma pole at {x}")));
        }
        return Ok(PI / (s * gamma(1.0 - x)?));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc)
}

/// Surface area of the unit (N−1)-sphere in ℝᴺ: 2 π^{N/2} / Γ(N/2).
pub fn sphere_surface_area(dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::Dimension("sphere dimension must be positive".into()));
    }
    let half = dim as f64 / 2.0;
    Ok(2.0 * PI.powf(half) / gamma(half)?)
}
