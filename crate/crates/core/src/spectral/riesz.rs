//! Spectral projector as a trapezoidal contour integral of the resolvent.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{SparseOperator, C64};

/// `P = −(1/2πi) ∮ (H − z)⁻¹ dz` over `|z − center| = radius`, guarded at
/// `radius / 8`.
pub fn riesz_projection(h: &SparseOperator, center: f64, radius: f64, nodes: usize) -> Result<DMatrix<C64>> {
    riesz_projection_guarded(h, center, radius, nodes, radius / 8.0)
}

/// As [`riesz_projection`], refusing when an eigenvalue lies within `guard`
/// of the circle.
pub fn riesz_projection_guarded(
    h: &SparseOperator,
    center: f64,
    radius: f64,
    nodes: usize,
    guard: f64,
) -> Result<DMatrix<C64>> {
    if !(radius > 0.0) || nodes < 2 {
        return Err(Error::InvalidParameter {
            field: "riesz",
            reason: format!("need radius > 0 and at least two nodes (got {radius}, {nodes})"),
        });
    }
    let dense = h.to_dense();
    let spectrum = dense.clone().symmetric_eigenvalues();
    for &mu in spectrum.iter() {
        let distance = ((mu - center).abs() - radius).abs();
        if distance < guard {
            let side = if mu >= center { 1.0 } else { -1.0 };
            return Err(Error::NearSpectrum {
                re: center + side * radius,
                im: 0.0,
                distance,
                guard,
            });
        }
    }

    let n = h.dim();
    let mut p = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for k in 0..nodes {
        // Half-step offset keeps every node off the real axis.
        let theta = 2.0 * PI * (k as f64 + 0.5) / nodes as f64;
        let e = C64::from_polar(1.0, theta);
        let z = C64::new(center, 0.0) + e * radius;
        let mut shifted = dense.clone();
        for i in 0..n {
            shifted[(i, i)] -= z;
        }
        let inv = shifted
            .lu()
            .try_inverse()
            .ok_or(Error::SingularShift { re: z.re, im: z.im })?;
        if inv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::SingularShift { re: z.re, im: z.im });
        }
        p += inv * (e * (-radius / nodes as f64));
    }
    Ok(p)
}
