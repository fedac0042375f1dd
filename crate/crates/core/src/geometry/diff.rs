//! Finite-difference Wirtinger operators.
//!
//! `∂∂̄ = Δ/4`, so the invariant Laplacian `(1 − |z|²)² ∂∂̄u` is a quarter of
//! the Euclidean five-point Laplacian scaled by `(1 − |z|²)²`.

use num_complex::Complex64;

use super::DiskPoint;
use crate::error::{Error, Result};

fn stencil_point(z: DiskPoint, dz: Complex64, h: f64) -> Result<DiskPoint> {
    DiskPoint::from_complex(z.z() + dz).map_err(|_| Error::StencilOutsideDisk {
        re: z.re(),
        im: z.im(),
        h,
    })
}

/// `(1 − |z|²)² · (u_xx + u_yy)/4` by central differences; `O(h²)` for `C⁴`
/// functions.
pub fn invariant_laplacian_fd<F: Fn(DiskPoint) -> f64>(f: F, z: DiskPoint, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(crate::error::invalid("h", format!("step must be positive, got {h}")));
    }
    let e = stencil_point(z, Complex64::new(h, 0.0), h)?;
    let w = stencil_point(z, Complex64::new(-h, 0.0), h)?;
    let n = stencil_point(z, Complex64::new(0.0, h), h)?;
    let s = stencil_point(z, Complex64::new(0.0, -h), h)?;
    let lap = (f(e) + f(w) + f(n) + f(s) - 4.0 * f(z)) / (h * h);
    let d = z.defect();
    Ok(d * d * lap / 4.0)
}

/// Default step, `1e-4 · (1 − |z|²)`.
pub fn default_step(z: DiskPoint) -> f64 {
    1e-4 * z.defect()
}

pub fn invariant_laplacian_fd_default<F: Fn(DiskPoint) -> f64>(f: F, z: DiskPoint) -> Result<f64> {
    invariant_laplacian_fd(f, z, default_step(z))
}

/// `∂̄u = (u_x + i u_y)/2` by central differences.
pub fn dbar_fd<F: Fn(DiskPoint) -> Complex64>(f: F, z: DiskPoint, h: f64) -> Result<Complex64> {
    let e = stencil_point(z, Complex64::new(h, 0.0), h)?;
    let w = stencil_point(z, Complex64::new(-h, 0.0), h)?;
    let n = stencil_point(z, Complex64::new(0.0, h), h)?;
    let s = stencil_point(z, Complex64::new(0.0, -h), h)?;
    let ux = (f(e) - f(w)) / (2.0 * h);
    let uy = (f(n) - f(s)) / (2.0 * h);
    Ok((ux + Complex64::i() * uy) * 0.5)
}
