//! Pseudohyperbolic geometry of the unit disk.
//!
//! Points are complex numbers of modulus below one. The pseudohyperbolic
//! metric `ψ(z, w) = |z − w| / |1 − w̄z|` and the involutions
//! `M_a(z) = (a − z) / (1 − āz)` are the basic objects; everything else in
//! the crate is built from them, the quadrature rules in [`grid`] and the
//! finite-difference operators in [`diff`].

pub mod diff;
pub mod grid;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::{dbar_fd, invariant_laplacian_fd, invariant_laplacian_fd_default};
pub use grid::{build_grid, circle_mean, DiskGrid, MeasureTag};

/// A point strictly inside the unit disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct DiskPoint(Complex64);

#[derive(Serialize, Deserialize)]
struct RawPoint {
    re: f64,
    im: f64,
}

impl TryFrom<RawPoint> for DiskPoint {
    type Error = Error;
    fn try_from(raw: RawPoint) -> Result<Self> {
        DiskPoint::new(raw.re, raw.im)
    }
}

impl From<DiskPoint> for RawPoint {
    fn from(p: DiskPoint) -> Self {
        RawPoint { re: p.re(), im: p.im() }
    }
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() && z.norm_sqr() < 1.0 {
            Ok(DiskPoint(z))
        } else {
            Err(Error::OutsideDisk { re: z.re, im: z.im })
        }
    }

    /// Real point `x` on the diameter. Panics if `|x| ≥ 1`.
    pub fn real(x: f64) -> Self {
        Self::new(x, 0.0).expect("real point outside the disk")
    }

    /// Wraps a value already known to lie in the disk. Debug builds check it.
    pub(crate) fn unchecked(z: Complex64) -> Self {
        debug_assert!(z.norm_sqr() < 1.0, "unchecked point {z} outside disk");
        DiskPoint(z)
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn z(self) -> Complex64 {
        self.0
    }

    pub fn norm(self) -> f64 {
        self.0.norm()
    }

    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }

    /// `1 − |z|²`
    pub fn defect(self) -> f64 {
        1.0 - self.0.norm_sqr()
    }

    /// Argument in `[0, 2π)`.
    pub fn arg_positive(self) -> f64 {
        let t = self.0.arg();
        if t < 0.0 {
            t + std::f64::consts::TAU
        } else {
            t
        }
    }
}

impl From<DiskPoint> for Complex64 {
    fn from(p: DiskPoint) -> Self {
        p.0
    }
}

/// `ψ(z, w)` on raw complex numbers; callers guarantee both lie in the disk.
#[inline]
pub fn psh(z: Complex64, w: Complex64) -> f64 {
    let den = Complex64::new(1.0, 0.0) - w.conj() * z;
    (z - w).norm() / den.norm()
}

/// `1 − ψ(z, w)²`, computed without cancellation.
#[inline]
pub fn psh_defect(z: Complex64, w: Complex64) -> f64 {
    let den = (Complex64::new(1.0, 0.0) - w.conj() * z).norm_sqr();
    (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()) / den
}

#[inline]
pub fn mobius_c(a: Complex64, z: Complex64) -> Complex64 {
    (a - z) / (Complex64::new(1.0, 0.0) - a.conj() * z)
}

/// Pseudohyperbolic distance.
pub fn psh_distance(z: DiskPoint, w: DiskPoint) -> f64 {
    psh(z.0, w.0)
}

/// Checked variant taking raw coordinates.
pub fn psh_distance_checked(z: Complex64, w: Complex64) -> Result<f64> {
    let z = DiskPoint::from_complex(z)?;
    let w = DiskPoint::from_complex(w)?;
    Ok(psh_distance(z, w))
}

/// The involution `M_a(z) = (a − z)/(1 − āz)` exchanging `a` and `0`.
pub fn mobius(a: DiskPoint, z: DiskPoint) -> DiskPoint {
    let w = mobius_c(a.0, z.0);
    // rounding can push |w| to 1 only when z is within ulps of the circle
    if w.norm_sqr() < 1.0 {
        DiskPoint(w)
    } else {
        DiskPoint(w * (1.0 - f64::EPSILON))
    }
}

/// Largest pairwise pseudohyperbolic distance.
pub fn psh_diameter(points: &[DiskPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyInput("psh_diameter needs at least one point"));
    }
    let mut best = 0.0_f64;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            best = best.max(psh_distance(p, q));
        }
    }
    Ok(best)
}

/// Pseudohyperbolic disk `D(center, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskRegion {
    pub center: DiskPoint,
    pub radius: f64,
}

impl DiskRegion {
    pub fn new(center: DiskPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(crate::error::invalid(
                "radius",
                format!("pseudohyperbolic radius must lie in (0,1), got {radius}"),
            ));
        }
        Ok(DiskRegion { center, radius })
    }

    /// Euclidean center and radius of the same set.
    pub fn euclidean(&self) -> (Complex64, f64) {
        let c = self.center.0;
        let r2 = self.radius * self.radius;
        let den = 1.0 - r2 * c.norm_sqr();
        (c * ((1.0 - r2) / den), self.radius * (1.0 - c.norm_sqr()) / den)
    }

    /// The pseudohyperbolic disk equal to the Euclidean disk `|z − c| < ρ`,
    /// which must lie inside the unit disk.
    pub fn from_euclidean(c: Complex64, rho: f64) -> Result<Self> {
        let m = c.norm();
        if !(rho > 0.0 && m + rho < 1.0) {
            return Err(crate::error::invalid(
                "rho",
                format!("Euclidean disk ({c}, {rho}) is not inside the unit disk"),
            ));
        }
        let dir = if m > 0.0 { c / m } else { Complex64::new(1.0, 0.0) };
        // rapidities add along a diameter
        let lo = (m - rho).atanh();
        let hi = (m + rho).atanh();
        let t = (0.5 * (hi + lo)).tanh();
        let r = (0.5 * (hi - lo)).tanh();
        DiskRegion::new(DiskPoint::from_complex(dir * t)?, r)
    }

    pub fn contains(&self, z: DiskPoint) -> bool {
        psh_distance(self.center, z) < self.radius
    }

    /// Pseudohyperbolic diameter, `2r/(1 + r²)`.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius / (1.0 + self.radius * self.radius)
    }

    /// Pseudohyperbolic distance from an interior point to the complement.
    pub fn margin(&self, z: DiskPoint) -> f64 {
        let t = psh_distance(self.center, z);
        if t >= self.radius {
            0.0
        } else {
            (self.radius - t) / (1.0 - self.radius * t)
        }
    }

    /// Largest modulus of a point of the closed region.
    pub fn max_modulus(&self) -> f64 {
        let (c, rho) = self.euclidean();
        c.norm() + rho
    }

    /// `n` points on the boundary circle.
    pub fn boundary_samples(&self, n: usize) -> Vec<DiskPoint> {
        let (c, rho) = self.euclidean();
        (0..n)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / n as f64;
                let z = c + Complex64::from_polar(rho, t);
                DiskPoint::from_complex(z).unwrap_or_else(|_| DiskPoint(z * (1.0 - 1e-15)))
            })
            .collect()
    }
}

/// Pseudohyperbolic sum of two radii along a diameter, `(s + t)/(1 + st)`.
pub fn psh_add(s: f64, t: f64) -> f64 {
    (s + t) / (1.0 + s * t)
}

/// `log(1/(1 − r²))`, accurate for small `r`.
pub fn log_defect(r2: f64) -> f64 {
    -(-r2).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    #[test]
    fn distance_examples() {
        let z = p(0.3, -0.4);
        assert_abs_diff_eq!(psh_distance(DiskPoint::ORIGIN, z), 0.5, epsilon = 1e-15);
        assert_eq!(psh_distance(z, z), 0.0);
        // |0.5 − 0.5i| / |1 + 0.25i| = sqrt(0.5 / 1.0625)
        let expected = (0.5_f64 / 1.0625).sqrt();
        assert_abs_diff_eq!(psh_distance(p(0.5, 0.0), p(0.0, 0.5)), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.685_994_340_570_035, epsilon = 1e-12);
    }

    #[test]
    fn outside_points_are_rejected() {
        assert!(DiskPoint::new(1.0, 0.0).is_err());
        assert!(DiskPoint::new(0.8, 0.6).is_err());
        assert!(DiskPoint::new(f64::NAN, 0.0).is_err());
        assert!(psh_distance_checked(Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn mobius_examples() {
        let a = p(0.2, 0.7);
        assert_abs_diff_eq!(mobius(a, a).norm(), 0.0, epsilon = 1e-16);
        let z = p(-0.1, 0.3);
        let w = mobius(DiskPoint::ORIGIN, z);
        assert_eq!(w.z(), -z.z());
        assert_eq!(mobius(p(0.5, 0.0), DiskPoint::ORIGIN).z(), Complex64::new(0.5, 0.0));
        let back = mobius(a, mobius(a, z));
        assert_abs_diff_eq!((back.z() - z.z()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diameter_examples() {
        assert!(psh_diameter(&[]).is_err());
        assert_eq!(psh_diameter(&[p(0.4, 0.1)]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            psh_diameter(&[DiskPoint::ORIGIN, p(0.5, 0.0)]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let pts = [DiskPoint::ORIGIN, p(0.5, 0.0), p(0.0, 0.5)];
        let brute = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| psh_distance(pts[i], pts[j]))
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(psh_diameter(&pts).unwrap(), brute, epsilon = 0.0);
        assert_abs_diff_eq!(brute, 0.685_994_340_570_035, epsilon = 1e-12);
    }

    #[test]
    fn region_round_trip_and_diameter() {
        let region = DiskRegion::new(p(0.3, -0.5), 0.4).unwrap();
        let (c, rho) = region.euclidean();
        let back = DiskRegion::from_euclidean(c, rho).unwrap();
        assert_abs_diff_eq!((back.center.z() - region.center.z()).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.radius, region.radius, epsilon = 1e-12);
        // boundary points are at distance r from the center
        for b in region.boundary_samples(16) {
            assert_abs_diff_eq!(psh_distance(region.center, b), 0.4, epsilon = 1e-12);
        }
        let half = DiskRegion::new(DiskPoint::ORIGIN, 0.5).unwrap();
        assert_abs_diff_eq!(half.diameter(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(half.margin(DiskPoint::ORIGIN), 0.5, epsilon = 1e-15);
    }
}
