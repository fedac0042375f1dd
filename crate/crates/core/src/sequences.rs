//! Finite multisets of disk points and the `k_Z` function.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{mobius, psh, psh_add, psh_defect, DiskPoint};

/// A disk point with a positive multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    #[serde(flatten)]
    pub point: DiskPoint,
    pub mult: u32,
}

/// A finite multiset `Z` of points in the disk.
///
/// Points are kept in canonical order (by modulus, then by argument in
/// `[0, 2π)`) with equal points merged, so every derived quantity is
/// reproducible given the same input.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<WeightedPoint>", into = "Vec<WeightedPoint>")]
pub struct PointSet {
    points: Vec<WeightedPoint>,
}

impl TryFrom<Vec<WeightedPoint>> for PointSet {
    type Error = Error;
    fn try_from(points: Vec<WeightedPoint>) -> Result<Self> {
        PointSet::with_multiplicities(points.into_iter().map(|p| (p.point, p.mult)))
    }
}

impl From<PointSet> for Vec<WeightedPoint> {
    fn from(z: PointSet) -> Self {
        z.points
    }
}

fn canonical_cmp(a: &DiskPoint, b: &DiskPoint) -> Ordering {
    a.norm_sqr()
        .total_cmp(&b.norm_sqr())
        .then_with(|| a.arg_positive().total_cmp(&b.arg_positive()))
        .then_with(|| a.re().total_cmp(&b.re()))
        .then_with(|| a.im().total_cmp(&b.im()))
}

impl PointSet {
    pub fn empty() -> Self {
        PointSet::default()
    }

    /// Each listed point with multiplicity one; repeats accumulate.
    pub fn from_points<I: IntoIterator<Item = DiskPoint>>(points: I) -> Self {
        Self::with_multiplicities(points.into_iter().map(|p| (p, 1))).expect("multiplicity one is valid")
    }

    pub fn with_multiplicities<I: IntoIterator<Item = (DiskPoint, u32)>>(points: I) -> Result<Self> {
        let mut raw: Vec<WeightedPoint> = Vec::new();
        for (point, mult) in points {
            if mult == 0 {
                return Err(invalid("mult", "multiplicities must be at least 1"));
            }
            raw.push(WeightedPoint { point, mult });
        }
        raw.sort_by(|a, b| canonical_cmp(&a.point, &b.point));
        let mut merged: Vec<WeightedPoint> = Vec::with_capacity(raw.len());
        for p in raw {
            match merged.last_mut() {
                Some(last) if last.point == p.point => last.mult += p.mult,
                _ => merged.push(p),
            }
        }
        Ok(PointSet { points: merged })
    }

    pub fn from_complex<I: IntoIterator<Item = Complex64>>(points: I) -> Result<Self> {
        let pts: Result<Vec<DiskPoint>> = points.into_iter().map(DiskPoint::from_complex).collect();
        Ok(Self::from_points(pts?))
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightedPoint> + '_ {
        self.points.iter()
    }

    pub fn points(&self) -> &[WeightedPoint] {
        &self.points
    }

    /// Distinct points, ignoring multiplicity.
    pub fn distinct(&self) -> Vec<DiskPoint> {
        self.points.iter().map(|p| p.point).collect()
    }

    /// Points repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<DiskPoint> {
        self.points
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.point, p.mult as usize))
            .collect()
    }

    pub fn distinct_len(&self) -> usize {
        self.points.len()
    }

    /// Cardinality counting multiplicity.
    pub fn total(&self) -> u64 {
        self.points.iter().map(|p| p.mult as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn multiplicity_of(&self, z: DiskPoint) -> u32 {
        self.points.iter().find(|p| p.point == z).map_or(0, |p| p.mult)
    }

    /// Multiset union.
    pub fn union(&self, other: &PointSet) -> PointSet {
        Self::with_multiplicities(self.points.iter().chain(other.points.iter()).map(|p| (p.point, p.mult)))
            .expect("multiplicities already positive")
    }

    /// Multiset containment `self ⊆ other`.
    pub fn is_subset_of(&self, other: &PointSet) -> bool {
        self.points.iter().all(|p| other.multiplicity_of(p.point) >= p.mult)
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.point.norm()).fold(0.0, f64::max)
    }
}

/// `k_Z(z) = Σ (1 − |a|²)² |z|² / (2|1 − āz|²)`, counting multiplicity.
pub fn k_function(z_set: &PointSet, z: DiskPoint) -> f64 {
    let zc = z.z();
    let z2 = zc.norm_sqr();
    if z2 == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for p in z_set.iter() {
        let a = p.point.z();
        let d = 1.0 - a.norm_sqr();
        let den = (Complex64::new(1.0, 0.0) - a.conj() * zc).norm_sqr();
        sum += p.mult as f64 * d * d / den;
    }
    0.5 * z2 * sum
}

/// Closed-form invariant Laplacian of `k_Z`: `Σ (1 − ψ(z, a)²)² / 2`.
pub fn k_laplacian(z_set: &PointSet, z: Complex64) -> f64 {
    let mut sum = 0.0;
    for p in z_set.iter() {
        let d = psh_defect(z, p.point.z());
        sum += p.mult as f64 * d * d;
    }
    0.5 * sum
}

/// Circle mean of `k_Z` on `|z| = r`: `(r²/2) Σ (1 − |a|²)² / (1 − |a|² r²)`.
pub fn k_hat(z_set: &PointSet, r: f64) -> f64 {
    let r2 = r * r;
    let mut sum = 0.0;
    for p in z_set.iter() {
        let a2 = p.point.norm_sqr();
        let d = 1.0 - a2;
        sum += p.mult as f64 * d * d / (1.0 - a2 * r2);
    }
    0.5 * r2 * sum
}

/// `Σ (1 − |a|²)²` counting multiplicity.
pub fn square_summability(z_set: &PointSet) -> f64 {
    z_set
        .iter()
        .map(|p| {
            let d = p.point.defect();
            p.mult as f64 * d * d
        })
        .sum()
}

/// Smallest pseudohyperbolic distance between distinct points, or `0` when
/// some point is repeated.
pub fn separation(z_set: &PointSet) -> Result<f64> {
    if z_set.distinct_len() < 2 {
        return Err(Error::SeparationUndefined);
    }
    if z_set.iter().any(|p| p.mult > 1) {
        return Ok(0.0);
    }
    let pts = z_set.distinct();
    let mut best = f64::INFINITY;
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            best = best.min(psh(a.z(), b.z()));
        }
    }
    Ok(best)
}

/// Pointwise image under `M_a`, multiplicities preserved.
pub fn transform(z_set: &PointSet, a: DiskPoint) -> PointSet {
    PointSet::with_multiplicities(z_set.iter().map(|p| (mobius(a, p.point), p.mult)))
        .expect("multiplicities already positive")
}

/// Multiplicity-counted number of points in `D(center, radius)`.
pub fn count_in_disk(z_set: &PointSet, center: DiskPoint, radius: f64) -> u64 {
    z_set
        .iter()
        .filter(|p| psh(p.point.z(), center.z()) < radius)
        .map(|p| p.mult as u64)
        .sum()
}

/// Largest count of `Z ∩ D(a, R)` over a finite search set of centers: all
/// points of `Z` plus a hyperbolic lattice of spacing `R` covering the
/// pseudohyperbolic hull of `Z`. Every reported value is attained, so the
/// result is a certified lower bound for the supremum over all `a`.
pub fn density_count(z_set: &PointSet, radius: f64) -> Result<u64> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(invalid("R", format!("must lie in (0,1), got {radius}")));
    }
    if z_set.is_empty() {
        return Ok(0);
    }
    let reach = psh_add(z_set.max_modulus(), radius).min(1.0 - 1e-12);
    let mut centers = z_set.distinct();
    centers.extend(hyperbolic_lattice(radius, reach)?.distinct());
    Ok(centers
        .iter()
        .map(|&c| count_in_disk(z_set, c, radius))
        .max()
        .unwrap_or(0))
}

/// Hyperbolic lattice: rings at pseudohyperbolic radii `ρ_{j+1} = ρ_j ⊕
/// spacing` starting from the origin, each ring holding the fewest equally
/// spaced points whose neighbours are at most `spacing` apart, alternate
/// rings rotated by half a step. Truncated at `|z| ≤ r_max`.
///
/// Rings do not depend on `r_max`, so raising it only appends points.
pub fn hyperbolic_lattice(spacing: f64, r_max: f64) -> Result<PointSet> {
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(invalid("spacing", format!("must lie in (0,1), got {spacing}")));
    }
    if !(0.0..1.0).contains(&r_max) {
        return Err(invalid("r_max", format!("must lie in [0,1), got {r_max}")));
    }
    let mut pts = vec![DiskPoint::ORIGIN];
    let mut rho = 0.0;
    let mut ring = 0usize;
    loop {
        rho = psh_add(rho, spacing);
        ring += 1;
        if rho > r_max {
            break;
        }
        let n = ring_count(rho, spacing);
        let offset = if ring % 2 == 1 { 0.0 } else { 0.5 };
        for j in 0..n {
            let t = TAU * (j as f64 + offset) / n as f64;
            pts.push(DiskPoint::unchecked(Complex64::from_polar(rho, t)));
        }
    }
    Ok(PointSet::from_points(pts))
}

/// Fewest points on the circle `|z| = rho` with neighbours within `spacing`.
fn ring_count(rho: f64, spacing: f64) -> usize {
    // ψ(ρ, ρe^{iθ}) = ρ|1 − e^{iθ}| / |1 − ρ²e^{iθ}|; solve ψ = spacing for θ
    let chord = |theta: f64| psh(Complex64::new(rho, 0.0), Complex64::from_polar(rho, theta));
    if chord(std::f64::consts::PI) <= spacing {
        return 1;
    }
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if chord(mid) < spacing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (TAU / lo).ceil() as usize
}
