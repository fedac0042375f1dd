//! The product `Ψ_Z` vanishing on `Z`, the zero-set space norm and division
//! by `Ψ_Z`.
//!
//! `Ψ_Z(z) = z^m ∏_{a ≠ 0} ā M_a(z) exp(1 − ā M_a(z))` with `m` the
//! multiplicity of the origin. Everything is summed in log-space, so sets
//! with thousands of points neither underflow nor overflow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::grid::polar_integral;
use crate::geometry::DiskPoint;
use crate::sequences::{k_function, PointSet};
use crate::weights::Weight;

/// Neumaier compensated sum.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductEvaluation {
    /// `log |Ψ_Z(z)|`, `−∞` at points of `Z`.
    pub log_modulus: f64,
    /// `Ψ_Z(z)/|Ψ_Z(z)|`; `1` at points of `Z`.
    pub phase: Complex64,
    /// Order of vanishing when `z ∈ Z`.
    pub zero_order: Option<u32>,
    /// Factors evaluated, counting multiplicity.
    pub terms_used: u64,
}

impl ProductEvaluation {
    pub fn is_zero(&self) -> bool {
        self.zero_order.is_some()
    }

    pub fn modulus(&self) -> f64 {
        self.log_modulus.exp()
    }

    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.phase * self.log_modulus.exp()
        }
    }
}

/// Evaluates `Ψ_Z(z)`.
pub fn psi_eval(z_set: &PointSet, z: DiskPoint) -> ProductEvaluation {
    let zc = z.z();
    let mut log_mod = Compensated::default();
    let mut arg = Compensated::default();
    let mut terms = 0;
    for wp in z_set.iter() {
        let m = wp.mult as f64;
        terms += wp.mult as u64;
        let a = wp.point.z();
        if a == zc {
            return ProductEvaluation {
                log_modulus: f64::NEG_INFINITY,
                phase: Complex64::new(1.0, 0.0),
                zero_order: Some(wp.mult),
                terms_used: terms,
            };
        }
        if a == Complex64::new(0.0, 0.0) {
            log_mod.add(m * zc.norm().ln());
            arg.add(m * zc.arg());
            continue;
        }
        let num = a - zc;
        let den = Complex64::new(1.0, 0.0) - a.conj() * zc;
        let s = a.conj() * num / den;
        log_mod.add(m * (a.norm().ln() + num.norm().ln() - den.norm().ln() + 1.0 - s.re));
        arg.add(m * ((a.conj() * num / den).arg() - s.im));
    }
    ProductEvaluation {
        log_modulus: log_mod.value(),
        phase: Complex64::from_polar(1.0, arg.value()),
        zero_order: None,
        terms_used: terms,
    }
}

/// `log |Ψ_Z(0)| = Σ (log |a|² + 1 − |a|²)`.
pub fn log_psi_at_zero(z_set: &PointSet) -> Result<f64> {
    let mut acc = Compensated::default();
    for wp in z_set.iter() {
        let a2 = wp.point.norm_sqr();
        if a2 == 0.0 {
            return Err(Error::OriginInSequence { min_distance: 0.0 });
        }
        acc.add(wp.mult as f64 * (a2.ln() + 1.0 - a2));
    }
    Ok(acc.value())
}

/// `|Ψ_Z(0)| = ∏ |a|² e^{1 − |a|²}`.
pub fn psi_at_zero(z_set: &PointSet) -> Result<f64> {
    log_psi_at_zero(z_set).map(f64::exp)
}

/// As [`psi_at_zero`], also rejecting points with `|a| < delta`.
pub fn psi_at_zero_away(z_set: &PointSet, delta: f64) -> Result<f64> {
    if z_set.iter().any(|wp| wp.point.norm() < delta) {
        return Err(Error::OriginInSequence { min_distance: delta });
    }
    psi_at_zero(z_set)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSpaceNorm {
    /// `∫_{|z| ≤ r_max} |F e^{−φ}|^p e^{p k_Z} (1 − |z|²)^{αp − 1} dA`.
    pub value: f64,
    pub r_max: f64,
    /// Share of the outermost radial panel.
    pub tail_share: f64,
}

pub const DEFAULT_R_MAX: f64 = 0.999;

/// Truncated zero-set space norm of `F` (the `p`-th power).
pub fn zero_space_norm<F>(
    f: F,
    z_set: &PointSet,
    phi: &Weight,
    p: f64,
    alpha: f64,
    quad_res: usize,
    r_max: f64,
) -> Result<ZeroSpaceNorm>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be positive, got {p}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let (value, last) = polar_integral(
        |z: DiskPoint| {
            let fz = f(z.z()).norm();
            if fz == 0.0 {
                return 0.0;
            }
            (p * (fz.ln() - phi.eval(z) + k_function(z_set, z))).exp() * z.defect().powf(alpha * p - 1.0)
        },
        r_max,
        quad_res,
    )?;
    Ok(ZeroSpaceNorm {
        value,
        r_max,
        tail_share: if value > 0.0 { last / value } else { 0.0 },
    })
}

/// Nodes on each Cauchy circle.
const CAUCHY_NODES: usize = 128;
/// Relative size of low Taylor coefficients accepted as zero.
pub const VANISHING_TOL: f64 = 1e-8;

/// Division by `Ψ_Z` with the removable singularities filled in.
///
/// Within `0.5 s_a` of `a ∈ Z`, where `s_a` is the Euclidean distance from
/// `a` to the rest of `Z` and to the circle, the quotient is evaluated by
/// Cauchy's formula on `|ζ − a| = 0.75 s_a`.
pub struct ProductDivider<'a> {
    z_set: &'a PointSet,
    local: Vec<f64>,
}

impl<'a> ProductDivider<'a> {
    pub fn new(z_set: &'a PointSet) -> Self {
        let pts: Vec<Complex64> = z_set.iter().map(|wp| wp.point.z()).collect();
        let local = pts
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                pts.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &b)| (a - b).norm())
                    .fold(1.0 - a.norm(), f64::min)
            })
            .collect();
        ProductDivider { z_set, local }
    }

    /// `f(z)/Ψ_Z(z)`. `f` must vanish on `Z` to the given multiplicities.
    pub fn divide<F: Fn(Complex64) -> Complex64>(&self, f: F, z: DiskPoint) -> Result<Complex64> {
        let zc = z.z();
        let near = self
            .z_set
            .iter()
            .zip(&self.local)
            .find(|(wp, &s)| (wp.point.z() - zc).norm() < 0.5 * s);
        let Some((wp, &s)) = near else {
            return Ok(f(zc) / psi_eval(self.z_set, z).value());
        };
        let a = wp.point.z();
        let rho = 0.75 * s;
        let n = CAUCHY_NODES;
        let mut fvals = Vec::with_capacity(n);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            let zeta = a + e * rho;
            let fz = f(zeta);
            let psi = psi_eval(self.z_set, DiskPoint::from_complex(zeta)?).value();
            // (1/2πi)∮ g(ζ)/(ζ − z) dζ with dζ = iρe dθ
            acc += fz / psi * e * rho / (zeta - zc);
            fvals.push((e, fz));
        }
        let scale = fvals.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        for d in 0..wp.mult {
            // ρ^d f^{(d)}(a)/d! from the same samples
            let c: Complex64 = fvals.iter().map(|(e, v)| v * e.powu(d).conj()).sum::<Complex64>() / n as f64;
            if c.norm() > VANISHING_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotVanishing {
                    re: a.re,
                    im: a.im,
                    order: wp.mult,
                    residual: c.norm() / scale,
                });
            }
        }
        Ok(acc / n as f64)
    }
}

/// `f(z)/Ψ_Z(z)` at a single point.
pub fn divide_by_product<F: Fn(Complex64) -> Complex64>(f: F, z_set: &PointSet, z: DiskPoint) -> Result<Complex64> {
    ProductDivider::new(z_set).divide(f, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::psh;
    use crate::weights::standard_weight;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zero_weight() -> Weight {
        Weight::new("zero", Arc::new(|_| 0.0), Some(Arc::new(|_| 0.0)), 0.0, 0.0).unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, r: f64) -> PointSet {
        PointSet::from_points((0..n).map(|_| {
            let rad = r * rng.gen::<f64>().sqrt();
            DiskPoint::from_complex(Complex64::from_polar(rad, rng.gen_range(0.0..2.0 * PI))).unwrap()
        }))
    }

    #[test]
    fn small_examples() {
        let e = psi_eval(&PointSet::empty(), p(0.3, 0.2));
        assert_eq!((e.log_modulus, e.value()), (0.0, c(1.0, 0.0)));
        let origin = PointSet::from_points([DiskPoint::ORIGIN]);
        let w = p(0.3, -0.4);
        assert!((psi_eval(&origin, w).value() - w.z()).norm() < 1e-15);
        let a = p(0.4, 0.1);
        let single = PointSet::with_multiplicities([(a, 2)]).unwrap();
        assert_eq!(psi_eval(&single, a).zero_order, Some(2));
        let half = PointSet::from_points([DiskPoint::new(0.5f64.sqrt(), 0.0).unwrap()]);
        assert_abs_diff_eq!(psi_at_zero(&half).unwrap(), 0.5 * 0.5f64.exp(), epsilon = 1e-15);
        assert_eq!(psi_at_zero(&PointSet::empty()).unwrap(), 1.0);
        assert!(psi_at_zero(&origin).is_err());
        assert!(psi_at_zero_away(&half, 0.8).is_err());
    }

    #[test]
    fn direct_factor_formula() {
        let pts = [p(0.4, 0.1), p(-0.2, 0.5), p(0.7, -0.6)];
        let set = PointSet::with_multiplicities([(pts[0], 1), (pts[1], 2), (pts[2], 1)]).unwrap();
        let z = c(0.1, -0.3);
        let mut direct = c(1.0, 0.0);
        for (a, m) in [(pts[0].z(), 1), (pts[1].z(), 2), (pts[2].z(), 1)] {
            let s = a.conj() * (a - z) / (c(1.0, 0.0) - a.conj() * z);
            direct *= (s * (c(1.0, 0.0) - s).exp()).powu(m);
        }
        let ev = psi_eval(&set, DiskPoint::from_complex(z).unwrap());
        assert!((ev.value() - direct).norm() < 1e-14 * direct.norm());
        assert_eq!(ev.terms_used, 4);
    }

    #[test]
    fn zero_at_origin_matches_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = random_set(&mut rng, 200, 0.95);
        let direct = psi_eval(&set, DiskPoint::ORIGIN).log_modulus;
        assert_abs_diff_eq!(direct, log_psi_at_zero(&set).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn large_sets_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = random_set(&mut rng, 10_000, 0.999);
        let ev = psi_eval(&set, p(0.01, 0.02));
        assert!(
            ev.log_modulus.is_finite() && ev.log_modulus < -500.0,
            "{}",
            ev.log_modulus
        );
        assert!((ev.phase.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vanishes_only_on_the_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set = random_set(&mut rng, 30, 0.9);
        for wp in set.iter() {
            assert!(psi_eval(&set, wp.point).modulus() < 1e-12);
        }
        for _ in 0..200 {
            let z = DiskPoint::from_complex(Complex64::from_polar(0.95 * rng.gen::<f64>(), rng.gen_range(0.0..7.0)))
                .unwrap();
            if set.iter().all(|wp| psh(z.z(), wp.point.z()) >= 0.01) {
                assert!(psi_eval(&set, z).modulus() > 0.0);
            }
        }
    }

    #[test]
    fn round_trip_recovers_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut set = random_set(&mut rng, 60, 0.9);
        set = set.union(&PointSet::with_multiplicities([(p(0.2, 0.2), 2), (DiskPoint::ORIGIN, 1)]).unwrap());
        let g = |z: Complex64| c(1.0, 0.5) + z * c(-2.0, 0.3) + z * z * z * 0.7;
        let div = ProductDivider::new(&set);
        let f = |z: Complex64| psi_eval(&set, DiskPoint::from_complex(z).unwrap()).value() * g(z);
        let mut probes: Vec<DiskPoint> = (0..100)
            .map(|_| {
                DiskPoint::from_complex(Complex64::from_polar(0.93 * rng.gen::<f64>(), rng.gen_range(0.0..7.0)))
                    .unwrap()
            })
            .collect();
        // points just off Z exercise the Cauchy branch
        probes.extend(
            set.iter()
                .map(|wp| DiskPoint::from_complex(wp.point.z() + c(1e-7, -2e-7)).unwrap()),
        );
        for z in probes {
            let got = div.divide(f, z).unwrap();
            assert!((got - g(z.z())).norm() < 1e-10, "z = {:?}: {} vs {}", z, got, g(z.z()));
        }
        // on Z itself
        for wp in set.iter() {
            assert!((div.divide(f, wp.point).unwrap() - g(wp.point.z())).norm() < 1e-10);
        }
    }

    #[test]
    fn trivial_quotients() {
        let origin = PointSet::from_points([DiskPoint::ORIGIN]);
        for z in [p(0.0, 0.0), p(0.3, 0.1), p(-0.8, 0.1)] {
            assert!((divide_by_product(|w| w, &origin, z).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        }
        let set = PointSet::from_points([p(0.3, 0.1), p(-0.4, 0.2)]);
        let psi = |w: Complex64| psi_eval(&set, DiskPoint::from_complex(w).unwrap()).value();
        assert!((divide_by_product(psi, &set, p(0.3, 0.1)).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        let err = divide_by_product(|w| w + 1.0, &set, p(0.3, 0.1)).unwrap_err();
        assert!(matches!(err, Error::NotVanishing { .. }));
        // simple zero where a double one is required
        let double = PointSet::with_multiplicities([(p(0.3, 0.1), 2)]).unwrap();
        assert!(divide_by_product(|w| w - c(0.3, 0.1), &double, p(0.3, 0.1)).is_err());
    }

    #[test]
    fn space_norm_examples() {
        let phi = zero_weight();
        let empty = PointSet::empty();
        let (pp, alpha, r) = (2.0, 0.75, 0.99);
        let v = zero_space_norm(|_| c(1.0, 0.0), &empty, &phi, pp, alpha, 48, r).unwrap();
        let exact = PI / (alpha * pp) * (1.0 - (1.0 - r * r).powf(alpha * pp));
        assert!((v.value - exact).abs() < 1e-10 * exact, "{} vs {exact}", v.value);
        assert!(v.tail_share > 0.0 && v.tail_share < 1.0);
        let zero = zero_space_norm(|_| c(0.0, 0.0), &empty, &phi, pp, alpha, 16, r).unwrap();
        assert_eq!(zero.value, 0.0);
        let small = PointSet::from_points([p(0.3, 0.0)]);
        let big = small.union(&PointSet::from_points([p(-0.5, 0.5)]));
        let f = |z: Complex64| c(1.0, 0.0) + z;
        let phi1 = standard_weight(1.0).unwrap();
        let a = zero_space_norm(f, &small, &phi1, pp, alpha, 32, 0.99).unwrap().value;
        let b = zero_space_norm(f, &big, &phi1, pp, alpha, 32, 0.99).unwrap().value;
        assert!(b > a);
    }

    #[test]
    fn correspondence_identity_at_random_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let set = random_set(&mut rng, 20, 0.9);
        let phi = standard_weight(1.0).unwrap();
        let g = |z: Complex64| c(0.5, 0.0) - z * z;
        let (pp, alpha) = (3.0, 0.5);
        for _ in 0..50 {
            let z = DiskPoint::from_complex(Complex64::from_polar(0.95 * rng.gen::<f64>(), rng.gen_range(0.0..7.0)))
                .unwrap();
            let psi = psi_eval(&set, z);
            let f = psi.value() * g(z.z());
            let common = (-pp * phi.eval(z)).exp() * z.defect().powf(alpha * pp - 1.0);
            let lhs = f.norm().powf(pp) * common;
            let rhs = g(z.z()).norm().powf(pp) * psi.modulus().powf(pp) * common;
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }
    }
}
