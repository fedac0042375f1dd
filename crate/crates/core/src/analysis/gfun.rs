//! Analytic functions `g_a` with `|g_a e^{k_Z − φ}| ≤ (1 − |M_a|²)^{−s}`,
//! `s = α − ε`, and `|g_a(a) e^{k_Z(a) − φ(a)}| ≥ δ`.
//!
//! In the coordinate `ζ = M_a(z)` put
//!
//! ```text
//! P(ζ) = k_{Z_a}(ζ) − τ_a(ζ) − s L(ζ),   L(ζ) = log(1/(1 − |ζ|²)),
//! ```
//!
//! with `τ_a` the potential of `Δ̃φ ∘ M_a` from [`green_potential`]. The
//! difference `h = (k_{Z_a} − k_Z ∘ M_a) + (φ ∘ M_a − τ_a)` is harmonic. Its
//! analytic completion `H` (`Re H = h`) is read off from the Fourier series
//! of `h` on `|ζ| = r_outer`, and
//!
//! ```text
//! log |g_a e^{k_Z − φ}| + s L = Re H − C + k_Z ∘ M_a − φ ∘ M_a + s L = P − C
//! ```
//!
//! for `g_a = exp(H ∘ M_a − C)`. `C` is the maximum of `P` over
//! `|ζ| ≤ r_compact`; the upper bound is then checked by direct evaluation
//! out to `|ζ| = r_outer`. When the density of `Z` exceeds `s` the excess
//! shows up as `P` growing past `C` in the outer annulus.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::density::transport_defect;
use crate::error::{invalid, Result};
use crate::geometry::{log_defect, mobius_c, DiskPoint};
use crate::sequences::{k_function, transform, PointSet};
use crate::weights::{green_potential, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GOptions {
    /// Radius of the conjugation circle and of the outermost check ring.
    pub r_outer: f64,
    /// `C` is the maximum of `P` over `|ζ| ≤ r_compact`.
    pub r_compact: f64,
    /// Angles on the conjugation circle; `0` picks a power of two resolving
    /// features of width `1 − r_outer`.
    pub circle_res: usize,
    /// Rings inside `r_compact`; the outer annulus gets half as many.
    pub radial_res: usize,
    /// Resolution of the potential `τ_a`.
    pub potential_res: usize,
    /// Relative slack of both bound checks.
    pub tol: f64,
}

impl Default for GOptions {
    fn default() -> Self {
        GOptions {
            r_outer: 0.99,
            r_compact: 0.9,
            circle_res: 0,
            radial_res: 48,
            potential_res: 16,
            tol: 1e-6,
        }
    }
}

impl GOptions {
    fn angles(&self) -> usize {
        if self.circle_res > 0 {
            self.circle_res
        } else {
            ((8.0 / (1.0 - self.r_outer)).ceil() as usize)
                .max(256)
                .next_power_of_two()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_compact > 0.0 && self.r_compact < self.r_outer && self.r_outer < 1.0) {
            return Err(invalid(
                "r_compact",
                format!(
                    "need 0 < r_compact < r_outer < 1, got {} and {}",
                    self.r_compact, self.r_outer
                ),
            ));
        }
        if self.radial_res < 2 {
            return Err(invalid("radial_res", "need at least 2 rings"));
        }
        if !(self.tol >= 0.0) {
            return Err(invalid("tol", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Samples of `g_a` data that do not depend on `α` or `ε`.
pub struct GSetup {
    a: DiskPoint,
    opts: GOptions,
    rho: f64,
    /// Taylor coefficients of `H` in `ζ/ρ`.
    coeffs: Vec<Complex64>,
    samples: Vec<Sample>,
    conjugation_error: f64,
}

#[derive(Clone, Copy)]
struct Sample {
    zeta: Complex64,
    compact: bool,
    /// `L(ζ)`.
    l: f64,
    /// `k_{Z_a} − τ_a`.
    p0: f64,
    /// `Re H + k_Z ∘ M_a − φ ∘ M_a`.
    q0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GBoundReport {
    /// Largest sampled `|g_a e^{k_Z − φ}| (1 − |M_a|²)^{s}`.
    pub upper_max: f64,
    /// Where it is attained.
    pub worst: Complex64,
    /// `|ζ|` at the worst sample.
    pub worst_radius: f64,
    /// `|g_a(a) e^{k_Z(a) − φ(a)}|`.
    pub value_at_a: f64,
    /// `e^{−C}`.
    pub delta: f64,
    pub upper_pass: bool,
    pub lower_pass: bool,
    pub pass: bool,
    /// Largest `|Re H − h|` over the compact samples.
    pub conjugation_error: f64,
    pub samples: usize,
}

/// `g_a = exp(H ∘ M_a − C)` with its bound report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GFunction {
    pub a: DiskPoint,
    pub exponent: f64,
    pub constant: f64,
    pub rho: f64,
    pub coeffs: Vec<Complex64>,
    pub report: GBoundReport,
}

fn horner(coeffs: &[Complex64], w: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c)
}

impl GFunction {
    /// `log g_a(z)` on the branch that is real at `z = a` before the shift.
    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, mobius_c(self.a.z(), z) / self.rho) - self.constant
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }
}

impl GSetup {
    pub fn new(a: DiskPoint, z_set: &PointSet, phi: &Weight, opts: &GOptions) -> Result<Self> {
        opts.validate()?;
        let z_a = transform(z_set, a);
        let tau = green_potential(phi, a, opts.potential_res)?;
        let rho = opts.r_outer;
        let n = opts.angles();
        let transported = |zeta: Complex64| DiskPoint::unchecked(mobius_c(a.z(), zeta));

        // Fourier completion of h on |ζ| = ρ
        let ring = tau.ring(rho)?;
        let mut buf: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let th = TAU * j as f64 / n as f64;
                let zeta = Complex64::from_polar(rho, th);
                let h = transport_defect(z_set, &z_a, a, DiskPoint::unchecked(zeta)) + phi.eval(transported(zeta))
                    - ring.eval(th);
                Complex64::new(h, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut coeffs: Vec<Complex64> = buf[..n / 2].iter().map(|c| c * (2.0 / n as f64)).collect();
        coeffs[0] = Complex64::new(buf[0].re / n as f64, 0.0);

        // rings uniform in L(ζ): compact part, then the outer annulus
        let l_c = log_defect(opts.r_compact * opts.r_compact);
        let l_o = log_defect(rho * rho);
        let from_l = |l: f64| (1.0 - (-l).exp()).sqrt();
        let mut radii: Vec<(f64, bool)> = vec![(0.0, true)];
        radii.extend((1..=opts.radial_res).map(|k| (from_l(l_c * k as f64 / opts.radial_res as f64), true)));
        let outer = (opts.radial_res / 2).max(2);
        radii.extend((1..=outer).map(|k| (from_l(l_c + (l_o - l_c) * k as f64 / outer as f64), false)));

        let coeffs_ref = &coeffs;
        let rings: Result<Vec<Vec<Sample>>> = radii
            .par_iter()
            .map(|&(r, compact)| {
                let tr = if r == 0.0 { None } else { Some(tau.ring(r)?) };
                let m = if r == 0.0 {
                    1
                } else {
                    ((8.0 / (1.0 - r)).ceil() as usize).clamp(256, n)
                };
                Ok((0..m)
                    .map(|j| {
                        let th = TAU * j as f64 / m as f64;
                        let zeta = Complex64::from_polar(r, th);
                        let z = transported(zeta);
                        let re_h = horner(coeffs_ref, zeta / rho).re;
                        let tau_v = tr.as_ref().map_or(0.0, |t| t.eval(th));
                        Sample {
                            zeta,
                            compact,
                            l: log_defect(r * r),
                            p0: k_function(&z_a, DiskPoint::unchecked(zeta)) - tau_v,
                            q0: re_h + k_function(z_set, z) - phi.eval(z),
                        }
                    })
                    .collect())
            })
            .collect();
        let samples: Vec<Sample> = rings?.into_iter().flatten().collect();
        // h = p0 − (q0 − Re H), so Re H − h = q0 − p0
        let conjugation_error = samples
            .iter()
            .filter(|s| s.compact)
            .map(|s| (s.q0 - s.p0).abs())
            .fold(0.0, f64::max);
        Ok(GSetup {
            a,
            opts: *opts,
            rho,
            coeffs,
            samples,
            conjugation_error,
        })
    }

    /// `g_a` for the exponent `s = α − ε`.
    pub fn build(&self, alpha: f64, eps: f64) -> Result<GFunction> {
        if !alpha.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("must be nonnegative, got {eps}")));
        }
        let s = alpha - eps;
        let c = self
            .samples
            .iter()
            .filter(|x| x.compact)
            .map(|x| x.p0 - s * x.l)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut worst_q, mut worst) = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
        for x in &self.samples {
            let q = x.q0 - s * x.l - c;
            if q > worst_q {
                worst_q = q;
                worst = x.zeta;
            }
        }
        let log_at_a = self.samples[0].q0 - c;
        let slack = (1.0 + self.opts.tol).ln();
        let upper_pass = worst_q <= slack;
        let lower_pass = log_at_a >= -c - slack;
        Ok(GFunction {
            a: self.a,
            exponent: s,
            constant: c,
            rho: self.rho,
            coeffs: self.coeffs.clone(),
            report: GBoundReport {
                upper_max: worst_q.exp(),
                worst: mobius_c(self.a.z(), worst),
                worst_radius: worst.norm(),
                value_at_a: log_at_a.exp(),
                delta: (-c).exp(),
                upper_pass,
                lower_pass,
                pass: upper_pass && lower_pass,
                conjugation_error: self.conjugation_error,
                samples: self.samples.len(),
            },
        })
    }
}

/// Builds `g_a` and its bound report in one call.
pub fn construct_g(
    a: DiskPoint,
    z_set: &PointSet,
    phi: &Weight,
    alpha: f64,
    eps: f64,
    opts: &GOptions,
) -> Result<GFunction> {
    GSetup::new(a, z_set, phi, opts)?.build(alpha, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::standard_weight;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    #[test]
    fn empty_set_matches_closed_form() {
        // Z = ∅, φ = β L: g_a = ((1 − |a|²)/(1 − āz)²)^β
        let beta = 1.5;
        let phi = standard_weight(beta).unwrap();
        for a in [DiskPoint::ORIGIN, p(0.4, 0.2), p(-0.6, 0.1)] {
            let g = construct_g(a, &PointSet::empty(), &phi, 1.0, 0.2, &GOptions::default()).unwrap();
            assert!(g.report.pass, "{:?}", g.report);
            assert!(g.constant.abs() < 1e-9, "C = {}", g.constant);
            let ac = a.z();
            for z in [
                Complex64::new(0.0, 0.0),
                Complex64::new(0.3, -0.5),
                Complex64::new(-0.8, 0.1),
            ] {
                let exact = ((1.0 - ac.norm_sqr()) / (Complex64::new(1.0, 0.0) - ac.conj() * z).powi(2)).powf(beta);
                assert!((g.eval(z) - exact).norm() < 1e-8 * exact.norm(), "a = {ac}, z = {z}");
            }
        }
    }

    #[test]
    fn lower_bound_at_center() {
        let z = PointSet::from_points([p(0.3, 0.0), p(-0.2, 0.5), p(0.6, -0.6)]);
        let phi = standard_weight(2.0).unwrap();
        let a = p(0.1, 0.2);
        let g = construct_g(a, &z, &phi, 1.0, 0.1, &GOptions::default()).unwrap();
        let direct = g.eval(a.z()).norm() * (k_function(&z, a) - phi.eval(a)).exp();
        assert!((direct - g.report.value_at_a).abs() < 1e-8 * direct);
        assert!(direct >= g.report.delta * (1.0 - 1e-6));
        assert!(g.report.pass, "{:?}", g.report);
        assert!(g.report.conjugation_error < 1e-6, "{}", g.report.conjugation_error);
    }

    #[test]
    fn upper_bound_fails_for_dense_sets() {
        // Δ̃φ = 0.05 cannot absorb a lattice of spacing 0.5 with s ≈ 0
        let z = crate::sequences::hyperbolic_lattice(0.5, 0.999).unwrap();
        let phi = standard_weight(0.05).unwrap();
        let setup = GSetup::new(DiskPoint::ORIGIN, &z, &phi, &GOptions::default()).unwrap();
        let low = setup.build(0.1, 0.05).unwrap();
        assert!(!low.report.upper_pass, "{:?}", low.report);
        let high = setup.build(20.0, 0.05).unwrap();
        assert!(high.report.pass, "{:?}", high.report);
    }
}
