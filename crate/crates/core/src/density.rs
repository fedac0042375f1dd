//! Density functionals `S(Z, r)`, `S_φ(Z, r)` and the uniform estimate.
//!
//! Two independent routes compute `S_{φ_a}(Z_a, r)`:
//!
//! * the mean route, `(k̂_{Z_a}(r) − φ̂_a(r)) / log(1/(1 − r²))`, with `k̂` in
//!   closed form and `φ̂_a` a trapezoidal circle mean of `φ ∘ M_a`;
//! * the Laplacian route, the invariant convolution of `Δ̃τ` with
//!   `σ_r(ζ) = log(r²/|ζ|²) χ_{rD}(ζ) / (π log(1/(1 − r²)))`.
//!
//! `φ_a` differs from `φ ∘ M_a` by a harmonic function, which the mean
//! `φ̂_a` does not see, so the mean route never needs the harmonic
//! normalization explicitly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::grid::{centered_grid, default_circle_count};
use crate::geometry::{log_defect, mobius, mobius_c, psh_add, DiskPoint, MeasureTag};
use crate::sequences::{hyperbolic_lattice, k_function, k_hat, k_laplacian, transform, PointSet};
use crate::weights::{weight_mean, Weight};

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(invalid("r", format!("must lie in (0,1), got {r}")))
    }
}

/// `S(Z, r) = k̂_Z(r) / log(1/(1 − r²))`.
pub fn s_plain(z_set: &PointSet, r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(k_hat(z_set, r) / log_defect(r * r))
}

/// `S_φ(Z, r) = (k̂_Z(r) − φ̂(r)) / log(1/(1 − r²))`.
pub fn s_weighted(z_set: &PointSet, phi: &Weight, r: f64) -> Result<f64> {
    check_r(r)?;
    let phi_hat = weight_mean(phi, r, default_circle_count(r))?;
    Ok((k_hat(z_set, r) - phi_hat) / log_defect(r * r))
}

/// `S_{φ_a}(Z_a, r)` by the mean route.
pub fn s_transported(z_set: &PointSet, phi: &Weight, a: DiskPoint, r: f64) -> Result<f64> {
    if a == DiskPoint::ORIGIN {
        // M_0 is z ↦ −z, which changes neither mean
        return s_weighted(z_set, phi, r);
    }
    s_weighted(&transform(z_set, a), &phi.compose(a), r)
}

/// `(1/(π L)) ∫_{rD} g(M_a ζ) log(r²/|ζ|²) dλ(ζ)`, `L = log(1/(1 − r²))`;
/// by invariance of `λ` this is `(g ∗ σ_r)(a)`.
pub fn sigma_convolution<G>(g: G, r: f64, a: DiskPoint, grid_res: usize) -> Result<f64>
where
    G: Fn(DiskPoint) -> f64,
{
    check_r(r)?;
    let grid = centered_grid(r, grid_res, MeasureTag::Invariant)?;
    let r2 = r * r;
    let integral = grid.integrate(|zeta| g(mobius(a, zeta)) * (r2 / zeta.norm_sqr()).ln());
    Ok(integral / (PI * log_defect(r2)))
}

/// `Δ̃τ` for `τ = k_Z − φ − α log(1/(1 − |z|²))`.
pub fn tau_laplacian(z_set: &PointSet, phi: &Weight, alpha: f64, z: DiskPoint) -> f64 {
    k_laplacian(z_set, z.z()) - phi.laplacian_at(z) - alpha
}

/// `τ = k_Z − φ − α log(1/(1 − |z|²))`.
pub fn tau(z_set: &PointSet, phi: &Weight, alpha: f64, z: DiskPoint) -> f64 {
    k_function(z_set, z) - phi.eval(z) - alpha * log_defect(z.norm_sqr())
}

/// `S_{φ_a}(Z_a, r)` by the Laplacian route, `α + (Δ̃τ ∗ σ_r)(a)`.
pub fn s_via_laplacian(
    z_set: &PointSet,
    phi: &Weight,
    alpha: f64,
    a: DiskPoint,
    r: f64,
    grid_res: usize,
) -> Result<f64> {
    let z_a = transform(z_set, a);
    let phi_a = phi.compose(a);
    check_r(r)?;
    let grid = centered_grid(r, grid_res, MeasureTag::Invariant)?;
    let r2 = r * r;
    // integrate in ζ = M_a z directly; Δ̃k_Z ∘ M_a = Δ̃k_{Z_a}
    let integral = grid.integrate(|zeta| {
        (k_laplacian(&z_a, zeta.z()) - phi_a.laplacian_at(zeta) - alpha) * (r2 / zeta.norm_sqr()).ln()
    });
    Ok(alpha + integral / (PI * log_defect(r2)))
}

/// Largest `|τ(z) − (τ ∗ σ_r)(z)|` over `samples`.
pub fn convolution_deviation<T>(tau: T, r: f64, samples: &[DiskPoint], grid_res: usize) -> Result<f64>
where
    T: Fn(DiskPoint) -> f64 + Sync,
{
    let devs: Result<Vec<f64>> = samples
        .par_iter()
        .map(|&z| Ok((tau(z) - sigma_convolution(&tau, r, z, grid_res)?).abs()))
        .collect();
    Ok(devs?.into_iter().fold(0.0, f64::max))
}

/// Tunables of [`s_uniform_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOptions {
    /// Tail start: the estimate is the maximum of `sup_per_r` over `r ≥ r0`.
    pub r0: f64,
    /// Allowed spread of `sup_per_r` over the top quartile of `r_grid` for
    /// the run to count as converged.
    pub tol: f64,
    /// Truncation radius of `Z`, if it comes from a generator. Radii with
    /// `D(a, r)` reaching past it for some `a` in the grid are dropped.
    pub truncation: Option<f64>,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            r0: 0.9,
            tol: 0.05,
            truncation: None,
        }
    }
}

/// `{0.9, 0.925, 0.95, 0.975, 0.99, 0.995}`.
pub fn default_r_grid() -> Vec<f64> {
    vec![0.9, 0.925, 0.95, 0.975, 0.99, 0.995]
}

/// Hyperbolic lattice of spacing `0.3` up to `|a| ≤ 0.95`.
pub fn default_a_grid() -> Vec<DiskPoint> {
    hyperbolic_lattice(0.3, 0.95)
        .expect("valid lattice parameters")
        .distinct()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub r_grid: Vec<f64>,
    pub a_grid: Vec<DiskPoint>,
    /// `values[i][j] = S_{φ_a}(Z_a, r)` for `a = a_grid[i]`, `r = r_grid[j]`.
    pub values: Vec<Vec<f64>>,
    pub sup_per_r: Vec<f64>,
    pub estimate: f64,
    pub r0: f64,
    pub converged: bool,
    /// Requested radii removed because of the truncation radius.
    pub capped_r: Vec<f64>,
    pub truncation: Option<f64>,
}

/// Finite-grid estimate of `limsup_{r→1} sup_a S_{φ_a}(Z_a, r)`.
pub fn s_uniform_estimate(
    z_set: &PointSet,
    phi: &Weight,
    r_grid: &[f64],
    a_grid: &[DiskPoint],
    opts: &DensityOptions,
) -> Result<DensityReport> {
    if a_grid.is_empty() {
        return Err(invalid("a_grid", "must not be empty"));
    }
    let mut requested: Vec<f64> = r_grid.to_vec();
    for &r in &requested {
        check_r(r)?;
    }
    requested.sort_by(f64::total_cmp);
    requested.dedup();
    let reach = a_grid.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let (kept, capped_r): (Vec<f64>, Vec<f64>) = match opts.truncation {
        Some(t) => requested.iter().partition(|&&r| psh_add(reach, r) <= t),
        None => (requested, Vec::new()),
    };
    if !kept.iter().any(|&r| r >= opts.r0) {
        return Err(invalid(
            "r_grid",
            format!("no radius ≥ r0 = {} survives the truncation cap", opts.r0),
        ));
    }

    let values: Result<Vec<Vec<f64>>> = a_grid
        .par_iter()
        .map(|&a| {
            let z_a = transform(z_set, a);
            let phi_a = phi.compose(a);
            kept.iter().map(|&r| s_weighted(&z_a, &phi_a, r)).collect()
        })
        .collect();
    let values = values?;

    let sup_per_r: Vec<f64> = (0..kept.len())
        .map(|j| values.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let estimate = kept
        .iter()
        .zip(&sup_per_r)
        .filter(|(&r, _)| r >= opts.r0)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let quartile = (kept.len() / 4).max(2).min(kept.len());
    let top = &sup_per_r[kept.len() - quartile..];
    let spread =
        top.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - top.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DensityReport {
        r_grid: kept,
        a_grid: a_grid.to_vec(),
        values,
        sup_per_r,
        estimate,
        r0: opts.r0,
        converged: spread <= opts.tol,
        capped_r,
        truncation: opts.truncation,
    })
}

/// JSON summary of a [`DensityReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub estimate: f64,
    pub r0: f64,
    pub converged: bool,
    pub r_grid: Vec<f64>,
    pub sup_per_r: Vec<f64>,
    pub capped_r: Vec<f64>,
    pub truncation: Option<f64>,
}

impl DensityReport {
    /// Rows `a_re,a_im,r,S_value` in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a_re,a_im,r,S_value\n");
        for (a, row) in self.a_grid.iter().zip(&self.values) {
            for (r, s) in self.r_grid.iter().zip(row) {
                let _ = writeln!(out, "{},{},{},{}", a.re(), a.im(), r, s);
            }
        }
        out
    }

    pub fn summary(&self) -> DensitySummary {
        DensitySummary {
            estimate: self.estimate,
            r0: self.r0,
            converged: self.converged,
            r_grid: self.r_grid.clone(),
            sup_per_r: self.sup_per_r.clone(),
            capped_r: self.capped_r.clone(),
            truncation: self.truncation,
        }
    }
}

/// `k_{Z_a} − k_Z ∘ M_a` at `ζ`; harmonic, since both terms have the same
/// invariant Laplacian.
pub fn transport_defect(z_set: &PointSet, z_a: &PointSet, a: DiskPoint, zeta: DiskPoint) -> f64 {
    k_function(z_a, zeta) - k_function(z_set, DiskPoint::unchecked(mobius_c(a.z(), zeta.z())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::invariant_laplacian_fd;
    use crate::weights::{perturbed_standard, standard_weight};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    fn random_set(seed: u64, n: usize, rmax: f64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointSet::from_points((0..n).map(|_| {
            let r = rmax * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            DiskPoint::new(r * t.cos(), r * t.sin()).unwrap()
        }))
    }

    #[test]
    fn s_plain_examples() {
        assert_eq!(s_plain(&PointSet::empty(), 0.5).unwrap(), 0.0);
        let origin = PointSet::from_points([DiskPoint::ORIGIN]);
        let v = s_plain(&origin, 0.9).unwrap();
        assert_abs_diff_eq!(v, 0.405 / (1.0f64 / 0.19).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.243868, epsilon = 1e-6);
        let w = origin.union(&PointSet::from_points([p(0.3, 0.2)]));
        assert!(s_plain(&origin, 0.7).unwrap() <= s_plain(&w, 0.7).unwrap());
    }

    #[test]
    fn s_weighted_examples() {
        let phi = standard_weight(1.7).unwrap();
        for &r in &[0.3, 0.9, 0.995] {
            assert_abs_diff_eq!(s_weighted(&PointSet::empty(), &phi, r).unwrap(), -1.7, epsilon = 1e-12);
        }
        let z = random_set(3, 10, 0.8);
        let pert = perturbed_standard(1.7, 0.4).unwrap();
        assert_abs_diff_eq!(
            s_weighted(&z, &phi, 0.8).unwrap(),
            s_weighted(&z, &pert, 0.8).unwrap(),
            epsilon = 1e-12
        );
        let zero = Weight::new("zero", Arc::new(|_| 0.0), None, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            s_weighted(&z, &zero, 0.6).unwrap(),
            s_plain(&z, 0.6).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn empty_sequence_is_uniform_in_a() {
        let phi = standard_weight(2.0).unwrap();
        for a in [p(0.4, 0.2), p(-0.8, 0.5)] {
            for &r in &default_r_grid() {
                assert_abs_diff_eq!(
                    s_transported(&PointSet::empty(), &phi, a, r).unwrap(),
                    -2.0,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn sigma_has_unit_mass() {
        for a in [DiskPoint::ORIGIN, p(0.5, -0.3)] {
            assert_abs_diff_eq!(sigma_convolution(|_| 2.5, 0.8, a, 48).unwrap(), 2.5, epsilon = 1e-8);
        }
    }

    #[test]
    fn closed_form_laplacian_of_tau() {
        let z = random_set(11, 6, 0.9);
        let phi = perturbed_standard(0.8, 0.2).unwrap();
        for w in [p(0.1, 0.2), p(-0.6, 0.3), p(0.5, -0.7)] {
            let fd = invariant_laplacian_fd(|u| tau(&z, &phi, 0.5, u), w, 1e-3 * w.defect()).unwrap();
            assert_abs_diff_eq!(fd, tau_laplacian(&z, &phi, 0.5, w), epsilon = 1e-5);
        }
    }

    #[test]
    fn routes_agree() {
        let phi = standard_weight(1.0).unwrap();
        for seed in [1, 2] {
            let z = random_set(seed, 15, 0.85);
            for a in [DiskPoint::ORIGIN, p(0.4, 0.2)] {
                for &r in &[0.7, 0.9] {
                    let mean = s_transported(&z, &phi, a, r).unwrap();
                    let lap = s_via_laplacian(&z, &phi, 0.6, a, r, 96).unwrap();
                    assert!((mean - lap).abs() < 1e-3, "seed {seed} a {a:?} r {r}: {mean} vs {lap}");
                    let conv = sigma_convolution(|w| tau_laplacian(&z, &phi, 0.6, w), r, a, 96).unwrap();
                    assert_abs_diff_eq!(conv + 0.6, lap, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn uniform_estimate_basics() {
        let phi = standard_weight(1.5).unwrap();
        let rep = s_uniform_estimate(
            &PointSet::empty(),
            &phi,
            &default_r_grid(),
            &[DiskPoint::ORIGIN, p(0.3, 0.1)],
            &DensityOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(rep.estimate, -1.5, epsilon = 1e-10);
        assert!(rep.converged);
        assert!(rep.to_csv().starts_with("a_re,a_im,r,S_value\n"));
        assert_eq!(rep.to_csv().lines().count(), 1 + 2 * 6);

        let z = random_set(5, 30, 0.97);
        let single = s_uniform_estimate(
            &z,
            &phi,
            &[0.5, 0.9, 0.95],
            &[DiskPoint::ORIGIN],
            &DensityOptions::default(),
        )
        .unwrap();
        let tail = [0.9, 0.95]
            .iter()
            .map(|&r| s_weighted(&z, &phi, r).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(single.estimate, tail, epsilon = 1e-15);
    }

    #[test]
    fn truncation_caps_radii() {
        let phi = standard_weight(1.0).unwrap();
        let opts = DensityOptions {
            truncation: Some(0.99),
            ..DensityOptions::default()
        };
        let rep = s_uniform_estimate(&PointSet::empty(), &phi, &[0.9, 0.95, 0.99], &[p(0.5, 0.0)], &opts).unwrap();
        assert_eq!(rep.r_grid, vec![0.9, 0.95]);
        assert_eq!(rep.capped_r, vec![0.99]);
    }

    #[test]
    fn denser_lattice_has_larger_density() {
        let phi = standard_weight(1.0).unwrap();
        let opts = DensityOptions {
            truncation: Some(0.9995),
            ..DensityOptions::default()
        };
        let a_grid = [DiskPoint::ORIGIN, p(0.3, 0.0)];
        let est = |s: f64| {
            let z = hyperbolic_lattice(s, 0.9995).unwrap();
            s_uniform_estimate(&z, &phi, &[0.9, 0.95, 0.98], &a_grid, &opts)
                .unwrap()
                .estimate
        };
        assert!(est(0.5) > est(0.8));
    }

    #[test]
    fn transport_defect_is_harmonic() {
        let z = random_set(9, 8, 0.9);
        let a = p(0.3, -0.5);
        let z_a = transform(&z, a);
        let w = p(0.2, 0.4);
        let lap = invariant_laplacian_fd(|u| transport_defect(&z, &z_a, a, u), w, 1e-3).unwrap();
        assert_abs_diff_eq!(lap, 0.0, epsilon = 1e-5);
    }

    #[test]
    fn deviation_is_finite() {
        let z = random_set(4, 10, 0.8);
        let phi = standard_weight(1.0).unwrap();
        let d = convolution_deviation(|w| tau(&z, &phi, 0.5, w), 0.5, &[p(0.1, 0.0), p(0.6, 0.6)], 32).unwrap();
        assert!(d.is_finite());
    }
}
