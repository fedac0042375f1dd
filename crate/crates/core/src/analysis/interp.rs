//! Least-norm interpolation over a global polynomial ansatz, and the
//! reduction of simple-value interpolation to a scheme.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::grid::polar_panels;
use crate::geometry::{psh, DiskPoint};
use crate::lsq::{minimize_lp, IrlsOptions};
use crate::schemes::coset::poly_derivative;
use crate::schemes::{build_scheme, coset_norm, jet_constraints, BuildOptions, CosetParams, InterpolationScheme, Jet};
use crate::sequences::PointSet;
use crate::weights::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpOptions {
    /// Number of monomials `1, z, …, z^{global_dim − 1}`.
    pub global_dim: usize,
    /// Radial nodes per panel of the global quadrature.
    pub quad_res: usize,
    /// Truncation radius of the global norm.
    pub r_max: f64,
    /// Basis size of the per-cluster quotient norms.
    pub coset_dim: usize,
    pub coset_quad_res: usize,
    pub irls: IrlsOptions,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions {
            global_dim: 24,
            quad_res: 16,
            r_max: 0.99,
            coset_dim: 12,
            coset_quad_res: 24,
            irls: IrlsOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSolution {
    /// Coefficients of `Σ c_j z^j`.
    pub coeffs: Vec<Complex64>,
    /// `(∫_{|z| ≤ r_max} |f e^{−φ}|^p (1 − |z|²)^{αp − 1} dA)^{1/p}`.
    pub achieved_norm: f64,
    /// `|f^{(d)}(a) − w_{a,d}|` in constraint order.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub coset_norms: Vec<f64>,
    /// `(Σ_k ‖w_k‖^p)^{1/p}`.
    pub data_norm: f64,
    /// `achieved_norm / data_norm`, `0` when both vanish.
    pub k_estimate: f64,
    /// Share of the outermost radial panel in `achieved_norm^p`.
    pub tail_share: f64,
    pub iterations: usize,
}

impl InterpolationSolution {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        poly_derivative(&self.coeffs, z, 0)
    }
}

/// Minimizes the truncated norm of `f` subject to `f` having the jet
/// `jets[k]` on every cluster of `scheme`.
pub fn solve_interpolation(
    scheme: &InterpolationScheme,
    jets: &[Jet],
    phi: &Weight,
    p: f64,
    alpha: f64,
    opts: &InterpOptions,
) -> Result<InterpolationSolution> {
    if jets.len() != scheme.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} jets for {} clusters",
            jets.len(),
            scheme.len()
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be positive, got {p}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    let dim = opts.global_dim;
    let total: usize = jets.iter().map(Jet::len).sum();
    if dim < total.max(1) {
        return Err(invalid(
            "global_dim",
            format!("{dim} monomials cannot meet {total} constraints"),
        ));
    }

    // constraints, stacked cluster by cluster
    let mut a = DMatrix::zeros(total, dim);
    let mut y = nalgebra::DVector::zeros(total);
    let mut row = 0;
    for (pair, jet) in scheme.pairs.iter().zip(jets) {
        jet.check(&pair.cluster)?;
        let (ak, yk) = jet_constraints(&pair.cluster, jet, Complex64::new(0.0, 0.0), 1.0, dim);
        a.view_mut((row, 0), (ak.nrows(), dim)).copy_from(&ak);
        y.rows_mut(row, yk.len()).copy_from(&yk);
        row += ak.nrows();
    }

    // global quadrature; angles resolve |z^j|^p e^{−pφ} for j < dim
    let angles = (4 * opts.quad_res.max(dim) * (p.ceil() as usize).max(1)).next_power_of_two();
    let panels = polar_panels(opts.r_max, opts.quad_res, |_| angles)?;
    let last_start: usize = panels[..panels.len() - 1].iter().map(Vec::len).sum();
    let nodes: Vec<(DiskPoint, f64)> = panels.into_iter().flatten().collect();
    let mut w: Vec<f64> = nodes
        .iter()
        .map(|&(z, wa)| wa * (-p * phi.eval(z)).exp() * z.defect().powf(alpha * p - 1.0))
        .collect();
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    for v in &mut w {
        *v /= wmax;
    }
    let mut b = DMatrix::zeros(nodes.len(), dim);
    for (i, &(z, _)) in nodes.iter().enumerate() {
        let mut zp = Complex64::new(1.0, 0.0);
        for j in 0..dim {
            b[(i, j)] = zp;
            zp *= z.z();
        }
    }
    let sol = minimize_lp(&b, &w, &a, &y, p, &opts.irls)?;
    let coeffs: Vec<Complex64> = sol.coeffs.iter().copied().collect();
    let vals = &b * &sol.coeffs;
    let tail: f64 = vals
        .iter()
        .zip(&w)
        .skip(last_start)
        .map(|(v, &wi)| wi * v.norm().powf(p))
        .sum();
    let achieved_p = sol.objective * wmax;

    let mut residuals = Vec::with_capacity(total);
    for (pair, jet) in scheme.pairs.iter().zip(jets) {
        for (pt, data) in pair.cluster.iter().zip(&jet.data) {
            for (d, &val) in data.iter().enumerate() {
                residuals.push((poly_derivative(&coeffs, pt.point.z(), d) - val).norm());
            }
        }
    }
    let params = CosetParams {
        p,
        alpha,
        basis_dim: opts.coset_dim,
        quad_res: opts.coset_quad_res,
    };
    let mut coset_norms = Vec::with_capacity(jets.len());
    for (pair, jet) in scheme.pairs.iter().zip(jets) {
        coset_norms.push(coset_norm(&pair.region, &pair.cluster, jet, phi, &params)?.norm);
    }
    let data_norm = coset_norms.iter().map(|c| c.powf(p)).sum::<f64>().powf(1.0 / p);
    let achieved_norm = achieved_p.powf(1.0 / p);
    let k_estimate = if data_norm > 0.0 {
        achieved_norm / data_norm
    } else {
        0.0
    };
    Ok(InterpolationSolution {
        coeffs,
        achieved_norm,
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
        coset_norms,
        data_norm,
        k_estimate,
        tail_share: if sol.objective > 0.0 { tail / sol.objective } else { 0.0 },
        iterations: sol.iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OInterpOptions {
    /// Linkage scale and margin passed to [`build_scheme`].
    pub delta: f64,
    pub eps: f64,
    pub build: BuildOptions,
    /// Exponent of the space; the sum uses `(1 − |a|²)^{αp + 1}`.
    pub alpha: f64,
    pub coset_dim: usize,
    pub coset_quad_res: usize,
    /// Whether to compute the per-cluster quotient norms.
    pub check_cosets: bool,
}

impl Default for OInterpOptions {
    fn default() -> Self {
        OInterpOptions {
            delta: 0.3,
            eps: 0.1,
            build: BuildOptions::default(),
            alpha: 0.0,
            coset_dim: 12,
            coset_quad_res: 24,
            check_cosets: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterBound {
    /// `‖w_k‖^p`.
    pub coset_norm_p: f64,
    /// `Σ_{a ∈ Z_k}` of the finiteness terms.
    pub term_sum: f64,
    /// `coset_norm_p / term_sum`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OInterpSetup {
    /// Distance from each point to the nearest other point (`1` for a
    /// single point).
    pub delta_a: Vec<f64>,
    /// Points of `Z` with `ψ(a, ·) < 1/2`, `a` included.
    pub n_a: Vec<u32>,
    /// `|c_a|^p e^{−pφ(a)} δ_a^{−p n_a} (1 − |a|²)^{αp + 1}`.
    pub terms: Vec<f64>,
    pub finiteness_sum: f64,
    pub scheme: InterpolationScheme,
    pub jets: Vec<Jet>,
    pub cluster_bounds: Vec<ClusterBound>,
    /// Largest ratio, the measured constant `C`.
    pub measured_c: Option<f64>,
    /// Largest over smallest positive ratio.
    pub c_spread: Option<f64>,
}

/// Finiteness sum, scheme and jets for `f(a) = c_a` on distinct points.
///
/// `values` follows the canonical order of `z_set`.
pub fn o_interpolation_setup(
    z_set: &PointSet,
    values: &[Complex64],
    phi: &Weight,
    p: f64,
    opts: &OInterpOptions,
) -> Result<OInterpSetup> {
    if let Some(wp) = z_set.iter().find(|wp| wp.mult > 1) {
        return Err(Error::RepeatedPoint {
            re: wp.point.re(),
            im: wp.point.im(),
        });
    }
    if values.len() != z_set.distinct_len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} points",
            values.len(),
            z_set.distinct_len()
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be positive, got {p}")));
    }
    let pts = z_set.distinct();
    let mut delta_a = Vec::with_capacity(pts.len());
    let mut n_a = Vec::with_capacity(pts.len());
    for (i, a) in pts.iter().enumerate() {
        let mut nearest: f64 = 1.0;
        let mut count = 0u32;
        for (j, b) in pts.iter().enumerate() {
            let d = psh(a.z(), b.z());
            if d < 0.5 {
                count += 1;
            }
            if i != j {
                nearest = nearest.min(d);
            }
        }
        delta_a.push(nearest);
        n_a.push(count);
    }
    let terms: Vec<f64> = pts
        .iter()
        .zip(values)
        .zip(delta_a.iter().zip(&n_a))
        .map(|((a, c), (&d, &n))| {
            (p * (c.norm().ln() - phi.eval(*a) - n as f64 * d.ln())).exp() * a.defect().powf(opts.alpha * p + 1.0)
        })
        .collect();
    let finiteness_sum = terms.iter().sum();

    let scheme = build_scheme(z_set, opts.delta, opts.eps, &opts.build)?;
    let index_of = |z: DiskPoint| pts.iter().position(|&q| q == z).expect("cluster points come from Z");
    let mut jets = Vec::with_capacity(scheme.len());
    let mut cluster_bounds = Vec::new();
    let params = CosetParams {
        p,
        alpha: opts.alpha,
        basis_dim: opts.coset_dim,
        quad_res: opts.coset_quad_res,
    };
    for pair in &scheme.pairs {
        let idx: Vec<usize> = pair.cluster.iter().map(|wp| index_of(wp.point)).collect();
        let jet = Jet::new(&pair.cluster, idx.iter().map(|&i| vec![values[i]]).collect())?;
        if opts.check_cosets {
            let norm_p = coset_norm(&pair.region, &pair.cluster, &jet, phi, &params)?
                .norm
                .powf(p);
            let term_sum: f64 = idx.iter().map(|&i| terms[i]).sum();
            cluster_bounds.push(ClusterBound {
                coset_norm_p: norm_p,
                term_sum,
                ratio: if term_sum > 0.0 { norm_p / term_sum } else { 0.0 },
            });
        }
        jets.push(jet);
    }
    let ratios: Vec<f64> = cluster_bounds.iter().map(|c| c.ratio).filter(|&r| r > 0.0).collect();
    let measured_c = ratios.iter().cloned().reduce(f64::max);
    let c_spread = measured_c.map(|mx| mx / ratios.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(OInterpSetup {
        delta_a,
        n_a,
        terms,
        finiteness_sum,
        scheme,
        jets,
        cluster_bounds,
        measured_c,
        c_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{grid::polar_integral, mobius_c};
    use crate::schemes::check_admissible;
    use crate::weights::standard_weight;
    use std::sync::Arc;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    fn zero_weight() -> Weight {
        Weight::new("zero", Arc::new(|_| 0.0), Some(Arc::new(|_| 0.0)), 0.0, 0.0).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn opts(dim: usize) -> InterpOptions {
        InterpOptions {
            global_dim: dim,
            ..InterpOptions::default()
        }
    }

    #[test]
    fn zero_jets_give_zero() {
        let z = PointSet::from_points([p(0.1, 0.0), p(-0.5, 0.3)]);
        let s = build_scheme(&z, 0.2, 0.1, &BuildOptions::default()).unwrap();
        let jets: Vec<Jet> = s.pairs.iter().map(|pr| Jet::zero(&pr.cluster)).collect();
        let sol = solve_interpolation(&s, &jets, &zero_weight(), 2.0, 1.0, &opts(8)).unwrap();
        assert_eq!((sol.achieved_norm, sol.k_estimate), (0.0, 0.0));
    }

    #[test]
    fn constant_competes_at_origin() {
        let z = PointSet::from_points([DiskPoint::ORIGIN]);
        let s = build_scheme(&z, 0.2, 0.2, &BuildOptions::default()).unwrap();
        let jets = vec![Jet::new(&s.pairs[0].cluster, vec![vec![c(1.0)]]).unwrap()];
        let (pp, alpha) = (2.0, 1.0);
        let o = opts(10);
        let sol = solve_interpolation(&s, &jets, &zero_weight(), pp, alpha, &o).unwrap();
        let r = o.r_max;
        let one = std::f64::consts::PI / (alpha * pp) * (1.0 - (1.0 - r * r).powf(alpha * pp));
        assert!(
            sol.achieved_norm.powf(pp) <= one * (1.0 + 1e-10),
            "{} vs {one}",
            sol.achieved_norm.powf(pp)
        );
        // p = 2 with a radial weight: the constant is the minimizer
        assert!((sol.achieved_norm.powf(pp) - one).abs() < 1e-10 * one);
        assert!(sol.max_residual < 1e-12);
        let p3 = solve_interpolation(&s, &jets, &zero_weight(), 3.0, alpha, &o).unwrap();
        let one3 = polar_integral(|z| z.defect().powf(alpha * 3.0 - 1.0), r, 16).unwrap().0;
        assert!(p3.achieved_norm.powf(3.0) <= one3 * (1.0 + 1e-8));
    }

    #[test]
    fn norm_is_nonincreasing_in_dimension() {
        let z = PointSet::with_multiplicities([(p(0.3, 0.2), 2), (p(-0.5, -0.1), 1)]).unwrap();
        let s = build_scheme(&z, 0.2, 0.1, &BuildOptions::default()).unwrap();
        let jets: Vec<Jet> = s
            .pairs
            .iter()
            .map(|pr| Jet::from_derivatives(&pr.cluster, |a, d| if d == 0 { a + 1.0 } else { c(-0.5) }))
            .collect();
        let phi = standard_weight(0.5).unwrap();
        let mut last = f64::INFINITY;
        for dim in [4, 8, 12, 16] {
            let sol = solve_interpolation(&s, &jets, &phi, 2.0, 1.0, &opts(dim)).unwrap();
            assert!(sol.max_residual < 1e-9);
            assert!(sol.achieved_norm <= last * (1.0 + 1e-12));
            last = sol.achieved_norm;
        }
        let sol = solve_interpolation(&s, &jets, &phi, 1.5, 1.0, &opts(12)).unwrap();
        assert!(sol.max_residual < 1e-9 && sol.k_estimate > 0.0);
    }

    #[test]
    fn too_few_monomials() {
        let z = PointSet::with_multiplicities([(p(0.3, 0.2), 3)]).unwrap();
        let s = build_scheme(&z, 0.2, 0.1, &BuildOptions::default()).unwrap();
        let jets = vec![Jet::zero(&s.pairs[0].cluster)];
        assert!(solve_interpolation(&s, &jets, &zero_weight(), 2.0, 1.0, &opts(2)).is_err());
    }

    #[test]
    fn o_interpolation_example() {
        let z = PointSet::from_points([DiskPoint::ORIGIN, p(0.5, 0.0)]);
        let vals = [c(1.0), c(2.0)];
        let phi = zero_weight();
        let o = OInterpOptions::default();
        let s = o_interpolation_setup(&z, &vals, &phi, 2.0, &o).unwrap();
        assert_eq!(s.delta_a, vec![0.5, 0.5]);
        assert_eq!(s.n_a, vec![1, 1]);
        assert!(s.finiteness_sum.is_finite());
        assert!(check_admissible(&s.scheme).pass);
        let t = 3.0;
        let scaled: Vec<Complex64> = vals.iter().map(|v| v * t).collect();
        let s2 = o_interpolation_setup(&z, &scaled, &phi, 2.0, &o).unwrap();
        assert!((s2.finiteness_sum - t * t * s.finiteness_sum).abs() < 1e-12 * s2.finiteness_sum);
        let dup = PointSet::with_multiplicities([(p(0.1, 0.1), 2)]).unwrap();
        assert!(matches!(
            o_interpolation_setup(&dup, &[c(1.0)], &phi, 2.0, &o),
            Err(Error::RepeatedPoint { .. })
        ));
    }

    #[test]
    fn o_interpolation_constant_is_stable() {
        // a lattice of clusters: the measured C should not drift with |a|
        let base = [p(0.0, 0.0), p(0.0, 0.35)];
        let mut pts = Vec::new();
        for center in [0.0, 0.7, 0.93, 0.985] {
            let a = Complex64::new(center, 0.0);
            for b in base {
                // (b + a)/(1 + āb)
                pts.push(DiskPoint::from_complex(-mobius_c(-a, b.z())).unwrap());
            }
        }
        let z = PointSet::from_points(pts);
        let vals: Vec<Complex64> = (0..z.distinct_len()).map(|k| c(1.0 + 0.1 * k as f64)).collect();
        let o = OInterpOptions {
            delta: 0.4,
            eps: 0.2,
            ..OInterpOptions::default()
        };
        let s = o_interpolation_setup(&z, &vals, &standard_weight(0.5).unwrap(), 2.0, &o).unwrap();
        assert_eq!(s.scheme.len(), 4);
        assert!(s.c_spread.unwrap() < 3.0, "{:?}", s.cluster_bounds);
    }
}
