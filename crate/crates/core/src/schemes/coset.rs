//! Quotient norms of jets on a region.
//!
//! `‖w‖^p = inf ∫_G |g e^{−φ}|^p (1 − |z|²)^{αp − 1} dA` over analytic `g`
//! with the prescribed jet, approximated over polynomials of degree
//! `< basis_dim` in `u = (z − C)/ρ`, where `(C, ρ)` is the Euclidean center
//! and radius of `G`. The discrete value is an upper bound for the infimum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_admissible, InterpolationScheme};
use crate::error::{invalid, Error, Result};
use crate::geometry::grid::polar_integral;
use crate::geometry::{build_grid, DiskPoint, DiskRegion, MeasureTag};
use crate::lsq::{minimize_lp, IrlsOptions};
use crate::sequences::PointSet;
use crate::weights::Weight;

/// Taylor data `[f(a), f'(a), …, f^{(m−1)}(a)]` per distinct cluster point,
/// in the cluster's canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub data: Vec<Vec<Complex64>>,
}

impl Jet {
    pub fn new(cluster: &PointSet, data: Vec<Vec<Complex64>>) -> Result<Self> {
        let jet = Jet { data };
        jet.check(cluster)?;
        Ok(jet)
    }

    pub fn check(&self, cluster: &PointSet) -> Result<()> {
        if self.data.len() != cluster.distinct_len() {
            return Err(Error::ShapeMismatch(format!(
                "jet has {} entries for {} cluster points",
                self.data.len(),
                cluster.distinct_len()
            )));
        }
        for (k, (d, p)) in self.data.iter().zip(cluster.iter()).enumerate() {
            if d.len() != p.mult as usize {
                return Err(Error::ShapeMismatch(format!(
                    "jet entry {k} has {} derivatives for multiplicity {}",
                    d.len(),
                    p.mult
                )));
            }
        }
        Ok(())
    }

    pub fn zero(cluster: &PointSet) -> Self {
        Jet {
            data: cluster
                .iter()
                .map(|p| vec![Complex64::new(0.0, 0.0); p.mult as usize])
                .collect(),
        }
    }

    /// `f^{(d)}(a)` from a derivative oracle `f(a, d)`.
    pub fn from_derivatives<F: Fn(Complex64, usize) -> Complex64>(cluster: &PointSet, f: F) -> Self {
        Jet {
            data: cluster
                .iter()
                .map(|p| (0..p.mult as usize).map(|d| f(p.point.z(), d)).collect())
                .collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Jet {
        Jet {
            data: self.data.iter().map(|d| d.iter().map(|v| v * c).collect()).collect(),
        }
    }

    /// Number of scalar constraints.
    pub fn len(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Numerical parameters of a quotient norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetParams {
    pub p: f64,
    pub alpha: f64,
    pub basis_dim: usize,
    pub quad_res: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetNormResult {
    pub norm: f64,
    /// Coefficients `c_j` of `Σ c_j ((z − center)/scale)^j`.
    pub representative: Vec<Complex64>,
    pub center: Complex64,
    pub scale: f64,
    pub quad_res: usize,
    pub basis_dim: usize,
    pub iterations: usize,
    /// Largest deviation of the representative's jet from the input.
    pub jet_residual: f64,
}

impl CosetNormResult {
    /// `d`-th derivative of the representative at `z`.
    pub fn derivative(&self, z: Complex64, d: usize) -> Complex64 {
        poly_derivative(&self.representative, (z - self.center) / self.scale, d) / self.scale.powi(d as i32)
    }
}

/// `d/du^d Σ c_j u^j` at `u`.
pub(crate) fn poly_derivative(c: &[Complex64], u: Complex64, d: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (d..c.len()).rev() {
        acc = acc * u + c[j] * falling(j, d);
    }
    acc
}

/// `j!/(j − d)!`
pub(crate) fn falling(j: usize, d: usize) -> f64 {
    ((j - d + 1)..=j).map(|x| x as f64).product()
}

/// Constraint rows for a jet in the basis `u^j`, each row normalized.
pub fn jet_constraints(
    cluster: &PointSet,
    jet: &Jet,
    center: Complex64,
    scale: f64,
    basis_dim: usize,
) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let k = jet.len();
    let mut a = DMatrix::zeros(k, basis_dim);
    let mut y = DVector::zeros(k);
    let mut row = 0;
    for (pt, data) in cluster.iter().zip(&jet.data) {
        let u = (pt.point.z() - center) / scale;
        for (d, &val) in data.iter().enumerate() {
            // ρ^d f^{(d)} = Σ_j c_j (j)_d u^{j−d}
            let mut upow = Complex64::new(1.0, 0.0);
            for j in d..basis_dim {
                a[(row, j)] = upow * falling(j, d);
                upow *= u;
            }
            y[row] = val * scale.powi(d as i32);
            let nrm = a.row(row).norm();
            if nrm > 0.0 {
                a.row_mut(row).unscale_mut(nrm);
                y[row] /= nrm;
            }
            row += 1;
        }
    }
    (a, y)
}

fn check_params(params: &CosetParams, constraints: usize) -> Result<()> {
    if !(params.p > 0.0 && params.p.is_finite()) {
        return Err(invalid("p", format!("must be positive, got {}", params.p)));
    }
    if !(params.alpha >= 0.0 && params.alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be nonnegative, got {}", params.alpha)));
    }
    if params.basis_dim < constraints.max(1) {
        return Err(invalid(
            "basis_dim",
            format!("{} is below the {} jet constraints", params.basis_dim, constraints),
        ));
    }
    Ok(())
}

/// Upper bound for the quotient norm of `jet` on `region`.
pub fn coset_norm(
    region: &DiskRegion,
    cluster: &PointSet,
    jet: &Jet,
    phi: &Weight,
    params: &CosetParams,
) -> Result<CosetNormResult> {
    jet.check(cluster)?;
    check_params(params, jet.len())?;
    let (center, scale) = region.euclidean();
    let grid = build_grid(region, params.quad_res, MeasureTag::Area)?;
    let (p, alpha) = (params.p, params.alpha);
    let mut w: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&z, &wa)| wa * (-p * phi.eval(z)).exp() * z.defect().powf(alpha * p - 1.0))
        .collect();
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    for v in &mut w {
        *v /= wmax;
    }
    let n = params.basis_dim;
    let mut b = DMatrix::zeros(grid.len(), n);
    for (i, z) in grid.nodes.iter().enumerate() {
        let u = (z.z() - center) / scale;
        let mut upow = Complex64::new(1.0, 0.0);
        for j in 0..n {
            b[(i, j)] = upow;
            upow *= u;
        }
    }
    let (a, y) = jet_constraints(cluster, jet, center, scale, n);
    let sol = minimize_lp(&b, &w, &a, &y, p, &IrlsOptions::default()).map_err(|e| match e {
        Error::NotConverged { iterations, best } => Error::NotConverged {
            iterations,
            best: best * wmax.powf(1.0 / p),
        },
        other => other,
    })?;
    let mut result = CosetNormResult {
        norm: (sol.objective * wmax).powf(1.0 / p),
        representative: sol.coeffs.iter().copied().collect(),
        center,
        scale,
        quad_res: params.quad_res,
        basis_dim: n,
        iterations: sol.iterations,
        jet_residual: 0.0,
    };
    let mut resid: f64 = 0.0;
    for (pt, data) in cluster.iter().zip(&jet.data) {
        for (d, &val) in data.iter().enumerate() {
            resid = resid.max((result.derivative(pt.point.z(), d) - val).norm());
        }
    }
    result.jet_residual = resid;
    Ok(result)
}

/// Both sides of `Σ_k ‖w_k‖^p ≤ M ‖f‖^p` for the cosets `w_k` of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormCheck {
    /// `Σ_k ‖w_k‖^p`.
    pub lhs: f64,
    /// `M ∫_{|z| ≤ r_max} |f e^{−φ}|^p (1 − |z|²)^{αp − 1} dA`.
    pub rhs: f64,
    pub overlap: usize,
    pub r_max: f64,
    /// Share of the outermost radial panel in the integral.
    pub tail_share: f64,
    /// `lhs ≤ rhs (1 + 1e−8)`.
    pub pass: bool,
}

/// Evaluates the restriction map `f ↦ (w_k)` against the space norm.
///
/// `f(z, d)` returns the `d`-th derivative of the test function. The space
/// integral is truncated at `r_max = max(0.999, max_k sup_{G_k} |z|)`, which
/// only lowers the right-hand side.
pub fn phi_operator_norm_check<F>(
    scheme: &InterpolationScheme,
    f: F,
    phi: &Weight,
    params: &CosetParams,
) -> Result<OperatorNormCheck>
where
    F: Fn(Complex64, usize) -> Complex64 + Sync,
{
    let mut lhs = 0.0;
    for pair in &scheme.pairs {
        let jet = Jet::from_derivatives(&pair.cluster, &f);
        lhs += coset_norm(&pair.region, &pair.cluster, &jet, phi, params)?
            .norm
            .powf(params.p);
    }
    let overlap = check_admissible(scheme).overlap_bound.max(1);
    let r_max = scheme
        .pairs
        .iter()
        .map(|p| p.region.max_modulus())
        .fold(0.999, f64::max);
    let (p, alpha) = (params.p, params.alpha);
    let (total, last) = polar_integral(
        |z: DiskPoint| (f(z.z(), 0).norm().ln() - phi.eval(z)).mul_add(p, 0.0).exp() * z.defect().powf(alpha * p - 1.0),
        r_max,
        params.quad_res.max(16),
    )?;
    let rhs = overlap as f64 * total;
    Ok(OperatorNormCheck {
        lhs,
        rhs,
        overlap,
        r_max,
        tail_share: if total > 0.0 { last / total } else { 0.0 },
        pass: lhs <= rhs * (1.0 + 1e-8),
    })
}
