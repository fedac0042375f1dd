//! Weighted `ℓ^p` minimization under linear equality constraints.
//!
//! Minimizes `Σ w_i |(B c)_i|^p` over `c` with `A c = y`. The constraint set
//! is parametrized as `c = c₀ + N t` with `c₀ = A⁺y` and `N` a basis of
//! `ker A`, so every iterate satisfies the constraints to rounding.
//! `p = 2` is a single least-squares solve; other `p` use iteratively
//! reweighted least squares started from the `p = 2` solution, with an
//! exact line search along each step so the objective never increases.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IrlsOptions {
    pub max_iter: usize,
    /// Relative change of `(Σ w|r|^p)^{1/p}` at which iteration stops.
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub coeffs: DVector<C>,
    /// `Σ w_i |(B c)_i|^p`.
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    /// `objective^{1/p}`.
    pub fn norm(&self, p: f64) -> f64 {
        self.objective.powf(1.0 / p)
    }
}

/// Affine parametrization of `{c : A c = y}`.
struct Affine {
    c0: DVector<C>,
    null: DMatrix<C>,
}

fn affine_solutions(a: &DMatrix<C>, y: &DVector<C>, n: usize) -> Result<Affine> {
    let k = a.nrows();
    if a.ncols() != n || y.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "constraints are {}×{} with {} right-hand sides for {n} unknowns",
            k,
            a.ncols(),
            y.len()
        )));
    }
    if k == 0 {
        return Ok(Affine {
            c0: DVector::zeros(n),
            null: DMatrix::identity(n, n),
        });
    }
    if k > n {
        return Err(Error::Infeasible {
            rank: n,
            constraints: k,
        });
    }
    // pad to square so the SVD returns all of V
    let mut sq = DMatrix::<C>::zeros(n, n);
    sq.view_mut((0, 0), (k, n)).copy_from(a);
    let svd = sq.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᴴ");
    let s = &svd.singular_values;
    // singular values are not guaranteed sorted; order them
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let smax = s[order[0]];
    let cutoff = smax * 1e-13 * n as f64;
    let rank = order.iter().filter(|&&i| s[i] > cutoff).count();
    if rank < k {
        return Err(Error::Infeasible { rank, constraints: k });
    }
    let mut y_pad = DVector::<C>::zeros(n);
    y_pad.rows_mut(0, k).copy_from(y);
    let mut c0 = DVector::<C>::zeros(n);
    for &i in &order[..rank] {
        let coef = u.column(i).dotc(&y_pad) / s[i];
        c0 += v_t.row(i).adjoint() * coef;
    }
    let mut null = DMatrix::<C>::zeros(n, n - rank);
    for (col, &i) in order[rank..].iter().enumerate() {
        null.set_column(col, &v_t.row(i).adjoint());
    }
    Ok(Affine { c0, null })
}

/// Minimizes `Σ ω_i |(B (c₀ + N t))_i|²` over `t`.
fn weighted_ls(b: &DMatrix<C>, omega: &[f64], aff: &Affine) -> DVector<C> {
    let m = aff.null.ncols();
    if m == 0 {
        return aff.c0.clone();
    }
    let mut bn = b * &aff.null;
    let mut rhs = -(b * &aff.c0);
    for (i, &w) in omega.iter().enumerate() {
        let sw = w.sqrt();
        bn.row_mut(i).scale_mut(sw);
        rhs[i] *= sw;
    }
    let svd = bn.svd(true, true);
    let smax = svd.singular_values.max();
    let t = svd.solve(&rhs, smax * 1e-14).expect("U and Vᴴ were requested");
    &aff.c0 + &aff.null * t
}

fn objective(b: &DMatrix<C>, w: &[f64], c: &DVector<C>, p: f64) -> f64 {
    let r = b * c;
    r.iter().zip(w).map(|(ri, &wi)| wi * ri.norm().powf(p)).sum()
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Minimizes `Σ w_i |(B c)_i|^p` subject to `A c = y`.
///
/// Returns [`Error::Infeasible`] when `A` has dependent rows and
/// [`Error::NotConverged`] (carrying the best objective reached) when IRLS
/// does not settle within `opts.max_iter` steps.
pub fn minimize_lp(
    b: &DMatrix<C>,
    w: &[f64],
    a: &DMatrix<C>,
    y: &DVector<C>,
    p: f64,
    opts: &IrlsOptions,
) -> Result<LpSolution> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be positive and finite, got {p}")));
    }
    if b.nrows() != w.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} quadrature weights for {} design rows",
            w.len(),
            b.nrows()
        )));
    }
    let n = b.ncols();
    let aff = affine_solutions(a, y, n)?;
    if y.iter().all(|v| *v == C::new(0.0, 0.0)) {
        return Ok(LpSolution {
            coeffs: DVector::zeros(n),
            objective: 0.0,
            iterations: 0,
        });
    }
    let mut c = weighted_ls(b, w, &aff);
    let mut f = objective(b, w, &c, p);
    if p == 2.0 {
        return Ok(LpSolution {
            coeffs: c,
            objective: f,
            iterations: 1,
        });
    }
    let mut omega = vec![0.0; w.len()];
    for it in 1..=opts.max_iter {
        let r = b * &c;
        let rmax = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = rmax * 1e-10;
        for ((o, &wi), ri) in omega.iter_mut().zip(w).zip(r.iter()) {
            *o = wi * ri.norm().max(floor).powf(p - 2.0);
        }
        let target = weighted_ls(b, &omega, &aff);
        let dir = &target - &c;
        // the objective is convex along the segment; golden-section on [0, 2]
        let along = |t: f64| objective(b, w, &(&c + &dir * C::new(t, 0.0)), p);
        let step = golden_min(along, 0.0, 2.0, 60);
        let trial = &c + &dir * C::new(step, 0.0);
        let ft = objective(b, w, &trial, p);
        if !(ft < f) {
            // no descent along the IRLS direction: stationary to rounding
            return Ok(LpSolution {
                coeffs: c,
                objective: f,
                iterations: it,
            });
        }
        let old_norm = f.powf(1.0 / p);
        let new_norm = ft.powf(1.0 / p);
        c = trial;
        f = ft;
        if (old_norm - new_norm).abs() <= opts.tol * old_norm {
            return Ok(LpSolution {
                coeffs: c,
                objective: f,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        best: f.powf(1.0 / p),
    })
}
