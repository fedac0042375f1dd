//! Solution operator for `(1 − |z|²) ∂̄u = f`.
//!
//! ```text
//! u(z) = (1/π) Σ_j g_j(z) ∫ γ_j f / g_j (w) (1 − |w|²)^{m−1} / ((z − w)(1 − w̄z)^m) dA(w)
//! ```
//!
//! With `G = γ_j f (1 − |w|²)^{m−1} / g_j` the kernel splits as
//!
//! ```text
//! 1/((z − w)(1 − w̄z)^m) = (1 − |w|²)^{−m}/(z − w) + w̄ Σ_{i<m} (1 − w̄z)^{−(i+1)} (1 − |w|²)^{−(m−i)}
//! ```
//!
//! The first term is a Cauchy transform, evaluated on the lattice by FFT
//! convolution with the node cell left out and replaced by the first-order
//! local correction `−h² ∂F(z)/π`. The second is analytic in `z`; expanding
//! `(1 − w̄z)^{−(i+1)}` in powers of `z` turns it into a power series whose
//! coefficients are moments of `G`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::gfun::{construct_g, GBoundReport, GOptions};
use super::grid_fn::GridFunction;
use super::pou::PartitionOfUnity;
use crate::error::{invalid, Error, Result};
use crate::geometry::DiskPoint;
use crate::sequences::{k_function, PointSet};
use crate::weights::Weight;

/// How the analytic factors `g_j` are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FactorMode {
    /// `g_j ≡ 1`.
    Unit,
    /// `g_j = g_{a_j}` from [`construct_g`].
    Constructed { eps: f64, options: GOptions },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbarOptions {
    /// The integer `m` of the kernel.
    pub kernel_order: u32,
    pub factors: FactorMode,
}

impl Default for DbarOptions {
    fn default() -> Self {
        DbarOptions {
            kernel_order: 3,
            factors: FactorMode::Unit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbarSolution {
    pub u: GridFunction,
    /// `(1 − |z|²) ∂̄u − f` at nodes whose four neighbours are inside.
    pub residual: GridFunction,
    /// `‖residual‖₂ / ‖f‖₂` over those nodes.
    pub relative_residual: f64,
    /// `‖u‖ / ‖f‖` in the measure `e^{p(k_Z − φ)} (1 − |z|²)^{αp − 1} dA`.
    pub norm_ratio: Option<f64>,
    pub kernel_order: u32,
    /// Bound reports of the constructed factors, per center.
    pub factor_reports: Vec<Option<GBoundReport>>,
}

/// Row-column 2-D FFT of a square `n × n` buffer.
struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        buf.par_chunks_mut(n).for_each(|row| plan.process(row));
        let mut t = transpose(buf, n);
        t.par_chunks_mut(n).for_each(|col| plan.process(col));
        buf.copy_from_slice(&transpose(&t, n));
    }
}

fn transpose(buf: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            out[i * n + j] = buf[j * n + i];
        }
    }
    out
}

/// Discrete Cauchy transform `(1/π) Σ_w F(w) h² / (z − w)` on one lattice.
struct Cauchy {
    n: usize,
    h: f64,
    fft: Fft2,
    kernel_hat: Vec<Complex64>,
}

impl Cauchy {
    fn new(n: usize, h: f64) -> Self {
        let big = 2 * n;
        let fft = Fft2::new(big);
        let mut kernel = vec![Complex64::new(0.0, 0.0); big * big];
        let span = n as isize - 1;
        for dj in -span..=span {
            for di in -span..=span {
                if di == 0 && dj == 0 {
                    continue;
                }
                let idx = dj.rem_euclid(big as isize) as usize * big + di.rem_euclid(big as isize) as usize;
                kernel[idx] = Complex64::new(h / std::f64::consts::PI, 0.0) / Complex64::new(di as f64, dj as f64);
            }
        }
        fft.run(&mut kernel, false);
        Cauchy {
            n,
            h,
            fft,
            kernel_hat: kernel,
        }
    }

    fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let (n, big) = (self.n, 2 * self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); big * big];
        for j in 0..n {
            buf[j * big..j * big + n].copy_from_slice(&f[j * n..(j + 1) * n]);
        }
        self.fft.run(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft.run(&mut buf, true);
        let scale = 1.0 / (big * big) as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        let at = |i: isize, j: isize| -> Complex64 {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                Complex64::new(0.0, 0.0)
            } else {
                f[j as usize * n + i as usize]
            }
        };
        let h = self.h;
        for j in 0..n {
            for i in 0..n {
                let (ii, jj) = (i as isize, j as isize);
                // ∂F = (F_x − i F_y)/2
                let fx = (at(ii + 1, jj) - at(ii - 1, jj)) / (2.0 * h);
                let fy = (at(ii, jj + 1) - at(ii, jj - 1)) / (2.0 * h);
                let dz = (fx - Complex64::i() * fy) * 0.5;
                out[j * n + i] = buf[j * big + i] * scale - dz * (h * h / std::f64::consts::PI);
            }
        }
        out
    }
}

/// `binom(i + k, i)` for `k < len`.
fn binomials(i: u32, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut b = 1.0;
    for k in 0..len {
        out.push(b);
        b *= (i as f64 + k as f64 + 1.0) / (k as f64 + 1.0);
    }
    out
}

/// Terms needed for `x^k binom(m − 1 + k, m − 1) < 1e−17`.
fn series_length(x: f64, m: u32) -> usize {
    let mut term = 1.0;
    let mut k = 0usize;
    while term > 1e-17 && k < 20_000 {
        term *= x * (m as f64 + k as f64) / (k as f64 + 1.0);
        k += 1;
    }
    k + 1
}

/// Solves `(1 − |z|²) ∂̄u = f` on the lattice of `f`.
#[allow(clippy::too_many_arguments)]
pub fn solve_dbar(
    f: &GridFunction,
    z_set: &PointSet,
    phi: &Weight,
    p: f64,
    alpha: f64,
    pou: &PartitionOfUnity,
    opts: &DbarOptions,
) -> Result<DbarSolution> {
    let m = opts.kernel_order;
    if m < 1 {
        return Err(invalid("kernel_order", "must be at least 1"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be positive, got {p}")));
    }
    if !(f.r_max < 1.0) {
        return Err(invalid("r_max", "grid must lie inside the disk"));
    }
    let n = f.n;
    let nodes: Vec<(usize, Complex64)> = f.inside_nodes().map(|(i, j, z, _)| (j * n + i, z)).collect();

    // γ_j at every inside node, grouped by center
    let mut per_center: Vec<Vec<(usize, f64)>> = vec![Vec::new(); pou.len()];
    for &(idx, z) in &nodes {
        for (j, g) in pou.weights(DiskPoint::unchecked(z))? {
            per_center[j].push((idx, g));
        }
    }

    let cauchy = Cauchy::new(n, f.h);
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    let mut factor_reports = Vec::with_capacity(pou.len());
    let h2 = f.h * f.h;
    for (j, support) in per_center.iter().enumerate() {
        if support
            .iter()
            .all(|&(idx, _)| f.values[idx] == Complex64::new(0.0, 0.0))
        {
            factor_reports.push(None);
            continue;
        }
        let g = match &opts.factors {
            FactorMode::Unit => None,
            FactorMode::Constructed { eps, options } => {
                Some(construct_g(pou.centers[j], z_set, phi, alpha, *eps, options)?)
            }
        };
        factor_reports.push(g.as_ref().map(|g| g.report));
        let g_at = |z: Complex64| g.as_ref().map_or(Complex64::new(1.0, 0.0), |g| g.eval(z));

        let mut big_g = vec![Complex64::new(0.0, 0.0); n * n];
        let mut cauchy_in = vec![Complex64::new(0.0, 0.0); n * n];
        let mut r_w: f64 = 0.0;
        for &(idx, gamma) in support {
            let fv = f.values[idx];
            if fv == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = f.node(idx % n, idx / n);
            let gv = g_at(w);
            if !(gv.norm() > 0.0 && gv.norm().is_finite()) {
                return Err(Error::VanishingFactor(j));
            }
            let d = 1.0 - w.norm_sqr();
            let val = fv * gamma / gv * d.powi(m as i32 - 1);
            big_g[idx] = val;
            cauchy_in[idx] = val / d.powi(m as i32);
            r_w = r_w.max(w.norm());
        }
        let cauchy_part = cauchy.apply(&cauchy_in);

        // power series of the analytic part
        let len = series_length(r_w * f.r_max, m);
        let mut coef = vec![Complex64::new(0.0, 0.0); len];
        for i in 0..m {
            let bin = binomials(i, len);
            let mut moments = vec![Complex64::new(0.0, 0.0); len];
            for (idx, &val) in big_g.iter().enumerate() {
                if val == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w = f.node(idx % n, idx / n);
                let d = 1.0 - w.norm_sqr();
                let mut t = val * w.conj() * d.powi(-((m - i) as i32)) * h2;
                for mk in moments.iter_mut() {
                    *mk += t;
                    t *= w.conj();
                }
            }
            for k in 0..len {
                coef[k] += moments[k] * bin[k] / std::f64::consts::PI;
            }
        }
        let contrib: Vec<(usize, Complex64)> = nodes
            .par_iter()
            .map(|&(idx, z)| {
                let series = coef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
                (idx, g_at(z) * (cauchy_part[idx] + series))
            })
            .collect();
        for (idx, v) in contrib {
            u[idx] += v;
        }
    }

    let u = GridFunction {
        n,
        h: f.h,
        r_max: f.r_max,
        values: u,
    };
    let (residual, relative_residual) = residual(f, &u);
    let norm_ratio = weighted_ratio(f, &u, z_set, phi, p, alpha);
    Ok(DbarSolution {
        u,
        residual,
        relative_residual,
        norm_ratio,
        kernel_order: m,
        factor_reports,
    })
}

fn residual(f: &GridFunction, u: &GridFunction) -> (GridFunction, f64) {
    let n = f.n;
    let h = f.h;
    let mut res = GridFunction {
        n,
        h,
        r_max: f.r_max,
        values: vec![Complex64::new(0.0, 0.0); n * n],
    };
    let (mut num, mut den) = (0.0, 0.0);
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            if !(f.is_inside(i, j)
                && f.is_inside(i + 1, j)
                && f.is_inside(i - 1, j)
                && f.is_inside(i, j + 1)
                && f.is_inside(i, j - 1))
            {
                continue;
            }
            let ux = (u.get(i + 1, j) - u.get(i - 1, j)) / (2.0 * h);
            let uy = (u.get(i, j + 1) - u.get(i, j - 1)) / (2.0 * h);
            let dbar = (ux + Complex64::i() * uy) * 0.5;
            let z = f.node(i, j);
            let r = dbar * (1.0 - z.norm_sqr()) - f.get(i, j);
            res.values[j * n + i] = r;
            num += r.norm_sqr();
            den += f.get(i, j).norm_sqr();
        }
    }
    let rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    (res, rel)
}

fn weighted_ratio(
    f: &GridFunction,
    u: &GridFunction,
    z_set: &PointSet,
    phi: &Weight,
    p: f64,
    alpha: f64,
) -> Option<f64> {
    let (mut nu, mut nf) = (0.0, 0.0);
    for (i, j, z, fv) in f.inside_nodes() {
        let zp = DiskPoint::unchecked(z);
        let w = (p * (k_function(z_set, zp) - phi.eval(zp))).exp() * zp.defect().powf(alpha * p - 1.0);
        nu += u.get(i, j).norm().powf(p) * w;
        nf += fv.norm().powf(p) * w;
    }
    (nf > 0.0).then(|| (nu / nf).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pou::partition_of_unity;
    use crate::weights::standard_weight;

    fn bump(z: Complex64) -> Complex64 {
        let t = z.norm_sqr() / 0.64;
        let b = if t < 1.0 {
            (-1.0 / (1.0 - t)).exp() * std::f64::consts::E
        } else {
            0.0
        };
        Complex64::new(b * (1.0 - z.norm_sqr()), 0.0) * (Complex64::new(1.0, 0.0) + z * 0.5)
    }

    fn zero_weight() -> Weight {
        Weight::new(
            "zero",
            std::sync::Arc::new(|_| 0.0),
            Some(std::sync::Arc::new(|_| 0.0)),
            0.0,
            0.0,
        )
        .unwrap()
    }

    fn single(m: u32) -> DbarOptions {
        DbarOptions {
            kernel_order: m,
            factors: FactorMode::Unit,
        }
    }

    #[test]
    fn zero_data() {
        let f = GridFunction::zeros(33, 0.95).unwrap();
        let sol = solve_dbar(
            &f,
            &PointSet::empty(),
            &zero_weight(),
            2.0,
            1.0,
            &PartitionOfUnity::single(0.95),
            &single(3),
        )
        .unwrap();
        assert!(sol.u.values.iter().all(|v| v.norm() == 0.0));
        assert_eq!(sol.relative_residual, 0.0);
        assert_eq!(sol.norm_ratio, None);
    }

    #[test]
    fn single_term_residual_converges() {
        let mut last = f64::INFINITY;
        for n in [65, 129] {
            let f = GridFunction::from_fn(n, 0.95, bump).unwrap();
            let sol = solve_dbar(
                &f,
                &PointSet::empty(),
                &zero_weight(),
                2.0,
                1.0,
                &PartitionOfUnity::single(0.95),
                &single(1),
            )
            .unwrap();
            assert!(sol.relative_residual < last / 2.0, "n = {n}: {}", sol.relative_residual);
            last = sol.relative_residual;
        }
        assert!(last < 2e-2, "{last}");
    }

    #[test]
    fn analytic_part_matches_direct_quadrature() {
        // compare with the kernel summed directly at a few nodes (m = 3)
        let n = 33;
        let f = GridFunction::from_fn(n, 0.9, bump).unwrap();
        let sol = solve_dbar(
            &f,
            &PointSet::empty(),
            &zero_weight(),
            2.0,
            1.0,
            &PartitionOfUnity::single(0.9),
            &single(3),
        )
        .unwrap();
        let h2 = f.h * f.h;
        for &(i, j) in &[(16usize, 16usize), (5, 20), (28, 9)] {
            let z = f.node(i, j);
            let mut direct = Complex64::new(0.0, 0.0);
            for (ii, jj, w, v) in f.inside_nodes() {
                if ii == i && jj == j {
                    continue;
                }
                let d = 1.0 - w.norm_sqr();
                direct += v * d * d / ((z - w) * (Complex64::new(1.0, 0.0) - w.conj() * z).powi(3)) * h2;
            }
            direct /= std::f64::consts::PI;
            // the two differ only in the node cell, an O(h²) term
            let diff = sol.u.get(i, j) - direct;
            assert!(diff.norm() < 10.0 * h2, "({i},{j}): {diff}");
        }
    }

    #[test]
    fn linearity() {
        let f1 = GridFunction::from_fn(33, 0.9, bump).unwrap();
        let f2 = GridFunction::from_fn(33, 0.9, |z| bump(z * 0.8) * z).unwrap();
        let mut sum = f1.clone();
        for (s, v) in sum.values.iter_mut().zip(&f2.values) {
            *s += v;
        }
        let pou = partition_of_unity(0.5, 0.6, 0.9).unwrap();
        let phi = standard_weight(1.0).unwrap();
        let z = PointSet::empty();
        let a = solve_dbar(&f1, &z, &phi, 2.0, 1.0, &pou, &single(3)).unwrap();
        let b = solve_dbar(&f2, &z, &phi, 2.0, 1.0, &pou, &single(3)).unwrap();
        let c = solve_dbar(&sum, &z, &phi, 2.0, 1.0, &pou, &single(3)).unwrap();
        for k in 0..a.u.values.len() {
            assert!((a.u.values[k] + b.u.values[k] - c.u.values[k]).norm() < 1e-10);
        }
        assert!(c.norm_ratio.unwrap() > 0.0);
    }

    #[test]
    fn constructed_factors_solve_the_equation() {
        let f = GridFunction::from_fn(65, 0.9, bump).unwrap();
        let pou = partition_of_unity(0.5, 0.6, 0.9).unwrap();
        let phi = standard_weight(2.0).unwrap();
        let z = PointSet::from_points([DiskPoint::new(0.2, 0.1).unwrap()]);
        let opts = DbarOptions {
            kernel_order: 3,
            factors: FactorMode::Constructed {
                eps: 0.2,
                options: GOptions {
                    radial_res: 8,
                    ..GOptions::default()
                },
            },
        };
        let sol = solve_dbar(&f, &z, &phi, 2.0, 1.0, &pou, &opts).unwrap();
        let unit = solve_dbar(&f, &z, &phi, 2.0, 1.0, &pou, &single(3)).unwrap();
        assert!(sol.relative_residual < 0.1, "{}", sol.relative_residual);
        assert!(sol.relative_residual < 2.0 * unit.relative_residual + 1e-3);
        assert!(sol.factor_reports.iter().flatten().all(|r| r.delta > 0.0));
    }
}
