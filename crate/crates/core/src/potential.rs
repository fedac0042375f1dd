//! Potentials with prescribed invariant Laplacian, computed mode by mode on
//! circles about the origin.
//!
//! Given samples of `G = Δ̃u`, the potential `P` satisfies `Δ̃P = G`,
//! `P(0) = 0`, `∇P(0) = 0`, and has no harmonic `Re(cz²)` term at the origin.
//! Writing `F = G/(1 − |z|²)²` and `F_n(s)` for the Fourier coefficients of
//! `F` on `|z| = s`, the modes of `P` on `|z| = r` are
//!
//! ```text
//! n = 0      P_0(r) = 4 ∫_0^r F_0(s) log(r/s) s ds
//! k = 1, 2   P_n(r) = (2/k) ∫_0^r F_n(s) ((r/s)^k − (s/r)^k) s ds
//! k ≥ 3      P_n(r) = 2 ∫_0^1 F_n(s) κ_k(r, s) s ds
//! ```
//!
//! with `k = |n|` and `κ_k` the mode of the kernel
//! `log|Ψ_w(z)/Ψ_w(0)|²`, where `Ψ_w` is the single-point regularized product.
//! For `s > r` that mode equals `−(r^k/k) s^{−k} (1 − s²)² Q_k(s²)` with
//! `Q_k(x) = Σ_{j<k} (j+1) x^j`, so the factor `(1 − s²)²` cancels the growth
//! of `F` at the boundary exactly and the integrand stays bounded up to
//! `s = 1`. The purely local kernel is not used for `k ≥ 3` because
//! `(r/s)^k` amplifies rounding noise in the low-radius modes.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::geometry::grid::{annular_rule, radial_rule};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialConfig {
    /// Gauss–Legendre nodes per radial panel.
    pub panel_nodes: usize,
    /// Angles per ring (FFT length).
    pub angles: usize,
    /// Geometric panels between the outermost evaluation radius and `1`.
    pub outer_panels: usize,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            panel_nodes: 24,
            angles: 256,
            outer_panels: 10,
        }
    }
}

impl PotentialConfig {
    pub fn with_resolution(resolution: usize) -> Self {
        PotentialConfig {
            panel_nodes: resolution.max(8),
            angles: (8 * resolution).next_power_of_two().max(64),
            outer_panels: 10,
        }
    }
}

/// Fourier data of the potential on one circle.
#[derive(Clone, Debug)]
pub struct Ring {
    pub radius: f64,
    /// Mode coefficients in FFT order (index `N + n` for negative `n`).
    pub modes: Vec<Complex64>,
}

impl Ring {
    pub fn angles(&self) -> usize {
        self.modes.len()
    }

    /// Value at angle `theta` by direct mode summation.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.modes.len();
        let half = n / 2;
        let mut acc = self.modes[0].re;
        let step = Complex64::from_polar(1.0, theta);
        let mut e = step;
        for k in 1..half {
            // real data: c_{−k} = conj(c_k)
            acc += 2.0 * (self.modes[k] * e).re;
            e *= step;
        }
        acc
    }

    /// Values at the `N` equispaced angles `2πj/N`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.modes.len();
        let mut buf = self.modes.clone();
        buf[n / 2] = Complex64::new(0.0, 0.0);
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

struct RadialNode {
    s: f64,
    w: f64,
    modes: Vec<Complex64>,
}

struct Panel {
    lo: f64,
    hi: f64,
    nodes: Vec<RadialNode>,
}

/// Sampled Laplacian data from which the potential can be evaluated on any
/// circle `|z| = r < 1`.
///
/// Radial panels are a graded panel `[0, b₀]`, Gauss–Legendre panels between
/// consecutive breakpoints, and geometric panels from the last breakpoint to
/// `1`. Evaluating at a radius that is not a breakpoint resamples only the
/// panel containing it, split at that radius, because the kernels are not
/// smooth across `s = r`.
pub struct PotentialField<G> {
    lap: G,
    cfg: PotentialConfig,
    fft: Arc<dyn Fft<f64>>,
    panels: Vec<Panel>,
}

impl<G> PotentialField<G>
where
    G: Fn(Complex64) -> f64 + Sync,
{
    /// `breakpoints` must be strictly increasing inside `(0, 1)`; an empty
    /// list means `[1/2]`.
    pub fn new(lap: G, breakpoints: &[f64], cfg: &PotentialConfig) -> Result<Self> {
        if breakpoints.windows(2).any(|w| w[0] >= w[1])
            || breakpoints.first().is_some_and(|&b| b <= 0.0)
            || breakpoints.last().is_some_and(|&b| b >= 1.0)
        {
            return Err(invalid("radii", "must be strictly increasing inside (0, 1)"));
        }
        if cfg.angles < 16 || cfg.panel_nodes < 2 {
            return Err(invalid("cfg", "need at least 16 angles and 2 nodes per panel"));
        }
        let bps: Vec<f64> = if breakpoints.is_empty() {
            vec![0.5]
        } else {
            breakpoints.to_vec()
        };
        let mut edges = vec![0.0];
        edges.extend_from_slice(&bps);
        let last = *bps.last().unwrap();
        let gap = 1.0 - last;
        for i in 1..=cfg.outer_panels {
            edges.push(1.0 - gap * 0.5_f64.powi(i as i32));
        }
        edges.push(1.0);

        let fft = FftPlanner::new().plan_fft_forward(cfg.angles);
        let mut field = PotentialField {
            lap,
            cfg: *cfg,
            fft,
            panels: Vec::new(),
        };
        field.panels = edges
            .windows(2)
            .map(|w| Panel {
                lo: w[0],
                hi: w[1],
                nodes: field.sample(w[0], w[1]),
            })
            .collect();
        Ok(field)
    }

    fn sample(&self, lo: f64, hi: f64) -> Vec<RadialNode> {
        let q = self.cfg.panel_nodes;
        let rule = if lo == 0.0 {
            radial_rule(q, hi)
        } else {
            annular_rule(q, lo, hi)
        };
        let n_theta = self.cfg.angles;
        let dt = TAU / n_theta as f64;
        let inv = 1.0 / n_theta as f64;
        rule.par_iter()
            .map(|&(s, w)| {
                let mut buf: Vec<Complex64> = (0..n_theta)
                    .map(|j| Complex64::new((self.lap)(Complex64::from_polar(s, dt * j as f64)), 0.0))
                    .collect();
                self.fft.process(&mut buf);
                for c in &mut buf {
                    *c *= inv;
                }
                RadialNode { s, w, modes: buf }
            })
            .collect()
    }

    /// Modes of the potential on `|z| = r`.
    pub fn ring(&self, r: f64) -> Result<Ring> {
        if !(0.0..1.0).contains(&r) {
            return Err(invalid("r", format!("must lie in [0,1), got {r}")));
        }
        let n_theta = self.cfg.angles;
        let mut out = vec![Complex64::new(0.0, 0.0); n_theta];
        if r > 0.0 {
            for panel in &self.panels {
                if panel.lo < r && r < panel.hi {
                    for node in self.sample(panel.lo, r).iter().chain(self.sample(r, panel.hi).iter()) {
                        accumulate(&mut out, node, r);
                    }
                } else {
                    for node in &panel.nodes {
                        accumulate(&mut out, node, r);
                    }
                }
            }
        }
        Ok(Ring { radius: r, modes: out })
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        let r = z.norm();
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ring(r)?.eval(z.arg()))
    }
}

/// Samples `lap` on rings and returns the potential's modes at each radius.
///
/// `radii` must be strictly increasing inside `(0, 1)`.
pub fn potential_rings<G>(lap: G, radii: &[f64], cfg: &PotentialConfig) -> Result<Vec<Ring>>
where
    G: Fn(Complex64) -> f64 + Sync,
{
    if radii.is_empty() {
        return Ok(Vec::new());
    }
    let field = PotentialField::new(lap, radii, cfg)?;
    radii.par_iter().map(|&r| field.ring(r)).collect()
}

fn accumulate(out: &mut [Complex64], node: &RadialNode, r: f64) {
    let n_theta = out.len();
    let half = n_theta / 2;
    let s = node.s;
    let x = s * s;
    let base = node.w;
    if s < r {
        let f = base / ((1.0 - x) * (1.0 - x));
        out[0] += node.modes[0] * (4.0 * f * (r / s).ln());
        let rs = r / s;
        let sr = s / r;
        let mut rs_k = 1.0;
        let mut sr_k = 1.0;
        let mut prod_k = 1.0;
        for k in 1..half {
            if k <= 2 {
                rs_k *= rs;
            }
            sr_k *= sr;
            prod_k *= r * s;
            let kf = k as f64;
            let kern = if k <= 2 {
                (2.0 / kf) * (rs_k - sr_k)
            } else {
                2.0 * (-sr_k / kf + prod_k * (1.0 / kf + 1.0 - x))
            };
            let c = f * kern;
            out[k] += node.modes[k] * c;
            out[n_theta - k] += node.modes[n_theta - k] * c;
        }
    } else {
        // only k ≥ 3 modes reach outside r
        let rs = r / s;
        let mut rs_k = 1.0;
        let mut x_pow = 1.0; // x^{k-1}
        let mut q = 0.0; // Q_k(x)
        for k in 1..half {
            rs_k *= rs;
            q += k as f64 * x_pow;
            x_pow *= x;
            if k <= 2 {
                continue;
            }
            let kf = k as f64;
            let c = base * (-2.0 / kf) * rs_k * q;
            if c == 0.0 {
                break;
            }
            out[k] += node.modes[k] * c;
            out[n_theta - k] += node.modes[n_theta - k] * c;
        }
    }
}

/// Value of the potential at a single point.
pub fn potential_at<G>(lap: G, z: Complex64, cfg: &PotentialConfig) -> Result<f64>
where
    G: Fn(Complex64) -> f64 + Sync,
{
    if z.norm() == 0.0 {
        return Ok(0.0);
    }
    PotentialField::new(lap, &[], cfg)?.eval(z)
}
