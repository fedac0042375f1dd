//! Weights `φ` on the disk with `m ≤ Δ̃φ ≤ M`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::grid::centered_grid;
use crate::geometry::{
    circle_mean, invariant_laplacian_fd, invariant_laplacian_fd_default, log_defect, mobius, mobius_c, DiskPoint,
    MeasureTag,
};
use crate::potential::{PotentialConfig, PotentialField, Ring};

pub type ScalarFn = Arc<dyn Fn(DiskPoint) -> f64 + Send + Sync>;

/// How a weight's invariant Laplacian is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianSource {
    Analytic,
    FiniteDifference,
}

/// A weight function together with claimed bounds `m ≤ Δ̃φ ≤ M`.
///
/// `m = 0` is accepted so that harmonic and other degenerate test weights can
/// be expressed; the density theory needs `m > 0`.
#[derive(Clone)]
pub struct Weight {
    name: String,
    value: ScalarFn,
    laplacian: Option<ScalarFn>,
    m: f64,
    big_m: f64,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("M", &self.big_m)
            .field("laplacian", &self.laplacian_source())
            .finish()
    }
}

impl Weight {
    pub fn new(
        name: impl Into<String>,
        value: ScalarFn,
        laplacian: Option<ScalarFn>,
        m: f64,
        big_m: f64,
    ) -> Result<Self> {
        if !(m.is_finite() && big_m.is_finite() && m >= 0.0 && m <= big_m) {
            return Err(invalid("m, M", format!("need 0 ≤ m ≤ M, got m = {m}, M = {big_m}")));
        }
        Ok(Weight {
            name: name.into(),
            value,
            laplacian,
            m,
            big_m,
        })
    }

    /// Parses `standard:<alpha>` or `perturbed-standard:<alpha>:<amplitude>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| invalid("weight", format!("cannot parse number `{s}` in `{spec}`")))
        };
        match parts.as_slice() {
            ["standard", a] => standard_weight(num(a)?),
            ["perturbed-standard", a, amp] => perturbed_standard(num(a)?, num(amp)?),
            _ => Err(invalid(
                "weight",
                format!("unknown weight `{spec}`; expected standard:<alpha> or perturbed-standard:<alpha>:<amplitude>"),
            )),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: DiskPoint) -> f64 {
        (self.value)(z)
    }

    /// `Δ̃φ(z)`, analytic when available and otherwise by finite differences
    /// with the default step.
    pub fn laplacian_at(&self, z: DiskPoint) -> f64 {
        match &self.laplacian {
            Some(l) => l(z),
            None => invariant_laplacian_fd_default(|w| (self.value)(w), z).expect("default step stays inside the disk"),
        }
    }

    pub fn laplacian_source(&self) -> LaplacianSource {
        if self.laplacian.is_some() {
            LaplacianSource::Analytic
        } else {
            LaplacianSource::FiniteDifference
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    /// Checks the claimed bounds at `samples`. The Laplacian is always
    /// finite-differenced here so that an analytic formula is checked too.
    pub fn check_bounds(&self, samples: &[DiskPoint], tol: f64) -> Result<()> {
        for &z in samples {
            let h = 1e-3 * z.defect();
            let lap = invariant_laplacian_fd(|w| (self.value)(w), z, h)?;
            if lap < self.m - tol || lap > self.big_m + tol {
                return Err(invalid(
                    "weight",
                    format!(
                        "Δ̃φ({}, {}) = {lap} outside claimed [{}, {}]",
                        z.re(),
                        z.im(),
                        self.m,
                        self.big_m
                    ),
                ));
            }
        }
        Ok(())
    }

    /// `φ ∘ M_a`. The invariant Laplacian commutes with `M_a`, so the bounds
    /// carry over.
    pub fn compose(&self, a: DiskPoint) -> Weight {
        let v = self.value.clone();
        let value: ScalarFn = Arc::new(move |z| v(mobius(a, z)));
        let laplacian = self
            .laplacian
            .clone()
            .map(|l| -> ScalarFn { Arc::new(move |z| l(mobius(a, z))) });
        Weight {
            name: format!("{}∘M({},{})", self.name, a.re(), a.im()),
            value,
            laplacian,
            m: self.m,
            big_m: self.big_m,
        }
    }
}

/// `α log(1/(1 − |z|²))`, with `Δ̃ ≡ α`.
pub fn standard_weight(alpha: f64) -> Result<Weight> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Weight::new(
        format!("standard:{alpha}"),
        Arc::new(move |z: DiskPoint| alpha * log_defect(z.norm_sqr())),
        Some(Arc::new(move |_| alpha)),
        alpha,
        alpha,
    )
}

/// Standard weight plus the harmonic term `amplitude · Re(z²)`.
pub fn perturbed_standard(alpha: f64, amplitude: f64) -> Result<Weight> {
    if !amplitude.is_finite() {
        return Err(invalid("amplitude", "must be finite"));
    }
    let base = standard_weight(alpha)?;
    Weight::new(
        format!("perturbed-standard:{alpha}:{amplitude}"),
        Arc::new(move |z: DiskPoint| alpha * log_defect(z.norm_sqr()) + amplitude * (z.z() * z.z()).re),
        Some(Arc::new(move |_| alpha)),
        base.m,
        base.big_m,
    )
}

/// `τ = φ − α log(1/(1 − |z|²))`.
#[derive(Clone, Debug)]
pub struct NormalizedWeight {
    pub base: Weight,
    pub alpha: f64,
}

pub fn alpha_shift(phi: &Weight, alpha: f64) -> Result<NormalizedWeight> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(NormalizedWeight {
        base: phi.clone(),
        alpha,
    })
}

impl NormalizedWeight {
    pub fn eval(&self, z: DiskPoint) -> f64 {
        self.base.eval(z) - self.alpha * log_defect(z.norm_sqr())
    }

    pub fn laplacian_at(&self, z: DiskPoint) -> f64 {
        self.base.laplacian_at(z) - self.alpha
    }

    /// `(m − α, M − α)`, possibly negative.
    pub fn bounds(&self) -> (f64, f64) {
        (self.base.m - self.alpha, self.base.big_m - self.alpha)
    }

    /// Both sides of `e^{−pφ}/(1 − |z|²) = e^{−pτ}(1 − |z|²)^{αp − 1}`.
    pub fn measure_identity(&self, z: DiskPoint, p: f64) -> (f64, f64) {
        let d = z.defect();
        let lhs = (-p * self.base.eval(z)).exp() / d;
        let rhs = (-p * self.eval(z)).exp() * d.powf(self.alpha * p - 1.0);
        (lhs, rhs)
    }
}

/// `φ̂(r)`: mean of `φ` over `|z| = r` minus `φ(0)`.
pub fn weight_mean(phi: &Weight, r: f64, n: usize) -> Result<f64> {
    Ok(circle_mean(|z| phi.eval(z), r, n)? - phi.eval(DiskPoint::ORIGIN))
}

/// `φ̂(r)` by Green's formula, `(1/π) ∫_{rD} Δ̃φ log(r²/|z|²) dλ`.
pub fn green_mean(phi: &Weight, r: f64, grid_res: usize) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r", format!("must lie in (0,1), got {r}")));
    }
    let grid = centered_grid(r, grid_res, MeasureTag::Invariant)?;
    let r2 = r * r;
    Ok(grid.integrate(|z| phi.laplacian_at(z) * (r2 / z.norm_sqr()).ln()) / PI)
}

type BoxedLap = Box<dyn Fn(Complex64) -> f64 + Send + Sync>;

/// `τ_a`, the potential of `Δ̃φ` normalized at `a`.
///
/// In the coordinate `ζ = M_a(z)` it is the potential of `Δ̃φ ∘ M_a` that
/// vanishes to second order at `ζ = 0` and has no `Re(cζ²)` term; the
/// remaining harmonic freedom in modes `|n| ≥ 3` is fixed by the kernel of
/// [`crate::potential`]. So `τ_a(a) = 0`, and `φ − τ_a` is harmonic.
pub struct GreenPotential {
    a: DiskPoint,
    big_m: f64,
    field: PotentialField<BoxedLap>,
}

/// Diagnostics of [`GreenPotential::check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenCheck {
    /// Smallest sampled value of `τ_a`.
    pub min_value: f64,
    /// Largest `|Δ̃τ_a − Δ̃φ|` over the interior samples.
    pub laplacian_error: f64,
    /// `τ_a(a) / M`.
    pub constant: f64,
}

pub fn green_potential(phi: &Weight, a: DiskPoint, grid_res: usize) -> Result<GreenPotential> {
    let cfg = PotentialConfig::with_resolution(grid_res);
    let composed = phi.compose(a);
    let lap: BoxedLap = Box::new(move |zeta: Complex64| composed.laplacian_at(DiskPoint::unchecked(zeta)));
    Ok(GreenPotential {
        a,
        big_m: phi.big_m,
        field: PotentialField::new(lap, &[0.5, 0.8, 0.95], &cfg)?,
    })
}

impl GreenPotential {
    pub fn center(&self) -> DiskPoint {
        self.a
    }

    pub fn eval(&self, z: DiskPoint) -> f64 {
        self.field
            .eval(mobius_c(self.a.z(), z.z()))
            .expect("M_a maps the disk into itself")
    }

    /// Fourier data of `τ_a ∘ M_a` on `|ζ| = r`.
    pub fn ring(&self, r: f64) -> Result<Ring> {
        self.field.ring(r)
    }

    /// Value in the transported coordinate `ζ = M_a(z)`.
    pub fn eval_transported(&self, zeta: Complex64) -> Result<f64> {
        self.field.eval(zeta)
    }

    /// Samples `τ_a` and its finite-difference Laplacian against `phi`.
    ///
    /// Fails with a resolution diagnostic when the Laplacian is off by more
    /// than `1e−3`.
    pub fn check(&self, phi: &Weight, samples: &[DiskPoint]) -> Result<GreenCheck> {
        let mut min_value = f64::INFINITY;
        let mut laplacian_error: f64 = 0.0;
        for &z in samples {
            min_value = min_value.min(self.eval(z));
            let lap = invariant_laplacian_fd(|w| self.eval(w), z, 1e-3 * z.defect())?;
            laplacian_error = laplacian_error.max((lap - phi.laplacian_at(z)).abs());
        }
        if !(laplacian_error <= 1e-3) {
            return Err(Error::ResolutionTooCoarse(format!(
                "Δ̃τ_a differs from Δ̃φ by {laplacian_error:e}; raise grid_res"
            )));
        }
        let at_a = self.eval(self.a);
        let constant = if self.big_m > 0.0 { at_a / self.big_m } else { 0.0 };
        Ok(GreenCheck {
            min_value,
            laplacian_error,
            constant,
        })
    }
}
