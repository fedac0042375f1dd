//! Parsing of points, polynomials, radius grids and input files.

use std::path::Path;
use std::str::FromStr;

use bergman_interp::analysis::GridFunction;
use bergman_interp::schemes::InterpolationScheme;
use bergman_interp::sequences::hyperbolic_lattice;
use bergman_interp::{DiskPoint, PointSet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

/// A point set with the radius it was truncated at, if it came from a
/// generator.
pub struct Points {
    pub set: PointSet,
    pub truncation: Option<f64>,
}

fn number<T: FromStr>(s: &str, what: &str, spec: &str) -> Result<T, Failure> {
    s.trim()
        .parse()
        .map_err(|_| Failure::Config(format!("cannot parse {what} `{s}` in `{spec}`")))
}

/// `lattice:<spacing>:<r_max>`, `random:<n>:<r_max>` (needs a seed) or a
/// JSON file of `{re, im, mult}` records.
pub fn points(spec: &str, seed: Option<u64>) -> Result<Points, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["lattice", s, r] => {
            let r_max: f64 = number(r, "r_max", spec)?;
            let set = hyperbolic_lattice(number(s, "spacing", spec)?, r_max)?;
            Ok(Points {
                set,
                truncation: Some(r_max),
            })
        }
        ["random", n, r] => {
            let seed = seed.ok_or_else(|| Failure::Config("random point sets need --seed".into()))?;
            let n: usize = number(n, "count", spec)?;
            let r_max: f64 = number(r, "r_max", spec)?;
            if !(r_max > 0.0 && r_max < 1.0) {
                return Err(Failure::Config(format!("r_max must lie in (0,1) in `{spec}`")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Result<Vec<DiskPoint>, _> = (0..n)
                .map(|_| {
                    let r = r_max * rng.gen::<f64>().sqrt();
                    DiskPoint::from_complex(Complex64::from_polar(r, rng.gen::<f64>() * std::f64::consts::TAU))
                })
                .collect();
            Ok(Points {
                set: PointSet::from_points(pts?),
                truncation: Some(r_max),
            })
        }
        _ => Ok(Points {
            set: read_json(Path::new(spec))?,
            truncation: None,
        }),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// A scheme file, either bare or as written by `scheme-build` (under
/// `result.scheme`).
pub fn scheme(path: &Path) -> Result<InterpolationScheme, Failure> {
    let mut inner: serde_json::Value = read_json(path)?;
    for key in ["result", "scheme"] {
        if let Some(v) = inner.get(key) {
            inner = v.clone();
        }
    }
    serde_json::from_value(inner).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// `a:b:step`, both ends included.
pub fn r_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Failure::Config(format!("--r-grid expects a:b:step, got `{spec}`")));
    };
    let (a, b, step): (f64, f64, f64) = (
        number(a, "start", spec)?,
        number(b, "end", spec)?,
        number(step, "step", spec)?,
    );
    if !(step > 0.0 && a <= b) {
        return Err(Failure::Config(format!(
            "--r-grid needs a ≤ b and step > 0, got `{spec}`"
        )));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    // round to the step's decimals so that 0.9 + 3·0.025 prints as 0.975
    let scale = 1e12;
    Ok((0..count)
        .map(|k| ((a + k as f64 * step) * scale).round() / scale)
        .collect())
}

/// Polynomial coefficients, lowest degree first.
pub fn poly(spec: &str) -> Result<Vec<Complex64>, Failure> {
    spec.split(',')
        .map(|s| {
            Complex64::from_str(s.trim())
                .map_err(|_| Failure::Config(format!("cannot parse coefficient `{s}` in --poly")))
        })
        .collect()
}

/// `d`-th derivative of `Σ c_j z^j`.
pub fn poly_derivative(coeffs: &[Complex64], z: Complex64, d: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &c) in coeffs.iter().enumerate().skip(d).rev() {
        let falling: f64 = (0..d).map(|i| (j - i) as f64).product();
        acc = acc * z + c * falling;
    }
    acc
}

/// Grid file, binary when it starts with the binary magic, CSV otherwise.
pub fn grid(path: &Path) -> Result<GridFunction, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let parsed = if bytes.starts_with(b"BGF1") {
        GridFunction::read_binary(bytes.as_slice())
    } else {
        GridFunction::read_csv(bytes.as_slice())
    };
    parsed.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}
