//! Values on a square lattice restricted to `|z| ≤ r_max`, and the local
//! maximal function `m_q`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{DiskPoint, DiskRegion};

const MAGIC: &[u8; 4] = b"BGF1";

/// Lattice `x_i = (i − (n − 1)/2) h`, `i < n`, in both coordinates. Nodes
/// outside `|z| ≤ r_max` carry the value `0` and are skipped by every
/// operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub n: usize,
    pub h: f64,
    pub r_max: f64,
    /// Row-major, `values[j·n + i]` at `x_i + i·y_j`.
    pub values: Vec<Complex64>,
}

impl GridFunction {
    /// Zero function on `n × n` nodes spanning `[−r_max, r_max]²`.
    pub fn zeros(n: usize, r_max: f64) -> Result<Self> {
        if n < 3 {
            return Err(invalid("n", format!("need at least 3 nodes per side, got {n}")));
        }
        if !(r_max > 0.0 && r_max < 1.0) {
            return Err(invalid("r_max", format!("must lie in (0,1), got {r_max}")));
        }
        Ok(GridFunction {
            n,
            h: 2.0 * r_max / (n - 1) as f64,
            r_max,
            values: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn from_fn<F: Fn(Complex64) -> Complex64 + Sync>(n: usize, r_max: f64, f: F) -> Result<Self> {
        let mut g = Self::zeros(n, r_max)?;
        g.fill(f);
        Ok(g)
    }

    /// Overwrites the inside nodes with `f`.
    pub fn fill<F: Fn(Complex64) -> Complex64 + Sync>(&mut self, f: F) {
        let n = self.n;
        let (h, r_max) = (self.h, self.r_max);
        self.values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                let z = node_at(n, h, i, j);
                *v = if inside(z, r_max) {
                    f(z)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        });
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        node_at(self.n, self.h, i, j)
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        inside(self.node(i, j), self.r_max)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.n + i]
    }

    /// Lattice index nearest to `x` along one axis.
    pub fn index_of(&self, x: f64) -> isize {
        (x / self.h + (self.n - 1) as f64 / 2.0).round() as isize
    }

    /// `(i, j, z, value)` over inside nodes, row by row.
    pub fn inside_nodes(&self) -> impl Iterator<Item = (usize, usize, Complex64, Complex64)> + '_ {
        (0..self.n).flat_map(move |j| {
            (0..self.n).filter_map(move |i| {
                let z = self.node(i, j);
                inside(z, self.r_max).then(|| (i, j, z, self.get(i, j)))
            })
        })
    }

    /// `(Σ |v|² h²)^{1/2}` over inside nodes.
    pub fn l2_norm(&self) -> f64 {
        (self.inside_nodes().map(|(.., v)| v.norm_sqr()).sum::<f64>() * self.h * self.h).sqrt()
    }

    pub fn same_lattice(&self, other: &GridFunction) -> bool {
        self.n == other.n && self.h == other.h
    }

    /// CSV with a `h,r_max,n` header line, then `i,j,re,im` per inside node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["h", "r_max", "n"]).map_err(io)?;
        w.write_record([self.h.to_string(), self.r_max.to_string(), self.n.to_string()])
            .map_err(io)?;
        w.write_record(["i", "j", "re", "im"]).map_err(io)?;
        for (i, j, _, v) in self.inside_nodes() {
            w.write_record([i.to_string(), j.to_string(), v.re.to_string(), v.im.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    /// Reads [`GridFunction::write_csv`] output; lines starting with `#` are
    /// ignored.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(input);
        let bad = |msg: String| Error::Parse(msg);
        let mut records = rd.records();
        let mut next = |what: &str| -> Result<csv::StringRecord> {
            records
                .next()
                .ok_or_else(|| bad(format!("missing {what}")))?
                .map_err(|e| bad(e.to_string()))
        };
        let head = next("header")?;
        if head.iter().collect::<Vec<_>>() != ["h", "r_max", "n"] {
            return Err(bad("expected header `h,r_max,n`".into()));
        }
        let meta = next("grid parameters")?;
        let num = |s: Option<&str>| -> Result<f64> {
            s.and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("unparsable number".into()))
        };
        let h = num(meta.get(0))?;
        let r_max = num(meta.get(1))?;
        let n = meta
            .get(2)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| bad("unparsable n".into()))?;
        let mut g = Self::zeros(n, r_max).map_err(|e| bad(e.to_string()))?;
        if (g.h - h).abs() > 1e-12 * h {
            return Err(bad(format!("h = {h} does not match 2 r_max/(n − 1) = {}", g.h)));
        }
        next("column header")?;
        for rec in records {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let idx = |k: usize| -> Result<usize> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .filter(|&v: &usize| v < n)
                    .ok_or_else(|| bad(format!("bad index in record {rec:?}")))
            };
            let (i, j) = (idx(0)?, idx(1)?);
            let v = Complex64::new(num(rec.get(2))?, num(rec.get(3))?);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(bad(format!("non-finite value at ({i}, {j})")));
            }
            g.values[j * n + i] = v;
        }
        Ok(g)
    }

    /// `BGF1`, then `n` as `u64`, `h`, `r_max` and the `n²` values as
    /// `(re, im)` pairs, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        out.write_all(MAGIC).map_err(io)?;
        out.write_all(&(self.n as u64).to_le_bytes()).map_err(io)?;
        out.write_all(&self.h.to_le_bytes()).map_err(io)?;
        out.write_all(&self.r_max.to_le_bytes()).map_err(io)?;
        for v in &self.values {
            out.write_all(&v.re.to_le_bytes()).map_err(io)?;
            out.write_all(&v.im.to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf).map_err(|e| Error::Io(e.to_string()))?;
        if buf.len() < 28 || &buf[..4] != MAGIC {
            return Err(Error::Parse("not a BGF1 grid file".into()));
        }
        let word = |k: usize| -> [u8; 8] { buf[k..k + 8].try_into().expect("8 bytes") };
        let n = u64::from_le_bytes(word(4)) as usize;
        let h = f64::from_le_bytes(word(12));
        let r_max = f64::from_le_bytes(word(20));
        if buf.len() != 28 + 16 * n.saturating_mul(n) {
            return Err(Error::Parse(format!("expected {} value bytes for n = {n}", 16 * n * n)));
        }
        let mut g = Self::zeros(n, r_max).map_err(|e| Error::Parse(e.to_string()))?;
        g.h = h;
        for (k, v) in g.values.iter_mut().enumerate() {
            let at = 28 + 16 * k;
            *v = Complex64::new(f64::from_le_bytes(word(at)), f64::from_le_bytes(word(at + 8)));
        }
        Ok(g)
    }
}

fn node_at(n: usize, h: f64, i: usize, j: usize) -> Complex64 {
    let c = (n - 1) as f64 / 2.0;
    Complex64::new((i as f64 - c) * h, (j as f64 - c) * h)
}

fn inside(z: Complex64, r_max: f64) -> bool {
    z.norm() <= r_max * (1.0 + 1e-12)
}

/// Largest `|ζ|` with `D(ζ, 1/2) ⊂ {|z| ≤ r}`.
pub fn covered_radius(r: f64) -> f64 {
    (r - 0.5) / (1.0 - 0.5 * r)
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(invalid("q", format!("must lie in [1, ∞], got {q}")))
    }
}

/// `m_q(f)(ζ)`: the `L^q` mean of `|f|` over the lattice nodes in
/// `D(ζ, 1/2)`, or their maximum for `q = ∞`.
pub fn mq_at(f: &GridFunction, q: f64, zeta: DiskPoint) -> Result<f64> {
    check_q(q)?;
    let region = DiskRegion::new(zeta, 0.5)?;
    if region.max_modulus() > f.r_max * (1.0 + 1e-12) {
        return Err(Error::InsufficientCoverage {
            re: zeta.re(),
            im: zeta.im(),
        });
    }
    let (c, rho) = region.euclidean();
    let lo_i = f.index_of(c.re - rho).max(0) as usize;
    let hi_i = (f.index_of(c.re + rho).max(0) as usize).min(f.n - 1);
    let lo_j = f.index_of(c.im - rho).max(0) as usize;
    let hi_j = (f.index_of(c.im + rho).max(0) as usize).min(f.n - 1);
    let mut count = 0usize;
    let mut acc = 0.0f64;
    for j in lo_j..=hi_j {
        for i in lo_i..=hi_i {
            if (f.node(i, j) - c).norm() < rho {
                let v = f.get(i, j).norm();
                count += 1;
                if q.is_infinite() {
                    acc = acc.max(v);
                } else {
                    acc += v.powf(q);
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::ResolutionTooCoarse(format!(
            "no lattice node in D(({}, {}), 1/2)",
            zeta.re(),
            zeta.im()
        )));
    }
    Ok(if q.is_infinite() {
        acc
    } else {
        (acc / count as f64).powf(1.0 / q)
    })
}

/// `m_q(f)` on the same lattice, restricted to the nodes whose disk
/// `D(ζ, 1/2)` lies inside `|z| ≤ f.r_max`.
pub fn mq_maximal(f: &GridFunction, q: f64) -> Result<GridFunction> {
    check_q(q)?;
    let r_out = covered_radius(f.r_max);
    if !(r_out > 0.0) {
        return Err(Error::InsufficientCoverage { re: 0.0, im: 0.0 });
    }
    let mut out = GridFunction {
        n: f.n,
        h: f.h,
        r_max: r_out,
        values: vec![Complex64::new(0.0, 0.0); f.n * f.n],
    };
    let n = f.n;
    let rows: Result<Vec<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let z = f.node(i, j);
                    if inside(z, r_out) && z.norm() < 1.0 {
                        Ok(Complex64::new(mq_at(f, q, DiskPoint::unchecked(z))?, 0.0))
                    } else {
                        Ok(Complex64::new(0.0, 0.0))
                    }
                })
                .collect()
        })
        .collect();
    for (j, row) in rows?.into_iter().enumerate() {
        out.values[j * n..(j + 1) * n].copy_from_slice(&row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lattice_layout() {
        let g = GridFunction::zeros(5, 0.8).unwrap();
        assert_eq!(g.h, 0.4);
        assert_eq!(g.node(2, 2), Complex64::new(0.0, 0.0));
        assert_eq!(g.node(0, 4), Complex64::new(-0.8, 0.8));
        assert!(g.is_inside(0, 2) && !g.is_inside(0, 0));
        assert_eq!(g.index_of(0.4), 3);
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let g = GridFunction::from_fn(17, 0.9, |z| z * z + Complex64::new(0.1, -0.2)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let mut with_comment = b"# manifest: {}\n".to_vec();
        with_comment.extend_from_slice(&buf);
        assert_eq!(GridFunction::read_csv(&with_comment[..]).unwrap(), g);
        let mut bin = Vec::new();
        g.write_binary(&mut bin).unwrap();
        assert_eq!(GridFunction::read_binary(&bin[..]).unwrap(), g);
        assert!(GridFunction::read_binary(&bin[..20]).is_err());
        assert!(GridFunction::read_csv(&b"x,y\n"[..]).is_err());
    }

    #[test]
    fn constants_are_fixed_points() {
        let one = GridFunction::from_fn(41, 0.95, |_| Complex64::new(1.0, 0.0)).unwrap();
        let c = GridFunction::from_fn(41, 0.95, |_| Complex64::new(-0.6, 0.8)).unwrap();
        for q in [1.0, 2.0, 3.5, f64::INFINITY] {
            let m = mq_maximal(&c, q).unwrap();
            for (.., v) in m.inside_nodes() {
                assert!((v.re - 1.0).abs() < 1e-12, "q = {q}: {v}");
            }
        }
        let m = mq_maximal(&one, f64::INFINITY).unwrap();
        assert!(m.inside_nodes().all(|(.., v)| v.re == 1.0));
    }

    #[test]
    fn sup_dominates_means_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut f = GridFunction::zeros(33, 0.9).unwrap();
        let mut g = f.clone();
        for k in 0..f.values.len() {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.values[k] = v;
            g.values[k] = v * rng.gen_range(1.0..2.0);
        }
        let (i2, ii) = (mq_maximal(&f, 2.0).unwrap(), mq_maximal(&f, f64::INFINITY).unwrap());
        let g2 = mq_maximal(&g, 2.0).unwrap();
        for k in 0..f.values.len() {
            assert!(ii.values[k].re >= i2.values[k].re - 1e-15);
            assert!(g2.values[k].re >= i2.values[k].re - 1e-15);
        }
    }

    #[test]
    fn coverage_is_enforced() {
        let f = GridFunction::zeros(21, 0.8).unwrap();
        assert!(mq_at(&f, 2.0, DiskPoint::new(0.7, 0.0).unwrap()).is_err());
        assert!(mq_at(&f, 2.0, DiskPoint::ORIGIN).is_ok());
        assert!(mq_at(&f, 0.5, DiskPoint::ORIGIN).is_err());
        assert!(mq_maximal(&GridFunction::zeros(21, 0.45).unwrap(), 2.0).is_err());
    }
}
