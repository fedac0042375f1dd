//! Smooth partitions of unity subordinate to pseudohyperbolic disks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{psh, psh_add, DiskPoint, DiskRegion};
use crate::sequences::hyperbolic_lattice;

/// Largest admissible bump radius.
pub const RHO_CEILING: f64 = 0.9;

/// Bumps `b_j(z) = χ(ψ(z, a_j)/ρ)` with `χ(t) = (1 − t²)⁴` on `[0, 1)`,
/// normalized by their sum. `ρ = 1` is the trivial partition `γ ≡ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub centers: Vec<DiskPoint>,
    pub rho: f64,
    pub spacing: f64,
    pub r_max: f64,
}

fn chi(t: f64) -> f64 {
    if t < 1.0 {
        let s = 1.0 - t * t;
        s * s * s * s
    } else {
        0.0
    }
}

/// Partition on `|z| ≤ r_max` with centers on the hyperbolic lattice of the
/// given spacing.
pub fn partition_of_unity(spacing: f64, rho: f64, r_max: f64) -> Result<PartitionOfUnity> {
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(invalid("spacing", format!("must lie in (0,1), got {spacing}")));
    }
    if !(rho > spacing / 2.0 && rho < RHO_CEILING) {
        return Err(invalid(
            "rho",
            format!("must lie in (spacing/2, {RHO_CEILING}), got {rho}"),
        ));
    }
    if !(r_max > 0.0 && r_max < 1.0) {
        return Err(invalid("r_max", format!("must lie in (0,1), got {r_max}")));
    }
    let reach = psh_add(r_max, rho).min(1.0 - 1e-9);
    let centers: Vec<DiskPoint> = hyperbolic_lattice(spacing, reach)?
        .distinct()
        .into_iter()
        .filter(|a| {
            let r = a.norm();
            r <= r_max || (r - r_max) / (1.0 - r * r_max) < rho
        })
        .collect();
    let pou = PartitionOfUnity {
        centers,
        rho,
        spacing,
        r_max,
    };
    pou.check_covering()?;
    Ok(pou)
}

impl PartitionOfUnity {
    /// The one-term partition `γ₀ ≡ 1` centered at the origin.
    pub fn single(r_max: f64) -> Self {
        PartitionOfUnity {
            centers: vec![DiskPoint::ORIGIN],
            rho: 1.0,
            spacing: 0.0,
            r_max,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.rho >= 1.0
    }

    /// Support `D(a_j, ρ)`; `None` for the trivial partition.
    pub fn support(&self, j: usize) -> Option<DiskRegion> {
        (!self.is_trivial()).then(|| DiskRegion::new(self.centers[j], self.rho).expect("ρ < 1"))
    }

    fn bump(&self, j: usize, z: DiskPoint) -> f64 {
        if self.is_trivial() {
            1.0
        } else {
            chi(psh(z.z(), self.centers[j].z()) / self.rho)
        }
    }

    /// Nonzero `(j, γ_j(z))`.
    pub fn weights(&self, z: DiskPoint) -> Result<Vec<(usize, f64)>> {
        let raw: Vec<(usize, f64)> = (0..self.centers.len())
            .map(|j| (j, self.bump(j, z)))
            .filter(|&(_, b)| b > 0.0)
            .collect();
        let sum: f64 = raw.iter().map(|&(_, b)| b).sum();
        if !(sum > 0.0) {
            return Err(Error::CoveringGap { re: z.re(), im: z.im() });
        }
        Ok(raw.into_iter().map(|(j, b)| (j, b / sum)).collect())
    }

    pub fn gamma(&self, j: usize, z: DiskPoint) -> Result<f64> {
        Ok(self
            .weights(z)?
            .into_iter()
            .find(|&(k, _)| k == j)
            .map_or(0.0, |(_, g)| g))
    }

    /// Probes a polar grid of `|z| ≤ r_max` for points no bump reaches.
    fn check_covering(&self) -> Result<()> {
        let radial = 64;
        for k in 0..=radial {
            let r = self.r_max * k as f64 / radial as f64;
            let n = if k == 0 { 1 } else { (64.0 / (1.0 - r)).ceil() as usize };
            for t in 0..n {
                let z = DiskPoint::unchecked(num_complex::Complex64::from_polar(
                    r,
                    std::f64::consts::TAU * t as f64 / n as f64,
                ));
                self.weights(z)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_partition() {
        let pou = PartitionOfUnity::single(0.1);
        let w = pou.weights(DiskPoint::new(0.05, 0.0).unwrap()).unwrap();
        assert_eq!(w, vec![(0, 1.0)]);
        let one = partition_of_unity(0.5, 0.6, 0.05).unwrap();
        let z = DiskPoint::new(0.01, 0.02).unwrap();
        let s: f64 = one.weights(z).unwrap().iter().map(|w| w.1).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sums_to_one_with_contained_supports() {
        let pou = partition_of_unity(0.4, 0.5, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let z = DiskPoint::unchecked(Complex64::from_polar(
                0.9 * rng.gen::<f64>().sqrt(),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ));
            let w = pou.weights(z).unwrap();
            let s: f64 = w.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-10);
            for (j, g) in w {
                assert!(g >= 0.0);
                assert!(psh(z.z(), pou.centers[j].z()) < pou.rho);
            }
        }
    }

    #[test]
    fn parameters_are_checked() {
        assert!(partition_of_unity(0.4, 0.15, 0.9).is_err());
        assert!(partition_of_unity(0.4, 0.95, 0.9).is_err());
        assert!(partition_of_unity(1.2, 0.5, 0.9).is_err());
    }
}
