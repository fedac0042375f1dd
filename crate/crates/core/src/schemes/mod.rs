//! Interpolation schemes `(G_k, Z_k)`: admissibility, construction,
//! subschemes and radial perturbation. Quotient norms live in [`coset`].

pub mod coset;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{mobius, psh, psh_add, DiskPoint, DiskRegion};
use crate::sequences::PointSet;

pub use coset::{
    coset_norm, jet_constraints, phi_operator_norm_check, CosetNormResult, CosetParams, Jet, OperatorNormCheck,
};

/// Comparisons in [`check_admissible`] allow this much rounding slack.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemePair {
    #[serde(flatten)]
    pub region: DiskRegion,
    pub cluster: PointSet,
}

/// Claimed constants `R` (diameter), `eps` (margin), `delta` (separation)
/// and `B` (cluster size).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    #[serde(rename = "R")]
    pub r: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "B")]
    pub b: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme")]
pub struct InterpolationScheme {
    pub pairs: Vec<SchemePair>,
    pub constants: SchemeConstants,
}

#[derive(Deserialize)]
struct RawScheme {
    pairs: Vec<SchemePair>,
    constants: SchemeConstants,
}

impl TryFrom<RawScheme> for InterpolationScheme {
    type Error = Error;
    fn try_from(raw: RawScheme) -> Result<Self> {
        InterpolationScheme::new(raw.pairs, raw.constants)
    }
}

impl InterpolationScheme {
    /// Checks only structural validity (nonempty clusters, radii in
    /// `(0, 1)`); the axioms themselves are report content of
    /// [`check_admissible`].
    pub fn new(pairs: Vec<SchemePair>, constants: SchemeConstants) -> Result<Self> {
        for (k, pair) in pairs.iter().enumerate() {
            if pair.cluster.is_empty() {
                return Err(Error::EmptyCluster(k));
            }
            DiskRegion::new(pair.region.center, pair.region.radius)?;
        }
        Ok(InterpolationScheme { pairs, constants })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// All cluster points as one multiset.
    pub fn points(&self) -> PointSet {
        self.pairs
            .iter()
            .fold(PointSet::empty(), |acc, p| acc.union(&p.cluster))
    }
}

/// One axiom's verdict with the extremal value and where it occurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub pass: bool,
    /// Extremal measured value; `None` when vacuous (e.g. separation of a
    /// single cluster).
    pub value: Option<f64>,
    /// Pair indices attaining the extremum.
    pub witness: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstants {
    pub r_star: f64,
    pub eps_star: f64,
    /// `None` stands for `+∞` (fewer than two clusters).
    pub delta_star: Option<f64>,
    pub b_star: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub p1: AxiomCheck,
    pub p2: AxiomCheck,
    pub p3: AxiomCheck,
    pub p4: AxiomCheck,
    pub measured: MeasuredConstants,
    /// Largest number of regions containing a common point.
    pub overlap_bound: usize,
}

pub fn check_admissible(scheme: &InterpolationScheme) -> AdmissibilityReport {
    let c = scheme.constants;
    let tol = ADMISSIBILITY_TOL;

    // P1: diameters
    let mut r_star: f64 = 0.0;
    let mut p1_w = Vec::new();
    for (k, pair) in scheme.pairs.iter().enumerate() {
        let d = pair.region.diameter();
        if d > r_star {
            r_star = d;
            p1_w = vec![k];
        }
    }
    let p1 = AxiomCheck {
        pass: r_star <= c.r + tol,
        value: Some(r_star),
        witness: p1_w,
    };

    // P2: margins of cluster points
    let mut eps_star = f64::INFINITY;
    let mut p2_w = Vec::new();
    for (k, pair) in scheme.pairs.iter().enumerate() {
        for z in pair.cluster.distinct() {
            let m = if pair.region.contains(z) {
                pair.region.margin(z)
            } else {
                0.0
            };
            if m < eps_star {
                eps_star = m;
                p2_w = vec![k];
            }
        }
    }
    if scheme.is_empty() {
        eps_star = 1.0;
    }
    let p2 = AxiomCheck {
        pass: eps_star >= c.eps - tol,
        value: Some(eps_star),
        witness: p2_w,
    };

    // P3: separation between clusters
    let mut delta_star: Option<f64> = None;
    let mut p3_w = Vec::new();
    let clusters: Vec<Vec<DiskPoint>> = scheme.pairs.iter().map(|p| p.cluster.distinct()).collect();
    for k in 0..clusters.len() {
        for l in k + 1..clusters.len() {
            let mut best = f64::INFINITY;
            for a in &clusters[k] {
                for b in &clusters[l] {
                    best = best.min(psh(a.z(), b.z()));
                }
            }
            if delta_star.is_none_or(|d| best < d) {
                delta_star = Some(best);
                p3_w = vec![k, l];
            }
        }
    }
    let p3 = AxiomCheck {
        pass: delta_star.is_none_or(|d| d >= c.delta - tol),
        value: delta_star,
        witness: p3_w,
    };

    // P4: cluster sizes
    let mut b_star = 0;
    let mut p4_w = Vec::new();
    for (k, pair) in scheme.pairs.iter().enumerate() {
        let n = pair.cluster.total();
        if n > b_star {
            b_star = n;
            p4_w = vec![k];
        }
    }
    let p4 = AxiomCheck {
        pass: b_star <= c.b,
        value: Some(b_star as f64),
        witness: p4_w,
    };

    let overlap_bound = overlap(scheme.pairs.iter().map(|p| p.region));
    AdmissibilityReport {
        pass: p1.pass && p2.pass && p3.pass && p4.pass,
        p1,
        p2,
        p3,
        p4,
        measured: MeasuredConstants {
            r_star,
            eps_star,
            delta_star,
            b_star,
        },
        overlap_bound,
    }
}

/// Maximum depth of an arrangement of disks.
///
/// The maximum is attained near a crossing of two boundary circles or
/// inside a disk whose interior no other boundary crosses, so probing the
/// crossings (counted with closed containment) and the centers is exact
/// for arrangements in general position.
pub fn overlap<I: IntoIterator<Item = DiskRegion>>(regions: I) -> usize {
    let disks: Vec<(Complex64, f64)> = regions.into_iter().map(|r| r.euclidean()).collect();
    if disks.is_empty() {
        return 0;
    }
    let depth = |z: Complex64, slack: f64| disks.iter().filter(|(c, rho)| (z - c).norm() <= rho + slack).count();
    let mut best = disks.iter().map(|(c, _)| depth(*c, 0.0)).max().unwrap_or(0);
    for i in 0..disks.len() {
        for j in i + 1..disks.len() {
            let (c1, r1) = disks[i];
            let (c2, r2) = disks[j];
            let d = (c2 - c1).norm();
            if d >= r1 + r2 || d <= (r1 - r2).abs() || d == 0.0 {
                continue;
            }
            let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
            let h = (r1 * r1 - a * a).max(0.0).sqrt();
            let u = (c2 - c1) / d;
            let base = c1 + u * a;
            for sign in [1.0, -1.0] {
                let v = base + u * Complex64::new(0.0, sign * h);
                best = best.max(depth(v, 1e-12));
            }
        }
    }
    best
}

/// Options of [`build_scheme`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Diameter ceiling `R`.
    pub r_ceiling: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { r_ceiling: 0.9 }
    }
}

/// Single-linkage components of `z_set` at scale `delta`, in canonical
/// order of their first point.
pub fn clusters(z_set: &PointSet, delta: f64) -> Vec<PointSet> {
    let pts = z_set.points();
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if psh(pts[i].point.z(), pts[j].point.z()) < delta {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
        .into_iter()
        .map(|g| {
            PointSet::with_multiplicities(g.into_iter().map(|i| (pts[i].point, pts[i].mult)))
                .expect("multiplicities already positive")
        })
        .collect()
}

/// Approximate pseudohyperbolic Chebyshev center and radius of a point set.
///
/// Starts from the medoid and runs the Bădoiu–Clarkson iteration in the
/// hyperbolic metric (step toward the farthest point by a shrinking fraction
/// of the geodesic), keeping the best center seen.
pub fn chebyshev_center(points: &[DiskPoint]) -> (DiskPoint, f64) {
    let far = |c: DiskPoint| -> (f64, DiskPoint) {
        points
            .iter()
            .map(|&q| (psh(c.z(), q.z()), q))
            .fold((0.0, c), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    let mut best = points[0];
    let mut best_r = far(best).0;
    for &q in &points[1..] {
        let r = far(q).0;
        if r < best_r {
            best = q;
            best_r = r;
        }
    }
    if points.len() < 2 {
        return (best, best_r);
    }
    let mut c = best;
    for i in 1..=200 {
        let (_, q) = far(c);
        // in coordinates ζ = M_c(z) the geodesic from c to q is a ray from 0
        let w = mobius(c, q).z();
        let d = w.norm();
        if d == 0.0 {
            break;
        }
        let step = ((d.atanh()) / (i as f64 + 1.0)).tanh();
        let moved = DiskPoint::unchecked(w / d * step);
        c = mobius(c, moved);
        let r = far(c).0;
        if r < best_r {
            best = c;
            best_r = r;
        }
    }
    (best, best_r)
}

/// Clusters `z_set` at separation `delta` and covers each cluster by a
/// pseudohyperbolic disk leaving margin `eps` around its points.
pub fn build_scheme(z_set: &PointSet, delta: f64, eps: f64, opts: &BuildOptions) -> Result<InterpolationScheme> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0,1), got {delta}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("must lie in (0,1), got {eps}")));
    }
    if z_set.is_empty() {
        return Err(Error::EmptyInput("point set"));
    }
    let mut pairs = Vec::new();
    let mut b = 0;
    for (k, cluster) in clusters(z_set, delta).into_iter().enumerate() {
        let (center, t) = chebyshev_center(&cluster.distinct());
        let radius = psh_add(t, eps);
        let region = DiskRegion::new(center, radius)?;
        if region.diameter() > opts.r_ceiling {
            return Err(Error::ClusterTooLarge {
                index: k,
                diameter: region.diameter(),
                ceiling: opts.r_ceiling,
            });
        }
        b = b.max(cluster.total());
        pairs.push(SchemePair { region, cluster });
    }
    InterpolationScheme::new(
        pairs,
        SchemeConstants {
            r: opts.r_ceiling,
            eps,
            delta,
            b,
        },
    )
}

/// Same regions, clusters replaced by the given sub-multisets.
pub fn subscheme(scheme: &InterpolationScheme, keep: &[PointSet]) -> Result<InterpolationScheme> {
    if keep.len() != scheme.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} kept clusters for {} pairs",
            keep.len(),
            scheme.len()
        )));
    }
    let mut pairs = Vec::with_capacity(keep.len());
    for (k, (pair, kept)) in scheme.pairs.iter().zip(keep).enumerate() {
        if kept.is_empty() {
            return Err(Error::EmptyCluster(k));
        }
        if !kept.is_subset_of(&pair.cluster) {
            return Err(Error::NotASubset(k));
        }
        pairs.push(SchemePair {
            region: pair.region,
            cluster: kept.clone(),
        });
    }
    InterpolationScheme::new(pairs, scheme.constants)
}

/// Result of [`perturb_scheme`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedScheme {
    pub scheme: InterpolationScheme,
    /// `max_k sup_{z ∈ G_k} ψ(r_k z, z)`.
    pub eta_star: f64,
}

/// Applies `β_k(z) = r_k z` to each pair.
pub fn perturb_scheme(scheme: &InterpolationScheme, factors: &[f64]) -> Result<PerturbedScheme> {
    if factors.len() != scheme.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} factors for {} pairs",
            factors.len(),
            scheme.len()
        )));
    }
    let mut pairs = Vec::with_capacity(factors.len());
    let mut eta_star: f64 = 0.0;
    for (pair, &r) in scheme.pairs.iter().zip(factors) {
        if !(r > 0.0 && r <= 1.0) {
            return Err(invalid("factors", format!("must lie in (0,1], got {r}")));
        }
        let (c, rho) = pair.region.euclidean();
        let region = if r == 1.0 {
            pair.region
        } else {
            DiskRegion::from_euclidean(c * r, rho * r)?
        };
        let cluster = PointSet::with_multiplicities(
            pair.cluster
                .iter()
                .map(|p| (DiskPoint::unchecked(p.point.z() * r), p.mult)),
        )?;
        // ψ(rz, z) = |z|(1 − r)/(1 − r|z|²) grows with |z|; sample the
        // boundary and the farthest point
        let mut samples = pair.region.boundary_samples(256);
        let m = pair.region.max_modulus().min(1.0 - 1e-15);
        let far = if c.norm() > 0.0 {
            c / c.norm() * m
        } else {
            Complex64::new(m, 0.0)
        };
        samples.push(DiskPoint::unchecked(far));
        for z in samples {
            eta_star = eta_star.max(psh(z.z() * r, z.z()));
        }
        pairs.push(SchemePair { region, cluster });
    }
    Ok(PerturbedScheme {
        scheme: InterpolationScheme::new(pairs, scheme.constants)?,
        eta_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::psh_distance;
    use approx::assert_abs_diff_eq;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    fn pair(c: DiskPoint, r: f64, pts: &[DiskPoint]) -> SchemePair {
        SchemePair {
            region: DiskRegion::new(c, r).unwrap(),
            cluster: PointSet::from_points(pts.iter().copied()),
        }
    }

    fn consts(r: f64, eps: f64, delta: f64, b: u64) -> SchemeConstants {
        SchemeConstants { r, eps, delta, b }
    }

    #[test]
    fn single_pair_report() {
        let s = InterpolationScheme::new(
            vec![pair(DiskPoint::ORIGIN, 0.5, &[DiskPoint::ORIGIN])],
            consts(0.8, 0.5, 0.1, 1),
        )
        .unwrap();
        let rep = check_admissible(&s);
        assert!(rep.pass);
        assert_abs_diff_eq!(rep.measured.r_star, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.measured.eps_star, 0.5, epsilon = 1e-15);
        assert_eq!(rep.measured.delta_star, None);
        assert_eq!(rep.measured.b_star, 1);
        assert_eq!(rep.overlap_bound, 1);
    }

    #[test]
    fn shared_point_fails_separation() {
        let s = InterpolationScheme::new(
            vec![
                pair(DiskPoint::ORIGIN, 0.3, &[DiskPoint::ORIGIN]),
                pair(p(0.1, 0.0), 0.3, &[DiskPoint::ORIGIN]),
            ],
            consts(0.9, 0.01, 0.1, 1),
        )
        .unwrap();
        let rep = check_admissible(&s);
        assert!(!rep.p3.pass);
        assert_eq!(rep.p3.value, Some(0.0));
        assert_eq!(rep.p3.witness, vec![0, 1]);
        assert_eq!(rep.overlap_bound, 2);
    }

    #[test]
    fn separation_of_two_clusters() {
        let s = InterpolationScheme::new(
            vec![
                pair(DiskPoint::ORIGIN, 0.3, &[DiskPoint::ORIGIN]),
                pair(p(0.5, 0.0), 0.3, &[p(0.5, 0.0)]),
            ],
            consts(0.9, 0.1, 0.4, 1),
        )
        .unwrap();
        let rep = check_admissible(&s);
        assert_abs_diff_eq!(rep.measured.delta_star.unwrap(), 0.5, epsilon = 1e-15);
        assert!(rep.pass);
    }

    #[test]
    fn overlap_counts_triple_points() {
        let regions = [
            DiskRegion::from_euclidean(Complex64::new(0.0, 0.0), 0.2).unwrap(),
            DiskRegion::from_euclidean(Complex64::new(0.15, 0.0), 0.2).unwrap(),
            DiskRegion::from_euclidean(Complex64::new(0.07, 0.12), 0.2).unwrap(),
            DiskRegion::from_euclidean(Complex64::new(0.6, 0.0), 0.1).unwrap(),
        ];
        assert_eq!(overlap(regions), 3);
        assert_eq!(overlap(regions[3..].iter().copied()), 1);
    }

    #[test]
    fn build_examples() {
        let opts = BuildOptions::default();
        let s = build_scheme(
            &PointSet::from_points([DiskPoint::ORIGIN, p(0.5, 0.0)]),
            0.2,
            0.05,
            &opts,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert!(check_admissible(&s).pass);
        let s = build_scheme(
            &PointSet::from_points([DiskPoint::ORIGIN, p(0.1, 0.0)]),
            0.2,
            0.05,
            &opts,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.pairs[0].cluster.total(), 2);
        let rep = check_admissible(&s);
        assert!(rep.pass, "{rep:?}");
        // a long chain cannot fit under the ceiling
        let chain = PointSet::from_points((0..12).map(|i| p(-0.9 + 0.15 * i as f64, 0.0)));
        assert!(matches!(
            build_scheme(&chain, 0.5, 0.05, &opts),
            Err(Error::ClusterTooLarge { .. })
        ));
    }

    #[test]
    fn chebyshev_center_of_two_points() {
        let (c, r) = chebyshev_center(&[p(-0.5, 0.0), p(0.5, 0.0)]);
        assert!(c.norm() < 1e-2, "{c:?}");
        assert!(r < psh_distance(p(-0.5, 0.0), p(0.5, 0.0)));
    }

    #[test]
    fn subscheme_rules() {
        let z = PointSet::with_multiplicities([(DiskPoint::ORIGIN, 2), (p(0.05, 0.0), 1), (p(0.7, 0.0), 1)]).unwrap();
        let s = build_scheme(&z, 0.2, 0.05, &BuildOptions::default()).unwrap();
        let same: Vec<PointSet> = s.pairs.iter().map(|p| p.cluster.clone()).collect();
        assert_eq!(subscheme(&s, &same).unwrap(), s);
        let mut reduced = same.clone();
        reduced[0] = PointSet::from_points([DiskPoint::ORIGIN, p(0.05, 0.0)]);
        let sub = subscheme(&s, &reduced).unwrap();
        let (a, b) = (check_admissible(&s), check_admissible(&sub));
        assert!(b.measured.b_star <= a.measured.b_star);
        assert!(b.measured.eps_star >= a.measured.eps_star);
        reduced[0] = PointSet::from_points([p(0.05, 0.0)]);
        let sub = subscheme(&s, &reduced).unwrap();
        assert!(check_admissible(&sub).measured.eps_star >= a.measured.eps_star);
        reduced[0] = PointSet::empty();
        assert_eq!(subscheme(&s, &reduced), Err(Error::EmptyCluster(0)));
        reduced[0] = PointSet::from_points([p(0.3, 0.0)]);
        assert_eq!(subscheme(&s, &reduced), Err(Error::NotASubset(0)));
    }

    #[test]
    fn perturbation_examples() {
        let s = build_scheme(
            &PointSet::from_points([DiskPoint::ORIGIN, p(0.5, 0.0)]),
            0.2,
            0.1,
            &BuildOptions::default(),
        )
        .unwrap();
        let id = perturb_scheme(&s, &[1.0, 1.0]).unwrap();
        assert_eq!(id.scheme, s);
        assert_eq!(id.eta_star, 0.0);
        let moved = perturb_scheme(&s, &[0.9, 0.99]).unwrap();
        assert_eq!(moved.scheme.pairs[0].cluster.distinct()[0], DiskPoint::ORIGIN);
        assert_abs_diff_eq!(moved.scheme.pairs[1].cluster.distinct()[0].re(), 0.495, epsilon = 1e-15);
        // brute-force sup over a fine sampling of the second region
        let region = s.pairs[1].region;
        let (c, rho) = region.euclidean();
        let mut brute: f64 = 0.0;
        for i in 0..=50 {
            for j in 0..256 {
                let z = c + Complex64::from_polar(rho * i as f64 / 50.0, std::f64::consts::TAU * j as f64 / 256.0);
                brute = brute.max(psh(0.99 * z, z));
            }
        }
        let first = {
            let (c, rho) = s.pairs[0].region.euclidean();
            let m = c.norm() + rho;
            m * 0.1 / (1.0 - 0.9 * m * m)
        };
        assert_abs_diff_eq!(moved.eta_star, brute.max(first), epsilon = 1e-9);
        assert!(perturb_scheme(&s, &[1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = build_scheme(
            &PointSet::from_points([DiskPoint::ORIGIN, p(0.5, 0.2)]),
            0.2,
            0.1,
            &BuildOptions::default(),
        )
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"center\"") && text.contains("\"radius\"") && text.contains("\"cluster\""));
        let back: InterpolationScheme = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = text.replace("\"mult\":1", "\"mult\":0");
        assert!(serde_json::from_str::<InterpolationScheme>(&bad).is_err());
    }
}
