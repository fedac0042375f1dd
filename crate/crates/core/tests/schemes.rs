use bergman_interp::schemes::{build_scheme, check_admissible, coset_norm, BuildOptions, CosetParams, Jet};
use bergman_interp::sequences::hyperbolic_lattice;
use bergman_interp::weights::perturbed_standard;
use bergman_interp::{DiskPoint, DiskRegion, PointSet};
use num_complex::Complex64;

#[test]
fn singleton_norm_stays_in_a_band() {
    // ‖w‖^p against |c|^p e^{−pφ(z)} (1 − |z|²)^{αp + 1} on D(z, ε) as z
    // runs to the boundary; the ratio should neither drift nor blow up
    let phi = perturbed_standard(1.0, 0.3).unwrap();
    let eps = 0.2;
    for (p, alpha) in [(2.0, 1.0), (1.5, 0.5), (3.0, 2.0)] {
        let params = CosetParams {
            p,
            alpha,
            basis_dim: 8,
            quad_res: 24,
        };
        let mut ratios = Vec::new();
        for r in [0.0, 0.5, 0.8, 0.95, 0.99, 0.999] {
            let z = DiskPoint::from_complex(Complex64::from_polar(r, 0.7)).unwrap();
            let cluster = PointSet::from_points([z]);
            let c = Complex64::new(1.5, -0.5);
            let jet = Jet::new(&cluster, vec![vec![c]]).unwrap();
            let region = DiskRegion::new(z, eps).unwrap();
            let norm = coset_norm(&region, &cluster, &jet, &phi, &params).unwrap().norm;
            let model = c.norm().powf(p) * (-p * phi.eval(z)).exp() * z.defect().powf(alpha * p + 1.0);
            ratios.push(norm.powf(p) / model);
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 1.5, "p = {p}, α = {alpha}: {ratios:?}");
    }
}

#[test]
fn lattice_schemes_are_admissible() {
    for (spacing, delta) in [(0.5, 0.3), (0.3, 0.2)] {
        let z = hyperbolic_lattice(spacing, 0.99).unwrap();
        let s = build_scheme(&z, delta, 0.1, &BuildOptions::default()).unwrap();
        // lattice points are spacing apart, so every cluster is a singleton
        assert_eq!(s.len(), z.distinct_len());
        let rep = check_admissible(&s);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.measured.b_star, 1);
    }
}
