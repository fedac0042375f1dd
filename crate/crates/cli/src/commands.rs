use std::f64::consts::E;

use bergman_interp::analysis::{
    o_interpolation_setup, partition_of_unity, solve_dbar, solve_interpolation, DbarOptions, FactorMode, GOptions,
    GridFunction, InterpOptions, OInterpOptions, PartitionOfUnity,
};
use bergman_interp::density::{default_r_grid, s_uniform_estimate, DensityOptions};
use bergman_interp::lsq::IrlsOptions;
use bergman_interp::products::{log_psi_at_zero, psi_eval, zero_space_norm};
use bergman_interp::schemes::{
    build_scheme, check_admissible, coset_norm, BuildOptions, CosetParams, InterpolationScheme, Jet,
};
use bergman_interp::sequences::hyperbolic_lattice;
use bergman_interp::{DiskPoint, PointSet, Weight};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{need, CommandName, Factors, GridFormat, RunConfig};
use crate::inputs::{self, poly_derivative};
use crate::output::Writer;
use crate::Failure;

pub fn run(command: CommandName, cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    match command {
        CommandName::Density => density(cfg, out),
        CommandName::SchemeBuild => scheme_build(cfg, out),
        CommandName::SchemeCheck => scheme_check(cfg, out),
        CommandName::CosetNorm => coset(cfg, out),
        CommandName::InterpSolve => interp(cfg, out),
        CommandName::DbarSolve => dbar(cfg, out),
        CommandName::ZerosetNorm => zeroset(cfg, out),
        CommandName::OiCheck => oi_check(cfg, out),
    }
}

fn weight(cfg: &RunConfig) -> Result<Weight, Failure> {
    Ok(Weight::from_spec(&need(&cfg.weight, "weight")?)?)
}

fn points(cfg: &RunConfig) -> Result<inputs::Points, Failure> {
    inputs::points(&need(&cfg.points, "points")?, cfg.seed)
}

fn build(cfg: &RunConfig, z: &PointSet) -> Result<InterpolationScheme, Failure> {
    let opts = BuildOptions {
        r_ceiling: need(&cfg.r_ceiling, "r-ceiling")?,
    };
    Ok(build_scheme(
        z,
        need(&cfg.delta, "delta")?,
        need(&cfg.eps, "eps")?,
        &opts,
    )?)
}

/// `--scheme` if given, otherwise a scheme built from `--points`.
fn scheme(cfg: &RunConfig) -> Result<InterpolationScheme, Failure> {
    match &cfg.scheme {
        Some(path) => inputs::scheme(path),
        None => build(cfg, &points(cfg)?.set),
    }
}

fn jets(scheme: &InterpolationScheme, coeffs: &[Complex64]) -> Vec<Jet> {
    scheme
        .pairs
        .iter()
        .map(|pair| Jet::from_derivatives(&pair.cluster, |a, d| poly_derivative(coeffs, a, d)))
        .collect()
}

fn density(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let pts = points(cfg)?;
    let phi = weight(cfg)?;
    let r_grid = inputs::r_grid(&need(&cfg.r_grid, "r-grid")?)?;
    let r0 = need(&cfg.r0, "r0")?;
    // by default the centers reach as far as D(a, r0) stays inside the
    // truncation radius
    let reach = match (cfg.a_reach, pts.truncation) {
        (Some(r), _) => r,
        (None, Some(t)) if t > r0 => ((t - r0) / (1.0 - t * r0)).min(0.95),
        (None, Some(_)) => 0.0,
        (None, None) => 0.95,
    };
    let a_grid = hyperbolic_lattice(need(&cfg.a_spacing, "a-spacing")?, reach)?.distinct();
    let opts = DensityOptions {
        r0,
        tol: need(&cfg.tol, "tol")?,
        truncation: pts.truncation,
    };
    let report = s_uniform_estimate(&pts.set, &phi, &r_grid, &a_grid, &opts)?;
    out.csv("density.csv", &report.to_csv())?;
    // an unsettled estimate is reported in the summary, not treated as
    // a failure: truncated generators rarely settle
    out.json("density.json", &report.summary())
}

#[derive(Serialize)]
struct BuiltScheme<'a> {
    scheme: &'a InterpolationScheme,
    report: bergman_interp::schemes::AdmissibilityReport,
}

fn scheme_build(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let s = build(cfg, &points(cfg)?.set)?;
    let report = check_admissible(&s);
    out.json("scheme.json", &BuiltScheme { scheme: &s, report })
}

fn scheme_check(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let s = inputs::scheme(&need(&cfg.scheme, "scheme")?)?;
    out.json("scheme-check.json", &check_admissible(&s))
}

#[derive(Serialize)]
struct CosetRow {
    pair: usize,
    center_re: f64,
    center_im: f64,
    radius: f64,
    points: u64,
    norm: f64,
    jet_residual: f64,
}

fn coset(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let phi = weight(cfg)?;
    let coeffs = inputs::poly(&need(&cfg.poly, "poly")?)?;
    let params = CosetParams {
        p: need(&cfg.p, "p")?,
        alpha: need(&cfg.alpha, "alpha")?,
        basis_dim: need(&cfg.basis_dim, "basis-dim")?,
        quad_res: need(&cfg.quad_res, "quad-res")?,
    };
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for (k, (pair, jet)) in s.pairs.iter().zip(jets(&s, &coeffs)).enumerate() {
        let r = coset_norm(&pair.region, &pair.cluster, &jet, &phi, &params)?;
        rows.push(CosetRow {
            pair: k,
            center_re: pair.region.center.re(),
            center_im: pair.region.center.im(),
            radius: pair.region.radius,
            points: pair.cluster.total(),
            norm: r.norm,
            jet_residual: r.jet_residual,
        });
        results.push(r);
    }
    out.csv_rows("coset-norm.csv", &rows)?;
    out.json("coset-norm.json", &results)
}

fn interp(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let phi = weight(cfg)?;
    let coeffs = inputs::poly(&need(&cfg.poly, "poly")?)?;
    let opts = InterpOptions {
        global_dim: need(&cfg.global_dim, "global-dim")?,
        quad_res: need(&cfg.quad_res, "quad-res")?,
        r_max: need(&cfg.r_max, "r-max")?,
        coset_dim: need(&cfg.basis_dim, "basis-dim")?,
        irls: IrlsOptions {
            tol: need(&cfg.tol, "tol")?,
            ..IrlsOptions::default()
        },
        ..InterpOptions::default()
    };
    let sol = solve_interpolation(
        &s,
        &jets(&s, &coeffs),
        &phi,
        need(&cfg.p, "p")?,
        need(&cfg.alpha, "alpha")?,
        &opts,
    )?;
    let grid = GridFunction::from_fn(need(&cfg.grid_n, "grid-n")?, opts.r_max, |z| sol.eval(z))?;
    write_grid(cfg, out, "interp-solve", &grid)?;
    out.json("interp-solve.json", &sol)
}

fn write_grid(cfg: &RunConfig, out: &mut Writer, stem: &str, g: &GridFunction) -> Result<(), Failure> {
    match need(&cfg.format, "format")? {
        GridFormat::Csv => {
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            out.csv(
                &format!("{stem}.csv"),
                &String::from_utf8(buf).expect("csv output is UTF-8"),
            )
        }
        GridFormat::Binary => {
            let mut buf = Vec::new();
            g.write_binary(&mut buf)?;
            out.binary(&format!("{stem}.bgf"), &buf)
        }
    }
}

/// Default right-hand side: `(1 − |z|²)` times a smooth bump on `|z| < 0.8`.
fn bump(z: Complex64) -> Complex64 {
    let t = z.norm_sqr() / 0.64;
    let b = if t < 1.0 { (-1.0 / (1.0 - t)).exp() * E } else { 0.0 };
    Complex64::new(b * (1.0 - z.norm_sqr()), 0.0) * (Complex64::new(1.0, 0.0) + z * 0.5)
}

/// `(α − S⁺)/2` with `S⁺` measured at the origin on the default radii.
fn default_eps(z: &PointSet, phi: &Weight, alpha: f64, truncation: Option<f64>) -> Result<f64, Failure> {
    let opts = DensityOptions {
        truncation,
        ..DensityOptions::default()
    };
    let s = s_uniform_estimate(z, phi, &default_r_grid(), &[DiskPoint::ORIGIN], &opts)?.estimate;
    if alpha <= s {
        return Err(Failure::Config(format!(
            "alpha = {alpha} does not exceed the measured density {s:.4}; pass --eps explicitly"
        )));
    }
    Ok((alpha - s) / 2.0)
}

#[derive(Serialize)]
struct DbarSummary<'a> {
    relative_residual: f64,
    norm_ratio: Option<f64>,
    kernel_order: u32,
    n: usize,
    h: f64,
    r_max: f64,
    bumps: usize,
    factor_reports: &'a [Option<bergman_interp::analysis::GBoundReport>],
}

fn dbar(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let f = match &cfg.input {
        Some(path) => inputs::grid(path)?,
        None => GridFunction::from_fn(need(&cfg.grid_n, "grid-n")?, need(&cfg.r_max, "r-max")?, bump)?,
    };
    let (z, truncation) = match &cfg.points {
        Some(_) => {
            let pts = points(cfg)?;
            (pts.set, pts.truncation)
        }
        None => (PointSet::empty(), None),
    };
    let phi = weight(cfg)?;
    let alpha = need(&cfg.alpha, "alpha")?;
    let pou = match cfg.pou_spacing {
        Some(spacing) => partition_of_unity(spacing, need(&cfg.pou_rho, "pou-rho")?, f.r_max)?,
        None => PartitionOfUnity::single(f.r_max),
    };
    let factors = match need(&cfg.factors, "factors")? {
        Factors::Unit => FactorMode::Unit,
        Factors::Constructed => FactorMode::Constructed {
            eps: match cfg.eps {
                Some(eps) => eps,
                None => default_eps(&z, &phi, alpha, truncation)?,
            },
            options: GOptions::default(),
        },
    };
    let opts = DbarOptions {
        kernel_order: need(&cfg.kernel_order, "kernel-order")?,
        factors,
    };
    let sol = solve_dbar(&f, &z, &phi, need(&cfg.p, "p")?, alpha, &pou, &opts)?;
    write_grid(cfg, out, "dbar-solve", &sol.u)?;
    out.json(
        "dbar-solve.json",
        &DbarSummary {
            relative_residual: sol.relative_residual,
            norm_ratio: sol.norm_ratio,
            kernel_order: sol.kernel_order,
            n: f.n,
            h: f.h,
            r_max: f.r_max,
            bumps: pou.len(),
            factor_reports: &sol.factor_reports,
        },
    )
}

#[derive(Serialize)]
struct ZerosetSummary {
    /// `‖Ψ_Z g‖^p` truncated at `r_max`.
    value: f64,
    r_max: f64,
    tail_share: f64,
    points: u64,
    /// `log |Ψ_Z(0)|`, absent when `0 ∈ Z`.
    log_psi_at_zero: Option<f64>,
}

fn zeroset(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let z = points(cfg)?.set;
    let coeffs = inputs::poly(&need(&cfg.poly, "poly")?)?;
    let f = |w: Complex64| match DiskPoint::from_complex(w) {
        Ok(d) => psi_eval(&z, d).value() * poly_derivative(&coeffs, w, 0),
        Err(_) => Complex64::new(0.0, 0.0),
    };
    let r = zero_space_norm(
        f,
        &z,
        &weight(cfg)?,
        need(&cfg.p, "p")?,
        need(&cfg.alpha, "alpha")?,
        need(&cfg.quad_res, "quad-res")?,
        need(&cfg.r_max, "r-max")?,
    )?;
    out.json(
        "zeroset-norm.json",
        &ZerosetSummary {
            value: r.value,
            r_max: r.r_max,
            tail_share: r.tail_share,
            points: z.total(),
            log_psi_at_zero: log_psi_at_zero(&z).ok(),
        },
    )
}

#[derive(Serialize)]
struct OiRow {
    re: f64,
    im: f64,
    delta_a: f64,
    n_a: u32,
    term: f64,
}

fn oi_check(cfg: &RunConfig, out: &mut Writer) -> Result<(), Failure> {
    let z = points(cfg)?.set;
    let coeffs = inputs::poly(&need(&cfg.poly, "poly")?)?;
    let values: Vec<Complex64> = z
        .distinct()
        .iter()
        .map(|a| poly_derivative(&coeffs, a.z(), 0))
        .collect();
    let opts = OInterpOptions {
        delta: need(&cfg.delta, "delta")?,
        eps: need(&cfg.eps, "eps")?,
        build: BuildOptions {
            r_ceiling: need(&cfg.r_ceiling, "r-ceiling")?,
        },
        alpha: need(&cfg.alpha, "alpha")?,
        coset_dim: need(&cfg.basis_dim, "basis-dim")?,
        coset_quad_res: need(&cfg.quad_res, "quad-res")?,
        check_cosets: true,
    };
    let setup = o_interpolation_setup(&z, &values, &weight(cfg)?, need(&cfg.p, "p")?, &opts)?;
    let rows: Vec<OiRow> = z
        .distinct()
        .iter()
        .enumerate()
        .map(|(k, a)| OiRow {
            re: a.re(),
            im: a.im(),
            delta_a: setup.delta_a[k],
            n_a: setup.n_a[k],
            term: setup.terms[k],
        })
        .collect();
    out.csv_rows("oi-check.csv", &rows)?;
    out.json("oi-check.json", &setup)
}
