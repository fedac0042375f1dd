//! Run configuration: command-line flags over a JSON file over per-command
//! defaults.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Density,
    SchemeBuild,
    SchemeCheck,
    CosetNorm,
    InterpSolve,
    DbarSolve,
    ZerosetNorm,
    OiCheck,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Density => "density",
            CommandName::SchemeBuild => "scheme-build",
            CommandName::SchemeCheck => "scheme-check",
            CommandName::CosetNorm => "coset-norm",
            CommandName::InterpSolve => "interp-solve",
            CommandName::DbarSolve => "dbar-solve",
            CommandName::ZerosetNorm => "zeroset-norm",
            CommandName::OiCheck => "oi-check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridFormat {
    Csv,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Factors {
    Unit,
    Constructed,
}

macro_rules! run_config {
    ($( $(#[$doc:meta])* $field:ident : $ty:ty ),* $(,)?) => {
        /// Every knob of every command. Unset fields fall through to the
        /// config file and then to the command's defaults.
        #[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct RunConfig {
            $(
                $(#[$doc])*
                #[arg(long, global = true)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl RunConfig {
            /// Fields of `self` where set, otherwise those of `lower`.
            pub fn over(self, lower: RunConfig) -> RunConfig {
                RunConfig { $( $field: self.$field.or(lower.$field), )* }
            }
        }
    };
}

run_config! {
    /// Weight preset: standard:<alpha> or perturbed-standard:<alpha>:<amplitude>.
    weight: String,
    p: f64,
    alpha: f64,
    /// Point set: a JSON file, lattice:<spacing>:<r_max> or random:<n>:<r_max>.
    points: String,
    /// Radii as a:b:step.
    r_grid: String,
    /// Smallest radius entering the density estimate.
    r0: f64,
    /// Spacing of the hyperbolic lattice of centers a.
    a_spacing: f64,
    /// Largest |a| of the centers; by default as far as the truncation allows.
    a_reach: f64,
    /// Seed of the random:<n>:<r_max> generator.
    seed: u64,
    /// Output directory.
    out: PathBuf,
    quad_res: usize,
    tol: f64,
    /// Cluster linkage scale.
    delta: f64,
    /// Margin of the regions around their clusters; for constructed ∂̄
    /// factors the exponent slack, by default half the gap between alpha
    /// and the measured density.
    eps: f64,
    /// Diameter ceiling of the regions.
    r_ceiling: f64,
    /// Scheme JSON file.
    scheme: PathBuf,
    /// Polynomial coefficients c0,c1,... (complex, e.g. 1,0.5-0.2i).
    poly: String,
    basis_dim: usize,
    global_dim: usize,
    /// Truncation radius of the disk integrals or of the grid.
    r_max: f64,
    /// Grid function file (.csv or binary).
    input: PathBuf,
    /// Lattice nodes per side.
    grid_n: usize,
    kernel_order: u32,
    /// Spacing of the partition of unity centers; none means a single bump.
    pou_spacing: f64,
    pou_rho: f64,
    #[arg(value_enum)]
    factors: Factors,
    #[arg(value_enum)]
    format: GridFormat,
}

fn num_defaults(weight: &str, p: f64, alpha: f64) -> RunConfig {
    RunConfig {
        weight: Some(weight.into()),
        p: Some(p),
        alpha: Some(alpha),
        out: Some(PathBuf::from(".")),
        ..RunConfig::default()
    }
}

/// Defaults of `command`.
pub fn defaults(command: CommandName) -> RunConfig {
    let base = num_defaults("standard:1", 2.0, 1.0);
    match command {
        CommandName::Density => RunConfig {
            r_grid: Some("0.9:0.995:0.005".into()),
            r0: Some(0.9),
            a_spacing: Some(0.3),
            tol: Some(0.05),
            p: None,
            alpha: None,
            ..base
        },
        CommandName::SchemeBuild => RunConfig {
            delta: Some(0.3),
            eps: Some(0.1),
            r_ceiling: Some(0.9),
            weight: None,
            p: None,
            alpha: None,
            ..base
        },
        CommandName::SchemeCheck => RunConfig {
            weight: None,
            p: None,
            alpha: None,
            ..base
        },
        CommandName::CosetNorm => RunConfig {
            delta: Some(0.3),
            eps: Some(0.1),
            r_ceiling: Some(0.9),
            poly: Some("1".into()),
            basis_dim: Some(12),
            quad_res: Some(24),
            ..base
        },
        CommandName::InterpSolve => RunConfig {
            delta: Some(0.3),
            eps: Some(0.1),
            r_ceiling: Some(0.9),
            poly: Some("1".into()),
            basis_dim: Some(12),
            global_dim: Some(24),
            quad_res: Some(16),
            r_max: Some(0.99),
            grid_n: Some(129),
            tol: Some(1e-8),
            format: Some(GridFormat::Csv),
            ..base
        },
        CommandName::DbarSolve => RunConfig {
            r_max: Some(0.95),
            grid_n: Some(129),
            kernel_order: Some(3),
            pou_rho: Some(0.6),
            factors: Some(Factors::Unit),
            format: Some(GridFormat::Csv),
            ..base
        },
        CommandName::ZerosetNorm => RunConfig {
            poly: Some("1".into()),
            quad_res: Some(16),
            r_max: Some(0.999),
            ..base
        },
        CommandName::OiCheck => RunConfig {
            alpha: Some(0.0),
            poly: Some("1".into()),
            delta: Some(0.3),
            eps: Some(0.1),
            r_ceiling: Some(0.9),
            basis_dim: Some(12),
            quad_res: Some(24),
            ..base
        },
    }
}

/// Reads a JSON config file.
pub fn read_file(path: &std::path::Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Unwraps a field the defaults or the user must have set.
pub fn need<T: Clone>(value: &Option<T>, name: &str) -> Result<T, Failure> {
    value
        .clone()
        .ok_or_else(|| Failure::Config(format!("--{name} is required")))
}
