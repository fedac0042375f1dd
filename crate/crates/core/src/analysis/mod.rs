//! The ∂̄-solution operator, the functions `g_a`, the maximal function
//! `m_q`, the least-norm interpolation solver and simple-value
//! interpolation.

pub mod dbar;
pub mod gfun;
pub mod grid_fn;
pub mod interp;
pub mod pou;

pub use dbar::{solve_dbar, DbarOptions, DbarSolution, FactorMode};
pub use gfun::{construct_g, GBoundReport, GFunction, GOptions, GSetup};
pub use grid_fn::{covered_radius, mq_at, mq_maximal, GridFunction};
pub use interp::{
    o_interpolation_setup, solve_interpolation, ClusterBound, InterpOptions, InterpolationSolution, OInterpOptions,
    OInterpSetup,
};
pub use pou::{partition_of_unity, PartitionOfUnity, RHO_CEILING};
