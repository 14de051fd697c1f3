//! Simulator for the first-order Hughes model of pedestrian flow.
//!
//! A crowd density is transported toward a target with speed given by a
//! fundamental diagram, along the descent direction of a potential that
//! solves a density-dependent eikonal equation:
//!
//! ```text
//! ∂t m − div(f(m) ∇u/|∇u| m) = 0,     |∇u| = 1/f(m),   u = 0 on the target
//! ```
//!
//! Each time step solves the eikonal equation with fast marching
//! ([`eikonal`]), builds the velocity `f(m)·(−∇u/|∇u|)` and advances the
//! density with a mass-conservative semi-Lagrangian scatter scheme
//! ([`transport`]) on a uniform Q1 grid ([`geometry`]).
//!
//! All numerical code is generic over the scalar type ([`Real`]); the
//! `*64` aliases below fix it to `f64`, which is what the CLI uses.

// `!(a < b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagrams;
pub mod eikonal;
pub mod error;
pub mod geometry;
pub mod io;
mod real;
pub mod simulation;
pub mod transport;

pub use diagrams::{DiagramKind, DiagramParams, DiagramSpec};
pub use eikonal::{direction_field, solve_eikonal, DirectionField, PotentialField, SlownessField};
pub use error::{Error, Result};
pub use geometry::{basis_weights, build_grid, project_free, rasterize_density, reflect, BasisWeights, Grid, NodeStatus, Point, Rect};
pub use real::Real;
pub use simulation::{compare_diagrams, run, run_with_gates, FluxGate, RunResult, Scenario, Simulation};
pub use transport::{absorb_target, step, velocity_field, DensityField, VelocityField};

pub type Grid64 = Grid<f64>;
pub type Rect64 = Rect<f64>;
pub type Point64 = Point<f64>;
pub type DiagramSpec64 = DiagramSpec<f64>;
pub type DensityField64 = DensityField<f64>;
pub type PotentialField64 = PotentialField<f64>;
pub type DirectionField64 = DirectionField<f64>;
pub type VelocityField64 = VelocityField<f64>;
pub type Scenario64 = Scenario<f64>;
pub type RunResult64 = RunResult<f64>;

pub type Grid32 = Grid<f32>;
pub type Scenario32 = Scenario<f32>;
