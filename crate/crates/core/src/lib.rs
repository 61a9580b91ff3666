//! Calderón–Zygmund operators whose kernel is singular on a hyper curve
//! Γ = ⋃ {(x, γ_i(x)) : x ∈ D_i} instead of the diagonal.
//!
//! The crate is `no_std` (it needs `alloc`). The default `std` feature only
//! switches the data-parallel loops over to rayon; results are bit-identical
//! either way because every reduction has a fixed evaluation order.
//!
//! Layout:
//!
//! - [`geometry`]: regions, branch maps, hyper curves, dyadic cubes.
//! - [`curves`]: the built-in curves (`diagonal`, `two-lines`, `diamond`).
//! - [`metric`]: ρ, ρ̃, ρ̃*, their equivalence audit and the enlarged cubes Q_θ.
//! - [`partition`]: dyadic partitions of the curve range with disjoint branch preimages.
//! - [`kernel`]: kernels singular on Γ and their numerical audits.
//! - [`grid`]: functions sampled on uniform grids.
//! - [`operator`]: truncated operators, branch multipliers and their recovery.
//! - [`decomposition`]: the Calderón–Zygmund decomposition and weak-type measurements.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod curves;
pub mod decomposition;
mod error;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod math;
pub mod metric;
pub mod operator;
mod par;
pub mod partition;
pub mod registry;
mod search;

pub use error::{Error, Result};
pub use geometry::{Aabb, BranchMap, Cube, CurveBranch, DyadicCube, HyperCurve, Point, Region};
pub use grid::{GridFunction, GridGeometry};
pub use kernel::{Kernel, KernelSpec};
pub use metric::MetricValue;
