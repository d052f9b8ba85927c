//! Solver library for convex quadratic programs with geometric constraints
//! `Ax ∈ C`, where `C` is a closed, possibly nonconvex set accessed only
//! through its Euclidean projection.
//!
//! The outer loop is a safeguarded augmented Lagrangian scheme ([`alm`]);
//! the per-iteration subproblems come in three interchangeable formulations
//! ([`subproblem`]) and are handled by projection-based first-order solvers
//! ([`inner`]). The [`benchmarks`] module builds the three stock problem
//! families used by the benchmark CLI, and [`profiles`] turns run records
//! into data, performance and scalability profiles.

pub mod alm;
pub mod benchmarks;
pub mod geometry;
pub mod inner;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod profiles;
pub mod subproblem;

pub use alm::{alm_solve, AlmOptions, AlmResult, AlmStatus, InitialPoint, Subsolver};
pub use geometry::ConstraintSet;
pub use problem::{GeoProblem, PrimalDualTriple, QuadraticCost};
pub use subproblem::{Formulation, PenaltyPair};
