//! Stock benchmark problems and the closed-loop control harness.
//!
//! Three families, each parameterized by a size `N`:
//!
//! * [`ivp`] — implicit-Euler discretization of a scalar initial value
//!   problem whose right-hand side switches once, written as a linear
//!   complementarity system;
//! * [`obstacle`] — a discretized one-dimensional obstacle problem with a
//!   degenerate all-zero solution;
//! * [`afti16`] — reference tracking for a discrete-time longitudinal
//!   aircraft model where at most one control surface may act per sample.
//!
//! [`mpc`] runs the aircraft model in closed loop, re-solving the tracking
//! problem at every sample.

pub mod afti16;
pub mod ivp;
pub mod mpc;
pub mod obstacle;

pub use afti16::afti16;
pub use ivp::ivp;
pub use obstacle::obstacle;

use crate::alm::InitialPoint;
use crate::problem::GeoProblem;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("benchmark size must be at least {min}, got {got}")]
    SizeTooSmall { min: usize, got: usize },
}

/// Named slice of the decision vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedRange {
    pub name: &'static str,
    pub range: std::ops::Range<usize>,
}

/// A built problem instance together with its variable layout.
#[derive(Debug, Clone)]
pub struct BenchmarkInstance {
    pub problem: GeoProblem,
    pub name: String,
    pub size: usize,
    /// Layout slices partition `[0, n)` in order.
    pub layout: Vec<NamedRange>,
}

impl BenchmarkInstance {
    pub fn slice_of<'a>(&self, v: &'a DVector<f64>, name: &str) -> &'a [f64] {
        let r = self
            .layout
            .iter()
            .find(|nr| nr.name == name)
            .unwrap_or_else(|| panic!("no layout slice named '{name}'"));
        &v.as_slice()[r.range.clone()]
    }
}

/// Seeded standard-normal primal start with `y0 = 0` and
/// `z0 = proj_C(A x0)`.
pub fn random_init(problem: &GeoProblem, seed: u64) -> InitialPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let x0 = DVector::from_fn(problem.n(), |_, _| normal.sample(&mut rng));
    let z0 = problem.set.project(&(&problem.a * &x0));
    InitialPoint {
        x0,
        y0: DVector::zeros(problem.m()),
        z0,
    }
}
