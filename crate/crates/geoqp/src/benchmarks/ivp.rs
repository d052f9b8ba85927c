//! Initial value problem with a single switch, discretized by implicit
//! Euler over the horizon `[0, 2]` with `N` nodes.
//!
//! Decision vector `(x₀..x_N, y₁..y_N, λ₁..λ_N)`, cost
//! `(x_N - 5/3)² + h Σ_{k<N} x_k²` with `h = 2/N`. The dynamics
//! `x_k = x_{k-1} + h(3 - 2y_k)` are hard equalities, and per step the
//! pairs `(x_k + λ_k, 1 - y_k)` and `(λ_k, y_k)` satisfy complementarity.

use super::{BenchmarkInstance, BuildError, NamedRange};
use crate::geometry::ConstraintSet;
use crate::problem::{GeoProblem, QuadraticCost};
use nalgebra::{DMatrix, DVector};

pub const IVP_REFERENCE: f64 = 5.0 / 3.0;
pub const IVP_INITIAL_STATE: f64 = -1.0;

/// Builds the instance with the default initial state `x₀ = -1`.
pub fn ivp(n_nodes: usize) -> Result<BenchmarkInstance, BuildError> {
    ivp_with_start(n_nodes, IVP_INITIAL_STATE)
}

/// The initial state enters as a pinned hard equality; without the pin a
/// cost-chasing `x₀` changes the character of the run entirely.
pub fn ivp_with_start(n_nodes: usize, x_init: f64) -> Result<BenchmarkInstance, BuildError> {
    if n_nodes < 2 {
        return Err(BuildError::SizeTooSmall {
            min: 2,
            got: n_nodes,
        });
    }
    let nn = n_nodes;
    let h = 2.0 / nn as f64;
    let n = 3 * nn + 1;
    let idx_x = |k: usize| k; // k = 0..=N
    let idx_y = |k: usize| nn + 1 + (k - 1); // k = 1..=N
    let idx_l = |k: usize| 2 * nn + 1 + (k - 1);

    let mut q = DMatrix::zeros(n, n);
    let mut lin = DVector::zeros(n);
    for k in 0..nn {
        q[(idx_x(k), idx_x(k))] = 2.0 * h;
    }
    q[(idx_x(nn), idx_x(nn))] = 2.0;
    lin[idx_x(nn)] = -2.0 * IVP_REFERENCE;

    // geometric rows: per step one translated and one plain
    // complementarity pair
    let m = 4 * nn;
    let mut a = DMatrix::zeros(m, n);
    let mut blocks = Vec::with_capacity(2 * nn);
    let shifted_cc = ConstraintSet::translate(
        ConstraintSet::Complementarity,
        DVector::from_row_slice(&[0.0, -1.0]),
    )
    .expect("offset dimension matches");
    for k in 1..=nn {
        let r = 4 * (k - 1);
        a[(r, idx_x(k))] = 1.0;
        a[(r, idx_l(k))] = 1.0;
        a[(r + 1, idx_y(k))] = -1.0;
        a[(r + 2, idx_l(k))] = 1.0;
        a[(r + 3, idx_y(k))] = 1.0;
        blocks.push(shifted_cc.clone());
        blocks.push(ConstraintSet::Complementarity);
    }
    let set = ConstraintSet::product(blocks);

    // dynamics plus the initial-state pin
    let p = nn + 1;
    let mut a_eq = DMatrix::zeros(p, n);
    let mut b_eq = DVector::zeros(p);
    for k in 1..=nn {
        a_eq[(k - 1, idx_x(k))] = 1.0;
        a_eq[(k - 1, idx_x(k - 1))] = -1.0;
        a_eq[(k - 1, idx_y(k))] = 2.0 * h;
        b_eq[k - 1] = 3.0 * h;
    }
    a_eq[(nn, idx_x(0))] = 1.0;
    b_eq[nn] = x_init;

    Ok(BenchmarkInstance {
        problem: GeoProblem::new(QuadraticCost::new(q, lin), a, set, Some(a_eq), Some(b_eq)),
        name: format!("ivp-{nn}"),
        size: nn,
        layout: vec![
            NamedRange {
                name: "x",
                range: 0..nn + 1,
            },
            NamedRange {
                name: "y",
                range: nn + 1..2 * nn + 1,
            },
            NamedRange {
                name: "lambda",
                range: 2 * nn + 1..3 * nn + 1,
            },
        ],
    })
}
