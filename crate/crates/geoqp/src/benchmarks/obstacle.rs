//! Discretized one-dimensional obstacle problem.
//!
//! Decision vector `(x, y, z) ∈ R^{3N}`, cost `½‖x‖² + ½‖y‖² - ⟨1, y⟩`,
//! hard equalities `x + A_lap y - z = 0` with the tridiagonal Laplacian
//! stencil `(-1, 2, -1)`, and geometric rows `x ≥ 0`, `(y_i, z_i)`
//! complementary per node. The origin is feasible with cost zero and
//! degenerate, which is what makes the family hard.

use super::{BenchmarkInstance, BuildError, NamedRange};
use crate::geometry::ConstraintSet;
use crate::problem::{GeoProblem, QuadraticCost};
use nalgebra::{DMatrix, DVector};

/// Builds the instance with the unscaled stencil.
pub fn obstacle(n_nodes: usize) -> Result<BenchmarkInstance, BuildError> {
    obstacle_with_stencil_scale(n_nodes, 1.0)
}

/// The Laplacian scaling (e.g. `1/h²`) is exposed because conventions vary;
/// the benchmark suite uses the unscaled stencil.
pub fn obstacle_with_stencil_scale(
    n_nodes: usize,
    scale: f64,
) -> Result<BenchmarkInstance, BuildError> {
    if n_nodes < 2 {
        return Err(BuildError::SizeTooSmall {
            min: 2,
            got: n_nodes,
        });
    }
    let nn = n_nodes;
    let n = 3 * nn;

    let mut q = DMatrix::zeros(n, n);
    let mut lin = DVector::zeros(n);
    for i in 0..nn {
        q[(i, i)] = 1.0;
        q[(nn + i, nn + i)] = 1.0;
        lin[nn + i] = -1.0;
    }

    // geometric rows: x-block nonnegative, then one complementarity pair
    // (y_i, z_i) per node
    let m = 3 * nn;
    let mut a = DMatrix::zeros(m, n);
    for i in 0..nn {
        a[(i, i)] = 1.0;
    }
    let mut blocks = vec![ConstraintSet::nonneg(nn)];
    for i in 0..nn {
        a[(nn + 2 * i, nn + i)] = 1.0;
        a[(nn + 2 * i + 1, 2 * nn + i)] = 1.0;
        blocks.push(ConstraintSet::Complementarity);
    }
    let set = ConstraintSet::product(blocks);

    // x + A_lap y - z = 0
    let mut a_eq = DMatrix::zeros(nn, n);
    for i in 0..nn {
        a_eq[(i, i)] = 1.0;
        a_eq[(i, nn + i)] = 2.0 * scale;
        if i > 0 {
            a_eq[(i, nn + i - 1)] = -scale;
        }
        if i + 1 < nn {
            a_eq[(i, nn + i + 1)] = -scale;
        }
        a_eq[(i, 2 * nn + i)] = -1.0;
    }
    let b_eq = DVector::zeros(nn);

    Ok(BenchmarkInstance {
        problem: GeoProblem::new(QuadraticCost::new(q, lin), a, set, Some(a_eq), Some(b_eq)),
        name: format!("obstacle-{nn}"),
        size: nn,
        layout: vec![
            NamedRange { name: "x", range: 0..nn },
            NamedRange {
                name: "y",
                range: nn..2 * nn,
            },
            NamedRange {
                name: "z",
                range: 2 * nn..3 * nn,
            },
        ],
    })
}
