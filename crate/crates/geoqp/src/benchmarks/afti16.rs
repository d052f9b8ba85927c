//! Reference tracking for the AFTI-16 longitudinal dynamics.
//!
//! Discrete-time model `x⁺ = A_DT x + B_DT u` sampled at 50 ms with
//! zero-order hold; states are forward velocity, angle of attack, pitch
//! rate and pitch angle, inputs are elevator and flaperon angles. The
//! tracking problem over horizon `N` minimizes
//! `Σ ‖C_DT x_{k+1}‖² + ‖u_k / 25‖²` subject to the dynamics and the
//! one-input-at-a-time control set: `|u₁| ≤ 25`, `|u₂| ≤ 25`, `u₁u₂ = 0`.

use super::{BenchmarkInstance, NamedRange};
use crate::geometry::ConstraintSet;
use crate::problem::{GeoProblem, QuadraticCost};
use nalgebra::{DMatrix, DVector, Matrix2x4, Matrix4, Matrix4x2, Vector4};

/// Sample time in seconds.
pub const SAMPLE_TIME_S: f64 = 0.05;

/// Control magnitude bound.
pub const U_MAX: f64 = 25.0;

#[rustfmt::skip]
pub fn a_dt() -> Matrix4<f64> {
    Matrix4::new(
        0.9993,    -3.0083, -0.1131, -1.6081,
       -4.703e-6,   0.9862,  0.0478,  3.85e-6,
        3.703e-6,   2.0833,  1.0089, -4.362e-6,
        1.356e-7,   0.0526,  0.0498,  1.0,
    )
}

#[rustfmt::skip]
pub fn b_dt() -> Matrix4x2<f64> {
    Matrix4x2::new(
       -0.08045, -0.6347,
       -0.02914, -0.01428,
       -0.8679,  -0.0913,
       -0.02159, -0.002181,
    )
}

/// Observation map: picks angle of attack and pitch angle.
#[rustfmt::skip]
pub fn c_dt() -> Matrix2x4<f64> {
    Matrix2x4::new(
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    )
}

/// The admissible control set: one input at a time, magnitude at most 25.
pub fn control_set() -> ConstraintSet {
    ConstraintSet::union_of_convex(vec![
        ConstraintSet::product(vec![
            ConstraintSet::symmetric_box(1, U_MAX),
            ConstraintSet::zero(1),
        ]),
        ConstraintSet::product(vec![
            ConstraintSet::zero(1),
            ConstraintSet::symmetric_box(1, U_MAX),
        ]),
    ])
    .expect("children are convex boxes of equal dimension")
}

/// Builds the horizon-`N` tracking instance from the given initial state.
///
/// Decision vector `(x₁..x_N, u₀..u_{N-1}) ∈ R^{6N}`; the initial state is
/// folded into the right-hand side of the first dynamics block.
pub fn afti16(horizon: usize, x_init: &Vector4<f64>) -> BenchmarkInstance {
    assert!(horizon >= 1, "horizon must be at least 1");
    let nn = horizon;
    let n = 6 * nn;
    let (a_mat, b_mat) = (a_dt(), b_dt());

    // cost: the plain sum needs a factor 2 inside Q to survive the ½⟨x,Qx⟩
    // convention; CᵀC = diag(0,1,0,1)
    let mut q = DMatrix::zeros(n, n);
    for k in 0..nn {
        q[(4 * k + 1, 4 * k + 1)] = 2.0;
        q[(4 * k + 3, 4 * k + 3)] = 2.0;
        let u0 = 4 * nn + 2 * k;
        q[(u0, u0)] = 2.0 / (U_MAX * U_MAX);
        q[(u0 + 1, u0 + 1)] = 2.0 / (U_MAX * U_MAX);
    }
    let lin = DVector::zeros(n);

    // geometric rows select the controls
    let m = 2 * nn;
    let mut a = DMatrix::zeros(m, n);
    let mut blocks = Vec::with_capacity(nn);
    for k in 0..nn {
        a[(2 * k, 4 * nn + 2 * k)] = 1.0;
        a[(2 * k + 1, 4 * nn + 2 * k + 1)] = 1.0;
        blocks.push(control_set());
    }
    let set = ConstraintSet::product(blocks);

    // dynamics x_{k+1} = A x_k + B u_k, x₀ given
    let p = 4 * nn;
    let mut a_eq = DMatrix::zeros(p, n);
    let mut b_eq = DVector::zeros(p);
    for k in 0..nn {
        let row = 4 * k;
        for i in 0..4 {
            a_eq[(row + i, 4 * k + i)] = 1.0;
            for j in 0..2 {
                a_eq[(row + i, 4 * nn + 2 * k + j)] = -b_mat[(i, j)];
            }
        }
        if k == 0 {
            let rhs = a_mat * x_init;
            for i in 0..4 {
                b_eq[i] = rhs[i];
            }
        } else {
            for i in 0..4 {
                for j in 0..4 {
                    a_eq[(row + i, 4 * (k - 1) + j)] = -a_mat[(i, j)];
                }
            }
        }
    }

    BenchmarkInstance {
        problem: GeoProblem::new(QuadraticCost::new(q, lin), a, set, Some(a_eq), Some(b_eq)),
        name: format!("afti16-{nn}"),
        size: nn,
        layout: vec![
            NamedRange {
                name: "state",
                range: 0..4 * nn,
            },
            NamedRange {
                name: "control",
                range: 4 * nn..6 * nn,
            },
        ],
    }
}

/// The tracking objective as written, for cross-checking the assembly.
pub fn tracking_cost_direct(horizon: usize, decision: &DVector<f64>) -> f64 {
    let c = c_dt();
    let mut total = 0.0;
    for k in 0..horizon {
        let x = Vector4::new(
            decision[4 * k],
            decision[4 * k + 1],
            decision[4 * k + 2],
            decision[4 * k + 3],
        );
        let u0 = decision[4 * horizon + 2 * k];
        let u1 = decision[4 * horizon + 2 * k + 1];
        total += (c * x).norm_squared() + (u0 * u0 + u1 * u1) / (U_MAX * U_MAX);
    }
    total
}
