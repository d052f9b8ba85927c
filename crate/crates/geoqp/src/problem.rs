//! Problem definition and stationarity mathematics.
//!
//! A [`GeoProblem`] is the quadratic program
//!
//! ```text
//! minimize  ½⟨x, Qx⟩ + ⟨q, x⟩
//! s.t.      Ax ∈ C,   A_eq x = b_eq (optional)
//! ```
//!
//! with a closed, possibly nonconvex `C` given as a [`ConstraintSet`].

use crate::geometry::ConstraintSet;
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Maximum asymmetry `‖Q - Qᵀ‖_max` tolerated by validation.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Convex quadratic cost `f(x) = ½⟨x, Qx⟩ + ⟨q, x⟩`.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    q_matrix: DMatrix<f64>,
    linear: DVector<f64>,
}

impl QuadraticCost {
    /// Builds the cost, symmetrizing the Hessian as `(Q + Qᵀ)/2`.
    pub fn new(q_matrix: DMatrix<f64>, linear: DVector<f64>) -> Self {
        assert!(q_matrix.is_square(), "cost Hessian must be square");
        assert_eq!(q_matrix.nrows(), linear.len(), "Hessian/linear term mismatch");
        let sym = (&q_matrix + q_matrix.transpose()) * 0.5;
        QuadraticCost {
            q_matrix: sym,
            linear,
        }
    }

    /// Builds the cost storing `Q` exactly as given. Asymmetric input is
    /// caught later by [`GeoProblem::validate`], which is the reason this
    /// constructor exists (problem files must be checkable as stored).
    pub fn from_raw(q_matrix: DMatrix<f64>, linear: DVector<f64>) -> Self {
        assert!(q_matrix.is_square(), "cost Hessian must be square");
        assert_eq!(q_matrix.nrows(), linear.len(), "Hessian/linear term mismatch");
        QuadraticCost { q_matrix, linear }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.q_matrix
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.linear
    }

    /// `f(x) = ½⟨x, Qx⟩ + ⟨q, x⟩`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "cost evaluated at wrong dimension");
        0.5 * x.dot(&(&self.q_matrix * x)) + self.linear.dot(x)
    }

    /// `∇f(x) = Qx + q`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dim(), "gradient evaluated at wrong dimension");
        &self.q_matrix * x + &self.linear
    }
}

/// Full problem instance.
#[derive(Debug, Clone)]
pub struct GeoProblem {
    pub cost: QuadraticCost,
    pub a: DMatrix<f64>,
    pub set: ConstraintSet,
    pub a_eq: Option<DMatrix<f64>>,
    pub b_eq: Option<DVector<f64>>,
}

impl GeoProblem {
    pub fn new(
        cost: QuadraticCost,
        a: DMatrix<f64>,
        set: ConstraintSet,
        a_eq: Option<DMatrix<f64>>,
        b_eq: Option<DVector<f64>>,
    ) -> Self {
        GeoProblem {
            cost,
            a,
            set,
            a_eq,
            b_eq,
        }
    }

    /// Number of decision variables.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Number of geometric constraint rows.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Number of hard equality rows.
    pub fn p(&self) -> usize {
        self.a_eq.as_ref().map_or(0, |a| a.nrows())
    }

    pub fn has_equalities(&self) -> bool {
        self.p() > 0
    }

    /// Structural and numerical consistency check.
    ///
    /// Collects every violation instead of aborting on the first: dimension
    /// agreement, Hessian symmetry, a positive-semidefiniteness probe
    /// (Cholesky of `Q + δI`, tolerating semidefinite-but-singular cost),
    /// and full row rank of the hard equalities.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n();

        if self.cost.dim() != n {
            violations.push(Violation::DimensionMismatch(format!(
                "cost dimension {} does not match n = {}",
                self.cost.dim(),
                n
            )));
        }
        if self.set.dim() != self.m() {
            violations.push(Violation::DimensionMismatch(format!(
                "constraint set dimension {} does not match row count {} of A",
                self.set.dim(),
                self.m()
            )));
        }
        match (&self.a_eq, &self.b_eq) {
            (Some(a_eq), Some(b_eq)) => {
                if a_eq.ncols() != n {
                    violations.push(Violation::DimensionMismatch(format!(
                        "A_eq has {} columns, expected {}",
                        a_eq.ncols(),
                        n
                    )));
                }
                if a_eq.nrows() != b_eq.len() {
                    violations.push(Violation::DimensionMismatch(format!(
                        "A_eq has {} rows but b_eq has length {}",
                        a_eq.nrows(),
                        b_eq.len()
                    )));
                } else if a_eq.nrows() > 0 {
                    let rank = linalg::row_rank(a_eq);
                    if rank < a_eq.nrows() {
                        violations.push(Violation::EqualityRankDeficient {
                            rank,
                            rows: a_eq.nrows(),
                        });
                    }
                }
            }
            (Some(_), None) | (None, Some(_)) => {
                violations.push(Violation::DimensionMismatch(
                    "A_eq and b_eq must be given together".into(),
                ));
            }
            (None, None) => {}
        }

        let q = self.cost.hessian();
        if q.nrows() == q.ncols() {
            let asym = (q - q.transpose()).abs().max();
            if asym > SYMMETRY_TOL {
                violations.push(Violation::AsymmetricCost { max_error: asym });
            }
            // PSD probe: shifted Cholesky tolerates singular-but-PSD Q
            let delta = 1e-10 * (1.0 + q.abs().max());
            let shifted = q + DMatrix::identity(q.nrows(), q.ncols()) * delta;
            if linalg::factorize(&shifted, linalg::FactorKind::Spd).is_err() {
                violations.push(Violation::NotPositiveSemidefinite { shift: delta });
            }
        }

        ValidationReport { violations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    DimensionMismatch(String),
    AsymmetricCost { max_error: f64 },
    NotPositiveSemidefinite { shift: f64 },
    EqualityRankDeficient { rank: usize, rows: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Violation::AsymmetricCost { max_error } => {
                write!(f, "cost Hessian asymmetric (max error {max_error:.3e})")
            }
            Violation::NotPositiveSemidefinite { shift } => {
                write!(f, "cost Hessian fails PSD probe at shift {shift:.3e}")
            }
            Violation::EqualityRankDeficient { rank, rows } => {
                write!(f, "A_eq rank-deficient: rank {rank} of {rows} rows")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Primal-dual point `(x, z, y)` with `z ∈ C` by construction, plus the
/// multiplier of the hard equalities when those exist.
#[derive(Debug, Clone)]
pub struct PrimalDualTriple {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub y: DVector<f64>,
    pub y_eq: Option<DVector<f64>>,
}

/// Residuals of the approximate stationarity test.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub dual_residual: f64,
    pub primal_residual: f64,
    pub eps_d: f64,
    pub eps_p: f64,
}

impl StationarityReport {
    pub fn passes(&self) -> bool {
        self.dual_residual <= self.eps_d && self.primal_residual <= self.eps_p
    }
}

/// Evaluates the computable residuals of `(ε_d, ε_p)`-stationarity at a
/// primal-dual point with cost multiplier `mu ≥ 0`.
///
/// The dual residual is `‖μ∇f(x) + Aᵀy + A_eqᵀ y_eq‖₂` and the primal one
/// `max(‖Ax - z‖_∞, ‖A_eq x - b_eq‖_∞)`. The multiplier-cone condition
/// `dist(y, N_C(z)) ≤ ε_d` is not re-evaluated here: it holds by
/// construction whenever `z` comes from a projection and `y` from the dual
/// update, and distances to limiting normal cones of arbitrary sets are not
/// oracle-accessible.
pub fn check_stationarity(
    problem: &GeoProblem,
    t: &PrimalDualTriple,
    mu: f64,
    eps_d: f64,
    eps_p: f64,
) -> StationarityReport {
    assert!(mu >= 0.0, "cost multiplier must be nonnegative");
    assert_eq!(t.x.len(), problem.n());
    assert_eq!(t.z.len(), problem.m());
    assert_eq!(t.y.len(), problem.m());

    let mut dual = problem.cost.gradient(&t.x) * mu + problem.a.transpose() * &t.y;
    let mut primal = (&problem.a * &t.x - &t.z).abs().max();
    if let (Some(a_eq), Some(b_eq)) = (&problem.a_eq, &problem.b_eq) {
        if let Some(y_eq) = &t.y_eq {
            dual += a_eq.transpose() * y_eq;
        }
        primal = primal.max((a_eq * &t.x - b_eq).abs().max());
    }

    StationarityReport {
        dual_residual: dual.norm(),
        primal_residual: primal,
        eps_d,
        eps_p,
    }
}

/// Tests whether `x` is an infeasible stationary point: infeasible for the
/// geometric constraint yet stationary for `minimize dist²_C(Ax)`.
pub fn is_infeasible_stationary(problem: &GeoProblem, x: &DVector<f64>, tol: f64) -> bool {
    let ax = &problem.a * x;
    let residual = &ax - problem.set.project(&ax);
    let dist = residual.norm();
    dist > tol && (problem.a.transpose() * residual).norm() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_cost(q: f64, lin: f64) -> QuadraticCost {
        QuadraticCost::new(
            DMatrix::from_row_slice(1, 1, &[q]),
            DVector::from_row_slice(&[lin]),
        )
    }

    #[test]
    fn cost_values() {
        let c = scalar_cost(2.0, 0.0);
        assert_eq!(c.value(&DVector::from_row_slice(&[3.0])), 9.0);
        assert_eq!(c.value(&DVector::zeros(1)), 0.0);

        let c = QuadraticCost::new(
            DMatrix::identity(2, 2),
            DVector::from_row_slice(&[1.0, -1.0]),
        );
        assert_eq!(c.value(&DVector::from_row_slice(&[1.0, 1.0])), 1.0);
    }

    #[test]
    fn cost_gradients() {
        let c = scalar_cost(2.0, 1.0);
        assert_eq!(c.gradient(&DVector::from_row_slice(&[3.0]))[0], 7.0);
        assert_eq!(c.gradient(&DVector::zeros(1)), *c.linear_term());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = &raw * raw.transpose();
        let lin = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let c = QuadraticCost::new(q, lin);

        for _ in 0..50 {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
            let h = 1e-5 * (1.0 + x.norm());
            let g = c.gradient(&x);
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (c.value(&xp) - c.value(&xm)) / (2.0 * h);
                assert_relative_eq!(g[i], fd, max_relative = 1e-8, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn stationarity_at_unconstrained_minimum() {
        // free problem: every row of A maps into an unbounded box
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let lin = DVector::from_row_slice(&[-2.0, 4.0]);
        let x_star = DVector::from_row_slice(&[1.0, -1.0]);
        let p = GeoProblem::new(
            QuadraticCost::new(q, lin),
            DMatrix::identity(2, 2),
            ConstraintSet::box_bounds(
                DVector::from_element(2, f64::NEG_INFINITY),
                DVector::from_element(2, f64::INFINITY),
            )
            .unwrap(),
            None,
            None,
        );
        let t = PrimalDualTriple {
            z: &p.a * &x_star,
            x: x_star,
            y: DVector::zeros(2),
            y_eq: None,
        };
        let r = check_stationarity(&p, &t, 1.0, 1e-9, 1e-9);
        assert_eq!(r.dual_residual, 0.0);
        assert_eq!(r.primal_residual, 0.0);
        assert!(r.passes());
    }

    #[test]
    fn stationarity_residuals_on_scalar_instance() {
        let p = GeoProblem::new(
            scalar_cost(1.0, -1.0),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            ConstraintSet::zero(1),
            None,
            None,
        );
        let t = PrimalDualTriple {
            x: DVector::from_row_slice(&[1.0]),
            z: DVector::zeros(1),
            y: DVector::zeros(1),
            y_eq: None,
        };
        let r = check_stationarity(&p, &t, 1.0, 1e-6, 1e-6);
        assert_eq!(r.dual_residual, 0.0);
        assert_eq!(r.primal_residual, 1.0);
        assert!(!r.passes());
    }

    #[test]
    fn primal_residual_is_projection_distance_in_sup_norm() {
        let p = GeoProblem::new(
            scalar_cost(1.0, 0.0),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            ConstraintSet::Complementarity,
            None,
            None,
        );
        let x = DVector::from_row_slice(&[2.0]);
        let ax = &p.a * &x;
        let z = p.set.project(&ax);
        let t = PrimalDualTriple {
            x,
            z: z.clone(),
            y: DVector::zeros(2),
            y_eq: None,
        };
        let r = check_stationarity(&p, &t, 1.0, 1e-6, 1e-6);
        assert_eq!(r.primal_residual, (ax - z).abs().max());
    }

    #[test]
    fn dual_residual_scales_exactly_with_fj_multipliers() {
        // powers of two keep f64 scaling exact
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.5 });
        let p = GeoProblem::new(
            QuadraticCost::new(q, DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0))),
            DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0)),
            ConstraintSet::nonneg(2),
            Some(DMatrix::from_fn(1, 3, |_, _| rng.random_range(-1.0..1.0))),
            Some(DVector::zeros(1)),
        );
        let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let ax = &p.a * &x;
        let make = |c: f64| PrimalDualTriple {
            x: x.clone(),
            z: p.set.project(&ax),
            y: DVector::from_fn(2, |i, _| c * (i as f64 + 0.25)),
            y_eq: Some(DVector::from_element(1, 0.5 * c)),
        };
        for c in [2.0, 4.0, 0.5] {
            let base = check_stationarity(&p, &make(1.0), 1.0, 1e-6, 1e-6);
            let scaled = check_stationarity(&p, &make(c), c, 1e-6, 1e-6);
            assert_eq!(scaled.dual_residual, c * base.dual_residual);
        }
    }

    #[test]
    fn infeasible_stationary_two_halfspaces() {
        let p = GeoProblem::new(
            scalar_cost(2.0, 0.0),
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            ConstraintSet::translate(ConstraintSet::nonneg(2), DVector::from_row_slice(&[1.0, 1.0]))
                .unwrap(),
            None,
            None,
        );
        assert!(is_infeasible_stationary(&p, &DVector::zeros(1), 1e-8));
        assert!(!is_infeasible_stationary(
            &p,
            &DVector::from_row_slice(&[1e-3]),
            1e-8
        ));
    }

    #[test]
    fn feasible_points_are_never_infeasible_stationary() {
        let p = GeoProblem::new(
            scalar_cost(1.0, 0.0),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            ConstraintSet::nonneg(1),
            None,
            None,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = DVector::from_row_slice(&[rng.random_range(0.0..10.0)]);
            assert!(!is_infeasible_stationary(&p, &x, 1e-9));
        }
    }

    #[test]
    fn validation_flags_asymmetry_and_rank_deficiency() {
        let asym = QuadraticCost::from_raw(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            DVector::zeros(2),
        );
        let p = GeoProblem::new(
            asym,
            DMatrix::identity(2, 2),
            ConstraintSet::nonneg(2),
            Some(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])),
            Some(DVector::zeros(2)),
        );
        let report = p.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::AsymmetricCost { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::EqualityRankDeficient { rank: 1, rows: 2 })));
    }

    #[test]
    fn validation_accepts_singular_psd_cost() {
        // diag(1, 0) is PSD but singular; the shifted probe must accept it
        let p = GeoProblem::new(
            QuadraticCost::new(
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                DVector::zeros(2),
            ),
            DMatrix::identity(2, 2),
            ConstraintSet::nonneg(2),
            None,
            None,
        );
        assert!(p.validate().is_clean());

        let indef = GeoProblem::new(
            QuadraticCost::new(
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
                DVector::zeros(2),
            ),
            DMatrix::identity(2, 2),
            ConstraintSet::nonneg(2),
            None,
            None,
        );
        assert!(!indef.validate().is_clean());
    }
}
