//! The three formulations of the augmented Lagrangian subproblem.
//!
//! For penalty pair `σ = (ρ, μ)` and estimates `(x̂, ŷ)` the augmented
//! Lagrangian is
//!
//! ```text
//! L_σ(x, z) = μ f(x) + (ρ/2)‖x - x̂‖² + ⟨ŷ, Ax - z⟩ + ½‖Ax - z‖²
//! ```
//!
//! * **extended** — minimize over `w = (x, z)` with `W = Rⁿ × C`;
//! * **condensed** — eliminate `x` through the strictly convex inner
//!   minimization: `X(z) = argmin_x L_σ(x, z)` is an affine map given by one
//!   cached linear solve, leaving the marginal function
//!   `M(z) = L_σ(X(z), z)` to minimize over `z ∈ C`. In the **soft** variant
//!   any hard equalities must have been folded into `(A, C)` beforehand; the
//!   **hard** variant keeps `A_eq x = b_eq` exactly inside the solve.
//!
//! The condensed solves route through a symmetric saddle-point system rather
//! than the normal-equations matrix; factorizations are cached per penalty
//! pair and reused across right-hand sides.

use crate::geometry::ConstraintSet;
use crate::inner::{Evaluation, InnerProblem};
use crate::linalg::{self, FactorError, FactorKind, Factorization};
use crate::problem::{GeoProblem, QuadraticCost};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubproblemError {
    #[error("the soft condensed formulation requires folded equalities; fold them into (A, C) first")]
    SoftWithEqualities,
    #[error("marginal solve failed: {0}")]
    Factorization(#[from] FactorError),
}

/// Penalty pair `σ = (ρ, μ)`, both strictly positive: `ρ` weighs the
/// proximal term, `μ` scales the cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyPair {
    pub rho: f64,
    pub mu: f64,
}

impl PenaltyPair {
    pub fn new(rho: f64, mu: f64) -> Self {
        assert!(rho > 0.0 && mu > 0.0, "penalty parameters must be positive");
        PenaltyPair { rho, mu }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    Extended,
    CondensedSoft,
    CondensedHard,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [
        Formulation::Extended,
        Formulation::CondensedSoft,
        Formulation::CondensedHard,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Formulation::Extended => "extended",
            Formulation::CondensedSoft => "condensed-soft",
            Formulation::CondensedHard => "condensed-hard",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "extended" => Ok(Formulation::Extended),
            "condensed-soft" | "soft" => Ok(Formulation::CondensedSoft),
            "condensed-hard" | "hard" => Ok(Formulation::CondensedHard),
            other => Err(format!("unknown formulation '{other}'")),
        }
    }
}

/// Rewrites hard equalities as geometric rows: `A_eq x = b_eq` becomes
/// `A_eq x ∈ {b_eq}`, i.e. the rows are appended to `A` and the set gains a
/// translated zero block. Problems without equalities come back unchanged.
pub fn fold_equalities(problem: &GeoProblem) -> GeoProblem {
    let (Some(a_eq), Some(b_eq)) = (&problem.a_eq, &problem.b_eq) else {
        return problem.clone();
    };
    let (m, p, n) = (problem.m(), a_eq.nrows(), problem.n());
    let mut a = DMatrix::zeros(m + p, n);
    a.view_mut((0, 0), (m, n)).copy_from(&problem.a);
    a.view_mut((m, 0), (p, n)).copy_from(a_eq);
    let pinned = ConstraintSet::translate(ConstraintSet::zero(p), b_eq.clone())
        .expect("offset length matches by construction");
    let set = ConstraintSet::product(vec![problem.set.clone(), pinned]);
    GeoProblem::new(problem.cost.clone(), a, set, None, None)
}

struct MarginalCache {
    key: PenaltyPair,
    factor: Factorization,
    /// Fixed part of the right-hand side, `ρx̂ - μq - Aᵀŷ`; only the
    /// `z`-block of the rhs varies between solves.
    rhs_fixed: DVector<f64>,
}

/// Solution of one marginal solve.
pub struct MarginalState {
    pub x: DVector<f64>,
    /// Multiplier of the hard equalities (hard variant with `p > 0`).
    pub lambda_eq: Option<DVector<f64>>,
}

/// Formulation-specific evaluation state handed to the inner solvers.
///
/// One instance serves one inner solve at a time; the factorization cache is
/// confined to the instance and keyed by the penalty pair.
pub struct Subproblem<'p> {
    formulation: Formulation,
    problem: &'p GeoProblem,
    sigma: PenaltyPair,
    x_hat: DVector<f64>,
    y_hat: DVector<f64>,
    cache: Option<MarginalCache>,
    factorizations: usize,
}

impl<'p> Subproblem<'p> {
    /// Creates the evaluation state. `problem` must already be in the shape
    /// the formulation expects: the extended and soft variants reject hard
    /// equalities (fold them first), the hard variant uses them if present.
    pub fn new(
        formulation: Formulation,
        problem: &'p GeoProblem,
        sigma: PenaltyPair,
    ) -> Result<Self, SubproblemError> {
        if formulation != Formulation::CondensedHard && problem.has_equalities() {
            return Err(SubproblemError::SoftWithEqualities);
        }
        Ok(Subproblem {
            formulation,
            problem,
            sigma,
            x_hat: DVector::zeros(problem.n()),
            y_hat: DVector::zeros(problem.m()),
            cache: None,
            factorizations: 0,
        })
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn sigma(&self) -> PenaltyPair {
        self.sigma
    }

    /// Number of factorizations performed so far.
    pub fn factorization_count(&self) -> usize {
        self.factorizations
    }

    /// Installs new primal-dual estimates. Only the right-hand side of the
    /// marginal system depends on them, so a cached factorization survives;
    /// the cached fixed rhs part is rebuilt lazily.
    pub fn set_estimates(&mut self, x_hat: DVector<f64>, y_hat: DVector<f64>) {
        assert_eq!(x_hat.len(), self.problem.n());
        assert_eq!(y_hat.len(), self.problem.m());
        self.x_hat = x_hat;
        self.y_hat = y_hat;
        if let Some(cache) = &mut self.cache {
            cache.rhs_fixed = marginal_rhs_fixed(
                self.problem.cost.linear_term(),
                &self.problem.a,
                self.sigma,
                &self.x_hat,
                &self.y_hat,
            );
        }
    }

    /// Installs a new penalty pair, dropping the cached factorization iff
    /// the pair actually changed.
    pub fn invalidate_cache(&mut self, sigma: PenaltyPair) {
        if sigma != self.sigma {
            self.sigma = sigma;
            self.cache = None;
        }
    }

    /// Dimension of the inner variable `w`.
    pub fn dimension(&self) -> usize {
        match self.formulation {
            Formulation::Extended => self.problem.n() + self.problem.m(),
            _ => self.problem.m(),
        }
    }

    /// Warm-start point for the inner solver: the previous `(x, z)` for the
    /// extended formulation, the previous `z` for the condensed ones.
    pub fn warm_start(&self, x_prev: &DVector<f64>, z_prev: &DVector<f64>) -> DVector<f64> {
        match self.formulation {
            Formulation::Extended => stack(x_prev, z_prev),
            _ => z_prev.clone(),
        }
    }

    /// Augmented Lagrangian value and gradient of the extended formulation.
    pub fn al_value_and_gradient(
        &self,
        x: &DVector<f64>,
        z: &DVector<f64>,
    ) -> (f64, DVector<f64>, DVector<f64>) {
        let p = self.problem;
        let sigma = self.sigma;
        let coupling = &p.a * x - z;
        let dx = x - &self.x_hat;
        let value = sigma.mu * p.cost.value(x)
            + 0.5 * sigma.rho * dx.norm_squared()
            + self.y_hat.dot(&coupling)
            + 0.5 * coupling.norm_squared();
        let shifted = coupling + &self.y_hat;
        let grad_x = p.cost.gradient(x) * sigma.mu + dx * sigma.rho + p.a.transpose() * &shifted;
        let grad_z = -shifted;
        (value, grad_x, grad_z)
    }

    /// Projection of the extended variable: `x` free, `z` onto `C`.
    pub fn project_extended(
        &self,
        x: &DVector<f64>,
        z: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (x.clone(), self.problem.set.project(z))
    }

    fn ensure_factorization(&mut self) -> Result<(), SubproblemError> {
        debug_assert!(self.formulation != Formulation::Extended);
        if self.cache.as_ref().is_some_and(|c| c.key == self.sigma) {
            return Ok(());
        }
        let kkt = linalg::lifted_kkt_matrix(self.problem, self.sigma.mu, self.sigma.rho);
        let factor = linalg::factorize(&kkt, FactorKind::SymmetricIndefinite)?;
        self.factorizations += 1;
        self.cache = Some(MarginalCache {
            key: self.sigma,
            factor,
            rhs_fixed: marginal_rhs_fixed(
                self.problem.cost.linear_term(),
                &self.problem.a,
                self.sigma,
                &self.x_hat,
                &self.y_hat,
            ),
        });
        Ok(())
    }

    /// Full marginal solve at `z`, exposing the equality multiplier.
    pub fn marginal_state(&mut self, z: &DVector<f64>) -> Result<MarginalState, SubproblemError> {
        assert_eq!(z.len(), self.problem.m());
        self.ensure_factorization()?;
        let (n, m, p) = (self.problem.n(), self.problem.m(), self.problem.p());
        let cache = self.cache.as_ref().expect("factorization just ensured");
        let mut rhs = DVector::zeros(n + m + p);
        rhs.rows_mut(0, n).copy_from(&cache.rhs_fixed);
        rhs.rows_mut(n, m).copy_from(z);
        if let Some(b_eq) = &self.problem.b_eq {
            rhs.rows_mut(n + m, p).copy_from(b_eq);
        }
        let sol = cache.factor.solve(&rhs);
        let x = DVector::from(sol.rows(0, n));
        let lambda_eq = (p > 0).then(|| DVector::from(sol.rows(n + m, p)));
        Ok(MarginalState { x, lambda_eq })
    }

    /// The single-valued map `X(z)`: the unique minimizer of `L_σ(·, z)`
    /// (subject to the hard equalities in the hard variant).
    pub fn marginal_x(&mut self, z: &DVector<f64>) -> Result<DVector<f64>, SubproblemError> {
        Ok(self.marginal_state(z)?.x)
    }

    /// Marginal value `M(z) = L_σ(X(z), z)` and its gradient
    /// `∇M(z) = z - A X(z) - ŷ`, sharing one linear solve.
    pub fn marginal_value_and_gradient(
        &mut self,
        z: &DVector<f64>,
    ) -> Result<(f64, DVector<f64>), SubproblemError> {
        let x = self.marginal_state(z)?.x;
        let ax = &self.problem.a * &x;
        let coupling = &ax - z;
        let dx = &x - &self.x_hat;
        let value = self.sigma.mu * self.problem.cost.value(&x)
            + 0.5 * self.sigma.rho * dx.norm_squared()
            + self.y_hat.dot(&coupling)
            + 0.5 * coupling.norm_squared();
        let gradient = z - ax - &self.y_hat;
        Ok((value, gradient))
    }

    /// Splits a converged inner iterate into the problem triple
    /// `(x, z, λ_eq)`.
    pub fn extract(
        &mut self,
        w_star: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, Option<DVector<f64>>), SubproblemError> {
        match self.formulation {
            Formulation::Extended => {
                let n = self.problem.n();
                let m = self.problem.m();
                let x = DVector::from(w_star.rows(0, n));
                let z = DVector::from(w_star.rows(n, m));
                Ok((x, z, None))
            }
            _ => {
                let state = self.marginal_state(w_star)?;
                Ok((state.x, w_star.clone(), state.lambda_eq))
            }
        }
    }
}

fn marginal_rhs_fixed(
    q: &DVector<f64>,
    a: &DMatrix<f64>,
    sigma: PenaltyPair,
    x_hat: &DVector<f64>,
    y_hat: &DVector<f64>,
) -> DVector<f64> {
    x_hat * sigma.rho - q * sigma.mu - a.transpose() * y_hat
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

impl InnerProblem for Subproblem<'_> {
    fn dimension(&self) -> usize {
        Subproblem::dimension(self)
    }

    fn evaluate(&mut self, w: &DVector<f64>) -> Evaluation {
        match self.formulation {
            Formulation::Extended => {
                let n = self.problem.n();
                let m = self.problem.m();
                let x = DVector::from(w.rows(0, n));
                let z = DVector::from(w.rows(n, m));
                let (value, gx, gz) = self.al_value_and_gradient(&x, &z);
                Evaluation {
                    value,
                    gradient: stack(&gx, &gz),
                }
            }
            _ => match self.marginal_value_and_gradient(w) {
                Ok((value, gradient)) => Evaluation { value, gradient },
                // surfaced as a non-finite evaluation; the solver stalls
                Err(_) => Evaluation {
                    value: f64::NAN,
                    gradient: DVector::from_element(w.len(), f64::NAN),
                },
            },
        }
    }

    fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        match self.formulation {
            Formulation::Extended => {
                let n = self.problem.n();
                let m = self.problem.m();
                let z = DVector::from(w.rows(n, m));
                let mut out = w.clone();
                out.rows_mut(n, m).copy_from(&self.problem.set.project(&z));
                out
            }
            _ => self.problem.set.project(w),
        }
    }
}

/// Cost `QuadraticCost` helper for building test instances; re-exported for
/// the benchmark builders.
pub fn quadratic_cost(q: DMatrix<f64>, lin: DVector<f64>) -> QuadraticCost {
    QuadraticCost::new(q, lin)
}
