//! Safeguarded augmented Lagrangian outer loop.
//!
//! Each outer iteration safeguards the dual estimate, solves one subproblem
//! inexactly to the running tolerance `ε_k`, performs the first-order dual
//! update `y ← ŷ + Ax - z`, and tests the computable dual and primal
//! measures `E_k` and `V_k` against the requested tolerances. On sufficient
//! infeasibility decrease the inner tolerance shrinks; otherwise the penalty
//! parameters shrink. The loop classifies its exit as solved, infeasible
//! stationary (the iterates settled on a stationary point of the constraint
//! violation), time limit, or iteration cap.

use crate::inner::{self, InnerOptions, InnerStatus};
use crate::problem::{self, GeoProblem, PrimalDualTriple};
use crate::subproblem::{fold_equalities, Formulation, PenaltyPair, Subproblem, SubproblemError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlmError {
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("initial point has wrong dimensions: {0}")]
    BadInit(String),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subsolver {
    Nmpg,
    Panoc,
}

impl Subsolver {
    pub const ALL: [Subsolver; 2] = [Subsolver::Nmpg, Subsolver::Panoc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subsolver::Nmpg => "nmpg",
            Subsolver::Panoc => "panoc",
        }
    }
}

impl std::str::FromStr for Subsolver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nmpg" => Ok(Subsolver::Nmpg),
            "panoc" => Ok(Subsolver::Panoc),
            other => Err(format!("unknown subsolver '{other}'")),
        }
    }
}

/// Outer-loop parameters. The defaults are the solver setup used throughout
/// the benchmark suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AlmOptions {
    /// Dual tolerance.
    pub eps_d: f64,
    /// Primal tolerance (sup-norm of `Ax - z`).
    pub eps_p: f64,
    /// Sufficient-decrease factor for the infeasibility measure, in `[0, 1)`.
    pub kappa_v: f64,
    /// Inner-tolerance shrink factor, in `(0, 1)`.
    pub kappa_eps: f64,
    /// Cost-scaling shrink factor, in `(0, 1)`.
    pub kappa_mu: f64,
    /// Proximal-weight shrink factor, in `(0, 1]`.
    pub kappa_rho: f64,
    /// Initial inner tolerance.
    pub eps_1: f64,
    /// Initial cost scaling.
    pub mu_1: f64,
    /// Initial proximal weight.
    pub rho_1: f64,
    /// Half-width of the dual safeguard box.
    pub safeguard_bound: f64,
    /// Wall-clock limit in seconds for one solve.
    pub time_limit_s: f64,
    /// Outer-iteration cap.
    pub max_outer_iterations: usize,
    /// Cost scaling below which the infeasibility heuristic may fire.
    pub mu_infeasibility_floor: f64,
    pub formulation: Formulation,
    pub subsolver: Subsolver,
    pub inner: InnerOptions,
}

impl Default for AlmOptions {
    fn default() -> Self {
        AlmOptions {
            eps_d: 1e-6,
            eps_p: 1e-6,
            kappa_v: 0.9,
            kappa_eps: 0.5,
            kappa_mu: 0.25,
            kappa_rho: 1.0,
            eps_1: 1.0,
            mu_1: 1.0,
            rho_1: 1e-6,
            safeguard_bound: 1e20,
            time_limit_s: 100.0,
            max_outer_iterations: 500,
            mu_infeasibility_floor: 1e-12,
            formulation: Formulation::CondensedHard,
            subsolver: Subsolver::Panoc,
            inner: InnerOptions::default(),
        }
    }
}

impl AlmOptions {
    pub fn validate(&self) -> Result<(), AlmError> {
        let mut problems = Vec::new();
        if !(0.0..1.0).contains(&self.kappa_v) {
            problems.push("kappa_v must lie in [0, 1)");
        }
        if !(self.kappa_eps > 0.0 && self.kappa_eps < 1.0) {
            problems.push("kappa_eps must lie in (0, 1)");
        }
        if !(self.kappa_mu > 0.0 && self.kappa_mu < 1.0) {
            problems.push("kappa_mu must lie in (0, 1)");
        }
        if !(self.kappa_rho > 0.0 && self.kappa_rho <= 1.0) {
            problems.push("kappa_rho must lie in (0, 1]");
        }
        if !(self.eps_1 > 0.0 && self.mu_1 > 0.0 && self.rho_1 > 0.0) {
            problems.push("eps_1, mu_1 and rho_1 must be positive");
        }
        if !(self.eps_d > 0.0 && self.eps_p > 0.0) {
            problems.push("tolerances must be positive");
        }
        if !(self.safeguard_bound > 0.0) {
            problems.push("safeguard bound must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AlmError::InvalidOptions(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlmStatus {
    Solved,
    InfeasibleStationary,
    TimeLimit,
    IterationCap,
}

impl AlmStatus {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            AlmStatus::Solved => 0,
            AlmStatus::InfeasibleStationary => 2,
            AlmStatus::TimeLimit => 3,
            AlmStatus::IterationCap => 4,
        }
    }
}

/// Starting point; use `y0 = 0` and `z0 = proj_C(A x0)` unless a warm start
/// is available.
#[derive(Debug, Clone)]
pub struct InitialPoint {
    pub x0: DVector<f64>,
    pub y0: DVector<f64>,
    pub z0: DVector<f64>,
}

/// One outer-iteration record.
#[derive(Debug, Clone, Serialize)]
pub struct HistoryRow {
    pub k: usize,
    pub rho: f64,
    pub mu: f64,
    pub eps: f64,
    pub e: f64,
    pub v: f64,
    pub inner_iterations: usize,
    pub gradient_evaluations: usize,
    pub elapsed_s: f64,
    pub inner_status: InnerStatus,
}

#[derive(Debug, Clone)]
pub struct AlmResult {
    pub triple: PrimalDualTriple,
    pub status: AlmStatus,
    pub mu_final: f64,
    pub history: Vec<HistoryRow>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub gradient_evaluations: usize,
    pub elapsed_s: f64,
}

impl AlmResult {
    /// Writes the iteration log with columns
    /// `k, rho, mu, eps, E, V, inner_iters, grad_evals, elapsed_s, status`.
    pub fn write_history_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,rho,mu,eps,E,V,inner_iters,grad_evals,elapsed_s,status")?;
        let last = self.history.len();
        for (i, row) in self.history.iter().enumerate() {
            let status = if i + 1 == last {
                format!("{:?}", self.status)
            } else {
                "running".to_string()
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                row.k,
                row.rho,
                row.mu,
                row.eps,
                row.e,
                row.v,
                row.inner_iterations,
                row.gradient_evaluations,
                row.elapsed_s,
                status.to_lowercase()
            )?;
        }
        Ok(())
    }
}

/// Componentwise clamp of the dual estimate onto the safeguard box.
pub fn safeguard(y: &DVector<f64>, y_max: f64) -> DVector<f64> {
    assert!(y_max > 0.0);
    y.map(|v| v.clamp(-y_max, y_max))
}

/// First-order dual update `ŷ + Ax - z`.
pub fn dual_update(
    y_hat: &DVector<f64>,
    a: &DMatrix<f64>,
    x: &DVector<f64>,
    z: &DVector<f64>,
) -> DVector<f64> {
    y_hat + a * x - z
}

/// Penalty and tolerance schedule. On sufficient decrease of the
/// infeasibility measure the penalties stay and the inner tolerance shrinks
/// toward the dual tolerance; otherwise the penalties shrink and the inner
/// tolerance stays.
pub fn update_schedule(
    v_k: f64,
    v_prev: f64,
    sigma: PenaltyPair,
    eps_k: f64,
    opts: &AlmOptions,
) -> (PenaltyPair, f64) {
    if v_k <= opts.eps_p.max(opts.kappa_v * v_prev) {
        (sigma, opts.kappa_eps * opts.eps_d.max(eps_k))
    } else {
        (
            PenaltyPair::new(opts.kappa_rho * sigma.rho, opts.kappa_mu * sigma.mu),
            eps_k,
        )
    }
}

/// Inputs of the deterministic exit classification.
#[derive(Debug, Clone)]
pub struct TerminationInputs {
    pub e: f64,
    pub v: f64,
    pub mu: f64,
    pub elapsed_exceeded: bool,
    pub outer_at_cap: bool,
    pub infeasible_stationary: bool,
    pub v_stagnant: bool,
}

/// Exit classification, applied after every outer iteration; `None` means
/// the loop continues.
pub fn classify_termination(t: &TerminationInputs, opts: &AlmOptions) -> Option<AlmStatus> {
    if t.e <= opts.eps_d && t.v <= opts.eps_p {
        return Some(AlmStatus::Solved);
    }
    if t.elapsed_exceeded {
        return Some(AlmStatus::TimeLimit);
    }
    if t.mu < opts.mu_infeasibility_floor
        && t.v_stagnant
        && t.infeasible_stationary
        && t.v > opts.eps_p
    {
        return Some(AlmStatus::InfeasibleStationary);
    }
    if t.outer_at_cap {
        return Some(AlmStatus::IterationCap);
    }
    None
}

/// Tracks whether the infeasibility measure failed to decrease by at least
/// one percent over the last five outer iterations.
struct StagnationWindow {
    values: std::collections::VecDeque<f64>,
}

impl StagnationWindow {
    fn new() -> Self {
        StagnationWindow {
            values: std::collections::VecDeque::with_capacity(6),
        }
    }

    fn push(&mut self, v: f64) {
        if self.values.len() == 6 {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    fn stagnant(&self) -> bool {
        if self.values.len() < 6 {
            return false;
        }
        let oldest = self.values[0];
        let newest = self.values[5];
        newest > 0.99 * oldest
    }
}

/// Runs the safeguarded augmented Lagrangian scheme on `problem`.
///
/// The extended and condensed-soft formulations relax hard equalities like
/// the geometric rows (they are folded into `(A, C)` internally); the
/// condensed-hard formulation keeps them exact inside the marginal solves.
/// Either way the returned triple and certificate refer to the problem as
/// given.
pub fn alm_solve(
    problem: &GeoProblem,
    opts: &AlmOptions,
    init: &InitialPoint,
) -> Result<AlmResult, AlmError> {
    opts.validate()?;
    let (n, m_orig) = (problem.n(), problem.m());
    if init.x0.len() != n || init.y0.len() != m_orig || init.z0.len() != m_orig {
        return Err(AlmError::BadInit(format!(
            "expected x0 of {n}, y0/z0 of {m_orig}; got {}/{}/{}",
            init.x0.len(),
            init.y0.len(),
            init.z0.len()
        )));
    }

    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(opts.time_limit_s);

    // working problem: extended and soft fold equalities into (A, C)
    let fold = opts.formulation != Formulation::CondensedHard && problem.has_equalities();
    let folded;
    let work: &GeoProblem = if fold {
        folded = fold_equalities(problem);
        &folded
    } else {
        problem
    };
    let m = work.m();

    // initial state, mapped into the working space
    let mut x = init.x0.clone();
    let mut z = {
        let mut z = DVector::zeros(m);
        z.rows_mut(0, m_orig)
            .copy_from(&problem.set.project(&init.z0));
        if fold {
            z.rows_mut(m_orig, m - m_orig)
                .copy_from(problem.b_eq.as_ref().expect("folded implies equalities"));
        }
        z
    };
    let mut y = {
        let mut y = DVector::zeros(m);
        y.rows_mut(0, m_orig).copy_from(&init.y0);
        y
    };

    let mut sigma = PenaltyPair::new(opts.rho_1, opts.mu_1);
    let mut eps_k = opts.eps_1;
    let mut v_prev = f64::INFINITY;
    let mut subproblem = Subproblem::new(opts.formulation, work, sigma)?;
    let mut history: Vec<HistoryRow> = Vec::new();
    let mut stagnation = StagnationWindow::new();
    let mut total_inner = 0usize;
    let mut total_evals = 0usize;

    for k in 1..=opts.max_outer_iterations {
        let y_hat = safeguard(&y, opts.safeguard_bound);
        let x_hat = x.clone();
        let z_hat = z.clone();

        subproblem.invalidate_cache(sigma);
        subproblem.set_estimates(x_hat.clone(), y_hat.clone());
        let w0 = subproblem.warm_start(&x_hat, &z_hat);
        let inner_result = match opts.subsolver {
            Subsolver::Nmpg => {
                inner::nmpg_solve(&mut subproblem, w0, eps_k, &opts.inner, Some(deadline))
            }
            Subsolver::Panoc => {
                inner::panoc_solve(&mut subproblem, w0, eps_k, &opts.inner, Some(deadline))
            }
        };
        total_inner += inner_result.iterations;
        total_evals += inner_result.gradient_evaluations;

        let (x_k, z_k, lambda_eq) = subproblem.extract(&inner_result.w_star)?;
        let y_k = dual_update(&y_hat, &work.a, &x_k, &z_k);

        // dual measure, computed explicitly for every formulation
        let mut dual_vec = work.cost.gradient(&x_k) * sigma.mu + work.a.transpose() * &y_k;
        if let (Some(a_eq), Some(l_eq)) = (&work.a_eq, &lambda_eq) {
            dual_vec += a_eq.transpose() * l_eq;
        }
        let e_k = dual_vec.norm().max(eps_k);
        let v_k = if m == 0 {
            0.0
        } else {
            (&work.a * &x_k - &z_k).amax()
        };
        stagnation.push(v_k);

        history.push(HistoryRow {
            k,
            rho: sigma.rho,
            mu: sigma.mu,
            eps: eps_k,
            e: e_k,
            v: v_k,
            inner_iterations: inner_result.iterations,
            gradient_evaluations: inner_result.gradient_evaluations,
            elapsed_s: start.elapsed().as_secs_f64(),
            inner_status: inner_result.status,
        });

        let termination = TerminationInputs {
            e: e_k,
            v: v_k,
            mu: sigma.mu,
            elapsed_exceeded: Instant::now() >= deadline
                || inner_result.status == InnerStatus::Deadline,
            outer_at_cap: k == opts.max_outer_iterations,
            infeasible_stationary: problem::is_infeasible_stationary(work, &x_k, opts.eps_d),
            v_stagnant: stagnation.stagnant(),
        };
        if let Some(status) = classify_termination(&termination, opts) {
            let triple = unfold_triple(problem, fold, x_k, z_k, y_k, lambda_eq);
            return Ok(AlmResult {
                triple,
                status,
                mu_final: sigma.mu,
                history,
                outer_iterations: k,
                inner_iterations: total_inner,
                gradient_evaluations: total_evals,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }

        // a stalled inner solve is treated as failed decrease
        if inner_result.status == InnerStatus::Stalled {
            sigma = PenaltyPair::new(opts.kappa_rho * sigma.rho, opts.kappa_mu * sigma.mu);
        } else {
            let (next_sigma, next_eps) = update_schedule(v_k, v_prev, sigma, eps_k, opts);
            sigma = next_sigma;
            eps_k = next_eps;
        }

        x = x_k;
        z = z_k;
        y = y_k;
        v_prev = v_k;
    }

    unreachable!("the iteration-cap branch of classify_termination returns at k = cap")
}

fn unfold_triple(
    problem: &GeoProblem,
    folded: bool,
    x: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
    lambda_eq: Option<DVector<f64>>,
) -> PrimalDualTriple {
    let m = problem.m();
    if folded {
        let p = problem.p();
        let y_eq = (p > 0).then(|| DVector::from(y.rows(m, p)));
        PrimalDualTriple {
            x,
            z: DVector::from(z.rows(0, m)),
            y: DVector::from(y.rows(0, m)),
            y_eq,
        }
    } else {
        PrimalDualTriple {
            x,
            z,
            y,
            y_eq: lambda_eq,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConstraintSet;
    use crate::problem::{check_stationarity, QuadraticCost};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn safeguard_clamps_componentwise() {
        let y = DVector::from_row_slice(&[2e20, -3e20, 5.0]);
        let s = safeguard(&y, 1e20);
        assert_eq!(s, DVector::from_row_slice(&[1e20, -1e20, 5.0]));
        assert_eq!(safeguard(&s, 1e20), s);
        let inside = DVector::from_row_slice(&[1.0, -2.0]);
        assert_eq!(safeguard(&inside, 1e20), inside);
    }

    #[test]
    fn dual_update_examples() {
        let a = DMatrix::from_row_slice(1, 1, &[2.0]);
        let x = DVector::from_row_slice(&[1.0]);
        let z = DVector::from_row_slice(&[1.5]);
        let y_hat = DVector::from_row_slice(&[0.5]);
        assert_eq!(dual_update(&y_hat, &a, &x, &z)[0], 1.0);

        // Ax = z leaves the estimate unchanged
        let z_eq = &a * &x;
        assert_eq!(dual_update(&y_hat, &a, &x, &z_eq), y_hat);

        // z = Ax + ŷ cancels
        let z_cancel = &a * &x + &y_hat;
        assert_eq!(dual_update(&y_hat, &a, &x, &z_cancel)[0], 0.0);
    }

    #[test]
    fn schedule_reproduces_hand_trace() {
        let opts = AlmOptions::default();
        let mut sigma = PenaltyPair::new(1e-6, 1.0);
        let mut eps = 1.0;
        let mut v_prev = f64::INFINITY;

        // k = 1: V = 0.5 ≤ ∞ → decrease branch
        (sigma, eps) = update_schedule(0.5, v_prev, sigma, eps, &opts);
        v_prev = 0.5;
        assert_eq!(eps, 0.5);
        assert_eq!(sigma.mu, 1.0);
        assert_eq!(sigma.rho, 1e-6);

        // k = 2: V = 0.49 > 0.45 → penalty branch
        (sigma, eps) = update_schedule(0.49, v_prev, sigma, eps, &opts);
        v_prev = 0.49;
        assert_eq!(sigma.mu, 0.25);
        assert_eq!(eps, 0.5);

        // k = 3: V = 0.6 > max(eps_p, 0.441) → penalty branch
        (sigma, eps) = update_schedule(0.6, v_prev, sigma, eps, &opts);
        assert_eq!(sigma.mu, 0.0625);
        assert_eq!(eps, 0.5);
        assert_eq!(sigma.rho, 1e-6); // kappa_rho = 1 keeps rho fixed
    }

    #[test]
    fn schedule_geometric_eps_decay_when_always_feasible() {
        let opts = AlmOptions::default();
        let mut sigma = PenaltyPair::new(1e-6, 1.0);
        let mut eps = 1.0;
        for k in 1..=30 {
            (sigma, eps) = update_schedule(0.0, 1.0, sigma, eps, &opts);
            let expect = (0.5f64.powi(k)).max(opts.kappa_eps * opts.eps_d);
            assert_relative_eq!(eps, expect, max_relative = 1e-12);
            assert_eq!(sigma.mu, 1.0);
        }
    }

    #[test]
    fn classification_examples() {
        let opts = AlmOptions::default();
        let base = TerminationInputs {
            e: 1e-7,
            v: 1e-7,
            mu: 1.0,
            elapsed_exceeded: false,
            outer_at_cap: false,
            infeasible_stationary: false,
            v_stagnant: false,
        };
        assert_eq!(classify_termination(&base, &opts), Some(AlmStatus::Solved));

        let infeasible = TerminationInputs {
            e: 1e-7,
            v: 0.3,
            mu: 1e-13,
            infeasible_stationary: true,
            v_stagnant: true,
            ..base.clone()
        };
        assert_eq!(
            classify_termination(&infeasible, &opts),
            Some(AlmStatus::InfeasibleStationary)
        );

        let timed_out = TerminationInputs {
            v: 0.3,
            elapsed_exceeded: true,
            ..base.clone()
        };
        assert_eq!(classify_termination(&timed_out, &opts), Some(AlmStatus::TimeLimit));

        let keep_going = TerminationInputs {
            v: 0.3,
            ..base
        };
        assert_eq!(classify_termination(&keep_going, &opts), None);
    }

    fn equality_qp(seed: u64, n: usize, m: usize) -> (GeoProblem, DVector<f64>) {
        // well-conditioned convex QP with C = {0}^m; the oracle is a dense
        // KKT solve through an independent LU path
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = &raw * raw.transpose() + DMatrix::identity(n, n);
        let lin = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let problem = GeoProblem::new(
            QuadraticCost::new(q.clone(), lin.clone()),
            a.clone(),
            ConstraintSet::zero(m),
            None,
            None,
        );

        let dim = n + m;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&q);
        kkt.view_mut((n, 0), (m, n)).copy_from(&a);
        kkt.view_mut((0, n), (n, m)).copy_from(&a.transpose());
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-&lin));
        let sol = kkt.full_piv_lu().solve(&rhs).expect("oracle KKT solve");
        (problem, DVector::from(sol.rows(0, n)))
    }

    #[test]
    fn convex_equality_qp_matches_kkt_oracle() {
        let (problem, x_oracle) = equality_qp(77, 5, 3);
        for formulation in Formulation::ALL {
            let opts = AlmOptions {
                formulation,
                subsolver: Subsolver::Panoc,
                ..AlmOptions::default()
            };
            let init = InitialPoint {
                x0: DVector::zeros(5),
                y0: DVector::zeros(3),
                z0: DVector::zeros(3),
            };
            let r = alm_solve(&problem, &opts, &init).unwrap();
            assert_eq!(r.status, AlmStatus::Solved, "{formulation:?}");
            assert!(
                (&r.triple.x - &x_oracle).amax() <= 1e-5,
                "{formulation:?}: error {}",
                (&r.triple.x - &x_oracle).amax()
            );
            let report = check_stationarity(&problem, &r.triple, r.mu_final, opts.eps_d, opts.eps_p);
            assert!(report.passes());
        }
    }

    #[test]
    fn trivially_feasible_start_solves_at_first_iteration() {
        // unconstrained minimum already satisfies Ax ∈ C; with ε₁ = ε_d the
        // first outer test fires
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let lin = DVector::from_row_slice(&[-2.0, -4.0]);
        let x_star = DVector::from_row_slice(&[1.0, 2.0]);
        let problem = GeoProblem::new(
            QuadraticCost::new(q, lin),
            DMatrix::identity(2, 2),
            ConstraintSet::nonneg(2),
            None,
            None,
        );
        let opts = AlmOptions {
            eps_1: 1e-6,
            formulation: Formulation::CondensedSoft,
            ..AlmOptions::default()
        };
        let init = InitialPoint {
            z0: problem.set.project(&(&problem.a * &x_star)),
            x0: x_star.clone(),
            y0: DVector::zeros(2),
        };
        let r = alm_solve(&problem, &opts, &init).unwrap();
        assert_eq!(r.status, AlmStatus::Solved);
        assert_eq!(r.outer_iterations, 1);
        assert_relative_eq!(r.triple.x, x_star, epsilon = 1e-5);
    }

    #[test]
    fn infeasible_two_halfspace_instance_is_detected() {
        let problem = GeoProblem::new(
            QuadraticCost::new(
                DMatrix::from_row_slice(1, 1, &[2.0]),
                DVector::zeros(1),
            ),
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            ConstraintSet::translate(
                ConstraintSet::nonneg(2),
                DVector::from_row_slice(&[1.0, 1.0]),
            )
            .unwrap(),
            None,
            None,
        );
        let init = InitialPoint {
            x0: DVector::from_row_slice(&[0.3]),
            y0: DVector::zeros(2),
            z0: problem
                .set
                .project(&(&problem.a * DVector::from_row_slice(&[0.3]))),
        };
        let opts = AlmOptions {
            formulation: Formulation::CondensedSoft,
            subsolver: Subsolver::Nmpg,
            ..AlmOptions::default()
        };
        let r = alm_solve(&problem, &opts, &init).unwrap();
        assert_eq!(r.status, AlmStatus::InfeasibleStationary);
        assert_eq!(r.status.exit_code(), 2);
        assert!(r.triple.x[0].abs() <= 1e-6);
        // V stalls at the halfspace gap while mu collapses
        let last = r.history.last().unwrap();
        assert!(last.v > 0.9);
        assert!(last.mu < 1e-12);
    }

    #[test]
    fn history_traces_mu_and_eps_schedules() {
        let (problem, _) = equality_qp(3, 4, 2);
        let opts = AlmOptions {
            formulation: Formulation::CondensedSoft,
            ..AlmOptions::default()
        };
        let init = InitialPoint {
            x0: DVector::from_element(4, 2.0),
            y0: DVector::zeros(2),
            z0: DVector::zeros(2),
        };
        let r = alm_solve(&problem, &opts, &init).unwrap();
        assert_eq!(r.status, AlmStatus::Solved);
        assert_eq!(r.history.len(), r.outer_iterations);
        assert_eq!(
            r.history.iter().map(|h| h.inner_iterations).sum::<usize>(),
            r.inner_iterations
        );
        // mu follows mu_1 * kappa_mu^(failed decreases); eps nonincreasing
        let mut failed = 0u32;
        let mut prev_eps = f64::INFINITY;
        let mut prev_v = f64::INFINITY;
        for row in &r.history {
            assert_eq!(row.mu, opts.mu_1 * opts.kappa_mu.powi(failed as i32));
            assert!(row.eps <= prev_eps);
            prev_eps = row.eps;
            if !(row.v <= opts.eps_p.max(opts.kappa_v * prev_v)) {
                failed += 1;
            }
            prev_v = row.v;
        }
    }

    #[test]
    fn history_csv_round_trips_row_count() {
        let (problem, _) = equality_qp(4, 3, 1);
        let opts = AlmOptions {
            formulation: Formulation::Extended,
            subsolver: Subsolver::Nmpg,
            ..AlmOptions::default()
        };
        let init = InitialPoint {
            x0: DVector::zeros(3),
            y0: DVector::zeros(1),
            z0: DVector::zeros(1),
        };
        let r = alm_solve(&problem, &opts, &init).unwrap();
        let mut buf = Vec::new();
        r.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.history.len() + 1);
        assert!(text.lines().next().unwrap().starts_with("k,rho,mu"));
        assert!(text.lines().last().unwrap().ends_with("solved"));
    }

    #[test]
    fn options_validation_rejects_bad_ranges() {
        let mut opts = AlmOptions::default();
        opts.kappa_v = 1.0;
        assert!(opts.validate().is_err());
        opts.kappa_v = 0.9;
        opts.kappa_rho = 0.0;
        assert!(opts.validate().is_err());
    }
}
