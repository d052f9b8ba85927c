//! Projection-based solvers for subproblems of the form
//! `minimize φ(w)  s.t.  w ∈ W`,
//! with `φ` continuously differentiable and `W` closed, possibly nonconvex,
//! available only through its projection.
//!
//! Two solvers share one termination contract:
//!
//! * [`nmpg_solve`] — projected gradient with Barzilai-Borwein (spectral)
//!   stepsizes and a nonmonotone linesearch;
//! * [`panoc_solve`] — the same baseline accelerated by an L-BFGS direction
//!   built on the projected-gradient fixed-point residual, blended toward
//!   the plain step by a relaxation linesearch.
//!
//! Termination uses the corrected fixed-point residual of
//! [`stationarity_residual`], which upper-bounds the distance from zero to
//! the generalized gradient at the projected trial point. A converged result
//! certifies the returned point: re-evaluating the residual there reproduces
//! the reported value bit for bit.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::time::Instant;

/// Relative curvature threshold for accepting a Barzilai-Borwein pair.
const BB_CURVATURE_TOL: f64 = 1e-12;

/// Curvature threshold for accepting an L-BFGS pair.
const LBFGS_CURVATURE_TOL: f64 = 1e-12;

/// Oracle for one subproblem: joint value/gradient evaluation plus the
/// projection onto the feasible set.
///
/// `evaluate` must be defined on all of the ambient space (trial points are
/// not feasible in general); `project` must be idempotent. Evaluation takes
/// `&mut self` so implementations can maintain factorization caches.
pub trait InnerProblem {
    fn dimension(&self) -> usize;
    fn evaluate(&mut self, w: &DVector<f64>) -> Evaluation;
    fn project(&self, w: &DVector<f64>) -> DVector<f64>;
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
}

impl Evaluation {
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.iter().all(|g| g.is_finite())
    }
}

/// Adapter turning closures into an [`InnerProblem`].
pub struct ClosureProblem<F, P>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub dim: usize,
    pub eval: F,
    pub proj: P,
}

impl<F, P> InnerProblem for ClosureProblem<F, P>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn dimension(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, w: &DVector<f64>) -> Evaluation {
        let (value, gradient) = (self.eval)(w);
        Evaluation { value, gradient }
    }

    fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        (self.proj)(w)
    }
}

/// Tuning constants and caps shared by both solvers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerOptions {
    /// Hard cap on accepted iterations per solve.
    pub max_iterations: usize,
    /// Consecutive stepsize halvings before declaring a stall.
    pub max_backtracks: usize,
    /// Sufficient-decrease constant of the nonmonotone condition.
    pub armijo: f64,
    /// Number of past accepted values the nonmonotone reference looks at.
    pub window: usize,
    /// L-BFGS memory of the accelerated solver.
    pub lbfgs_memory: usize,
    /// Relaxation floor: after this many halvings of `τ` the accelerated
    /// step falls back to the plain projected-gradient step.
    pub tau_floor_exponent: u32,
    /// Stepsize clamp.
    pub step_min: f64,
    pub step_max: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            max_iterations: 50_000,
            max_backtracks: 50,
            armijo: 1e-4,
            window: 10,
            lbfgs_memory: 10,
            tau_floor_exponent: 20,
            step_min: 1e-10,
            step_max: 1e10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerStatus {
    Converged,
    IterationCap,
    Stalled,
    /// The caller-provided deadline expired mid-solve.
    Deadline,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub w_star: DVector<f64>,
    /// Stationarity measure at exit, evaluated at `w_star`.
    pub residual: f64,
    /// Accepted iterations.
    pub iterations: usize,
    /// Oracle calls (joint value/gradient evaluations).
    pub gradient_evaluations: usize,
    pub status: InnerStatus,
    /// Stepsize in force at exit; re-evaluating the residual at `w_star`
    /// with this stepsize reproduces `residual`.
    pub gamma_exit: f64,
    pub diagnostic: Option<String>,
}

/// One projected-gradient step `proj_W(w - γ ∇φ(w))`.
pub fn pg_step(ip: &mut dyn InnerProblem, w: &DVector<f64>, gamma: f64) -> DVector<f64> {
    assert!(gamma > 0.0);
    let g = ip.evaluate(w).gradient;
    ip.project(&(w - gamma * g))
}

/// Corrected fixed-point residual at `w`.
///
/// With `w̄ = proj_W(w - γ∇φ(w))` this returns
/// `‖(w - w̄)/γ + ∇φ(w̄) - ∇φ(w)‖₂`, which bounds the distance from zero to
/// the generalized gradient of `φ + indicator_W` at `w̄`; `w̄` is the point
/// the certificate speaks about.
pub fn stationarity_residual(ip: &mut dyn InnerProblem, w: &DVector<f64>, gamma: f64) -> f64 {
    assert!(gamma > 0.0);
    let g = ip.evaluate(w).gradient;
    let w_bar = ip.project(&(w - gamma * &g));
    let g_bar = ip.evaluate(&w_bar).gradient;
    residual_from_parts(w, &w_bar, &g, &g_bar, gamma)
}

fn residual_from_parts(
    w: &DVector<f64>,
    w_bar: &DVector<f64>,
    g: &DVector<f64>,
    g_bar: &DVector<f64>,
    gamma: f64,
) -> f64 {
    ((w - w_bar) / gamma + g_bar - g).norm()
}

/// Barzilai-Borwein stepsize from iterate difference `s` and gradient
/// difference `v`, falling back to `gamma_prev` when the curvature is not
/// safely positive. The result is clamped to `[1e-10, 1e10]`.
pub fn spectral_stepsize(s: &DVector<f64>, v: &DVector<f64>, gamma_prev: f64) -> f64 {
    spectral_stepsize_clamped(s, v, gamma_prev, 1e-10, 1e10)
}

fn spectral_stepsize_clamped(
    s: &DVector<f64>,
    v: &DVector<f64>,
    gamma_prev: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let sv = s.dot(v);
    let gamma = if sv > BB_CURVATURE_TOL * s.norm() * v.norm() {
        s.dot(s) / sv
    } else {
        gamma_prev
    };
    gamma.clamp(lo, hi)
}

/// Initial stepsize `1/L̂` from a single finite-difference curvature probe
/// along a fixed pseudo-random direction.
fn initial_gamma(
    ip: &mut dyn InnerProblem,
    w0: &DVector<f64>,
    g0: &DVector<f64>,
    opts: &InnerOptions,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1234_5678);
    let mut d = DVector::from_fn(w0.len(), |_, _| rng.random_range(-1.0..1.0f64));
    let nd = d.norm();
    if nd == 0.0 {
        return 1.0;
    }
    d /= nd;
    let h = 1e-4 * (1.0 + w0.norm());
    let probe = ip.evaluate(&(w0 + h * d));
    if !probe.is_finite() {
        return 1.0;
    }
    let lipschitz = (probe.gradient - g0).norm() / h;
    if lipschitz > 0.0 && lipschitz.is_finite() {
        (1.0 / lipschitz).clamp(opts.step_min, opts.step_max)
    } else {
        opts.step_max
    }
}

struct Window {
    values: VecDeque<f64>,
    cap: usize,
}

impl Window {
    fn new(cap: usize, first: f64) -> Self {
        let mut values = VecDeque::with_capacity(cap);
        values.push_back(first);
        Window { values, cap }
    }

    fn reference(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn push(&mut self, v: f64) {
        if self.values.len() == self.cap {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }
}

struct Counters {
    iterations: usize,
    evaluations: usize,
}

fn finish(
    w_star: DVector<f64>,
    residual: f64,
    status: InnerStatus,
    gamma: f64,
    c: &Counters,
    diagnostic: Option<String>,
) -> InnerResult {
    InnerResult {
        w_star,
        residual,
        iterations: c.iterations,
        gradient_evaluations: c.evaluations,
        status,
        gamma_exit: gamma,
        diagnostic,
    }
}

/// Certificate confirmation: a candidate only counts as converged when the
/// residual re-evaluated at the candidate itself passes, so the returned
/// point and value stay consistent under re-checking.
fn confirm_converged(
    ip: &mut dyn InnerProblem,
    w_bar: &DVector<f64>,
    g_bar: &DVector<f64>,
    gamma: f64,
    eps: f64,
    counters: &mut Counters,
) -> Option<f64> {
    let w_bar2 = ip.project(&(w_bar - gamma * g_bar));
    let eval2 = ip.evaluate(&w_bar2);
    counters.evaluations += 1;
    if !eval2.is_finite() {
        return None;
    }
    let r2 = residual_from_parts(w_bar, &w_bar2, g_bar, &eval2.gradient, gamma);
    (r2 <= eps).then_some(r2)
}

fn deadline_hit(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Nonmonotone spectral projected gradient.
pub fn nmpg_solve(
    ip: &mut dyn InnerProblem,
    w0: DVector<f64>,
    eps: f64,
    opts: &InnerOptions,
    deadline: Option<Instant>,
) -> InnerResult {
    assert!(eps > 0.0);
    let mut counters = Counters {
        iterations: 0,
        evaluations: 0,
    };
    let mut w = ip.project(&w0);
    if opts.max_iterations == 0 {
        return finish(w, f64::INFINITY, InnerStatus::IterationCap, 1.0, &counters, None);
    }
    let eval0 = ip.evaluate(&w);
    counters.evaluations += 1;
    if !eval0.is_finite() {
        return finish(
            w,
            f64::INFINITY,
            InnerStatus::Stalled,
            1.0,
            &counters,
            Some("non-finite objective at the starting point".into()),
        );
    }
    let mut grad = eval0.gradient;
    let mut gamma = initial_gamma(ip, &w, &grad, opts);
    counters.evaluations += 1;
    let mut window = Window::new(opts.window, eval0.value);
    let mut last_residual = f64::INFINITY;

    loop {
        if deadline_hit(deadline) {
            return finish(w, last_residual, InnerStatus::Deadline, gamma, &counters, None);
        }

        // backtracked projected-gradient step from w
        let phi_ref = window.reference();
        let mut backtracks = 0usize;
        let (w_bar, eval_bar) = loop {
            let cand = ip.project(&(&w - gamma * &grad));
            let eval = ip.evaluate(&cand);
            counters.evaluations += 1;
            if !eval.is_finite() {
                return finish(
                    w,
                    last_residual,
                    InnerStatus::Stalled,
                    gamma,
                    &counters,
                    Some("non-finite objective during linesearch".into()),
                );
            }
            let decrease = opts.armijo * (&cand - &w).norm_squared() / gamma;
            if eval.value <= phi_ref - decrease {
                break (cand, eval);
            }
            gamma *= 0.5;
            backtracks += 1;
            if backtracks >= opts.max_backtracks {
                return finish(
                    w,
                    last_residual,
                    InnerStatus::Stalled,
                    gamma,
                    &counters,
                    Some(format!("{backtracks} consecutive backtracks")),
                );
            }
        };
        counters.iterations += 1;

        let residual = residual_from_parts(&w, &w_bar, &grad, &eval_bar.gradient, gamma);
        last_residual = residual;
        if residual <= eps {
            if let Some(r2) =
                confirm_converged(ip, &w_bar, &eval_bar.gradient, gamma, eps, &mut counters)
            {
                return finish(w_bar, r2, InnerStatus::Converged, gamma, &counters, None);
            }
        }

        let s = &w_bar - &w;
        let v = &eval_bar.gradient - &grad;
        let next_gamma = spectral_stepsize_clamped(&s, &v, gamma, opts.step_min, opts.step_max);

        w = w_bar;
        grad = eval_bar.gradient;
        gamma = next_gamma;
        window.push(eval_bar.value);

        if counters.iterations >= opts.max_iterations {
            return finish(w, last_residual, InnerStatus::IterationCap, gamma, &counters, None);
        }
    }
}

struct LbfgsBuffer {
    mem: usize,
    s: VecDeque<DVector<f64>>,
    y: VecDeque<DVector<f64>>,
    rho: VecDeque<f64>,
}

impl LbfgsBuffer {
    fn new(mem: usize) -> Self {
        LbfgsBuffer {
            mem,
            s: VecDeque::new(),
            y: VecDeque::new(),
            rho: VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    fn push(&mut self, s: DVector<f64>, y: DVector<f64>) {
        let sy = s.dot(&y);
        if sy <= LBFGS_CURVATURE_TOL * s.norm() * y.norm() {
            return;
        }
        if self.s.len() == self.mem {
            self.s.pop_front();
            self.y.pop_front();
            self.rho.pop_front();
        }
        self.rho.push_back(1.0 / sy);
        self.s.push_back(s);
        self.y.push_back(y);
    }

    /// Two-loop recursion applying the inverse quasi-Newton operator.
    fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        if self.s.is_empty() {
            return r.clone();
        }
        let k = self.s.len();
        let mut q = r.clone();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = self.rho[i] * self.s[i].dot(&q);
            q -= alpha[i] * &self.y[i];
        }
        let last = k - 1;
        let scale = self.s[last].dot(&self.y[last]) / self.y[last].norm_squared();
        q *= scale;
        for i in 0..k {
            let beta = self.rho[i] * self.y[i].dot(&q);
            q += (alpha[i] - beta) * &self.s[i];
        }
        q
    }
}

/// Projected gradient accelerated by quasi-Newton extrapolation.
///
/// The search direction comes from an L-BFGS model of the fixed-point
/// residual map `w ↦ w - proj_W(w - γ∇φ(w))`. A relaxation parameter
/// `τ ∈ {1, ½, ¼, …}` blends the accelerated step toward the plain
/// projected-gradient step until the nonmonotone decrease condition holds;
/// past the floor the plain step is taken, backtracking `γ` if needed.
/// Every candidate passes through the projection, so iterates stay feasible.
pub fn panoc_solve(
    ip: &mut dyn InnerProblem,
    w0: DVector<f64>,
    eps: f64,
    opts: &InnerOptions,
    deadline: Option<Instant>,
) -> InnerResult {
    assert!(eps > 0.0);
    let mut counters = Counters {
        iterations: 0,
        evaluations: 0,
    };
    let mut w = ip.project(&w0);
    if opts.max_iterations == 0 {
        return finish(w, f64::INFINITY, InnerStatus::IterationCap, 1.0, &counters, None);
    }
    let eval0 = ip.evaluate(&w);
    counters.evaluations += 1;
    if !eval0.is_finite() {
        return finish(
            w,
            f64::INFINITY,
            InnerStatus::Stalled,
            1.0,
            &counters,
            Some("non-finite objective at the starting point".into()),
        );
    }
    let mut grad = eval0.gradient;
    let mut gamma = initial_gamma(ip, &w, &grad, opts);
    counters.evaluations += 1;
    let mut window = Window::new(opts.window, eval0.value);
    let mut lbfgs = LbfgsBuffer::new(opts.lbfgs_memory);
    let mut prev: Option<(DVector<f64>, DVector<f64>, f64)> = None; // (w, R, gamma)
    let mut last_residual = f64::INFINITY;

    loop {
        if deadline_hit(deadline) {
            return finish(w, last_residual, InnerStatus::Deadline, gamma, &counters, None);
        }

        // plain projected-gradient trial and fixed-point residual at w
        let w_bar = ip.project(&(&w - gamma * &grad));
        let eval_bar = ip.evaluate(&w_bar);
        counters.evaluations += 1;
        if !eval_bar.is_finite() {
            return finish(
                w,
                last_residual,
                InnerStatus::Stalled,
                gamma,
                &counters,
                Some("non-finite objective at projected-gradient trial".into()),
            );
        }
        let fixed_point_residual = &w - &w_bar;
        let residual = residual_from_parts(&w, &w_bar, &grad, &eval_bar.gradient, gamma);
        last_residual = residual;
        if residual <= eps {
            if let Some(r2) =
                confirm_converged(ip, &w_bar, &eval_bar.gradient, gamma, eps, &mut counters)
            {
                counters.iterations += 1;
                return finish(w_bar, r2, InnerStatus::Converged, gamma, &counters, None);
            }
        }

        // quasi-Newton pairs are only consistent at a fixed stepsize
        match prev.take() {
            Some((wp, rp, gp)) if gp == gamma => {
                lbfgs.push(&w - &wp, &fixed_point_residual - &rp);
            }
            Some(_) => lbfgs.clear(),
            None => {}
        }
        prev = Some((w.clone(), fixed_point_residual.clone(), gamma));

        let direction = -lbfgs.apply(&fixed_point_residual);
        let phi_ref = window.reference();
        let mut accepted: Option<(DVector<f64>, Evaluation)> = None;

        if direction.iter().all(|d| d.is_finite()) {
            let mut tau = 1.0;
            for _ in 0..=opts.tau_floor_exponent {
                let cand =
                    ip.project(&(&w - (1.0 - tau) * &fixed_point_residual + tau * &direction));
                let eval = ip.evaluate(&cand);
                counters.evaluations += 1;
                if eval.is_finite() {
                    let decrease = opts.armijo * (&cand - &w).norm_squared() / gamma;
                    if eval.value <= phi_ref - decrease {
                        accepted = Some((cand, eval));
                        break;
                    }
                }
                tau *= 0.5;
            }
        } else {
            lbfgs.clear();
        }

        if accepted.is_none() {
            // fall back to the plain step, backtracking γ as needed
            let decrease = opts.armijo * (&w_bar - &w).norm_squared() / gamma;
            if eval_bar.value <= phi_ref - decrease {
                accepted = Some((w_bar, eval_bar));
            } else {
                let mut backtracks = 0usize;
                loop {
                    gamma *= 0.5;
                    prev = None; // stepsize changed; pending pair is stale
                    backtracks += 1;
                    if backtracks >= opts.max_backtracks {
                        return finish(
                            w,
                            last_residual,
                            InnerStatus::Stalled,
                            gamma,
                            &counters,
                            Some(format!("{backtracks} consecutive backtracks")),
                        );
                    }
                    let cand = ip.project(&(&w - gamma * &grad));
                    let eval = ip.evaluate(&cand);
                    counters.evaluations += 1;
                    if !eval.is_finite() {
                        return finish(
                            w,
                            last_residual,
                            InnerStatus::Stalled,
                            gamma,
                            &counters,
                            Some("non-finite objective during linesearch".into()),
                        );
                    }
                    let d = opts.armijo * (&cand - &w).norm_squared() / gamma;
                    if eval.value <= phi_ref - d {
                        accepted = Some((cand, eval));
                        break;
                    }
                }
            }
        }

        let (w_next, eval_next) = accepted.expect("linesearch either accepts or stalls");
        counters.iterations += 1;
        w = w_next;
        grad = eval_next.gradient;
        window.push(eval_next.value);

        if counters.iterations >= opts.max_iterations {
            return finish(w, last_residual, InnerStatus::IterationCap, gamma, &counters, None);
        }
    }
}
