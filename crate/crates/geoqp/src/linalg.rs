//! Dense symmetric linear algebra for the condensed subproblems.
//!
//! Two factorization paths share one handle type: Cholesky for symmetric
//! positive definite systems and a Bunch-Kaufman pivoted LDLᵀ for the
//! symmetric indefinite saddle-point systems produced by
//! [`lifted_kkt_matrix`]. Both are deterministic: the same matrix always
//! yields the same factors and the same solve bits, which the solver relies
//! on for reproducible runs.

use crate::problem::GeoProblem;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative pivot threshold below which a factorization is declared singular.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is numerically singular (pivot {pivot})")]
    Singular { pivot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Spd,
    SymmetricIndefinite,
}

/// `M = μQ + ρI + AᵀA`, the normal-equations matrix of the marginal solve.
///
/// Always symmetric positive definite for `μ, ρ > 0` and convex `Q`. Kept
/// for tests and tiny problems; production solves route through the lifted
/// system to skip forming `AᵀA`.
pub fn condensed_spd_matrix(problem: &GeoProblem, mu: f64, rho: f64) -> DMatrix<f64> {
    assert!(mu > 0.0 && rho > 0.0, "penalty parameters must be positive");
    let n = problem.n();
    let mut m = problem.cost.hessian() * mu;
    m += problem.a.transpose() * &problem.a;
    for i in 0..n {
        m[(i, i)] += rho;
    }
    m
}

/// Symmetric saddle-point form of the marginal solve.
///
/// Without hard equalities:
/// ```text
/// [ μQ + ρI   Aᵀ ]
/// [ A        -I  ]
/// ```
/// and with them a third block row/column `[A_eq, 0, 0]` is appended. The
/// right-hand side layout is `(ρx̂ - μq - Aᵀŷ, z, b_eq)`.
pub fn lifted_kkt_matrix(problem: &GeoProblem, mu: f64, rho: f64) -> DMatrix<f64> {
    assert!(mu > 0.0 && rho > 0.0, "penalty parameters must be positive");
    let (n, m, p) = (problem.n(), problem.m(), problem.p());
    let dim = n + m + p;
    let mut k = DMatrix::zeros(dim, dim);

    k.view_mut((0, 0), (n, n))
        .copy_from(&(problem.cost.hessian() * mu));
    for i in 0..n {
        k[(i, i)] += rho;
    }
    k.view_mut((n, 0), (m, n)).copy_from(&problem.a);
    k.view_mut((0, n), (n, m)).copy_from(&problem.a.transpose());
    for i in 0..m {
        k[(n + i, n + i)] = -1.0;
    }
    if let Some(a_eq) = &problem.a_eq {
        k.view_mut((n + m, 0), (p, n)).copy_from(a_eq);
        k.view_mut((0, n + m), (n, p)).copy_from(&a_eq.transpose());
    }
    k
}

enum Step {
    /// 1x1 pivot at column `col` after swapping rows/cols `col <-> swap`.
    Single { col: usize, swap: usize },
    /// 2x2 pivot at columns `(col, col+1)` after swapping `col+1 <-> swap`.
    Pair { col: usize, swap: usize },
}

/// Factored symmetric matrix. Solves with the same handle and right-hand
/// side are bit-identical.
pub struct Factorization {
    n: usize,
    kind: FactorKind,
    /// Column-major lower-triangular factor data, in place.
    data: Vec<f64>,
    /// Pivoting script of the indefinite path (empty for Cholesky).
    steps: Vec<Step>,
}

/// Factorizes a symmetric matrix. The caller picks the path: `Spd` runs an
/// unblocked Cholesky, `SymmetricIndefinite` a Bunch-Kaufman partial-pivot
/// LDLᵀ. Pivots smaller than `1e-14·‖M‖_max` abort with the pivot index.
pub fn factorize(m: &DMatrix<f64>, kind: FactorKind) -> Result<Factorization, FactorError> {
    assert!(m.is_square(), "factorize requires a square matrix");
    let n = m.nrows();
    let mut data = vec![0.0; n * n];
    for j in 0..n {
        for i in j..n {
            data[j * n + i] = m[(i, j)];
        }
    }
    let tiny = PIVOT_TOL * m.abs().max();
    let mut f = Factorization {
        n,
        kind,
        data,
        steps: Vec::new(),
    };
    match kind {
        FactorKind::Spd => f.cholesky_in_place(tiny)?,
        FactorKind::SymmetricIndefinite => f.bunch_kaufman_in_place(tiny)?,
    }
    Ok(f)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    /// Solves `Mx = b` using the stored factors.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.n, "right-hand side has wrong dimension");
        let mut x: Vec<f64> = b.iter().copied().collect();
        match self.kind {
            FactorKind::Spd => self.solve_cholesky(&mut x),
            FactorKind::SymmetricIndefinite => self.solve_bunch_kaufman(&mut x),
        }
        DVector::from_vec(x)
    }

    fn cholesky_in_place(&mut self, tiny: f64) -> Result<(), FactorError> {
        let n = self.n;
        for k in 0..n {
            let d = self.data[k * n + k];
            if d <= tiny {
                return Err(FactorError::NotPositiveDefinite { pivot: k });
            }
            let l = d.sqrt();
            self.data[k * n + k] = l;
            let inv = 1.0 / l;
            for i in k + 1..n {
                self.data[k * n + i] *= inv;
            }
            // trailing rank-1 update, column by column
            for j in k + 1..n {
                let c = self.data[k * n + j];
                if c != 0.0 {
                    let (left, right) = self.data.split_at_mut(j * n);
                    let col_k = &left[k * n + j..k * n + n];
                    let col_j = &mut right[j..n];
                    for (cj, ck) in col_j.iter_mut().zip(col_k) {
                        *cj -= c * ck;
                    }
                }
            }
        }
        Ok(())
    }

    fn solve_cholesky(&self, x: &mut [f64]) {
        let n = self.n;
        // L y = b
        for k in 0..n {
            let xk = x[k] / self.data[k * n + k];
            x[k] = xk;
            let col = &self.data[k * n + k + 1..k * n + n];
            for (xi, lik) in x[k + 1..].iter_mut().zip(col) {
                *xi -= lik * xk;
            }
        }
        // Lᵀ x = y
        for k in (0..n).rev() {
            let col = &self.data[k * n + k + 1..k * n + n];
            let mut s = x[k];
            for (xi, lik) in x[k + 1..].iter().zip(col) {
                s -= lik * xi;
            }
            x[k] = s / self.data[k * n + k];
        }
    }

    fn bunch_kaufman_in_place(&mut self, tiny: f64) -> Result<(), FactorError> {
        let n = self.n;
        let alpha = (1.0 + 17.0f64.sqrt()) / 8.0;
        let idx = |i: usize, j: usize| j * n + i;
        let mut k = 0;
        while k < n {
            let absakk = self.data[idx(k, k)].abs();
            let (imax, colmax) = if k + 1 < n {
                let mut im = k + 1;
                let mut cm = 0.0;
                for i in k + 1..n {
                    let v = self.data[idx(i, k)].abs();
                    if v > cm {
                        cm = v;
                        im = i;
                    }
                }
                (im, cm)
            } else {
                (k, 0.0)
            };

            if absakk.max(colmax) <= tiny {
                return Err(FactorError::Singular { pivot: k });
            }

            let (kp, kstep) = if absakk >= alpha * colmax {
                (k, 1)
            } else {
                // magnitude of the largest off-diagonal in row/column imax
                let mut rowmax: f64 = 0.0;
                for j in k..imax {
                    rowmax = rowmax.max(self.data[idx(imax, j)].abs());
                }
                for i in imax + 1..n {
                    rowmax = rowmax.max(self.data[idx(i, imax)].abs());
                }
                if absakk >= alpha * colmax * (colmax / rowmax) {
                    (k, 1)
                } else if self.data[idx(imax, imax)].abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };

            let kk = k + kstep - 1;
            if kp != kk {
                // symmetric interchange of rows/cols kk and kp in the
                // trailing submatrix (lower storage)
                for i in kp + 1..n {
                    self.data.swap(idx(i, kk), idx(i, kp));
                }
                for j in kk + 1..kp {
                    self.data.swap(idx(j, kk), idx(kp, j));
                }
                self.data.swap(idx(kk, kk), idx(kp, kp));
                if kstep == 2 {
                    self.data.swap(idx(k + 1, k), idx(kp, k));
                }
            }

            if kstep == 1 {
                let d = self.data[idx(k, k)];
                if d.abs() <= tiny {
                    return Err(FactorError::Singular { pivot: k });
                }
                let r1 = 1.0 / d;
                for j in k + 1..n {
                    let c = -r1 * self.data[idx(j, k)];
                    if c != 0.0 {
                        let (left, right) = self.data.split_at_mut(j * n);
                        let col_k = &left[k * n + j..k * n + n];
                        let col_j = &mut right[j..n];
                        for (cj, ck) in col_j.iter_mut().zip(col_k) {
                            *cj += c * ck;
                        }
                    }
                }
                for i in k + 1..n {
                    self.data[idx(i, k)] *= r1;
                }
                self.steps.push(Step::Single { col: k, swap: kp });
                k += 1;
            } else {
                let d21 = self.data[idx(k + 1, k)];
                let d11 = self.data[idx(k + 1, k + 1)] / d21;
                let d22 = self.data[idx(k, k)] / d21;
                let denom = d11 * d22 - 1.0;
                if denom == 0.0 || !denom.is_finite() {
                    return Err(FactorError::Singular { pivot: k });
                }
                let t = 1.0 / denom;
                let d21x = t / d21;
                for j in k + 2..n {
                    let wk = d21x * (d11 * self.data[idx(j, k)] - self.data[idx(j, k + 1)]);
                    let wkp1 = d21x * (d22 * self.data[idx(j, k + 1)] - self.data[idx(j, k)]);
                    {
                        let (left, right) = self.data.split_at_mut(j * n);
                        let col_k = &left[k * n + j..k * n + n];
                        let col_k1 = &left[(k + 1) * n + j..(k + 1) * n + n];
                        let col_j = &mut right[j..n];
                        for ((cj, ck), ck1) in col_j.iter_mut().zip(col_k).zip(col_k1) {
                            *cj -= ck * wk + ck1 * wkp1;
                        }
                    }
                    self.data[idx(j, k)] = wk;
                    self.data[idx(j, k + 1)] = wkp1;
                }
                self.steps.push(Step::Pair { col: k, swap: kp });
                k += 2;
            }
        }
        Ok(())
    }

    fn solve_bunch_kaufman(&self, x: &mut [f64]) {
        let n = self.n;
        let idx = |i: usize, j: usize| j * n + i;
        // forward: undo interchanges and apply inv(L), inv(D) step by step
        for step in &self.steps {
            match *step {
                Step::Single { col: k, swap } => {
                    x.swap(k, swap);
                    let xk = x[k];
                    let col = &self.data[k * n + k + 1..k * n + n];
                    for (xi, lik) in x[k + 1..].iter_mut().zip(col) {
                        *xi -= lik * xk;
                    }
                    x[k] /= self.data[idx(k, k)];
                }
                Step::Pair { col: k, swap } => {
                    x.swap(k + 1, swap);
                    let (xk, xk1) = (x[k], x[k + 1]);
                    let col_k = &self.data[k * n + k + 2..k * n + n];
                    let col_k1 = &self.data[(k + 1) * n + k + 2..(k + 1) * n + n];
                    for ((xi, lik), lik1) in x[k + 2..].iter_mut().zip(col_k).zip(col_k1) {
                        *xi -= lik * xk + lik1 * xk1;
                    }
                    // 2x2 diagonal block solve in scaled form
                    let akm1k = self.data[idx(k + 1, k)];
                    let akm1 = self.data[idx(k, k)] / akm1k;
                    let ak = self.data[idx(k + 1, k + 1)] / akm1k;
                    let denom = akm1 * ak - 1.0;
                    let bkm1 = x[k] / akm1k;
                    let bk = x[k + 1] / akm1k;
                    x[k] = (ak * bkm1 - bk) / denom;
                    x[k + 1] = (akm1 * bk - bkm1) / denom;
                }
            }
        }
        // backward: apply inv(Lᵀ) and redo interchanges in reverse order
        for step in self.steps.iter().rev() {
            match *step {
                Step::Single { col: k, swap } => {
                    let col = &self.data[k * n + k + 1..k * n + n];
                    let mut s = x[k];
                    for (xi, lik) in x[k + 1..].iter().zip(col) {
                        s -= lik * xi;
                    }
                    x[k] = s;
                    x.swap(k, swap);
                }
                Step::Pair { col: k, swap } => {
                    let col_k = &self.data[k * n + k + 2..k * n + n];
                    let col_k1 = &self.data[(k + 1) * n + k + 2..(k + 1) * n + n];
                    let (mut sk, mut sk1) = (x[k], x[k + 1]);
                    for ((xi, lik), lik1) in x[k + 2..].iter().zip(col_k).zip(col_k1) {
                        sk -= lik * xi;
                        sk1 -= lik1 * xi;
                    }
                    x[k] = sk;
                    x[k + 1] = sk1;
                    x.swap(k + 1, swap);
                }
            }
        }
    }
}

/// Power-iteration estimate of the spectral norm `‖A‖₂`.
///
/// The returned value is a Rayleigh quotient and therefore never exceeds the
/// true norm; consumers building upper bounds from it apply their own safety
/// factor on the complementary side. Deterministic: the start vector comes
/// from a fixed seed.
pub fn spectral_norm_estimate(a: &DMatrix<f64>, iters: usize) -> f64 {
    assert!(iters >= 1);
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let mut v = DVector::from_fn(a.ncols(), |_, _| rng.random_range(-1.0..1.0f64));
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= nv;
    for _ in 0..iters {
        let w = a.transpose() * (a * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
    }
    (a * v).norm()
}

/// Row rank via column-pivoted QR, used by problem validation.
pub fn row_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let d0 = r[(0, 0)].abs();
    let tol = 1e-10 * d0.max(1.0);
    (0..r.nrows().min(r.ncols()))
        .take_while(|&i| r[(i, i)].abs() > tol)
        .count()
}
