//! Composable constraint-set algebra.
//!
//! A [`ConstraintSet`] is an expression tree over a handful of
//! projection-friendly primitives. Every set supports exact Euclidean
//! projection, distance and membership queries; nonconvex primitives are
//! finite unions of simple convex pieces, projected branch by branch.
//!
//! Projections onto nonconvex sets are set-valued in general. This
//! implementation breaks ties deterministically: union members are
//! enumerated in a fixed order and the first nearest branch wins.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Window from which [`ConstraintSet::sample`] draws before projecting.
const SAMPLE_WINDOW: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum SetError {
    #[error("box bounds have mismatched lengths ({lo} vs {hi})")]
    BoxLengthMismatch { lo: usize, hi: usize },
    #[error("box bound lo[{index}] = {lo} exceeds hi[{index}] = {hi}")]
    BoxBoundsInverted { index: usize, lo: f64, hi: f64 },
    #[error("union children must share one dimension (found {0} and {1})")]
    UnionDimensionMismatch(usize, usize),
    #[error("union child {0} is not a convex node kind")]
    UnionChildNotConvex(usize),
    #[error("union requires at least one child")]
    EmptyUnion,
    #[error("translate offset has dimension {offset}, inner set {inner}")]
    TranslateDimensionMismatch { offset: usize, inner: usize },
    #[error("scale entry {index} is {value}; scaling must be strictly positive")]
    NonPositiveScale { index: usize, value: f64 },
    #[error("scale vector has dimension {diag}, inner set {inner}")]
    ScaleDimensionMismatch { diag: usize, inner: usize },
}

/// Closed set with an exact projection oracle.
///
/// The two-dimensional primitives encode the classical disjunctive
/// constraints on a pair `(a, b)`:
///
/// * [`Complementarity`](Self::Complementarity): `a ≥ 0`, `b ≥ 0`, `ab = 0`
/// * [`Switching`](Self::Switching): `ab = 0`
/// * [`Vanishing`](Self::Vanishing): `a ≥ 0` and `ab ≥ 0`
/// * [`EitherOr`](Self::EitherOr): `a ≤ 0` or `b ≥ 0`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetExpr", into = "SetExpr")]
pub enum ConstraintSet {
    /// The singleton `{0}^d`.
    Zero { dim: usize },
    /// Axis-aligned box; entries of `lo`/`hi` may be infinite.
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// The nonnegative orthant of dimension `d`.
    Nonneg { dim: usize },
    Complementarity,
    Switching,
    Vanishing,
    EitherOr,
    /// Finite union of convex sets of equal dimension.
    UnionOfConvex { children: Vec<ConstraintSet> },
    /// The set `offset + inner`.
    Translate {
        offset: DVector<f64>,
        inner: std::boxed::Box<ConstraintSet>,
    },
    /// Cartesian product; dimensions concatenate.
    Product { children: Vec<ConstraintSet> },
}

impl ConstraintSet {
    pub fn zero(dim: usize) -> Self {
        ConstraintSet::Zero { dim }
    }

    pub fn nonneg(dim: usize) -> Self {
        ConstraintSet::Nonneg { dim }
    }

    /// Box from bound vectors; use `±f64::INFINITY` for unbounded sides.
    pub fn box_bounds(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self, SetError> {
        if lo.len() != hi.len() {
            return Err(SetError::BoxLengthMismatch {
                lo: lo.len(),
                hi: hi.len(),
            });
        }
        for i in 0..lo.len() {
            if lo[i] > hi[i] {
                return Err(SetError::BoxBoundsInverted {
                    index: i,
                    lo: lo[i],
                    hi: hi[i],
                });
            }
        }
        Ok(ConstraintSet::Box { lo, hi })
    }

    /// Symmetric box `[-r, r]^d`.
    pub fn symmetric_box(dim: usize, r: f64) -> Self {
        ConstraintSet::Box {
            lo: DVector::from_element(dim, -r),
            hi: DVector::from_element(dim, r),
        }
    }

    pub fn union_of_convex(children: Vec<ConstraintSet>) -> Result<Self, SetError> {
        let first = children.first().ok_or(SetError::EmptyUnion)?.dim();
        for (i, c) in children.iter().enumerate() {
            if c.dim() != first {
                return Err(SetError::UnionDimensionMismatch(first, c.dim()));
            }
            if !c.is_convex_kind() {
                return Err(SetError::UnionChildNotConvex(i));
            }
        }
        Ok(ConstraintSet::UnionOfConvex { children })
    }

    pub fn translate(inner: ConstraintSet, offset: DVector<f64>) -> Result<Self, SetError> {
        if offset.len() != inner.dim() {
            return Err(SetError::TranslateDimensionMismatch {
                offset: offset.len(),
                inner: inner.dim(),
            });
        }
        Ok(ConstraintSet::Translate {
            offset,
            inner: std::boxed::Box::new(inner),
        })
    }

    pub fn product(children: Vec<ConstraintSet>) -> Self {
        ConstraintSet::Product { children }
    }

    /// The set `{diag(d) z | z ∈ inner}` for strictly positive `d`.
    ///
    /// Anisotropic scaling does not commute with nearest-branch selection
    /// inside nonconvex unions, so instead of keeping a scale node the tree
    /// is rewritten structurally: every node kind here is closed under
    /// positive diagonal scaling (the two-dimensional disjunctive primitives
    /// are scale-invariant, boxes and offsets scale entrywise).
    pub fn scale(inner: ConstraintSet, diag: &DVector<f64>) -> Result<Self, SetError> {
        if diag.len() != inner.dim() {
            return Err(SetError::ScaleDimensionMismatch {
                diag: diag.len(),
                inner: inner.dim(),
            });
        }
        for i in 0..diag.len() {
            if !(diag[i] > 0.0) {
                return Err(SetError::NonPositiveScale {
                    index: i,
                    value: diag[i],
                });
            }
        }
        Ok(Self::scale_unchecked(inner, diag.as_slice()))
    }

    fn scale_unchecked(inner: ConstraintSet, diag: &[f64]) -> ConstraintSet {
        match inner {
            ConstraintSet::Zero { dim } => ConstraintSet::Zero { dim },
            ConstraintSet::Nonneg { dim } => ConstraintSet::Nonneg { dim },
            ConstraintSet::Box { lo, hi } => ConstraintSet::Box {
                lo: lo.zip_map(&DVector::from_row_slice(diag), |l, d| l * d),
                hi: hi.zip_map(&DVector::from_row_slice(diag), |h, d| h * d),
            },
            // sign patterns and zero products are preserved by positive scaling
            s @ (ConstraintSet::Complementarity
            | ConstraintSet::Switching
            | ConstraintSet::Vanishing
            | ConstraintSet::EitherOr) => s,
            ConstraintSet::UnionOfConvex { children } => ConstraintSet::UnionOfConvex {
                children: children
                    .into_iter()
                    .map(|c| Self::scale_unchecked(c, diag))
                    .collect(),
            },
            ConstraintSet::Translate { offset, inner } => ConstraintSet::Translate {
                offset: offset.zip_map(&DVector::from_row_slice(diag), |o, d| o * d),
                inner: std::boxed::Box::new(Self::scale_unchecked(*inner, diag)),
            },
            ConstraintSet::Product { children } => {
                let mut out = Vec::with_capacity(children.len());
                let mut at = 0;
                for c in children {
                    let d = c.dim();
                    out.push(Self::scale_unchecked(c, &diag[at..at + d]));
                    at += d;
                }
                ConstraintSet::Product { children: out }
            }
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Zero { dim } | ConstraintSet::Nonneg { dim } => *dim,
            ConstraintSet::Box { lo, .. } => lo.len(),
            ConstraintSet::Complementarity
            | ConstraintSet::Switching
            | ConstraintSet::Vanishing
            | ConstraintSet::EitherOr => 2,
            ConstraintSet::UnionOfConvex { children } => children[0].dim(),
            ConstraintSet::Translate { offset, .. } => offset.len(),
            ConstraintSet::Product { children } => children.iter().map(|c| c.dim()).sum(),
        }
    }

    /// Whether the node kind is convex (admissible as a union member).
    pub fn is_convex_kind(&self) -> bool {
        match self {
            ConstraintSet::Zero { .. } | ConstraintSet::Box { .. } | ConstraintSet::Nonneg { .. } => {
                true
            }
            ConstraintSet::Complementarity
            | ConstraintSet::Switching
            | ConstraintSet::Vanishing
            | ConstraintSet::EitherOr
            | ConstraintSet::UnionOfConvex { .. } => false,
            ConstraintSet::Translate { inner, .. } => inner.is_convex_kind(),
            ConstraintSet::Product { children } => children.iter().all(|c| c.is_convex_kind()),
        }
    }

    /// Euclidean projection of `v` onto the set.
    ///
    /// Returns a global minimizer of `‖z - v‖` over the set. For unions the
    /// branch projections are compared and the first strictly nearest branch
    /// wins, which makes the selection deterministic.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim(), "projection input has wrong dimension");
        match self {
            ConstraintSet::Zero { dim } => DVector::zeros(*dim),
            ConstraintSet::Box { lo, hi } => {
                DVector::from_fn(v.len(), |i, _| v[i].max(lo[i]).min(hi[i]))
            }
            ConstraintSet::Nonneg { .. } => v.map(|x| x.max(0.0)),
            ConstraintSet::Complementarity => {
                let a = v[0].max(0.0);
                let b = v[1].max(0.0);
                nearest2(v, [a, 0.0], [0.0, b])
            }
            ConstraintSet::Switching => nearest2(v, [v[0], 0.0], [0.0, v[1]]),
            // a ≥ 0 ∧ ab ≥ 0, as the union {0}×R ∪ R²₊
            ConstraintSet::Vanishing => nearest2(v, [0.0, v[1]], [v[0].max(0.0), v[1].max(0.0)]),
            // a ≤ 0 ∨ b ≥ 0, two half-planes
            ConstraintSet::EitherOr => nearest2(v, [v[0].min(0.0), v[1]], [v[0], v[1].max(0.0)]),
            ConstraintSet::UnionOfConvex { children } => {
                let mut best = children[0].project(v);
                let mut best_d = (v - &best).norm();
                for c in &children[1..] {
                    let p = c.project(v);
                    let d = (v - &p).norm();
                    if d < best_d {
                        best = p;
                        best_d = d;
                    }
                }
                best
            }
            ConstraintSet::Translate { offset, inner } => offset + inner.project(&(v - offset)),
            ConstraintSet::Product { children } => {
                let mut out = DVector::zeros(v.len());
                let mut at = 0;
                for c in children {
                    let d = c.dim();
                    let block = c.project(&DVector::from(v.rows(at, d)));
                    out.rows_mut(at, d).copy_from(&block);
                    at += d;
                }
                out
            }
        }
    }

    /// Euclidean distance `‖v - project(v)‖₂`.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Membership test via the distance oracle.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        debug_assert!(tol >= 0.0);
        self.distance(v) <= tol
    }

    /// Deterministic feasible sample: a uniform draw from the window
    /// `[-10, 10]^d` pushed through the projection.
    pub fn sample(&self, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(self.dim(), |_, _| {
            rng.random_range(-SAMPLE_WINDOW..SAMPLE_WINDOW)
        });
        self.project(&v)
    }
}

/// First-branch-wins choice between two candidate projections of a 2-vector.
fn nearest2(v: &DVector<f64>, first: [f64; 2], second: [f64; 2]) -> DVector<f64> {
    let d1 = (v[0] - first[0]).powi(2) + (v[1] - first[1]).powi(2);
    let d2 = (v[0] - second[0]).powi(2) + (v[1] - second[1]).powi(2);
    if d2 < d1 {
        DVector::from_row_slice(&second)
    } else {
        DVector::from_row_slice(&first)
    }
}

/// Serialization schema for set expression trees.
///
/// Tagged nodes, e.g. `{"kind":"product","children":[{"kind":"cc"},
/// {"kind":"box","lo":[-25],"hi":[25]}]}`. Box bounds use `null` for an
/// unbounded side. A `"scale"` node is accepted on input and rewritten away
/// on construction, so it never appears on output.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetExpr {
    Zero {
        dim: usize,
    },
    Box {
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
    },
    Nonneg {
        dim: usize,
    },
    Cc,
    Sc,
    Vc,
    Eoc,
    Union {
        children: Vec<SetExpr>,
    },
    Translate {
        offset: Vec<f64>,
        inner: std::boxed::Box<SetExpr>,
    },
    Scale {
        diag: Vec<f64>,
        inner: std::boxed::Box<SetExpr>,
    },
    Product {
        children: Vec<SetExpr>,
    },
}

impl TryFrom<SetExpr> for ConstraintSet {
    type Error = SetError;

    fn try_from(e: SetExpr) -> Result<Self, SetError> {
        match e {
            SetExpr::Zero { dim } => Ok(ConstraintSet::zero(dim)),
            SetExpr::Box { lo, hi } => {
                let lo = DVector::from_iterator(
                    lo.len(),
                    lo.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)),
                );
                let hi = DVector::from_iterator(
                    hi.len(),
                    hi.into_iter().map(|x| x.unwrap_or(f64::INFINITY)),
                );
                ConstraintSet::box_bounds(lo, hi)
            }
            SetExpr::Nonneg { dim } => Ok(ConstraintSet::nonneg(dim)),
            SetExpr::Cc => Ok(ConstraintSet::Complementarity),
            SetExpr::Sc => Ok(ConstraintSet::Switching),
            SetExpr::Vc => Ok(ConstraintSet::Vanishing),
            SetExpr::Eoc => Ok(ConstraintSet::EitherOr),
            SetExpr::Union { children } => {
                let children = children
                    .into_iter()
                    .map(ConstraintSet::try_from)
                    .collect::<Result<Vec<_>, _>>()?;
                ConstraintSet::union_of_convex(children)
            }
            SetExpr::Translate { offset, inner } => {
                let inner = ConstraintSet::try_from(*inner)?;
                ConstraintSet::translate(inner, DVector::from_vec(offset))
            }
            SetExpr::Scale { diag, inner } => {
                let inner = ConstraintSet::try_from(*inner)?;
                ConstraintSet::scale(inner, &DVector::from_vec(diag))
            }
            SetExpr::Product { children } => Ok(ConstraintSet::product(
                children
                    .into_iter()
                    .map(ConstraintSet::try_from)
                    .collect::<Result<Vec<_>, _>>()?,
            )),
        }
    }
}

impl From<ConstraintSet> for SetExpr {
    fn from(s: ConstraintSet) -> SetExpr {
        match s {
            ConstraintSet::Zero { dim } => SetExpr::Zero { dim },
            ConstraintSet::Box { lo, hi } => SetExpr::Box {
                lo: lo.iter().map(|&x| finite_or_none(x)).collect(),
                hi: hi.iter().map(|&x| finite_or_none(x)).collect(),
            },
            ConstraintSet::Nonneg { dim } => SetExpr::Nonneg { dim },
            ConstraintSet::Complementarity => SetExpr::Cc,
            ConstraintSet::Switching => SetExpr::Sc,
            ConstraintSet::Vanishing => SetExpr::Vc,
            ConstraintSet::EitherOr => SetExpr::Eoc,
            ConstraintSet::UnionOfConvex { children } => SetExpr::Union {
                children: children.into_iter().map(SetExpr::from).collect(),
            },
            ConstraintSet::Translate { offset, inner } => SetExpr::Translate {
                offset: offset.iter().copied().collect(),
                inner: std::boxed::Box::new(SetExpr::from(*inner)),
            },
            ConstraintSet::Product { children } => SetExpr::Product {
                children: children.into_iter().map(SetExpr::from).collect(),
            },
        }
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_row_slice(&[a, b])
    }

    /// Control set of the aircraft benchmark: one input at a time, |u| ≤ 25.
    fn one_at_a_time_box() -> ConstraintSet {
        ConstraintSet::union_of_convex(vec![
            ConstraintSet::product(vec![
                ConstraintSet::symmetric_box(1, 25.0),
                ConstraintSet::zero(1),
            ]),
            ConstraintSet::product(vec![
                ConstraintSet::zero(1),
                ConstraintSet::symmetric_box(1, 25.0),
            ]),
        ])
        .unwrap()
    }

    #[test]
    fn complementarity_projections() {
        let cc = ConstraintSet::Complementarity;
        assert_eq!(cc.project(&v2(1.0, 2.0)), v2(0.0, 2.0));
        assert_eq!(cc.project(&v2(-1.0, -2.0)), v2(0.0, 0.0));
        assert_eq!(cc.project(&v2(0.0, 3.0)), v2(0.0, 3.0));
    }

    #[test]
    fn switching_projection() {
        assert_eq!(ConstraintSet::Switching.project(&v2(3.0, -1.0)), v2(3.0, 0.0));
    }

    #[test]
    fn vanishing_projection() {
        assert_eq!(ConstraintSet::Vanishing.project(&v2(-2.0, 5.0)), v2(0.0, 5.0));
        // infeasible with a > 0: clamp b
        assert_eq!(ConstraintSet::Vanishing.project(&v2(3.0, -1.0)), v2(3.0, 0.0));
    }

    #[test]
    fn either_or_tie_breaks_to_first_branch() {
        assert_eq!(ConstraintSet::EitherOr.project(&v2(1.0, -1.0)), v2(0.0, -1.0));
    }

    #[test]
    fn union_projection_picks_nearest_branch() {
        let u = one_at_a_time_box();
        assert_eq!(u.project(&v2(30.0, 4.0)), v2(25.0, 0.0));
    }

    #[test]
    fn distances() {
        let cc = ConstraintSet::Complementarity;
        assert_eq!(cc.distance(&v2(0.0, 2.0)), 0.0);
        assert_eq!(cc.distance(&v2(1.0, 2.0)), 1.0);
        let two = ConstraintSet::product(vec![
            ConstraintSet::Complementarity,
            ConstraintSet::Complementarity,
        ]);
        // blocks project to (0,2) and (0,0): distances 1 and √5
        let v = DVector::from_row_slice(&[1.0, 2.0, -1.0, -2.0]);
        assert_eq!(two.distance(&v), 6.0f64.sqrt());
    }

    #[test]
    fn contains_examples() {
        let cc = ConstraintSet::Complementarity;
        assert!(cc.contains(&v2(0.0, 2.0), 0.0));
        assert!(cc.contains(&v2(1e-9, 1e-9), 1e-6));
        assert!(!ConstraintSet::EitherOr.contains(&v2(1.0, -1.0), 0.5));
    }

    #[test]
    fn sampling_is_feasible_and_deterministic() {
        assert_eq!(ConstraintSet::zero(3).sample(7), DVector::zeros(3));
        let b = ConstraintSet::box_bounds(
            DVector::from_row_slice(&[0.0]),
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap();
        let s = b.sample(42);
        assert_eq!(s, b.sample(42));
        assert!(s[0] >= 0.0 && s[0] <= 1.0);

        for (k, set) in [
            ConstraintSet::Complementarity,
            ConstraintSet::Vanishing,
            one_at_a_time_box(),
        ]
        .iter()
        .enumerate()
        {
            for seed in 0..100 {
                let s = set.sample(seed + 1000 * k as u64);
                assert!(set.contains(&s, 1e-12));
            }
        }
    }

    #[test]
    fn projection_idempotent_on_random_inputs() {
        let sets = vec![
            ConstraintSet::zero(3),
            ConstraintSet::nonneg(4),
            ConstraintSet::symmetric_box(2, 1.5),
            ConstraintSet::Complementarity,
            ConstraintSet::Switching,
            ConstraintSet::Vanishing,
            ConstraintSet::EitherOr,
            one_at_a_time_box(),
            ConstraintSet::translate(ConstraintSet::Complementarity, v2(0.0, -1.0)).unwrap(),
            ConstraintSet::product(vec![
                ConstraintSet::Complementarity,
                ConstraintSet::nonneg(2),
            ]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for set in &sets {
            for _ in 0..1000 {
                let v = DVector::from_fn(set.dim(), |_, _| rng.random_range(-10.0..10.0));
                let p = set.project(&v);
                assert_eq!(set.project(&p), p, "projection not idempotent on {set:?}");
            }
        }
    }

    #[test]
    fn projection_optimal_against_sampled_points() {
        let sets = vec![
            ConstraintSet::Complementarity,
            ConstraintSet::Switching,
            ConstraintSet::Vanishing,
            ConstraintSet::EitherOr,
            one_at_a_time_box(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for set in &sets {
            for _ in 0..50 {
                let v = DVector::from_fn(set.dim(), |_, _| rng.random_range(-10.0..10.0));
                let d = set.distance(&v);
                for seed in 0..100 {
                    let s = set.sample(seed);
                    assert!(d <= (&v - s).norm() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn translate_conjugation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inner = ConstraintSet::Complementarity;
        let off = v2(0.5, -1.25);
        let t = ConstraintSet::translate(inner.clone(), off.clone()).unwrap();
        for _ in 0..200 {
            let v = DVector::from_fn(2, |_, _| rng.random_range(-10.0..10.0));
            assert_eq!(t.project(&v), &off + inner.project(&(&v - &off)));
        }
    }

    #[test]
    fn product_projection_commutes_with_block_split() {
        let blocks = vec![
            ConstraintSet::Complementarity,
            ConstraintSet::nonneg(3),
            ConstraintSet::EitherOr,
        ];
        let prod = ConstraintSet::product(blocks.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let v = DVector::from_fn(prod.dim(), |_, _| rng.random_range(-10.0..10.0));
            let joint = prod.project(&v);
            let mut at = 0;
            for b in &blocks {
                let d = b.dim();
                let piece = b.project(&DVector::from(v.rows(at, d)));
                assert_eq!(DVector::from(joint.rows(at, d)), piece);
                at += d;
            }
        }
    }

    #[test]
    fn scale_rewrites_exactly() {
        // positive diagonal scaling leaves the disjunctive primitives
        // unchanged and scales box bounds entrywise
        let d = v2(3.0, 0.5);
        let s = ConstraintSet::scale(ConstraintSet::Complementarity, &d).unwrap();
        assert_eq!(s, ConstraintSet::Complementarity);
        let b = ConstraintSet::scale(ConstraintSet::symmetric_box(2, 2.0), &d).unwrap();
        assert_eq!(b, ConstraintSet::box_bounds(v2(-6.0, -1.0), v2(6.0, 1.0)).unwrap());
        assert!(ConstraintSet::scale(ConstraintSet::Switching, &v2(1.0, 0.0)).is_err());
    }

    #[test]
    fn union_rejects_nonconvex_children() {
        let err = ConstraintSet::union_of_convex(vec![ConstraintSet::Complementarity]);
        assert_eq!(err, Err(SetError::UnionChildNotConvex(0)));
        let err = ConstraintSet::union_of_convex(vec![
            ConstraintSet::zero(1),
            ConstraintSet::zero(2),
        ]);
        assert_eq!(err, Err(SetError::UnionDimensionMismatch(1, 2)));
    }

    #[test]
    fn json_round_trip() {
        let set = ConstraintSet::product(vec![
            ConstraintSet::Complementarity,
            ConstraintSet::box_bounds(
                DVector::from_row_slice(&[-25.0, f64::NEG_INFINITY]),
                DVector::from_row_slice(&[25.0, f64::INFINITY]),
            )
            .unwrap(),
            one_at_a_time_box_for_json(),
        ]);
        let text = serde_json::to_string(&set).unwrap();
        let back: ConstraintSet = serde_json::from_str(&text).unwrap();
        assert_eq!(set, back);

        // scale nodes are accepted on input and rewritten away
        let text = r#"{"kind":"scale","diag":[2.0,1.0],"inner":{"kind":"cc"}}"#;
        let parsed: ConstraintSet = serde_json::from_str(text).unwrap();
        assert_eq!(parsed, ConstraintSet::Complementarity);
    }

    fn one_at_a_time_box_for_json() -> ConstraintSet {
        ConstraintSet::union_of_convex(vec![
            ConstraintSet::product(vec![
                ConstraintSet::symmetric_box(1, 25.0),
                ConstraintSet::zero(1),
            ]),
            ConstraintSet::product(vec![
                ConstraintSet::zero(1),
                ConstraintSet::symmetric_box(1, 25.0),
            ]),
        ])
        .unwrap()
    }
}
