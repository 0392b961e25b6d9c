//! Fisher information, Cramér-Rao and Bhattacharyya bounds for discrete
//! models, the estimators saturating them, and estimator existence.
//!
//! For an order-`n` bound the conditions on an unbiased estimator `θ̃` are
//! `Σ P θ̃ = θ0`, `Σ ∂P θ̃ = 1` and `Σ ∂^l P θ̃ = 0` for `2 ≤ l ≤ n`. The
//! bound is the supremum of `(aᵀλ)² / aᵀCa` over coefficient vectors `a`,
//! with `λ = (1, 0, …, 0)` and `C` the Gram matrix of the score rows
//! `∂^k P / P` in the `P`-weighted inner product. It is finite exactly when
//! the conditions admit a solution.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, GramBound, SystemOutcome};
use crate::model::DerivativeStack;

/// Relative tolerance used to decide that two bound values coincide.
pub const EFFECTIVE_ORDER_TOL: f64 = 1e-9;

/// The order-`n` Bhattacharyya matrix `C[k][l] = Σ ∂^kP ∂^lP / P`.
#[derive(Debug, Clone, PartialEq)]
pub struct BhattMatrix {
    theta0: f64,
    entries: DMatrix<f64>,
}

impl BhattMatrix {
    pub fn new(theta0: f64, entries: DMatrix<f64>) -> Self {
        assert!(entries.is_square() && entries.nrows() >= 1);
        Self { theta0, entries }
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `C[k][l]` with 1-based indices.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[(k - 1, l - 1)]
    }

    /// Leading `m × m` block, i.e. the matrix of order `m`.
    pub fn leading(&self, m: usize) -> Self {
        Self {
            theta0: self.theta0,
            entries: self.entries.view((0, 0), (m, m)).into_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundStatus {
    Finite(f64),
    /// Null vector `a′` of the Gram matrix with `a′ᵀλ = 1`.
    Divergent(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub order: usize,
    pub status: BoundStatus,
    /// Maximizing coefficient vector `a`, present when finite.
    pub maximizer: Option<DVector<f64>>,
    /// Smallest order whose bound has the same value (or is also divergent).
    pub effective_order: usize,
}

impl BoundReport {
    pub fn value(&self) -> Option<f64> {
        match self.status {
            BoundStatus::Finite(v) => Some(v),
            BoundStatus::Divergent(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.status, BoundStatus::Finite(_))
    }
}

/// Shared Gram-matrix bound used by both the classical and quantum
/// hierarchies.
pub(crate) fn gram_report(gram: &DMatrix<f64>, tol_rank: f64) -> BoundReport {
    let order = gram.nrows();
    let top = linalg::gram_bound(gram, tol_rank);
    let same_as = |m: usize| -> bool {
        let sub = gram.view((0, 0), (m, m)).into_owned();
        match (&top, linalg::gram_bound(&sub, tol_rank)) {
            (GramBound::Finite { value: a, .. }, GramBound::Finite { value: b, .. }) => {
                (a - b).abs() <= EFFECTIVE_ORDER_TOL * a.abs().max(b.abs())
            }
            (GramBound::Divergent { .. }, GramBound::Divergent { .. }) => true,
            _ => false,
        }
    };
    let effective_order = (1..order).find(|&m| same_as(m)).unwrap_or(order);
    match top {
        GramBound::Finite { value, maximizer } => BoundReport {
            order,
            status: BoundStatus::Finite(value),
            maximizer: Some(maximizer),
            effective_order,
        },
        GramBound::Divergent { certificate } => BoundReport {
            order,
            status: BoundStatus::Divergent(certificate),
            maximizer: None,
            effective_order,
        },
    }
}

pub fn fisher_information(stack: &DerivativeStack) -> f64 {
    assert!(stack.order() >= 1, "Fisher information needs the score row");
    let t = stack.table();
    (0..stack.len())
        .map(|i| t[(1, i)] * t[(1, i)] / t[(0, i)])
        .sum()
}

/// Cramér-Rao bound `1/F_C`: the order-1 Bhattacharyya bound.
pub fn cramer_rao(stack: &DerivativeStack, tol_rank: f64) -> BoundReport {
    bhatt_bound(&bhatt_matrix(stack, 1), tol_rank)
}

pub fn bhatt_matrix(stack: &DerivativeStack, n: usize) -> BhattMatrix {
    assert!(
        n >= 1 && n <= stack.order(),
        "order {n} outside 1..={}",
        stack.order()
    );
    let t = stack.table();
    let cols = stack.len();
    let mut c = DMatrix::zeros(n, n);
    for k in 1..=n {
        for l in k..=n {
            let v: f64 = (0..cols).map(|i| t[(k, i)] * t[(l, i)] / t[(0, i)]).sum();
            c[(k - 1, l - 1)] = v;
            c[(l - 1, k - 1)] = v;
        }
    }
    BhattMatrix::new(stack.theta0(), c)
}

pub fn bhatt_bound(c: &BhattMatrix, tol_rank: f64) -> BoundReport {
    gram_report(c.entries(), tol_rank)
}

/// Bound reports for every order `1..=max_order` of `stack`.
pub fn bound_hierarchy(stack: &DerivativeStack, max_order: usize, tol_rank: f64) -> Vec<BoundReport> {
    let full = bhatt_matrix(stack, max_order);
    (1..=max_order)
        .map(|m| bhatt_bound(&full.leading(m), tol_rank))
        .collect()
}

/// An estimator as a value table over the kept support of a stack.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorTable {
    pub theta0: f64,
    /// `θ̃_i` per kept support point.
    pub values: Vec<f64>,
    /// Model support indices of the kept points.
    pub kept_indices: Vec<usize>,
    pub satisfied_order: usize,
}

impl EstimatorTable {
    /// Values over a full model support of `len` points. Points pruned away
    /// at `θ0` carry probability ≤ `p_min` there and are assigned `θ0`.
    pub fn expand(&self, len: usize) -> crate::Result<Vec<f64>> {
        let mut full = vec![self.theta0; len];
        for (&idx, &v) in self.kept_indices.iter().zip(&self.values) {
            let slot = full.get_mut(idx).ok_or_else(|| {
                crate::Error::SupportMismatch(format!(
                    "estimator refers to support index {idx}, model has {len} points"
                ))
            })?;
            *slot = v;
        }
        Ok(full)
    }

    /// Residuals of the unbiasedness conditions, evaluated through the stack
    /// rows: `[Σ Pθ̃ − θ0, Σ ∂Pθ̃ − 1, Σ ∂²Pθ̃, …]` up to `order`.
    pub fn condition_residuals(&self, stack: &DerivativeStack, order: usize) -> Vec<f64> {
        let t = stack.table();
        (0..=order)
            .map(|l| {
                let mean: f64 = self
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| t[(l, i)] * v)
                    .sum();
                match l {
                    0 => mean - self.theta0,
                    1 => mean - 1.0,
                    _ => mean,
                }
            })
            .collect()
    }

    /// Variance `Σ P (θ̃ − θ0)²` under the stack probabilities.
    pub fn variance_at_theta0(&self, stack: &DerivativeStack) -> f64 {
        let p = stack.probabilities();
        let mean: f64 = p.iter().zip(&self.values).map(|(p, v)| p * v).sum();
        p.iter()
            .zip(&self.values)
            .map(|(p, v)| p * (v - mean) * (v - mean))
            .sum()
    }
}

/// Estimator saturating the order-`n` bound:
/// `θ̃_i = θ0 + Σ_k a_k ∂^kP_i / P_i` with `a = C⁺λ`.
pub fn bhatt_estimator(
    stack: &DerivativeStack,
    c: &BhattMatrix,
    tol_rank: f64,
) -> crate::Result<EstimatorTable> {
    let report = bhatt_bound(c, tol_rank);
    let a = report
        .maximizer
        .ok_or(crate::Error::DivergentBound(c.order()))?;
    let t = stack.table();
    let theta0 = stack.theta0();
    let values = (0..stack.len())
        .map(|i| {
            let score: f64 = (1..=c.order()).map(|k| a[k - 1] * t[(k, i)]).sum();
            theta0 + score / t[(0, i)]
        })
        .collect();
    Ok(EstimatorTable {
        theta0,
        values,
        kept_indices: stack.kept_indices().to_vec(),
        satisfied_order: c.order(),
    })
}

/// Linear system `A θ̃ = b` of the order-`n` unbiasedness conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSystem {
    pub theta0: f64,
    pub order: usize,
    /// `(n+1) × N`, rows `P, ∂P, …, ∂ⁿP` over the kept support.
    pub a: DMatrix<f64>,
    /// `(θ0, 1, 0, …, 0)`.
    pub b: DVector<f64>,
    /// `P_{θ0}` per kept point; the estimator variance is the `P`-weighted
    /// squared norm.
    pub weights: Vec<f64>,
    pub kept_indices: Vec<usize>,
}

pub fn existence_system(stack: &DerivativeStack, n: usize) -> EstimatorSystem {
    assert!(n <= stack.order(), "stack holds order {}, need {n}", stack.order());
    let a = stack.table().rows(0, n + 1).into_owned();
    let mut b = DVector::zeros(n + 1);
    b[0] = stack.theta0();
    if n >= 1 {
        b[1] = 1.0;
    }
    EstimatorSystem {
        theta0: stack.theta0(),
        order: n,
        a,
        b,
        weights: stack.probabilities(),
        kept_indices: stack.kept_indices().to_vec(),
    }
}

/// Inconsistency witness: `w` with `wᵀA = 0` and `wᵀb = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub vector: DVector<f64>,
    pub rank_a: usize,
    pub rank_augmented: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSolution<T> {
    Solved { estimator: T, residual: f64 },
    NoSolution(Witness),
}

impl<T> EstimatorSolution<T> {
    pub fn is_solved(&self) -> bool {
        matches!(self, EstimatorSolution::Solved { .. })
    }
}

/// Solves a weighted system `A x = b` for the solution of least
/// `Σ w_i x_i²`. Unknowns with weight at or below `tol_weight` are left
/// unweighted. The rank decisions use `sqrt(tol_rank)` on the weighted
/// system, matching `tol_rank` on its Gram matrix.
pub(crate) fn solve_weighted(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    weights: &[f64],
    tol_rank: f64,
    tol_weight: f64,
) -> EstimatorSolution<DVector<f64>> {
    let root: Vec<f64> = weights
        .iter()
        .map(|&w| if w > tol_weight { w.sqrt() } else { 1.0 })
        .collect();
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= root[j];
    }
    let test = linalg::rouche_frobenius(&scaled, b, tol_rank.sqrt());
    match test.outcome {
        SystemOutcome::Solved(u) => {
            let x = DVector::from_iterator(u.len(), u.iter().zip(&root).map(|(u, r)| u / r));
            let residual = (a * &x - b).norm();
            EstimatorSolution::Solved {
                estimator: x,
                residual,
            }
        }
        SystemOutcome::Inconsistent(w) => EstimatorSolution::NoSolution(Witness {
            vector: w,
            rank_a: test.rank_a,
            rank_augmented: test.rank_augmented,
        }),
    }
}

/// Rouché-Frobenius test on the existence system. On success returns the
/// solution of least variance at `θ0`, which is the bound-saturating
/// estimator whenever the bound is finite.
pub fn solve_estimator(
    system: &EstimatorSystem,
    tol_rank: f64,
) -> EstimatorSolution<EstimatorTable> {
    match solve_weighted(&system.a, &system.b, &system.weights, tol_rank, 0.0) {
        EstimatorSolution::Solved { estimator, residual } => EstimatorSolution::Solved {
            estimator: EstimatorTable {
                theta0: system.theta0,
                values: estimator.iter().copied().collect(),
                kept_indices: system.kept_indices.clone(),
                satisfied_order: system.order,
            },
            residual,
        },
        EstimatorSolution::NoSolution(w) => EstimatorSolution::NoSolution(w),
    }
}

/// Highest order at which a derivative row adds a new direction to the
/// score rows `∂^kP/√P`, `k = 1..=stack.order()`. Every higher order is
/// either divergent or repeats the bound of this order. For a normalized
/// family with consecutive independent rows this is at most `N − 1`.
pub fn max_nontrivial_order(stack: &DerivativeStack, tol_rank: f64) -> usize {
    assert!(stack.order() >= 1);
    let t = stack.table();
    let rows = DMatrix::from_fn(stack.order(), stack.len(), |k, i| {
        t[(k + 1, i)] / t[(0, i)].sqrt()
    });
    linalg::last_rank_increase(&rows, tol_rank.sqrt()).0
}
