//! Rank-revealing dense linear algebra shared by the classical and quantum
//! pipelines: SVD-based numerical rank, minimum-norm solves, range tests on
//! Gram matrices and Rouché-Frobenius consistency checks.

use nalgebra::{DMatrix, DVector};

const SVD_MAX_ITER: usize = 100_000;

/// Thin SVD with a numerical rank fixed at construction.
#[derive(Debug, Clone)]
pub struct RankedSvd {
    u: DMatrix<f64>,
    singular: DVector<f64>,
    v_t: DMatrix<f64>,
    threshold: f64,
    rank: usize,
}

impl RankedSvd {
    /// Singular values at or below `tol_rel * sigma_max` count as zero.
    pub fn new(m: &DMatrix<f64>, tol_rel: f64) -> Self {
        let (rows, cols) = m.shape();
        if rows == 0 || cols == 0 {
            return Self {
                u: DMatrix::zeros(rows, 0),
                singular: DVector::zeros(0),
                v_t: DMatrix::zeros(0, cols),
                threshold: 0.0,
                rank: 0,
            };
        }
        let svd = m
            .clone()
            .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
            .unwrap_or_else(|| m.clone().svd(true, true));
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let singular = svd.singular_values;
        let sigma_max = singular.iter().copied().fold(0.0, f64::max);
        let threshold = tol_rel * sigma_max;
        let rank = if sigma_max > 0.0 {
            singular.iter().filter(|&&s| s > threshold).count()
        } else {
            0
        };
        Self {
            u,
            singular,
            v_t,
            threshold,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular.iter().copied().fold(0.0, f64::max)
    }

    fn kept(&self, i: usize) -> bool {
        self.singular[i] > self.threshold && self.singular[i] > 0.0
    }

    /// Minimum-norm least-squares solution `V Σ⁺ Uᵀ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.v_t.ncols());
        for i in 0..self.singular.len() {
            if !self.kept(i) {
                continue;
            }
            let coef = self.u.column(i).dot(b) / self.singular[i];
            x.axpy(coef, &self.v_t.row(i).transpose(), 1.0);
        }
        x
    }

    /// Component of `b` orthogonal to the numerical column space.
    pub fn range_residual(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut r = b.clone();
        for i in 0..self.singular.len() {
            if self.kept(i) {
                let c = self.u.column(i).dot(b);
                r.axpy(-c, &self.u.column(i).into_owned(), 1.0);
            }
        }
        r
    }

    /// Projection of `x` onto the numerical null space (right singular
    /// vectors with zero singular value, plus the complement of the thin SVD).
    pub fn null_projection(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut p = x.clone();
        for i in 0..self.singular.len() {
            if self.kept(i) {
                let row = self.v_t.row(i).transpose();
                let c = row.dot(x);
                p.axpy(-c, &row, 1.0);
            }
        }
        p
    }
}

pub fn numerical_rank(m: &DMatrix<f64>, tol_rel: f64) -> usize {
    RankedSvd::new(m, tol_rel).rank()
}

/// Scales each nonzero row to unit norm; zero rows are left as they are.
/// Returns the scaled matrix and the per-row divisors.
pub fn equilibrate_rows(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let scales = DVector::from_iterator(
        m.nrows(),
        m.row_iter().map(|r| r.norm()).map(|n| if n > 0.0 { n } else { 1.0 }),
    );
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row /= scales[i];
    }
    (out, scales)
}

/// Outcome of maximizing `(aᵀλ)² / aᵀGa` for a PSD Gram matrix `G` and
/// `λ = e₁`.
#[derive(Debug, Clone, PartialEq)]
pub enum GramBound {
    /// `λ` lies in the range of `G`: the supremum is `λᵀG⁺λ`, attained at
    /// `maximizer` (which satisfies `G a = λ`).
    Finite {
        value: f64,
        maximizer: DVector<f64>,
    },
    /// Null vector `a′` of `G` with `a′ᵀλ = 1`.
    Divergent { certificate: DVector<f64> },
}

/// Range test and pseudo-inverse bound for a symmetric PSD Gram matrix.
///
/// The matrix is symmetrically equilibrated by its diagonal before the SVD;
/// the supremum is invariant under that reparameterization. Directions with
/// a zero diagonal stay zero.
pub fn gram_bound(gram: &DMatrix<f64>, tol_rank: f64) -> GramBound {
    let n = gram.nrows();
    assert!(n >= 1 && gram.is_square(), "Gram matrix must be square and non-empty");
    if gram.diagonal().iter().all(|&d| d <= 0.0) {
        let mut certificate = DVector::zeros(n);
        certificate[0] = 1.0;
        return GramBound::Divergent { certificate };
    }
    let scale = DVector::from_iterator(
        n,
        gram.diagonal().iter().map(|&d| if d > 0.0 { d.sqrt() } else { 1.0 }),
    );
    let mut k = gram.clone();
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] /= scale[i] * scale[j];
        }
    }
    // symmetrize away rounding asymmetry before the SVD
    let k = (&k + k.transpose()) * 0.5;
    let svd = RankedSvd::new(&k, tol_rank);

    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let null = svd.null_projection(&e1);
    let range_tol = tol_rank.sqrt();
    if null.norm() <= range_tol {
        let b = svd.solve(&e1);
        // λ' = e₁ / s₁, so λ'ᵀK⁺λ' = (K⁺)₁₁ / s₁²
        let value = b[0] / (scale[0] * scale[0]);
        let maximizer = DVector::from_iterator(n, (0..n).map(|i| b[i] / (scale[i] * scale[0])));
        GramBound::Finite {
            value: value.max(0.0),
            maximizer,
        }
    } else {
        let mut certificate =
            DVector::from_iterator(n, (0..n).map(|i| null[i] / scale[i]));
        let lead = certificate[0];
        certificate /= lead;
        GramBound::Divergent { certificate }
    }
}

/// Result of a Rouché-Frobenius consistency test on `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyTest {
    pub rank_a: usize,
    pub rank_augmented: usize,
    pub outcome: SystemOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemOutcome {
    /// Minimum-norm solution.
    Solved(DVector<f64>),
    /// Left null vector `w` of `A` with `wᵀb = 1`.
    Inconsistent(DVector<f64>),
}

/// Decides consistency of `A x = b` by comparing the numerical ranks of `A`
/// and `[A | b]`, after scaling every equation to unit norm. Singular values
/// at or below `tol_rel * sigma_max` count as zero.
pub fn rouche_frobenius(a: &DMatrix<f64>, b: &DVector<f64>, tol_rel: f64) -> ConsistencyTest {
    assert_eq!(a.nrows(), b.len(), "system shape mismatch");
    let (scaled, scales) = equilibrate_rows(a);
    let b_scaled = b.component_div(&scales);
    let svd_a = RankedSvd::new(&scaled, tol_rel);
    let mut augmented = scaled.clone().insert_column(scaled.ncols(), 0.0);
    augmented.set_column(scaled.ncols(), &b_scaled);
    let rank_augmented = numerical_rank(&augmented, tol_rel);
    let rank_a = svd_a.rank();
    let outcome = if rank_augmented <= rank_a {
        SystemOutcome::Solved(svd_a.solve(&b_scaled))
    } else {
        let residual = svd_a.range_residual(&b_scaled);
        let norm2 = residual.norm_squared();
        // w̃ᵀ(RA) = 0 ⇒ (R w̃)ᵀ A = 0 with R = diag(1/scales)
        let witness = residual.component_div(&scales) / norm2;
        SystemOutcome::Inconsistent(witness)
    };
    ConsistencyTest {
        rank_a,
        rank_augmented,
        outcome,
    }
}

/// Largest index `m` (1-based) at which adding row `m` raises the numerical
/// rank of the leading rows. Zero when every row is negligible.
pub fn last_rank_increase(rows: &DMatrix<f64>, tol_rel: f64) -> (usize, usize) {
    let (scaled, _) = equilibrate_rows(rows);
    let mut last = 0;
    let mut prev = 0;
    for m in 1..=scaled.nrows() {
        let r = numerical_rank(&scaled.rows(0, m).into_owned(), tol_rel);
        if r > prev {
            last = m;
            prev = r;
        }
    }
    (last, prev)
}
