//! Quantum counterparts of the classical bounds: symmetric logarithmic
//! derivatives, quantum Fisher information, the Q matrix, quantum
//! Bhattacharyya bounds, Hermitian estimators and the SLD measurement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::classical::{gram_report, solve_weighted, BoundReport, EstimatorSolution};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{default_step, finite_difference_derivative, DerivativeStack, Domain};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-10;
/// Largest matrix-element weight a derivative may carry on pairs outside the
/// support of ρ.
pub const OFF_SUPPORT_TOL: f64 = 1e-8;

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Density matrix `ρ_{θ0}` and its derivatives `d^kρ`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityStack {
    theta0: f64,
    rho: CMatrix,
    derivs: Vec<CMatrix>,
}

impl DensityStack {
    /// Validates Hermiticity (1e-12), unit trace and non-negative spectrum
    /// (1e-10) of `ρ`, and Hermitian traceless derivatives.
    pub fn new(theta0: f64, rho: CMatrix, derivs: Vec<CMatrix>) -> Result<Self> {
        let n = rho.nrows();
        if !rho.is_square() || n == 0 {
            return Err(Error::InvalidInput("rho must be a non-empty square matrix".into()));
        }
        if let Some(d) = derivs.iter().find(|d| d.shape() != (n, n)) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: d.nrows(),
            });
        }
        let defect = hermitian_defect(&rho);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("rho is not Hermitian (defect {defect:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!("rho has trace {tr}")));
        }
        let min_eig = rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_TOL {
            return Err(Error::InvalidInput(format!("rho has eigenvalue {min_eig:e}")));
        }
        for (k, d) in derivs.iter().enumerate() {
            let defect = hermitian_defect(d);
            if defect > HERMITIAN_TOL {
                return Err(Error::InvalidInput(format!(
                    "derivative {} is not Hermitian (defect {defect:e})",
                    k + 1
                )));
            }
            let tr = d.trace();
            if tr.norm() > TRACE_TOL {
                return Err(Error::InvalidInput(format!("derivative {} has trace {tr}", k + 1)));
            }
        }
        Ok(Self { theta0, rho, derivs })
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn order(&self) -> usize {
        self.derivs.len()
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// `d^kρ` for `k ≥ 1`.
    pub fn deriv(&self, k: usize) -> &CMatrix {
        &self.derivs[k - 1]
    }

    pub fn derivs(&self) -> &[CMatrix] {
        &self.derivs
    }

    /// `U ρ U†` and `U d^kρ U†`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let ud = u.adjoint();
        let rho = hermitize(&(u * &self.rho * &ud));
        let derivs = self.derivs.iter().map(|d| hermitize(&(u * d * &ud))).collect();
        Self::new(self.theta0, rho, derivs)
    }
}

/// A parametric family of density matrices.
pub trait DensityFamily: Send + Sync {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::REAL_LINE
    }

    fn rho(&self, theta: f64) -> CMatrix;

    /// Analytic `d^kρ`, if available.
    fn derivative(&self, _theta: f64, _k: usize) -> Option<CMatrix> {
        None
    }
}

/// Stack of `family` at `theta0` up to order `n`; missing analytic
/// derivatives fall back to entrywise finite differences, re-Hermitized.
pub fn density_stack(family: &dyn DensityFamily, theta0: f64, n: usize) -> Result<DensityStack> {
    family.domain().check(theta0)?;
    let rho = family.rho(theta0);
    let dim = family.dim();
    let mut derivs = Vec::with_capacity(n);
    for k in 1..=n {
        let d = match family.derivative(theta0, k) {
            Some(d) => d,
            None => {
                let h = default_step(theta0, k);
                let mut m = CMatrix::zeros(dim, dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let re = finite_difference_derivative(
                            |t| family.rho(t)[(i, j)].re,
                            theta0,
                            k,
                            h,
                            family.domain(),
                        )?;
                        let im = finite_difference_derivative(
                            |t| family.rho(t)[(i, j)].im,
                            theta0,
                            k,
                            h,
                            family.domain(),
                        )?;
                        m[(i, j)] = Complex64::new(re, im);
                    }
                }
                hermitize(&m)
            }
        };
        derivs.push(d);
    }
    DensityStack::new(theta0, rho, derivs)
}

/// Eigendecomposition of ρ reused across SLD solves.
#[derive(Debug, Clone)]
pub struct SldSolver {
    eigenvalues: Vec<f64>,
    basis: CMatrix,
    tol_eig: f64,
}

impl SldSolver {
    pub fn new(rho: &CMatrix, tol_eig: f64) -> Self {
        let eig = hermitize(rho).symmetric_eigen();
        Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            basis: eig.eigenvectors,
            tol_eig,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors of ρ as columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Number of eigenvalues above `tol_eig`.
    pub fn support_rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&p| p > self.tol_eig).count()
    }

    fn pair_supported(&self, i: usize, j: usize) -> bool {
        self.eigenvalues[i] + self.eigenvalues[j] > self.tol_eig
    }

    /// `drho` expressed in the eigenbasis of ρ.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.basis.adjoint() * m * &self.basis
    }

    /// Solves `(ρL + Lρ)/2 = drho` on the support of ρ; `order` only labels
    /// the error.
    pub fn solve(&self, drho: &CMatrix, order: usize) -> Result<CMatrix> {
        let d = self.to_eigenbasis(drho);
        let n = d.nrows();
        let mut l = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if self.pair_supported(i, j) {
                    let s = self.eigenvalues[i] + self.eigenvalues[j];
                    l[(i, j)] = d[(i, j)] * (2.0 / s);
                } else if d[(i, j)].norm() >= OFF_SUPPORT_TOL {
                    return Err(Error::Support {
                        order,
                        weight: d[(i, j)].norm(),
                    });
                }
            }
        }
        Ok(hermitize(&(&self.basis * l * self.basis.adjoint())))
    }
}

/// Symmetric logarithmic derivative of `drho` at `rho`.
pub fn sld(rho: &CMatrix, drho: &CMatrix, tol_eig: f64) -> Result<CMatrix> {
    SldSolver::new(rho, tol_eig).solve(drho, 1)
}

/// Generalized SLDs `L_l` for `l = 1..=n`.
#[derive(Debug, Clone)]
pub struct SldSet {
    pub operators: Vec<CMatrix>,
    pub support_rank: usize,
}

pub fn sld_set(stack: &DensityStack, n: usize, tol_eig: f64) -> Result<SldSet> {
    let solver = SldSolver::new(stack.rho(), tol_eig);
    let operators = (1..=n)
        .map(|l| solver.solve(stack.deriv(l), l))
        .collect::<Result<Vec<_>>>()?;
    Ok(SldSet {
        operators,
        support_rank: solver.support_rank(),
    })
}

/// `‖(ρL + Lρ)/2 − drho‖_F`.
pub fn sld_residual(rho: &CMatrix, l: &CMatrix, drho: &CMatrix) -> f64 {
    ((rho * l + l * rho) * Complex64::new(0.5, 0.0) - drho).norm()
}

/// Quantum Fisher information `Tr[ρL²]`.
pub fn qfi(rho: &CMatrix, l: &CMatrix) -> f64 {
    let v = trace_product(rho, &(l * l));
    debug_assert!(v.im.abs() <= 1e-10 * v.re.abs().max(1.0));
    v.re
}

/// `Q[k][l] = Tr(d^kρ L_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    theta0: f64,
    entries: DMatrix<f64>,
}

impl QMatrix {
    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// 1-based access.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[(k - 1, l - 1)]
    }

    pub fn leading(&self, m: usize) -> Self {
        Self {
            theta0: self.theta0,
            entries: self.entries.view((0, 0), (m, m)).into_owned(),
        }
    }
}

pub fn q_matrix(stack: &DensityStack, n: usize, tol_eig: f64) -> Result<QMatrix> {
    if n < 1 || n > stack.order() {
        return Err(Error::InvalidInput(format!(
            "Q matrix order {n} outside 1..={}",
            stack.order()
        )));
    }
    let slds = sld_set(stack, n, tol_eig)?;
    let mut q = DMatrix::zeros(n, n);
    for k in 1..=n {
        for l in 1..=n {
            let v = trace_product(stack.deriv(k), &slds.operators[l - 1]);
            if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "Q[{k}][{l}] has imaginary part {:e}",
                    v.im
                )));
            }
            q[(k - 1, l - 1)] = v.re;
        }
    }
    Ok(QMatrix {
        theta0: stack.theta0(),
        entries: q,
    })
}

pub fn q_bhatt_bound(q: &QMatrix, tol_rank: f64) -> BoundReport {
    gram_report(q.entries(), tol_rank)
}

/// Hermitian operator estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEstimator {
    pub theta0: f64,
    pub operator: CMatrix,
    pub satisfied_order: usize,
}

impl HermitianEstimator {
    /// `[Tr ρΘ − θ0, Tr d¹ρΘ − 1, Tr d^lρΘ, …]` up to `order`.
    pub fn condition_residuals(&self, stack: &DensityStack, order: usize) -> Vec<f64> {
        (0..=order)
            .map(|l| {
                let m = if l == 0 { stack.rho() } else { stack.deriv(l) };
                let v = trace_product(m, &self.operator).re;
                match l {
                    0 => v - self.theta0,
                    1 => v - 1.0,
                    _ => v,
                }
            })
            .collect()
    }

    /// `Tr[ρΘ²] − Tr[ρΘ]²` at the stack's ρ.
    pub fn variance_at(&self, rho: &CMatrix) -> f64 {
        let mean = trace_product(rho, &self.operator).re;
        trace_product(rho, &(&self.operator * &self.operator)).re - mean * mean
    }
}

/// Real linear system for a Hermitian `Θ` with `Tr[ρΘ] = θ0`,
/// `Tr[d¹ρΘ] = 1`, `Tr[d^lρΘ] = 0`.
///
/// Unknowns are the `N²` real parameters of `Θ` in the eigenbasis of ρ:
/// the `N` diagonal entries, then `(Re Θ_ij, Im Θ_ij)` for `i < j`.
#[derive(Debug, Clone)]
pub struct HermitianSystem {
    pub theta0: f64,
    pub order: usize,
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Weight of each unknown in `Tr[ρΘ²]`.
    pub weights: Vec<f64>,
    pub basis: CMatrix,
    pub tol_eig: f64,
}

impl HermitianSystem {
    /// Count of independent complex entries of a Hermitian matrix,
    /// `N(N+1)/2`.
    pub fn complex_unknowns(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn real_unknowns(&self) -> usize {
        self.dim * self.dim
    }

    fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..dim).flat_map(move |i| (i + 1..dim).map(move |j| (i, j)))
    }

    /// Coefficient row of `Tr[MΘ]` for Hermitian `M` in the eigenbasis.
    fn constraint_row(m: &CMatrix) -> Vec<f64> {
        let dim = m.nrows();
        let mut row: Vec<f64> = (0..dim).map(|i| m[(i, i)].re).collect();
        for (i, j) in Self::pairs(dim) {
            row.push(2.0 * m[(i, j)].re);
            row.push(2.0 * m[(i, j)].im);
        }
        row
    }

    /// Hermitian matrix (original basis) from the real parameter vector.
    pub fn operator_from(&self, x: &DVector<f64>) -> CMatrix {
        let dim = self.dim;
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(x[i], 0.0);
        }
        for (p, (i, j)) in Self::pairs(dim).enumerate() {
            let z = Complex64::new(x[dim + 2 * p], x[dim + 2 * p + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        hermitize(&(&self.basis * m * self.basis.adjoint()))
    }
}

pub fn hermitian_existence_system(stack: &DensityStack, n: usize, tol_eig: f64) -> HermitianSystem {
    assert!(n <= stack.order(), "stack holds order {}, need {n}", stack.order());
    let dim = stack.dim();
    let solver = SldSolver::new(stack.rho(), tol_eig);
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(HermitianSystem::constraint_row(&solver.to_eigenbasis(stack.rho())));
    for l in 1..=n {
        rows.push(HermitianSystem::constraint_row(&solver.to_eigenbasis(stack.deriv(l))));
    }
    let a = DMatrix::from_fn(n + 1, dim * dim, |r, c| rows[r][c]);
    let mut b = DVector::zeros(n + 1);
    b[0] = stack.theta0();
    if n >= 1 {
        b[1] = 1.0;
    }
    let p = solver.eigenvalues();
    let mut weights: Vec<f64> = p.iter().map(|&v| v.max(0.0)).collect();
    for (i, j) in HermitianSystem::pairs(dim) {
        let w = (p[i] + p[j]).max(0.0);
        weights.push(w);
        weights.push(w);
    }
    HermitianSystem {
        theta0: stack.theta0(),
        order: n,
        dim,
        a,
        b,
        weights,
        basis: solver.basis().clone(),
        tol_eig,
    }
}

/// Rouché-Frobenius test on the Hermitian system; on success returns the
/// solution of least `Tr[ρΘ²]`, i.e. `θ0·I + Σ a_l L_l` with `a = Q⁺λ` when
/// ρ is full rank.
pub fn solve_quantum_estimator(
    system: &HermitianSystem,
    tol_rank: f64,
) -> EstimatorSolution<HermitianEstimator> {
    match solve_weighted(&system.a, &system.b, &system.weights, tol_rank, system.tol_eig) {
        EstimatorSolution::Solved { estimator, residual } => EstimatorSolution::Solved {
            estimator: HermitianEstimator {
                theta0: system.theta0,
                operator: system.operator_from(&estimator),
                satisfied_order: system.order,
            },
            residual,
        },
        EstimatorSolution::NoSolution(w) => EstimatorSolution::NoSolution(w),
    }
}

/// Eigenprojectors of `l`, grouping eigenvalues that agree within
/// `1e-9 × spectral radius`, in increasing eigenvalue order.
pub fn optimal_measurement(l: &CMatrix) -> Vec<CMatrix> {
    let eig = hermitize(l).symmetric_eigen();
    let n = l.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let radius = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * radius;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) if (eig.eigenvalues[idx] - eig.eigenvalues[*g.last().unwrap()]).abs() <= tol => {
                g.push(idx)
            }
            _ => groups.push(vec![idx]),
        }
    }
    groups
        .iter()
        .map(|g| {
            let mut p = CMatrix::zeros(n, n);
            for &i in g {
                let v = eig.eigenvectors.column(i);
                p += &v * v.adjoint();
            }
            p
        })
        .collect()
}

/// Classical derivative stack of the outcome distribution
/// `Tr[Π_i ρ_θ]` at `θ0`, unpruned.
pub fn induced_stack(projectors: &[CMatrix], stack: &DensityStack) -> Result<DerivativeStack> {
    let mut rows = Vec::with_capacity(stack.order() + 1);
    rows.push(projectors.iter().map(|p| trace_product(p, stack.rho()).re).collect());
    for k in 1..=stack.order() {
        rows.push(
            projectors
                .iter()
                .map(|p| trace_product(p, stack.deriv(k)).re)
                .collect(),
        );
    }
    let labels = (0..projectors.len()).map(|i| format!("outcome{i}")).collect();
    DerivativeStack::from_rows(stack.theta0(), &rows, labels)
}

/// Derivative-span analysis of a density stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantumOrderReport {
    /// Highest order whose derivative adds a new direction; higher orders
    /// are divergent or repeat this order's bound.
    pub order: usize,
    /// Numerical rank of `{d¹ρ, …, dⁿρ}` as real vectors.
    pub span_rank: usize,
    /// `N(N+1)/2 − 1`, the count based on complex upper-triangle unknowns.
    pub hermitian_cap: usize,
    /// `N²`, the real dimension of Hermitian-matrix space.
    pub real_dimension: usize,
}

pub fn q_max_nontrivial_order(stack: &DensityStack, tol_rank: f64) -> QuantumOrderReport {
    let dim = stack.dim();
    let sqrt2 = std::f64::consts::SQRT_2;
    let rows: Vec<Vec<f64>> = stack
        .derivs()
        .iter()
        .map(|d| {
            let mut v: Vec<f64> = (0..dim).map(|i| d[(i, i)].re).collect();
            for i in 0..dim {
                for j in i + 1..dim {
                    v.push(sqrt2 * d[(i, j)].re);
                    v.push(sqrt2 * d[(i, j)].im);
                }
            }
            v
        })
        .collect();
    let (order, span_rank) = if rows.is_empty() {
        (0, 0)
    } else {
        let m = DMatrix::from_fn(rows.len(), dim * dim, |r, c| rows[r][c]);
        linalg::last_rank_increase(&m, tol_rank.sqrt())
    };
    QuantumOrderReport {
        order,
        span_rank,
        hermitian_cap: dim * (dim + 1) / 2 - 1,
        real_dimension: dim * dim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
    }

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn sld_of_maximally_mixed_qubit() {
        let rho = real_diag(&[0.5, 0.5]);
        let l = sld(&rho, &(sigma_x() * c(0.5, 0.0)), 1e-12).unwrap();
        assert!((l - sigma_x()).norm() < 1e-14);
    }

    #[test]
    fn sld_diagonal() {
        let p = 0.3;
        let rho = real_diag(&[p, 1.0 - p]);
        let drho = real_diag(&[1.0, -1.0]);
        let l = sld(&rho, &drho, 1e-12).unwrap();
        assert!((l.clone() - real_diag(&[1.0 / p, -1.0 / (1.0 - p)])).norm() < 1e-12);
        assert_relative_eq!(qfi(&rho, &l), 1.0 / p + 1.0 / (1.0 - p), max_relative = 1e-13);
    }

    #[test]
    fn sld_rejects_off_support_derivative() {
        let rho = real_diag(&[1.0, 0.0]);
        let drho = real_diag(&[0.0, 0.0]) + real_diag(&[0.0, 1e-3]);
        assert!(matches!(sld(&rho, &drho, 1e-12), Err(Error::Support { .. })));
        // coherence between support and kernel is fine
        let l = sld(&rho, &(sigma_x() * c(0.5, 0.0)), 1e-12).unwrap();
        assert!(sld_residual(&rho, &l, &(sigma_x() * c(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn measurement_projectors() {
        let sz = real_diag(&[1.0, -1.0]);
        let ps = optimal_measurement(&sz);
        assert_eq!(ps.len(), 2);
        assert!((ps[0].clone() - real_diag(&[0.0, 1.0])).norm() < 1e-14);
        assert!((ps[1].clone() - real_diag(&[1.0, 0.0])).norm() < 1e-14);

        let ps = optimal_measurement(&sigma_x());
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        assert!((ps[1].clone() - plus).norm() < 1e-12);
        let sum = &ps[0] + &ps[1];
        assert!((sum - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn degenerate_eigenvalues_grouped() {
        let ps = optimal_measurement(&real_diag(&[1.0, 1.0, -2.0]));
        assert_eq!(ps.len(), 2);
        assert!((ps[1].trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stack_validation() {
        assert!(DensityStack::new(0.0, real_diag(&[0.5, 0.6]), vec![]).is_err());
        assert!(DensityStack::new(0.0, real_diag(&[1.2, -0.2]), vec![]).is_err());
        assert!(DensityStack::new(0.0, real_diag(&[0.5, 0.5]), vec![real_diag(&[1.0, 0.0])]).is_err());
        assert!(DensityStack::new(0.0, real_diag(&[0.5, 0.5]), vec![real_diag(&[1.0, -1.0])]).is_ok());
    }

    #[test]
    fn order_zero_estimator_is_scaled_identity() {
        let stack = DensityStack::new(0.7, real_diag(&[0.2, 0.3, 0.5]), vec![]).unwrap();
        let sys = hermitian_existence_system(&stack, 0, 1e-12);
        assert_eq!(sys.real_unknowns(), 9);
        assert_eq!(sys.complex_unknowns(), 6);
        match solve_quantum_estimator(&sys, 1e-10) {
            EstimatorSolution::Solved { estimator, .. } => {
                let want = CMatrix::identity(3, 3) * c(0.7, 0.0);
                assert!((estimator.operator - want).norm() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_derivative_has_no_estimator() {
        let stack =
            DensityStack::new(0.0, real_diag(&[0.5, 0.5]), vec![CMatrix::zeros(2, 2)]).unwrap();
        let sys = hermitian_existence_system(&stack, 1, 1e-12);
        assert!(!solve_quantum_estimator(&sys, 1e-10).is_solved());
        assert!(!q_bhatt_bound(&q_matrix(&stack, 1, 1e-12).unwrap(), 1e-10).is_finite());
        assert_eq!(q_max_nontrivial_order(&stack, 1e-10).order, 0);
    }
}
