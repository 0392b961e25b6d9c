//! Finite-outcome parametric probability families and their derivative tables.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Open parameter interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty domain ({lo}, {hi})");
        Self { lo, hi }
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lo && theta < self.hi
    }

    pub fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain {
                theta,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// A probability family over a fixed finite support.
pub trait ProbabilityFamily: Send + Sync {
    fn support_len(&self) -> usize;

    /// Probability vector at `theta`.
    fn probabilities(&self, theta: f64) -> Vec<f64>;

    /// Analytic `k`-th derivative in `theta`, if the family provides one.
    fn derivative(&self, _theta: f64, _k: usize) -> Option<Vec<f64>> {
        None
    }
}

type ProbFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;
type DerivFn = dyn Fn(f64, usize) -> Vec<f64> + Send + Sync;

/// Family built from closures.
pub struct FnFamily {
    len: usize,
    prob: Box<ProbFn>,
    derivs: Option<Box<DerivFn>>,
}

impl FnFamily {
    pub fn new(len: usize, prob: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            len,
            prob: Box::new(prob),
            derivs: None,
        }
    }

    /// `derivs(theta, k)` must return the k-th derivative for every `k ≥ 1`.
    pub fn with_derivatives(
        mut self,
        derivs: impl Fn(f64, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.derivs = Some(Box::new(derivs));
        self
    }
}

impl ProbabilityFamily for FnFamily {
    fn support_len(&self) -> usize {
        self.len
    }

    fn probabilities(&self, theta: f64) -> Vec<f64> {
        (self.prob)(theta)
    }

    fn derivative(&self, theta: f64, k: usize) -> Option<Vec<f64>> {
        self.derivs.as_ref().map(|d| d(theta, k))
    }
}

/// A finite-outcome parametric model `θ ↦ P_θ(x_i)`.
#[derive(Clone)]
pub struct DiscreteModel {
    name: String,
    labels: Vec<String>,
    domain: Domain,
    family: Arc<dyn ProbabilityFamily>,
    /// Known normalization defect (e.g. truncated tail mass); zero for exact
    /// families.
    mass_defect: f64,
}

impl fmt::Debug for DiscreteModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteModel")
            .field("name", &self.name)
            .field("support", &self.labels.len())
            .field("domain", &self.domain)
            .field("mass_defect", &self.mass_defect)
            .finish()
    }
}

impl DiscreteModel {
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        domain: Domain,
        family: impl ProbabilityFamily + 'static,
    ) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::DegenerateModel(format!(
                "support has {} points, need at least 2",
                labels.len()
            )));
        }
        if family.support_len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: family.support_len(),
            });
        }
        Ok(Self {
            name: name.into(),
            labels,
            domain,
            family: Arc::new(family),
            mass_defect: 0.0,
        })
    }

    pub fn with_mass_defect(mut self, defect: f64) -> Self {
        self.mass_defect = defect;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.family.derivative(self.midpoint(), 1).is_some()
    }

    fn midpoint(&self) -> f64 {
        match (self.domain.lo.is_finite(), self.domain.hi.is_finite()) {
            (true, true) => 0.5 * (self.domain.lo + self.domain.hi),
            (true, false) => self.domain.lo + 1.0,
            (false, true) => self.domain.hi - 1.0,
            (false, false) => 0.0,
        }
    }

    pub fn probabilities(&self, theta: f64) -> Vec<f64> {
        self.family.probabilities(theta)
    }

    pub fn analytic_derivative(&self, theta: f64, k: usize) -> Option<Vec<f64>> {
        self.family.derivative(theta, k)
    }

    /// Checks non-negativity and normalization at `theta`; the allowed
    /// defect is `1e-10` plus the model's documented truncation defect.
    pub fn validate_at(&self, theta: f64) -> Result<()> {
        self.domain.check(theta)?;
        let p = self.probabilities(theta);
        if let Some((i, &v)) = p.iter().enumerate().find(|(_, &v)| v < 0.0 || !v.is_finite()) {
            return Err(Error::DegenerateModel(format!(
                "probability {v} at support point {} ({})",
                i, self.labels[i]
            )));
        }
        let total: f64 = p.iter().sum();
        if total > 1.0 + 1e-10 || total < 1.0 - 1e-10 - self.mass_defect {
            return Err(Error::DegenerateModel(format!(
                "probabilities sum to {total} at theta = {theta}"
            )));
        }
        Ok(())
    }
}

/// Options for [`evaluate_stack`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOptions {
    pub p_min: f64,
    /// Ignore analytic derivatives and use finite differences.
    pub force_finite_difference: bool,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        Self {
            p_min: crate::DEFAULT_P_MIN,
            force_finite_difference: false,
        }
    }
}

/// Table of `∂^k P_{θ0}(x_i)` for `k = 0..=order` over the kept support.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeStack {
    theta0: f64,
    /// `(order + 1) × N` with row 0 the probabilities.
    table: DMatrix<f64>,
    kept_indices: Vec<usize>,
    labels: Vec<String>,
    total_mass: f64,
}

impl DerivativeStack {
    /// Builds an unpruned stack from rows `[P, ∂P, …, ∂ⁿP]`.
    pub fn from_rows(theta0: f64, rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("derivative stack needs at least one row".into()));
        };
        let n_points = first.len();
        if labels.len() != n_points {
            return Err(Error::DimensionMismatch {
                expected: n_points,
                got: labels.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n_points) {
            return Err(Error::DimensionMismatch {
                expected: n_points,
                got: bad.len(),
            });
        }
        let table = DMatrix::from_fn(rows.len(), n_points, |k, i| rows[k][i]);
        let total_mass = first.iter().sum();
        Ok(Self {
            theta0,
            table,
            kept_indices: (0..n_points).collect(),
            labels,
            total_mass,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn order(&self) -> usize {
        self.table.nrows() - 1
    }

    /// Number of kept support points.
    pub fn len(&self) -> usize {
        self.table.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.table.ncols() == 0
    }

    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    /// Row `k` (`∂^k P`) over the kept support.
    pub fn row(&self, k: usize) -> Vec<f64> {
        self.table.row(k).iter().copied().collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.row(0)
    }

    pub fn kept_indices(&self) -> &[usize] {
        &self.kept_indices
    }

    /// Labels of the kept support points.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Row-0 mass before pruning.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Row-0 mass over the kept support.
    pub fn retained_mass(&self) -> f64 {
        self.table.row(0).iter().sum()
    }

    pub fn row_sum(&self, k: usize) -> f64 {
        self.table.row(k).iter().sum()
    }

    /// Keeps rows `0..=order`.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order > self.order() {
            return Err(Error::InvalidInput(format!(
                "stack holds order {}, requested {order}",
                self.order()
            )));
        }
        Ok(Self {
            table: self.table.rows(0, order + 1).into_owned(),
            ..self.clone()
        })
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            table: &self.table * c,
            total_mass: self.total_mass * c,
            ..self.clone()
        }
    }
}

/// Derivative table of `model` at `theta0` up to order `n`, pruned at
/// `opts.p_min`.
pub fn evaluate_stack(
    model: &DiscreteModel,
    theta0: f64,
    n: usize,
    opts: DerivativeOptions,
) -> Result<DerivativeStack> {
    model.domain.check(theta0)?;
    if n < 1 {
        return Err(Error::InvalidInput("derivative order must be at least 1".into()));
    }
    let len = model.len();
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(model.probabilities(theta0));
    for k in 1..=n {
        let analytic = if opts.force_finite_difference {
            None
        } else {
            model.analytic_derivative(theta0, k)
        };
        let row = match analytic {
            Some(row) => row,
            None => finite_difference_row(model, theta0, k)?,
        };
        if row.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: row.len(),
            });
        }
        rows.push(row);
    }
    let stack = DerivativeStack::from_rows(theta0, &rows, model.labels.clone())?;
    prune_support(&stack, opts.p_min)
}

/// Step used by the finite-difference fallback for derivative order `k`.
pub fn default_step(theta0: f64, k: usize) -> f64 {
    theta0.abs().max(1.0) * f64::EPSILON.powf(1.0 / (k as f64 + 2.0))
}

fn finite_difference_row(model: &DiscreteModel, theta0: f64, k: usize) -> Result<Vec<f64>> {
    let h = default_step(theta0, k);
    let domain = model.domain();
    check_stencil(theta0, k, h, domain)?;
    // every probability is needed at each stencil node, so evaluate the
    // vector-valued family once per node
    let nodes = stencil_nodes(k);
    let eval = |step: f64| -> Vec<f64> {
        let mut acc = vec![0.0; model.len()];
        for &(offset, weight) in &nodes {
            let p = model.probabilities(theta0 + offset * step);
            for (a, v) in acc.iter_mut().zip(p) {
                *a += weight * v;
            }
        }
        let denom = step.powi(k as i32);
        acc.iter_mut().for_each(|a| *a /= denom);
        acc
    };
    let coarse = eval(h);
    let fine = eval(h / 2.0);
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

/// Central-difference weights (second-order accurate) for derivative order
/// `k`, as `(offset in steps, weight)` pairs.
fn stencil_nodes(k: usize) -> Vec<(f64, f64)> {
    let weights: &[f64] = match k {
        1 => &[-0.5, 0.0, 0.5],
        2 => &[1.0, -2.0, 1.0],
        3 => &[-0.5, 1.0, 0.0, -1.0, 0.5],
        4 => &[1.0, -4.0, 6.0, -4.0, 1.0],
        5 => &[-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5],
        6 => &[1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0],
        _ => unreachable!("stencil order checked by caller"),
    };
    let half = (weights.len() / 2) as f64;
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| (i as f64 - half, w))
        .collect()
}

fn stencil_half_width(k: usize) -> f64 {
    ((k + 1) / 2) as f64
}

fn check_stencil(theta0: f64, k: usize, h: f64, domain: Domain) -> Result<()> {
    if !(1..=6).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "finite-difference order must be in 1..=6, got {k}"
        )));
    }
    let reach = stencil_half_width(k) * h;
    let (lo, hi) = (theta0 - reach, theta0 + reach);
    if lo <= domain.lo || hi >= domain.hi {
        return Err(Error::Step {
            lo,
            hi,
            domain_lo: domain.lo,
            domain_hi: domain.hi,
        });
    }
    Ok(())
}

/// Order-`k` derivative of `f` at `theta0`: second-order central stencil at
/// steps `h` and `h/2`, combined by one Richardson step.
pub fn finite_difference_derivative(
    f: impl Fn(f64) -> f64,
    theta0: f64,
    k: usize,
    h: f64,
    domain: Domain,
) -> Result<f64> {
    check_stencil(theta0, k, h, domain)?;
    let nodes = stencil_nodes(k);
    let central = |step: f64| -> f64 {
        let sum: f64 = nodes
            .iter()
            .map(|&(offset, w)| w * f(theta0 + offset * step))
            .sum();
        sum / step.powi(k as i32)
    };
    Ok((4.0 * central(h / 2.0) - central(h)) / 3.0)
}

/// Drops support points with `P_{θ0}(x_i) ≤ p_min`.
pub fn prune_support(stack: &DerivativeStack, p_min: f64) -> Result<DerivativeStack> {
    if !(p_min >= 0.0) {
        return Err(Error::InvalidInput(format!("p_min must be non-negative, got {p_min}")));
    }
    let keep: Vec<usize> = (0..stack.len())
        .filter(|&i| stack.table[(0, i)] > p_min)
        .collect();
    if keep.len() < 2 {
        return Err(Error::DegenerateModel(format!(
            "{} support points survive pruning at p_min = {p_min:e}",
            keep.len()
        )));
    }
    let table = stack.table.select_columns(keep.iter());
    Ok(DerivativeStack {
        theta0: stack.theta0,
        table,
        kept_indices: keep.iter().map(|&i| stack.kept_indices[i]).collect(),
        labels: keep.iter().map(|&i| stack.labels[i].clone()).collect(),
        total_mass: stack.total_mass,
    })
}
