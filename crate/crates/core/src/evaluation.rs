//! Bias, variance and MSE of estimators across parameter grids, the
//! bias-squared lower bound, integrated MSE gaps and CSV/summary reports.
//!
//! All expectations are exact sums over the finite support.

use std::io::Write;

use rayon::prelude::*;

use crate::classical::{BoundReport, EstimatorTable};
use crate::error::{Error, Result};
use crate::model::{finite_difference_derivative, DiscreteModel, Domain};
use crate::quantum::{CMatrix, DensityFamily, HermitianEstimator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

impl Moments {
    fn new(mean: f64, variance: f64, theta: f64) -> Self {
        let bias = mean - theta;
        Self {
            bias,
            variance,
            mse: variance + bias * bias,
        }
    }
}

/// Moments of a tabulated estimator under `P_θ`. Support points pruned at
/// `θ0` are assigned the value `θ0`.
pub fn estimator_moments(model: &DiscreteModel, est: &EstimatorTable, theta: f64) -> Result<Moments> {
    let values = est.expand(model.len())?;
    Ok(moments_of_values(&model.probabilities(theta), &values, theta))
}

fn moments_of_values(p: &[f64], values: &[f64], theta: f64) -> Moments {
    let mean: f64 = p.iter().zip(values).map(|(p, v)| p * v).sum();
    let variance: f64 = p
        .iter()
        .zip(values)
        .map(|(p, v)| p * (v - mean) * (v - mean))
        .sum();
    Moments::new(mean, variance, theta)
}

fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub fn quantum_estimator_moments(
    family: &dyn DensityFamily,
    est: &HermitianEstimator,
    theta: f64,
) -> Result<Moments> {
    let dim = family.dim();
    if est.operator.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: est.operator.nrows(),
        });
    }
    let rho = family.rho(theta);
    let mean = trace_product_re(&rho, &est.operator);
    let shifted = &est.operator - CMatrix::identity(dim, dim) * num_complex::Complex64::new(mean, 0.0);
    let variance = trace_product_re(&rho, &(&shifted * &shifted));
    Ok(Moments::new(mean, variance, theta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub estimator: String,
    pub points: Vec<CurvePoint>,
}

impl MseCurve {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }
}

/// `n` uniformly spaced points on `[lo, hi]` (a single point at `lo` when
/// `n == 1`).
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Default scan grid: 401 points on `[θ0/2, 3θ0/2]` for the interferometer,
/// otherwise on `[θ0 − 0.05, θ0 + 0.05]` pulled inside the domain.
pub fn default_grid(theta0: f64, domain: Domain, mach_zehnder: bool) -> Vec<f64> {
    const POINTS: usize = 401;
    if mach_zehnder {
        return uniform_grid(0.5 * theta0, 1.5 * theta0, POINTS);
    }
    let inset = |edge: f64, toward: f64| edge + 1e-6 * (toward - edge).signum();
    let lo = (theta0 - 0.05).max(if domain.lo.is_finite() { inset(domain.lo, theta0) } else { f64::NEG_INFINITY });
    let hi = (theta0 + 0.05).min(if domain.hi.is_finite() { inset(domain.hi, theta0) } else { f64::INFINITY });
    uniform_grid(lo, hi, POINTS)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn run_grid<F>(grid: &[f64], threads: Option<usize>, f: F) -> Result<Vec<CurvePoint>>
where
    F: Fn(f64) -> Result<Moments> + Sync + Send,
{
    let point = |&theta: &f64| -> Result<CurvePoint> {
        let m = f(theta)?;
        Ok(CurvePoint {
            theta,
            bias: m.bias,
            variance: m.variance,
            mse: m.mse,
        })
    };
    match threads {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| grid.par_iter().map(point).collect())
        }
        _ => grid.iter().map(point).collect(),
    }
}

/// Moments at every grid point. `threads > 1` evaluates points concurrently;
/// results are assembled in grid order and are identical to a sequential run.
pub fn mse_scan(
    model: &DiscreteModel,
    est: &EstimatorTable,
    grid: &[f64],
    name: &str,
    threads: Option<usize>,
) -> Result<MseCurve> {
    check_grid(grid)?;
    if let Some(&t) = grid.iter().find(|&&t| !model.domain().contains(t)) {
        model.domain().check(t)?;
    }
    let values = est.expand(model.len())?;
    let points = run_grid(grid, threads, |theta| {
        Ok(moments_of_values(&model.probabilities(theta), &values, theta))
    })?;
    Ok(MseCurve {
        estimator: name.to_string(),
        points,
    })
}

pub fn quantum_mse_scan(
    family: &dyn DensityFamily,
    est: &HermitianEstimator,
    grid: &[f64],
    name: &str,
    threads: Option<usize>,
) -> Result<MseCurve> {
    check_grid(grid)?;
    if let Some(&t) = grid.iter().find(|&&t| !family.domain().contains(t)) {
        family.domain().check(t)?;
    }
    let points = run_grid(grid, threads, |theta| quantum_estimator_moments(family, est, theta))?;
    Ok(MseCurve {
        estimator: name.to_string(),
        points,
    })
}

/// Bias and its derivatives `0..=max_order` at `theta0`, by the Richardson
/// central-difference stencil with step `h`.
pub fn bias_derivatives(
    bias: impl Fn(f64) -> f64,
    theta0: f64,
    h: f64,
    max_order: usize,
    domain: Domain,
) -> Result<Vec<f64>> {
    let mut out = vec![bias(theta0)];
    for k in 1..=max_order {
        out.push(finite_difference_derivative(&bias, theta0, k, h, domain)?);
    }
    Ok(out)
}

/// Outcome of checking `bias² ≤ mse` along a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasBoundCheck {
    pub passed: bool,
    /// Grid indices where `bias² > mse` beyond rounding.
    pub violations: Vec<usize>,
    /// Slack `mse − bias²` per point.
    pub slack: Vec<f64>,
    pub max_slack: f64,
}

pub fn bias_bound_check(curve: &MseCurve) -> BiasBoundCheck {
    let slack: Vec<f64> = curve
        .points
        .iter()
        .map(|p| p.mse - p.bias * p.bias)
        .collect();
    let violations: Vec<usize> = curve
        .points
        .iter()
        .zip(&slack)
        .enumerate()
        .filter(|(_, (p, &s))| s < -1e-12 * p.mse.abs().max(f64::MIN_POSITIVE))
        .map(|(i, _)| i)
        .collect();
    BiasBoundCheck {
        passed: violations.is_empty(),
        max_slack: slack.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        violations,
        slack,
    }
}

/// Trapezoidal `∫ (MSE_A − MSE_B) dθ` over `[θ0 − Δ/2, θ0 + Δ/2]`, with
/// linear interpolation at interval ends that fall between grid points.
/// Positive values mean `B` has the smaller MSE on the interval.
pub fn integrated_mse_gap(a: &MseCurve, b: &MseCurve, delta: f64, theta0: f64) -> Result<f64> {
    if a.points.len() != b.points.len()
        || a.points.iter().zip(&b.points).any(|(p, q)| p.theta != q.theta)
    {
        return Err(Error::GridMismatch(format!(
            "curves '{}' and '{}' use different grids",
            a.estimator, b.estimator
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!("interval width must be >= 0, got {delta}")));
    }
    let grid = a.grid();
    let (lo, hi) = (theta0 - delta / 2.0, theta0 + delta / 2.0);
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    let slop = 1e-12 * first.abs().max(last.abs()).max(delta);
    if lo < first - slop || hi > last + slop {
        return Err(Error::GridMismatch(format!(
            "interval [{lo}, {hi}] not covered by grid [{first}, {last}]"
        )));
    }
    let (lo, hi) = (lo.max(first), hi.min(last));
    let diff: Vec<f64> = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| p.mse - q.mse)
        .collect();
    let interp = |i: usize, t: f64| -> f64 {
        let (t0, t1) = (grid[i], grid[i + 1]);
        diff[i] + (diff[i + 1] - diff[i]) * (t - t0) / (t1 - t0)
    };
    let mut total = 0.0;
    for i in 0..grid.len().saturating_sub(1) {
        let s = grid[i].max(lo);
        let e = grid[i + 1].min(hi);
        if e > s {
            total += 0.5 * (e - s) * (interp(i, s) + interp(i, e));
        }
    }
    Ok(total)
}

/// CSV number with 17 significant digits; `inf` for missing bounds.
pub fn csv_number(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.16e}"),
        None => "inf".to_string(),
    }
}

/// Human-readable number with 6 significant digits.
pub fn table_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

/// Everything besides the curves that goes into a comparison report.
#[derive(Debug, Clone, Default)]
pub struct ReportContext {
    pub title: String,
    pub theta0: f64,
    /// Bound reports for orders `1..=n`.
    pub bounds: Vec<BoundReport>,
    /// `(order, solvable)` for the existence system at each order.
    pub existence: Vec<(usize, bool)>,
    pub max_nontrivial_order: Option<usize>,
    /// `(Δ, integrated gap)` pairs.
    pub gaps: Vec<(f64, f64)>,
}

pub const CSV_HEADER: &str = "theta,estimator,bias,variance,mse,bound_cr,bound_bh";

/// Writes the comparison CSV (header plus one row per curve point) and
/// returns the summary text. Output bytes depend only on the inputs.
pub fn comparison_report(
    curves: &[MseCurve],
    ctx: &ReportContext,
    csv: &mut dyn Write,
) -> Result<String> {
    let bound_cr = ctx.bounds.first().and_then(BoundReport::value);
    let bound_bh = ctx.bounds.last().and_then(BoundReport::value);
    writeln!(csv, "{CSV_HEADER}")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                csv_number(Some(p.theta)),
                curve.estimator,
                csv_number(Some(p.bias)),
                csv_number(Some(p.variance)),
                csv_number(Some(p.mse)),
                csv_number(bound_cr),
                csv_number(bound_bh),
            )?;
        }
    }

    let mut s = String::new();
    s.push_str(&format!("{}\n", ctx.title));
    s.push_str(&format!("theta0 = {}\n", table_number(ctx.theta0)));
    for b in &ctx.bounds {
        let value = b.value().map_or("divergent".to_string(), table_number);
        s.push_str(&format!(
            "order {}: bound {} (effective order {})\n",
            b.order, value, b.effective_order
        ));
    }
    if let Some(m) = ctx.max_nontrivial_order {
        s.push_str(&format!("max nontrivial order: {m}\n"));
    }
    for (order, ok) in &ctx.existence {
        s.push_str(&format!(
            "order {order}: estimator {}\n",
            if *ok { "exists" } else { "does not exist" }
        ));
    }
    for (delta, gap) in &ctx.gaps {
        s.push_str(&format!(
            "integrated MSE gap over width {}: {}\n",
            table_number(*delta),
            table_number(*gap)
        ));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::synthetic::bernoulli;

    fn crb_bernoulli() -> EstimatorTable {
        EstimatorTable {
            theta0: 0.5,
            values: vec![1.0, 0.0],
            kept_indices: vec![0, 1],
            satisfied_order: 1,
        }
    }

    #[test]
    fn bernoulli_crb_estimator_moments() {
        let m = estimator_moments(&bernoulli(), &crb_bernoulli(), 0.5).unwrap();
        assert_eq!(m.bias, 0.0);
        assert_eq!(m.variance, 0.25);
        assert_eq!(m.mse, 0.25);
        let m = estimator_moments(&bernoulli(), &crb_bernoulli(), 0.6).unwrap();
        assert!(m.bias.abs() < 1e-15);
    }

    #[test]
    fn constant_estimator() {
        let est = EstimatorTable {
            theta0: 0.5,
            values: vec![0.4, 0.4],
            kept_indices: vec![0, 1],
            satisfied_order: 0,
        };
        let m = estimator_moments(&bernoulli(), &est, 0.7).unwrap();
        assert!((m.bias + 0.3).abs() < 1e-15);
        assert!(m.variance.abs() < 1e-30);
        assert!((m.mse - 0.09).abs() < 1e-15);
        let curve = mse_scan(&bernoulli(), &est, &uniform_grid(0.2, 0.8, 7), "c", None).unwrap();
        let check = bias_bound_check(&curve);
        assert!(check.passed);
        assert!(check.slack.iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn support_mismatch() {
        let est = EstimatorTable {
            kept_indices: vec![0, 4],
            ..crb_bernoulli()
        };
        assert!(matches!(
            estimator_moments(&bernoulli(), &est, 0.5),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn slack_equals_variance() {
        let curve = mse_scan(&bernoulli(), &crb_bernoulli(), &uniform_grid(0.1, 0.9, 9), "crb", None).unwrap();
        let check = bias_bound_check(&curve);
        assert!(check.passed);
        for (p, s) in curve.points.iter().zip(&check.slack) {
            assert!((p.variance - s).abs() < 1e-15);
            assert!((p.mse - (p.variance + p.bias * p.bias)).abs() <= 1e-10 * p.mse);
        }
    }

    #[test]
    fn singleton_grid() {
        let curve = mse_scan(&bernoulli(), &crb_bernoulli(), &[0.5], "crb", None).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].variance, 0.25);
    }

    #[test]
    fn parallel_scan_is_identical() {
        let grid = uniform_grid(0.05, 0.95, 101);
        let a = mse_scan(&bernoulli(), &crb_bernoulli(), &grid, "crb", None).unwrap();
        let b = mse_scan(&bernoulli(), &crb_bernoulli(), &grid, "crb", Some(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_validation() {
        assert!(mse_scan(&bernoulli(), &crb_bernoulli(), &[0.5, 0.4], "x", None).is_err());
        assert!(mse_scan(&bernoulli(), &crb_bernoulli(), &[0.5, 1.4], "x", None).is_err());
    }

    #[test]
    fn gap_of_identical_curves_is_zero() {
        let curve = mse_scan(&bernoulli(), &crb_bernoulli(), &uniform_grid(0.3, 0.7, 41), "crb", None).unwrap();
        assert_eq!(integrated_mse_gap(&curve, &curve, 0.2, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn gap_integrates_linear_difference_exactly() {
        let mk = |f: &dyn Fn(f64) -> f64, name: &str| MseCurve {
            estimator: name.into(),
            points: uniform_grid(0.0, 1.0, 11)
                .into_iter()
                .map(|t| CurvePoint { theta: t, bias: 0.0, variance: f(t), mse: f(t) })
                .collect(),
        };
        let a = mk(&|t| 2.0 * t, "a");
        let b = mk(&|_| 0.0, "b");
        // ∫_{0.25}^{0.75} 2t dt = 0.5
        let gap = integrated_mse_gap(&a, &b, 0.5, 0.5).unwrap();
        assert!((gap - 0.5).abs() < 1e-14);
        assert!(integrated_mse_gap(&a, &b, 1.5, 0.5).is_err());
        let mut c = b.clone();
        c.points.pop();
        assert!(matches!(integrated_mse_gap(&a, &c, 0.5, 0.5), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        comparison_report(&[], &ReportContext::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn number_formats() {
        assert_eq!(table_number(25.0), "25");
        assert_eq!(table_number(0.25), "0.25");
        assert_eq!(table_number(4.372101837893e-8), "4.37210e-8");
        assert_eq!(table_number(1234567.0), "1.23457e6");
        assert_eq!(csv_number(Some(0.1)), "1.0000000000000001e-1");
        assert_eq!(csv_number(None), "inf");
    }

    #[test]
    fn default_grid_is_clipped() {
        let g = default_grid(0.02, Domain::new(0.0, 1.0), false);
        assert_eq!(g.len(), 401);
        assert!(g[0] > 0.0);
        let g = default_grid(1e-3, Domain::new(0.0, 1.0), true);
        assert_eq!((g[0], g[400]), (0.5e-3, 1.5e-3));
    }
}
