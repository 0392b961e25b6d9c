use std::fmt::Write as _;
use std::sync::Arc;

use bhatt_core::classical::{
    bhatt_estimator, bhatt_matrix, bound_hierarchy, existence_system, fisher_information, max_nontrivial_order,
    solve_estimator, EstimatorSolution,
};
use bhatt_core::evaluation::{
    comparison_report, csv_number, default_grid, integrated_mse_gap, mse_scan, quantum_mse_scan, table_number,
    uniform_grid, MseCurve, ReportContext,
};
use bhatt_core::formats::{read_model_file, ModelFile};
use bhatt_core::model::{evaluate_stack, prune_support, DerivativeOptions};
use bhatt_core::quantum::{
    density_stack, hermitian_existence_system, q_bhatt_bound, q_matrix, q_max_nontrivial_order, qfi, sld,
    solve_quantum_estimator, DensityFamily, QuantumOrderReport,
};
use bhatt_core::scenarios::synthetic::{
    bernoulli, binomial2, binomial3, quadratic_two_point, qutrit_diagonal, qutrit_rotation, zero_score_cubic,
};
use bhatt_core::scenarios::{mach_zehnder_model, MachZehnderConfig, QubitConfig};
use bhatt_core::{BoundReport, DensityStack, DerivativeStack, DiscreteModel, DEFAULT_TOL_EIG};

use crate::config::{CommandKind, RunConfig, Source};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or model input (exit 3).
    Config(String),
    /// Failure while computing (exit 1).
    Runtime(bhatt_core::Error),
}

impl From<bhatt_core::Error> for CliError {
    fn from(e: bhatt_core::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

/// Text for stdout and stderr, plus whether any requested bound diverged.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub divergent: bool,
}

pub const SCENARIOS: [&str; 9] = [
    "bernoulli",
    "quadratic",
    "binomial2",
    "binomial3",
    "zero-score",
    "mach-zehnder",
    "qubit",
    "qutrit-rotation",
    "qutrit-diagonal",
];

fn default_theta0(scenario: &str) -> f64 {
    match scenario {
        "bernoulli" => 0.5,
        "quadratic" => 0.6,
        "binomial2" => 0.3,
        "binomial3" => 0.4,
        "zero-score" => 0.2,
        "mach-zehnder" => 1e-3,
        "qubit" => 0.1,
        "qutrit-rotation" => 0.4,
        _ => 0.3,
    }
}

enum Loaded {
    Classical {
        name: String,
        model: Option<DiscreteModel>,
        stack: DerivativeStack,
    },
    Quantum {
        name: String,
        family: Option<Arc<dyn DensityFamily>>,
        stack: DensityStack,
    },
}

/// Errors raised while building the model from the configuration count as
/// invalid configuration.
fn config_err(e: bhatt_core::Error) -> CliError {
    match e {
        bhatt_core::Error::InvalidInput(_)
        | bhatt_core::Error::Domain { .. }
        | bhatt_core::Error::Parse { .. }
        | bhatt_core::Error::Io(_)
        | bhatt_core::Error::DegenerateModel(_)
        | bhatt_core::Error::DimensionMismatch { .. } => CliError::Config(e.to_string()),
        other => CliError::Runtime(other),
    }
}

fn classical_scenario(name: &str, cfg: &RunConfig, theta0: f64, theta_max: Option<f64>) -> Result<Option<DiscreteModel>, CliError> {
    Ok(Some(match name {
        "bernoulli" => bernoulli(),
        "quadratic" => quadratic_two_point(),
        "binomial2" => binomial2(),
        "binomial3" => binomial3(),
        "zero-score" => zero_score_cubic(),
        "mach-zehnder" => {
            let mut mz = MachZehnderConfig::new(cfg.r, theta0);
            mz.tail_mass = cfg.tail_mass;
            mz.theta_max = theta_max;
            mach_zehnder_model(&mz).map_err(config_err)?
        }
        _ => return Ok(None),
    }))
}

fn quantum_scenario(name: &str, cfg: &RunConfig, theta0: f64) -> Result<Option<Arc<dyn DensityFamily>>, CliError> {
    Ok(Some(match name {
        "qubit" => Arc::new(QubitConfig::new(cfg.lambda, theta0).map_err(config_err)?.family()),
        "qutrit-rotation" => Arc::new(qutrit_rotation()),
        "qutrit-diagonal" => Arc::new(qutrit_diagonal()),
        _ => return Ok(None),
    }))
}

fn load(cfg: &RunConfig, theta_max: Option<f64>, notes: &mut String) -> Result<Loaded, CliError> {
    let order = cfg.order.max(1);
    let opts = DerivativeOptions {
        p_min: cfg.p_min,
        ..Default::default()
    };
    match &cfg.source {
        Source::Scenario(name) => {
            let theta0 = cfg.theta0.unwrap_or_else(|| default_theta0(name));
            if let Some(model) = classical_scenario(name, cfg, theta0, theta_max)? {
                model.validate_at(theta0).map_err(config_err)?;
                let stack = evaluate_stack(&model, theta0, order, opts).map_err(config_err)?;
                return Ok(Loaded::Classical {
                    name: model.name().to_string(),
                    model: Some(model),
                    stack,
                });
            }
            if let Some(family) = quantum_scenario(name, cfg, theta0)? {
                family.domain().check(theta0).map_err(config_err)?;
                let stack = density_stack(family.as_ref(), theta0, order).map_err(config_err)?;
                let name = if name == "qubit" {
                    format!("qubit(lambda={})", cfg.lambda)
                } else {
                    name.clone()
                };
                return Ok(Loaded::Quantum {
                    name,
                    family: Some(family),
                    stack,
                });
            }
            Err(CliError::Config(format!(
                "unknown scenario '{name}' (expected one of {})",
                SCENARIOS.join(", ")
            )))
        }
        Source::File(path) => {
            let name = path.display().to_string();
            let file = read_model_file(path).map_err(config_err)?;
            let file_theta0 = match &file {
                ModelFile::Tabulated(s) => s.theta0(),
                ModelFile::Density(s) => s.theta0(),
            };
            if let Some(t) = cfg.theta0 {
                if t != file_theta0 {
                    let _ = writeln!(notes, "note: model file is tabulated at theta0 = {file_theta0}; ignoring --theta0 {t}");
                }
            }
            let available = match &file {
                ModelFile::Tabulated(s) => s.order(),
                ModelFile::Density(s) => s.order(),
            };
            if available < cfg.order {
                return Err(CliError::Config(format!(
                    "model file holds derivatives up to order {available}, order {} requested",
                    cfg.order
                )));
            }
            Ok(match file {
                ModelFile::Tabulated(stack) => Loaded::Classical {
                    name,
                    model: None,
                    stack: prune_support(&stack, cfg.p_min).map_err(config_err)?,
                },
                ModelFile::Density(stack) => Loaded::Quantum {
                    name,
                    family: None,
                    stack,
                },
            })
        }
    }
}

fn bound_cell(r: &BoundReport) -> (String, &'static str) {
    match r.value() {
        Some(v) => (table_number(v), "finite"),
        None => ("inf".to_string(), "divergent"),
    }
}

fn quantum_bounds(stack: &DensityStack, n: usize, tol_rank: f64) -> Result<Vec<BoundReport>, CliError> {
    let q = q_matrix(stack, n, DEFAULT_TOL_EIG)?;
    Ok((1..=n).map(|m| q_bhatt_bound(&q.leading(m), tol_rank)).collect())
}

fn bounds_table(out: &mut String, reports: &[BoundReport], first: &str, rest: &str) {
    let _ = writeln!(out, "{:<6} {:<5} {:>14} {:<10} {}", "order", "kind", "bound", "status", "effective_order");
    for r in reports {
        let (value, status) = bound_cell(r);
        let kind = if r.order == 1 { first } else { rest };
        let _ = writeln!(out, "{:<6} {:<5} {:>14} {:<10} {}", r.order, kind, value, status, r.effective_order);
    }
}

fn bounds_csv(reports: &[BoundReport], first: &str, rest: &str) -> String {
    let mut s = String::from("order,kind,status,value,effective_order\n");
    for r in reports {
        let kind = if r.order == 1 { first } else { rest };
        let status = if r.is_finite() { "finite" } else { "divergent" };
        let _ = writeln!(s, "{},{kind},{status},{},{}", r.order, csv_number(r.value()), r.effective_order);
    }
    s
}

fn header(out: &mut String, name: &str, theta0: f64) {
    let _ = writeln!(out, "model: {name}");
    let _ = writeln!(out, "theta0: {}", table_number(theta0));
}

fn quantum_order_line(out: &mut String, rep: &QuantumOrderReport) {
    let _ = writeln!(
        out,
        "max nontrivial order: {} (derivative span rank {}, hermitian cap {}, real dimension {})",
        rep.order, rep.span_rank, rep.hermitian_cap, rep.real_dimension
    );
}

fn write_out(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    if let Some(path) = &cfg.out {
        std::fs::write(path, text).map_err(|e| CliError::Runtime(e.into()))?;
    }
    Ok(())
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut o = Outcome::default();
    let n = cfg.order;
    match load(cfg, None, &mut o.stderr)? {
        Loaded::Classical { name, stack, .. } => {
            header(&mut o.stdout, &name, stack.theta0());
            let _ = writeln!(o.stdout, "support: {} points kept", stack.len());
            let _ = writeln!(o.stdout, "fisher information: {}", table_number(fisher_information(&stack)));
            let reports = bound_hierarchy(&stack, n, cfg.tol_rank);
            bounds_table(&mut o.stdout, &reports, "CRB", "BhB");
            let _ = writeln!(o.stdout, "max nontrivial order: {}", max_nontrivial_order(&stack, cfg.tol_rank));
            o.divergent = reports.iter().any(|r| !r.is_finite());
            write_out(cfg, &bounds_csv(&reports, "CRB", "BhB"))?;
        }
        Loaded::Quantum { name, stack, .. } => {
            header(&mut o.stdout, &name, stack.theta0());
            let _ = writeln!(o.stdout, "dimension: {}", stack.dim());
            let l1 = sld(stack.rho(), stack.deriv(1), DEFAULT_TOL_EIG)?;
            let _ = writeln!(o.stdout, "quantum fisher information: {}", table_number(qfi(stack.rho(), &l1)));
            let reports = quantum_bounds(&stack, n, cfg.tol_rank)?;
            bounds_table(&mut o.stdout, &reports, "QCRB", "QBhB");
            quantum_order_line(&mut o.stdout, &q_max_nontrivial_order(&stack, cfg.tol_rank));
            o.divergent = reports.iter().any(|r| !r.is_finite());
            write_out(cfg, &bounds_csv(&reports, "QCRB", "QBhB"))?;
        }
    }
    Ok(o)
}

fn verdict_line<T>(out: &mut String, order: usize, sol: &EstimatorSolution<T>) -> bool {
    match sol {
        EstimatorSolution::Solved { residual, .. } => {
            let _ = writeln!(out, "{:<6} {:<11} residual {}", order, "solvable", table_number(*residual));
            true
        }
        EstimatorSolution::NoSolution(w) => {
            let _ = writeln!(
                out,
                "{:<6} {:<11} rank(A) = {}, rank(A|b) = {}, witness norm {}",
                order,
                "unsolvable",
                w.rank_a,
                w.rank_augmented,
                table_number(w.vector.norm())
            );
            false
        }
    }
}

pub fn cmd_exists(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut o = Outcome::default();
    let n = cfg.order;
    match load(cfg, None, &mut o.stderr)? {
        Loaded::Classical { name, stack, .. } => {
            header(&mut o.stdout, &name, stack.theta0());
            let _ = writeln!(o.stdout, "{:<6} {:<11} detail", "order", "verdict");
            let reports = bound_hierarchy(&stack, n.max(1), cfg.tol_rank);
            for m in 0..=n {
                let sol = solve_estimator(&existence_system(&stack, m), cfg.tol_rank);
                let ok = verdict_line(&mut o.stdout, m, &sol);
                o.divergent |= !ok;
                if m >= 1 && ok != reports[m - 1].is_finite() {
                    let _ = writeln!(o.stderr, "warning: order {m} existence verdict disagrees with the bound status");
                }
            }
        }
        Loaded::Quantum { name, stack, .. } => {
            header(&mut o.stdout, &name, stack.theta0());
            let _ = writeln!(o.stdout, "{:<6} {:<11} detail", "order", "verdict");
            let reports = quantum_bounds(&stack, n.max(1), cfg.tol_rank)?;
            for m in 0..=n {
                let system = hermitian_existence_system(&stack, m, DEFAULT_TOL_EIG);
                let sol = solve_quantum_estimator(&system, cfg.tol_rank);
                let ok = verdict_line(&mut o.stdout, m, &sol);
                o.divergent |= !ok;
                if m >= 1 && ok != reports[m - 1].is_finite() {
                    let _ = writeln!(o.stderr, "warning: order {m} existence verdict disagrees with the bound status");
                }
            }
            let _ = writeln!(
                o.stdout,
                "unknowns: {} real ({} complex upper-triangle entries)",
                stack.dim() * stack.dim(),
                stack.dim() * (stack.dim() + 1) / 2
            );
        }
    }
    Ok(o)
}

fn estimator_name(quantum: bool, m: usize) -> String {
    match (quantum, m) {
        (false, 1) => "crb".into(),
        (false, _) => format!("bhb{m}"),
        (true, 1) => "qcrb".into(),
        (true, _) => format!("qbhb{m}"),
    }
}

fn scan_grid(cfg: &RunConfig, theta0: f64, domain: bhatt_core::Domain, mach_zehnder: bool) -> Vec<f64> {
    match cfg.grid {
        Some(g) => uniform_grid(g.lo, g.hi, g.n),
        None => default_grid(theta0, domain, mach_zehnder),
    }
}

fn default_deltas(grid: &[f64], theta0: f64) -> Vec<f64> {
    let half = (theta0 - grid[0]).min(grid[grid.len() - 1] - theta0);
    if !(half > 0.0) {
        return Vec::new();
    }
    (1..=10).map(|j| 2.0 * half * j as f64 / 10.0).collect()
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Source::Scenario(scenario) = &cfg.source else {
        return Err(CliError::Config(
            "scan needs a scenario: a tabulated model file has no parameter dependence to scan".into(),
        ));
    };
    let mut o = Outcome::default();
    let n = cfg.order;
    let theta0 = cfg.theta0.unwrap_or_else(|| default_theta0(scenario));
    let mach_zehnder = scenario == "mach-zehnder";
    // the interferometer window must cover the whole grid
    let theta_max = if mach_zehnder {
        let grid = scan_grid(cfg, theta0, bhatt_core::Domain::new(0.0, std::f64::consts::PI), true);
        grid.last().copied()
    } else {
        None
    };

    let mut ctx = ReportContext {
        theta0,
        ..Default::default()
    };
    let mut curves: Vec<MseCurve> = Vec::new();
    match load(cfg, theta_max, &mut o.stderr)? {
        Loaded::Classical { name, model, stack } => {
            let model = model.expect("scenarios carry their model");
            let grid = scan_grid(cfg, theta0, model.domain(), mach_zehnder);
            ctx.title = format!("scan: {name}");
            ctx.bounds = bound_hierarchy(&stack, n, cfg.tol_rank);
            ctx.max_nontrivial_order = Some(max_nontrivial_order(&stack, cfg.tol_rank));
            for m in 1..=n {
                let solvable = solve_estimator(&existence_system(&stack, m), cfg.tol_rank).is_solved();
                ctx.existence.push((m, solvable));
                if !ctx.bounds[m - 1].is_finite() {
                    let _ = writeln!(o.stderr, "note: order {m} bound diverges; no estimator to scan");
                    continue;
                }
                let est = bhatt_estimator(&stack, &bhatt_matrix(&stack, m), cfg.tol_rank)?;
                curves.push(mse_scan(&model, &est, &grid, &estimator_name(false, m), cfg.threads)?);
            }
        }
        Loaded::Quantum { name, family, stack } => {
            let family = family.expect("scenarios carry their family");
            let grid = scan_grid(cfg, theta0, family.domain(), false);
            ctx.title = format!("scan: {name}");
            ctx.bounds = quantum_bounds(&stack, n, cfg.tol_rank)?;
            ctx.max_nontrivial_order = Some(q_max_nontrivial_order(&stack, cfg.tol_rank).order);
            for m in 1..=n {
                let system = hermitian_existence_system(&stack, m, DEFAULT_TOL_EIG);
                match solve_quantum_estimator(&system, cfg.tol_rank) {
                    EstimatorSolution::Solved { estimator, .. } => {
                        ctx.existence.push((m, true));
                        curves.push(quantum_mse_scan(
                            family.as_ref(),
                            &estimator,
                            &grid,
                            &estimator_name(true, m),
                            cfg.threads,
                        )?);
                    }
                    EstimatorSolution::NoSolution(_) => {
                        ctx.existence.push((m, false));
                        let _ = writeln!(o.stderr, "note: order {m} bound diverges; no estimator to scan");
                    }
                }
            }
        }
    }
    o.divergent = ctx.bounds.iter().any(|r| !r.is_finite());

    if let (Some(first), Some(last)) = (curves.first(), curves.last()) {
        if curves.len() > 1 {
            let deltas = match &cfg.deltas {
                Some(d) => d.clone(),
                None => default_deltas(&first.grid(), theta0),
            };
            for delta in deltas {
                ctx.gaps.push((delta, integrated_mse_gap(first, last, delta, theta0)?));
            }
        }
    }

    let mut csv = Vec::new();
    let summary = comparison_report(&curves, &ctx, &mut csv)?;
    let csv = String::from_utf8(csv).expect("report is ASCII");
    let mut summary = summary;
    if curves.len() > 1 {
        let pair = format!("{} - {}", curves[0].estimator, curves[curves.len() - 1].estimator);
        summary = summary.replace("integrated MSE gap", &format!("integrated MSE gap ({pair})"));
    }
    if cfg.out.is_some() {
        write_out(cfg, &csv)?;
        o.stdout.push_str(&summary);
    } else {
        o.stdout.push_str(&csv);
        o.stderr.push_str(&summary);
    }
    Ok(o)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Bounds => cmd_bounds(cfg),
        CommandKind::Exists => cmd_exists(cfg),
        CommandKind::Scan => cmd_scan(cfg),
    }
}
