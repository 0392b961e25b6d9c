//! Divergence/nonexistence agreement and saturation over the fixture corpora.

use bhatt_core::classical::{bhatt_bound, bhatt_estimator, bhatt_matrix, existence_system, solve_estimator, EstimatorSolution};
use bhatt_core::model::{evaluate_stack, DerivativeOptions};
use bhatt_core::quantum::{density_stack, hermitian_existence_system, q_bhatt_bound, q_matrix, solve_quantum_estimator};
use bhatt_core::scenarios::{quantum_corpus, synthetic_corpus};
use bhatt_core::{DEFAULT_TOL_EIG, DEFAULT_TOL_RANK};

const MAX_ORDER: usize = 4;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[test]
fn classical_divergence_iff_no_estimator() {
    let mut checked = 0;
    for entry in synthetic_corpus() {
        for &t in &entry.theta0s {
            let stack = evaluate_stack(&entry.model, t, MAX_ORDER, DerivativeOptions::default()).unwrap();
            for n in 1..=MAX_ORDER {
                let bound = bhatt_bound(&bhatt_matrix(&stack, n), DEFAULT_TOL_RANK);
                let solution = solve_estimator(&existence_system(&stack, n), DEFAULT_TOL_RANK);
                assert_eq!(
                    bound.is_finite(),
                    solution.is_solved(),
                    "{} theta0={t} n={n}",
                    entry.model.name()
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 8 * MAX_ORDER);
}

#[test]
fn classical_estimators_saturate() {
    for entry in synthetic_corpus() {
        for &t in &entry.theta0s {
            let stack = evaluate_stack(&entry.model, t, MAX_ORDER, DerivativeOptions::default()).unwrap();
            for n in 1..=MAX_ORDER {
                let c = bhatt_matrix(&stack, n);
                let Some(value) = bhatt_bound(&c, DEFAULT_TOL_RANK).value() else {
                    continue;
                };
                let label = format!("{} theta0={t} n={n}", entry.model.name());
                let direct = bhatt_estimator(&stack, &c, DEFAULT_TOL_RANK).unwrap();
                let EstimatorSolution::Solved { estimator: solved, .. } =
                    solve_estimator(&existence_system(&stack, n), DEFAULT_TOL_RANK)
                else {
                    panic!("{label}: no solution");
                };
                for est in [&direct, &solved] {
                    let v = est.variance_at_theta0(&stack);
                    assert!(rel_close(v, value, 1e-8), "{label}: variance {v} bound {value}");
                    for r in est.condition_residuals(&stack, n) {
                        assert!(r.abs() <= 1e-9, "{label}: residual {r:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn quantum_divergence_iff_no_estimator() {
    let mut divergent = 0;
    for entry in quantum_corpus() {
        for &t in &entry.theta0s {
            let stack = density_stack(entry.family.as_ref(), t, MAX_ORDER).unwrap();
            for n in 1..=MAX_ORDER {
                let bound = q_bhatt_bound(&q_matrix(&stack, n, DEFAULT_TOL_EIG).unwrap(), DEFAULT_TOL_RANK);
                let system = hermitian_existence_system(&stack, n, DEFAULT_TOL_EIG);
                let solution = solve_quantum_estimator(&system, DEFAULT_TOL_RANK);
                assert_eq!(bound.is_finite(), solution.is_solved(), "{} theta0={t} n={n}", entry.name);
                divergent += usize::from(!bound.is_finite());
            }
        }
    }
    // the maximally mixed qubit never carries information
    assert!(divergent >= 3 * MAX_ORDER);
}

#[test]
fn quantum_estimators_saturate() {
    for entry in quantum_corpus() {
        for &t in &entry.theta0s {
            let stack = density_stack(entry.family.as_ref(), t, MAX_ORDER).unwrap();
            for n in 1..=MAX_ORDER {
                let q = q_matrix(&stack, n, DEFAULT_TOL_EIG).unwrap();
                let Some(value) = q_bhatt_bound(&q, DEFAULT_TOL_RANK).value() else {
                    continue;
                };
                let label = format!("{} theta0={t} n={n}", entry.name);
                let system = hermitian_existence_system(&stack, n, DEFAULT_TOL_EIG);
                let EstimatorSolution::Solved { estimator, .. } = solve_quantum_estimator(&system, DEFAULT_TOL_RANK) else {
                    panic!("{label}: no solution");
                };
                let v = estimator.variance_at(stack.rho());
                assert!(rel_close(v, value, 1e-8), "{label}: variance {v} bound {value}");
                for r in estimator.condition_residuals(&stack, n) {
                    assert!(r.abs() <= 1e-9, "{label}: residual {r:e}");
                }
            }
        }
    }
}
