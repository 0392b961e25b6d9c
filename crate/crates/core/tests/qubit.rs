use bhatt_core::classical::{bhatt_bound, bhatt_matrix, fisher_information};
use bhatt_core::model::{finite_difference_derivative, Domain};
use bhatt_core::quantum::{
    density_stack, induced_stack, optimal_measurement, q_bhatt_bound, q_matrix, q_max_nontrivial_order, qfi, sld,
    DensityFamily,
};
use bhatt_core::scenarios::{qubit_q_closed_form, QubitConfig, QubitFamily};
use bhatt_core::{DEFAULT_TOL_EIG, DEFAULT_TOL_RANK};

const LAMBDAS: [f64; 3] = [0.1, 0.25, 0.4];
const THETAS: [f64; 3] = [0.05, 0.1, 0.2];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn q_matrix_matches_closed_form_on_grid() {
    for &l in &LAMBDAS {
        for &t in &THETAS {
            let stack = QubitConfig::new(l, t).unwrap().stack(2).unwrap();
            let q = q_matrix(&stack, 2, DEFAULT_TOL_EIG).unwrap();
            let want = qubit_q_closed_form(l, t);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(rel(q.entries()[(i, j)], want[(i, j)]) <= 1e-8, "lambda={l} theta={t} ({i},{j})");
                }
            }
            let f = 16.0 * t * t * (1.0 - 2.0 * l).powi(2);
            assert!(rel(q.get(1, 1), f) <= 1e-8);
        }
    }
}

#[test]
fn second_order_bound_is_higher_and_symmetric() {
    for &l in &LAMBDAS {
        for &t in &THETAS {
            let bounds = |lambda: f64| {
                let stack = QubitConfig::new(lambda, t).unwrap().stack(2).unwrap();
                let q = q_matrix(&stack, 2, DEFAULT_TOL_EIG).unwrap();
                (
                    q_bhatt_bound(&q.leading(1), DEFAULT_TOL_RANK).value().unwrap(),
                    q_bhatt_bound(&q, DEFAULT_TOL_RANK).value().unwrap(),
                )
            };
            let (b1, b2) = bounds(l);
            assert!(b2 > b1, "lambda={l} theta={t}: {b1} {b2}");
            let (m1, m2) = bounds(1.0 - l);
            assert!(rel(b1, m1) <= 1e-9 && rel(b2, m2) <= 1e-9);
        }
    }
}

#[test]
fn closed_form_two_by_two_inverse() {
    let stack = QubitConfig::new(0.25, 0.1).unwrap().stack(2).unwrap();
    let q = q_matrix(&stack, 2, DEFAULT_TOL_EIG).unwrap();
    let c = qubit_q_closed_form(0.25, 0.1);
    let want = c[(1, 1)] / (c[(0, 0)] * c[(1, 1)] - c[(0, 1)].powi(2));
    let got = q_bhatt_bound(&q, DEFAULT_TOL_RANK).value().unwrap();
    assert!(rel(got, want) <= 1e-8, "{got} {want}");
    assert!(rel(q_bhatt_bound(&q.leading(1), DEFAULT_TOL_RANK).value().unwrap(), 25.0) <= 1e-8);
}

#[test]
fn quantum_order_exceeds_classical_cap() {
    let stack = QubitConfig::new(0.25, 0.1).unwrap().stack(2).unwrap();
    assert_eq!(q_max_nontrivial_order(&stack, DEFAULT_TOL_RANK).order, 2);

    let l1 = sld(stack.rho(), stack.deriv(1), DEFAULT_TOL_EIG).unwrap();
    let induced = induced_stack(&optimal_measurement(&l1), &stack).unwrap();
    let c1 = bhatt_bound(&bhatt_matrix(&induced, 1), DEFAULT_TOL_RANK);
    let c2 = bhatt_bound(&bhatt_matrix(&induced, 2), DEFAULT_TOL_RANK);
    let q = q_matrix(&stack, 2, DEFAULT_TOL_EIG).unwrap();
    let q2 = q_bhatt_bound(&q, DEFAULT_TOL_RANK).value().unwrap();
    let q1 = q_bhatt_bound(&q.leading(1), DEFAULT_TOL_RANK).value().unwrap();
    assert!(q2 > q1);
    match (c1.value(), c2.value()) {
        (Some(a), Some(b)) => assert!(rel(a, b) <= 1e-9, "{a} {b}"),
        (Some(_), None) => {}
        other => panic!("unexpected classical bounds {other:?}"),
    }
}

#[test]
fn optimal_measurement_recovers_qfi() {
    let fam = QubitFamily { lambda: 0.25 };
    let theta0 = 0.1;
    let stack = density_stack(&fam, theta0, 1).unwrap();
    let l1 = sld(stack.rho(), stack.deriv(1), DEFAULT_TOL_EIG).unwrap();
    let f_q = qfi(stack.rho(), &l1);
    let projectors = optimal_measurement(&l1);

    // independent oracle: finite differences of Tr[Π ρ_θ]
    let prob = |i: usize, t: f64| (&projectors[i] * fam.rho(t)).trace().re;
    let h = 1e-3;
    let oracle: f64 = (0..projectors.len())
        .map(|i| {
            let dp = finite_difference_derivative(|t| prob(i, t), theta0, 1, h, Domain::REAL_LINE).unwrap();
            dp * dp / prob(i, theta0)
        })
        .sum();
    assert!(rel(oracle, f_q) <= 1e-6, "{oracle} {f_q}");
    let induced = induced_stack(&projectors, &stack).unwrap();
    assert!(rel(fisher_information(&induced), f_q) <= 1e-10);
}

#[test]
fn maximally_mixed_qubit_diverges() {
    let stack = QubitConfig::new(0.5, 0.1).unwrap().stack(2).unwrap();
    let q = q_matrix(&stack, 2, DEFAULT_TOL_EIG).unwrap();
    assert!(!q_bhatt_bound(&q, DEFAULT_TOL_RANK).is_finite());
    assert!(!q_bhatt_bound(&q.leading(1), DEFAULT_TOL_RANK).is_finite());
}
