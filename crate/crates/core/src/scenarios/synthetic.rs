//! Small families with closed-form derivatives, used as a test corpus and as
//! CLI scenarios.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::model::{DiscreteModel, Domain, ProbabilityFamily};
use crate::quantum::{hermitize, CMatrix, DensityFamily};

use super::qubit::QubitFamily;

/// Each outcome probability is a polynomial in θ (coefficients in
/// increasing degree).
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFamily {
    coeffs: Vec<Vec<f64>>,
}

impl PolynomialFamily {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Self {
        Self { coeffs }
    }

    fn eval_derivative(c: &[f64], theta: f64, k: usize) -> f64 {
        // Horner on the k-th derivative coefficients
        let mut acc = 0.0;
        for (d, &a) in c.iter().enumerate().skip(k).rev() {
            let falling: f64 = (d - k + 1..=d).map(|v| v as f64).product();
            acc = acc * theta + a * falling;
        }
        acc
    }
}

impl ProbabilityFamily for PolynomialFamily {
    fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    fn probabilities(&self, theta: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| Self::eval_derivative(c, theta, 0))
            .collect()
    }

    fn derivative(&self, theta: f64, k: usize) -> Option<Vec<f64>> {
        Some(
            self.coeffs
                .iter()
                .map(|c| Self::eval_derivative(c, theta, k))
                .collect(),
        )
    }
}

fn polynomial_model(name: &str, domain: Domain, coeffs: Vec<Vec<f64>>) -> DiscreteModel {
    let labels = (0..coeffs.len()).map(|i| i.to_string()).collect();
    DiscreteModel::new(name, labels, domain, PolynomialFamily::new(coeffs))
        .expect("synthetic families have at least two outcomes")
}

/// `(θ, 1 − θ)`.
pub fn bernoulli() -> DiscreteModel {
    polynomial_model("bernoulli", Domain::new(0.0, 1.0), vec![vec![0.0, 1.0], vec![1.0, -1.0]])
}

/// `(θ², 1 − θ²)`; its order-2 bound diverges.
pub fn quadratic_two_point() -> DiscreteModel {
    polynomial_model(
        "quadratic",
        Domain::new(0.0, 1.0),
        vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, -1.0]],
    )
}

/// `(θ², 2θ(1 − θ), (1 − θ)²)`.
pub fn binomial2() -> DiscreteModel {
    polynomial_model(
        "binomial2",
        Domain::new(0.0, 1.0),
        vec![vec![0.0, 0.0, 1.0], vec![0.0, 2.0, -2.0], vec![1.0, -2.0, 1.0]],
    )
}

/// Binomial with three trials, four outcomes.
pub fn binomial3() -> DiscreteModel {
    polynomial_model(
        "binomial3",
        Domain::new(0.0, 1.0),
        vec![
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 3.0, -3.0],
            vec![0.0, 3.0, -6.0, 3.0],
            vec![1.0, -3.0, 3.0, -1.0],
        ],
    )
}

/// `(1/2 + θ³, 1/2 − θ³)`: the score vanishes at θ = 0.
pub fn zero_score_cubic() -> DiscreteModel {
    let edge = 0.5f64.cbrt();
    polynomial_model(
        "zero-score",
        Domain::new(-edge, edge),
        vec![vec![0.5, 0.0, 0.0, 1.0], vec![0.5, 0.0, 0.0, -1.0]],
    )
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub model: DiscreteModel,
    pub theta0s: Vec<f64>,
}

/// Classical fixtures with the working points they are exercised at.
pub fn synthetic_corpus() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry {
            model: bernoulli(),
            theta0s: vec![0.3, 0.5],
        },
        CorpusEntry {
            model: quadratic_two_point(),
            theta0s: vec![0.6],
        },
        CorpusEntry {
            model: binomial2(),
            theta0s: vec![0.3, 0.5],
        },
        CorpusEntry {
            model: binomial3(),
            theta0s: vec![0.4],
        },
        CorpusEntry {
            model: zero_score_cubic(),
            theta0s: vec![0.0, 0.2],
        },
    ]
}

/// `ρ(θ) = diag(P_θ)` for a classical polynomial family.
#[derive(Debug, Clone)]
pub struct DiagonalFamily {
    probs: PolynomialFamily,
    domain: Domain,
}

impl DiagonalFamily {
    pub fn new(probs: PolynomialFamily, domain: Domain) -> Self {
        Self { probs, domain }
    }

    fn diag(v: Vec<f64>) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            v.len(),
            v.into_iter().map(|x| Complex64::new(x, 0.0)),
        ))
    }
}

impl DensityFamily for DiagonalFamily {
    fn dim(&self) -> usize {
        self.probs.support_len()
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn rho(&self, theta: f64) -> CMatrix {
        Self::diag(self.probs.probabilities(theta))
    }

    fn derivative(&self, theta: f64, k: usize) -> Option<CMatrix> {
        self.probs.derivative(theta, k).map(Self::diag)
    }
}

/// `ρ(θ) = e^{-iθH} ρ₀ e^{iθH}` with analytic derivatives from the
/// eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct UnitaryFamily {
    energies: Vec<f64>,
    basis: CMatrix,
    /// `ρ₀` in the eigenbasis of `H`.
    rho0: CMatrix,
}

impl UnitaryFamily {
    pub fn new(hamiltonian: &CMatrix, rho0: &CMatrix) -> Self {
        let eig = hermitize(hamiltonian).symmetric_eigen();
        let basis = eig.eigenvectors;
        let rho0 = basis.adjoint() * rho0 * &basis;
        Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            basis,
            rho0,
        }
    }

    fn evolved(&self, theta: f64, k: usize) -> CMatrix {
        let n = self.energies.len();
        let mut m = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let w = self.energies[a] - self.energies[b];
                let phase = Complex64::new(0.0, -w * theta).exp();
                let factor = Complex64::new(0.0, -w).powu(k as u32);
                m[(a, b)] = self.rho0[(a, b)] * phase * factor;
            }
        }
        hermitize(&(&self.basis * m * self.basis.adjoint()))
    }
}

impl DensityFamily for UnitaryFamily {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn rho(&self, theta: f64) -> CMatrix {
        self.evolved(theta, 0)
    }

    fn derivative(&self, theta: f64, k: usize) -> Option<CMatrix> {
        Some(self.evolved(theta, k))
    }
}

/// Spin-1 rotation about y of `diag(0.5, 0.3, 0.2)`.
pub fn qutrit_rotation() -> UnitaryFamily {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let i = |v: f64| Complex64::new(0.0, v);
    // J_y for spin 1
    let jy = CMatrix::from_row_slice(3, 3, &[z, i(-s), z, i(s), z, i(-s), z, i(s), z]);
    let rho0 = CMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::new(0.5, 0.0),
        Complex64::new(0.3, 0.0),
        Complex64::new(0.2, 0.0),
    ]));
    UnitaryFamily::new(&jy, &rho0)
}

pub fn qutrit_diagonal() -> DiagonalFamily {
    DiagonalFamily::new(
        PolynomialFamily::new(vec![vec![0.0, 0.0, 1.0], vec![0.0, 2.0, -2.0], vec![1.0, -2.0, 1.0]]),
        Domain::new(0.0, 1.0),
    )
}

#[derive(Clone)]
pub struct QuantumCorpusEntry {
    pub name: String,
    pub family: Arc<dyn DensityFamily>,
    pub theta0s: Vec<f64>,
}

/// Quantum fixtures: the qubit family at several purities (including the
/// uninformative λ = 1/2), a diagonal qutrit and a rotated qutrit.
pub fn quantum_corpus() -> Vec<QuantumCorpusEntry> {
    let mut out: Vec<QuantumCorpusEntry> = [0.1, 0.25, 0.4, 0.5]
        .iter()
        .map(|&lambda| QuantumCorpusEntry {
            name: format!("qubit(lambda={lambda})"),
            family: Arc::new(QubitFamily { lambda }),
            theta0s: vec![0.05, 0.1, 0.2],
        })
        .collect();
    out.push(QuantumCorpusEntry {
        name: "qutrit-diagonal".into(),
        family: Arc::new(qutrit_diagonal()),
        theta0s: vec![0.3],
    });
    out.push(QuantumCorpusEntry {
        name: "qutrit-rotation".into(),
        family: Arc::new(qutrit_rotation()),
        theta0s: vec![0.0, 0.4],
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_stack, DerivativeOptions};
    use crate::quantum::density_stack;

    #[test]
    fn polynomial_derivatives() {
        let fam = PolynomialFamily::new(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        // p = 1 + 2t + 3t² + 4t³ at t = 2
        assert_eq!(fam.probabilities(2.0), vec![49.0]);
        assert_eq!(fam.derivative(2.0, 1).unwrap(), vec![2.0 + 12.0 + 48.0]);
        assert_eq!(fam.derivative(2.0, 2).unwrap(), vec![6.0 + 48.0]);
        assert_eq!(fam.derivative(2.0, 3).unwrap(), vec![24.0]);
        assert_eq!(fam.derivative(2.0, 4).unwrap(), vec![0.0]);
    }

    #[test]
    fn corpus_is_normalized() {
        for entry in synthetic_corpus() {
            for &t in &entry.theta0s {
                entry.model.validate_at(t).unwrap();
                let s = evaluate_stack(&entry.model, t, 4, DerivativeOptions::default()).unwrap();
                for k in 1..=4 {
                    assert!(s.row_sum(k).abs() < 1e-12, "{} k={k}", entry.model.name());
                }
            }
        }
    }

    #[test]
    fn analytic_matches_finite_difference_for_cubics() {
        let opts = DerivativeOptions {
            force_finite_difference: true,
            ..Default::default()
        };
        for model in [binomial3(), zero_score_cubic(), binomial2()] {
            let a = evaluate_stack(&model, 0.3, 3, DerivativeOptions::default()).unwrap();
            let f = evaluate_stack(&model, 0.3, 3, opts).unwrap();
            for k in 1..=3 {
                let scale = a.row(k - 1).iter().chain(&a.row(k)).fold(1.0f64, |m, v| m.max(v.abs()));
                for (x, y) in a.row(k).iter().zip(f.row(k)) {
                    assert!((x - y).abs() <= 1e-5 * scale, "{}: {x} {y}", model.name());
                }
            }
        }
    }

    #[test]
    fn rotation_family_derivatives() {
        let fam = qutrit_rotation();
        let stack = density_stack(&fam, 0.4, 2).unwrap();
        let h = 1e-4;
        let fd = (fam.rho(0.4 + h) - fam.rho(0.4 - h)) / Complex64::new(2.0 * h, 0.0);
        assert!((stack.deriv(1) - fd).norm() < 1e-7);
    }
}
