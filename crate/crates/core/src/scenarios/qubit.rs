//! Qubit family `ρ(θ) = U ρ(0) U†` with `U = exp(-iθ²σ_x)` and
//! `ρ(0) = I/2 + (2λ − 1)σ_z/2`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::{density_stack, CMatrix, DensityFamily, DensityStack};

use super::jet::{factorial, sin_cos_series};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitConfig {
    /// Purity parameter in `(0, 1)`; `ρ(0) = diag(λ, 1 − λ)`.
    pub lambda: f64,
    pub theta0: f64,
}

impl QubitConfig {
    pub fn new(lambda: f64, theta0: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidInput(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if !theta0.is_finite() {
            return Err(Error::InvalidInput(format!("theta0 must be finite, got {theta0}")));
        }
        Ok(Self { lambda, theta0 })
    }

    pub fn family(&self) -> QubitFamily {
        QubitFamily {
            lambda: self.lambda,
        }
    }

    /// Density stack at `theta0` with analytic derivatives up to `order`.
    pub fn stack(&self, order: usize) -> Result<DensityStack> {
        density_stack(&self.family(), self.theta0, order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitFamily {
    pub lambda: f64,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl QubitFamily {
    fn assemble(&self, cos_term: f64, sin_term: f64, constant: f64) -> CMatrix {
        let l = self.lambda;
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c((l - 0.5) * cos_term + constant, 0.0),
                c(0.0, 0.5 * (2.0 * l - 1.0) * sin_term),
                c(0.0, 0.5 * (1.0 - 2.0 * l) * sin_term),
                c(0.5 * (1.0 - 2.0 * l) * cos_term + constant, 0.0),
            ],
        )
    }
}

impl DensityFamily for QubitFamily {
    fn dim(&self) -> usize {
        2
    }

    fn rho(&self, theta: f64) -> CMatrix {
        let l = self.lambda;
        let t2 = theta * theta;
        let cos2 = (2.0 * t2).cos();
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c((l - 0.5) * cos2 + 0.5, 0.0),
                c(0.0, 0.5 * (2.0 * l - 1.0) * (2.0 * t2).sin()),
                c(0.0, (1.0 - 2.0 * l) * t2.sin() * t2.cos()),
                c(0.5 * ((1.0 - 2.0 * l) * cos2 + 1.0), 0.0),
            ],
        )
    }

    fn derivative(&self, theta: f64, k: usize) -> Option<CMatrix> {
        if k == 0 {
            return Some(self.rho(theta));
        }
        // 2(θ + h)² = 2θ² + 4θh + 2h²
        let u = [2.0 * theta * theta, 4.0 * theta, 2.0];
        let (s, cs) = sin_cos_series(&u, k);
        let fk = factorial(k);
        Some(self.assemble(cs[k] * fk, s[k] * fk, 0.0))
    }
}

/// Closed-form order-2 Q matrix of the qubit family.
pub fn qubit_q_closed_form(lambda: f64, theta: f64) -> DMatrix<f64> {
    let a = (1.0 - 2.0 * lambda).powi(2);
    let q11 = 16.0 * theta * theta * a;
    let q12 = 16.0 * theta * a;
    let ll = (lambda - 1.0) * lambda;
    let q22 = 16.0 * a * (ll - 4.0 * theta.powi(4)) / ll;
    DMatrix::from_row_slice(2, 2, &[q11, q12, q12, q22])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{finite_difference_derivative, Domain};

    #[test]
    fn initial_state_is_diagonal() {
        let rho = QubitFamily { lambda: 0.3 }.rho(0.0);
        assert!((rho[(0, 0)].re - 0.3).abs() < 1e-15);
        assert!((rho[(1, 1)].re - 0.7).abs() < 1e-15);
        assert_eq!(rho[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn displayed_entry() {
        let rho = QubitFamily { lambda: 0.25 }.rho(0.1);
        let want = -0.25 * 0.02f64.cos() + 0.5;
        assert!((rho[(0, 0)].re - want).abs() < 1e-15);
    }

    #[test]
    fn matches_unitary_conjugation() {
        let (lambda, theta) = (0.37f64, 0.6f64);
        let phi = theta * theta;
        // exp(-iφσx) = cos φ I - i sin φ σx
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[c(phi.cos(), 0.0), c(0.0, -phi.sin()), c(0.0, -phi.sin()), c(phi.cos(), 0.0)],
        );
        let rho0 = CMatrix::from_row_slice(2, 2, &[c(lambda, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 - lambda, 0.0)]);
        let want = &u * rho0 * u.adjoint();
        let got = QubitFamily { lambda }.rho(theta);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let fam = QubitFamily { lambda: 0.2 };
        for k in 1..=3 {
            let exact = fam.derivative(0.35, k).unwrap();
            let h = crate::model::default_step(0.35, k);
            for i in 0..2 {
                for j in 0..2 {
                    let re = finite_difference_derivative(|t| fam.rho(t)[(i, j)].re, 0.35, k, h, Domain::REAL_LINE).unwrap();
                    let im = finite_difference_derivative(|t| fam.rho(t)[(i, j)].im, 0.35, k, h, Domain::REAL_LINE).unwrap();
                    assert!((exact[(i, j)] - c(re, im)).norm() < 1e-6, "k={k} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let q = qubit_q_closed_form(0.25, 0.1);
        assert!((q[(0, 0)] - 0.04).abs() < 1e-15);
        assert!((q[(0, 1)] - 0.4).abs() < 1e-15);
        assert!((q[(1, 1)] - 4.008_533_333_333_333).abs() < 1e-12);
        assert_eq!(qubit_q_closed_form(0.5, 0.3), DMatrix::zeros(2, 2));
        let a = qubit_q_closed_form(0.2, 0.17);
        let b = qubit_q_closed_form(0.8, 0.17);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(QubitConfig::new(0.0, 0.1).is_err());
        assert!(QubitConfig::new(1.0, 0.1).is_err());
        assert!(QubitConfig::new(0.5, 0.1).is_ok());
    }
}
