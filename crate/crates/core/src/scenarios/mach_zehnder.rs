//! Twin-Fock Mach-Zehnder interferometer in the small-angle regime:
//! `P_θ(2q) = J_q(rθ)²` over the even photon-count differences `2q`.

use crate::error::{Error, Result};
use crate::model::{DiscreteModel, Domain, ProbabilityFamily};

use super::bessel::{bessel_j_sequence, signed};

/// Largest `r·θ` for which the Bessel approximation is treated as tested.
pub const SMALL_ANGLE_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachZehnderConfig {
    /// Photons per input arm.
    pub r: u32,
    pub theta0: f64,
    /// Largest probability mass allowed outside the support window.
    pub tail_mass: f64,
    /// Largest parameter the support window must cover (e.g. the end of a
    /// scan grid); defaults to `theta0`.
    pub theta_max: Option<f64>,
}

impl MachZehnderConfig {
    pub fn new(r: u32, theta0: f64) -> Self {
        Self {
            r,
            theta0,
            tail_mass: 1e-12,
            theta_max: None,
        }
    }

    pub fn with_theta_max(mut self, theta_max: f64) -> Self {
        self.theta_max = Some(theta_max);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 {
            return Err(Error::InvalidInput("r must be at least 1".into()));
        }
        if !(self.theta0 > 0.0 && self.theta0 < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!(
                "theta0 must lie in (0, pi), got {}",
                self.theta0
            )));
        }
        if !(self.tail_mass > 0.0 && self.tail_mass < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail_mass must lie in (0, 1), got {}",
                self.tail_mass
            )));
        }
        Ok(())
    }

    fn window_theta(&self) -> f64 {
        self.theta_max.unwrap_or(self.theta0).max(self.theta0)
    }

    /// True when `r·θ` stays inside the regime the approximation was
    /// exercised in.
    pub fn small_angle_regime(&self) -> bool {
        self.r as f64 * self.window_theta() <= SMALL_ANGLE_LIMIT && self.window_theta() < 0.1
    }

    /// Initial half-width `Q` of the window `|q| ≤ Q`, before tail trimming.
    pub fn initial_half_width(&self) -> i64 {
        let x = self.r as f64 * self.window_theta();
        let margin = (3.0 * x.cbrt() + 10.0).max(20.0);
        (x.ceil() + margin).ceil() as i64
    }
}

struct MachZehnderFamily {
    r: f64,
    qs: Vec<i64>,
    q_max: i64,
}

impl MachZehnderFamily {
    fn sequence(&self, theta: f64, extra: usize) -> Vec<f64> {
        let x = (self.r * theta).abs();
        let mut seq = bessel_j_sequence(self.q_max as usize + extra, x)
            .expect("Bessel recurrence on a finite argument");
        if theta < 0.0 {
            // J_q(-x) = (-1)^q J_q(x)
            seq.iter_mut()
                .enumerate()
                .filter(|(q, _)| q % 2 == 1)
                .for_each(|(_, v)| *v = -*v);
        }
        seq
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `d^m/dx^m J_q(x) = 2^{-m} Σ_j (-1)^j C(m, j) J_{q-m+2j}(x)`.
fn bessel_derivative(seq: &[f64], q: i64, m: usize) -> f64 {
    let sum: f64 = (0..=m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, j) * signed(seq, q - m as i64 + 2 * j as i64)
        })
        .sum();
    sum / 2f64.powi(m as i32)
}

impl ProbabilityFamily for MachZehnderFamily {
    fn support_len(&self) -> usize {
        self.qs.len()
    }

    fn probabilities(&self, theta: f64) -> Vec<f64> {
        let seq = self.sequence(theta, 0);
        self.qs.iter().map(|&q| signed(&seq, q).powi(2)).collect()
    }

    fn derivative(&self, theta: f64, k: usize) -> Option<Vec<f64>> {
        let seq = self.sequence(theta, k);
        let scale = self.r.powi(k as i32);
        Some(
            self.qs
                .iter()
                .map(|&q| {
                    let derivs: Vec<f64> = (0..=k).map(|m| bessel_derivative(&seq, q, m)).collect();
                    // Leibniz rule on J_q(rθ)²
                    let sum: f64 = (0..=k)
                        .map(|m| binomial(k, m) * derivs[m] * derivs[k - m])
                        .sum();
                    scale * sum
                })
                .collect(),
        )
    }
}

/// Discrete model over the window `|q| ≤ Q` (labels `2q`), trimmed so that
/// the excluded mass stays below `tail_mass` at both `θ0` and the window's
/// maximum parameter.
pub fn mach_zehnder_model(cfg: &MachZehnderConfig) -> Result<DiscreteModel> {
    cfg.validate()?;
    let r = cfg.r as f64;
    let initial = cfg.initial_half_width();
    let probe_thetas = [cfg.theta0, cfg.window_theta()];
    let probes: Vec<Vec<f64>> = probe_thetas
        .iter()
        .map(|&t| bessel_j_sequence(initial as usize, r * t))
        .collect::<Result<_>>()?;
    let outside = |h: i64| -> f64 {
        probes
            .iter()
            .map(|seq| {
                (h + 1..=initial).map(|q| 2.0 * seq[q as usize].powi(2)).sum::<f64>()
            })
            .fold(0.0, f64::max)
    };
    let mut half = initial;
    while half > 1 && outside(half - 1) <= cfg.tail_mass {
        half -= 1;
    }
    let excluded = outside(half);
    let qs: Vec<i64> = (-half..=half).collect();
    let labels = qs.iter().map(|q| (2 * q).to_string()).collect();
    let family = MachZehnderFamily { r, qs, q_max: half };
    let model = DiscreteModel::new(
        format!("mach-zehnder(r={})", cfg.r),
        labels,
        Domain::new(0.0, std::f64::consts::PI),
        family,
    )?;
    Ok(model.with_mass_defect(excluded.max(cfg.tail_mass)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_stack, DerivativeOptions};

    #[test]
    fn probability_concentrates_at_zero_for_small_theta() {
        let m = mach_zehnder_model(&MachZehnderConfig::new(10, 1e-9)).unwrap();
        let p = m.probabilities(1e-9);
        let centre = m.labels().iter().position(|l| l == "0").unwrap();
        assert!((p[centre] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_and_mass() {
        let cfg = MachZehnderConfig::new(5000, 1e-3);
        assert_eq!(cfg.initial_half_width(), 25);
        let m = mach_zehnder_model(&cfg).unwrap();
        let total: f64 = m.probabilities(1e-3).iter().sum();
        assert!(total >= 1.0 - 1e-12 && total <= 1.0 + 1e-12, "{total}");
        assert!(m.validate_at(1e-3).is_ok());
        assert!(cfg.small_angle_regime());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cfg = MachZehnderConfig::new(50, 0.07);
        let m = mach_zehnder_model(&cfg).unwrap();
        let exact = evaluate_stack(&m, 0.07, 3, DerivativeOptions { p_min: 0.0, ..Default::default() }).unwrap();
        let fd = evaluate_stack(
            &m,
            0.07,
            3,
            DerivativeOptions { p_min: 0.0, force_finite_difference: true },
        )
        .unwrap();
        for k in 1..=3 {
            let scale = exact.row(k).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in exact.row(k).iter().zip(fd.row(k)) {
                assert!((a - b).abs() <= 1e-5 * scale, "k = {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(mach_zehnder_model(&MachZehnderConfig::new(0, 1e-3)).is_err());
        assert!(mach_zehnder_model(&MachZehnderConfig::new(10, -1.0)).is_err());
    }
}
