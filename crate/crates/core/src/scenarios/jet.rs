//! Truncated Taylor series of `sin u(h)` and `cos u(h)` for a polynomial
//! argument `u`, giving exact derivatives of any order.

/// Taylor coefficients (in `h`) of `sin(u(h))` and `cos(u(h))` up to degree
/// `order`, where `u(h) = Σ u[j] hʲ`.
pub(crate) fn sin_cos_series(u: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; order + 1];
    let mut c = vec![0.0; order + 1];
    s[0] = u[0].sin();
    c[0] = u[0].cos();
    for k in 1..=order {
        let mut ds = 0.0;
        let mut dc = 0.0;
        for j in 1..=k.min(u.len() - 1) {
            let w = j as f64 * u[j];
            ds += w * c[k - j];
            dc -= w * s[k - j];
        }
        s[k] = ds / k as f64;
        c[k] = dc / k as f64;
    }
    (s, c)
}

/// `k!` as a float.
pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_argument_matches_sine_derivatives() {
        // u(h) = 0.3 + h: derivatives of sin cycle through cos, -sin, ...
        let (s, c) = sin_cos_series(&[0.3, 1.0], 4);
        let x: f64 = 0.3;
        let want_s = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()];
        for k in 0..=4 {
            assert!((s[k] * factorial(k) - want_s[k]).abs() < 1e-14);
        }
        assert!((c[1] + x.sin()).abs() < 1e-15);
    }

    #[test]
    fn quadratic_argument_second_derivative() {
        // d²/dθ² cos(2θ²) = -4 sin(2θ²) - 16θ² cos(2θ²)
        let t: f64 = 0.4;
        let (_, c) = sin_cos_series(&[2.0 * t * t, 4.0 * t, 2.0], 2);
        let want = -4.0 * (2.0 * t * t).sin() - 16.0 * t * t * (2.0 * t * t).cos();
        assert!((2.0 * c[2] - want).abs() < 1e-14);
    }
}
