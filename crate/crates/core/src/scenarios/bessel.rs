//! Bessel functions of the first kind and integer order by Miller's backward
//! recurrence, normalized with `J_0 + 2 Σ J_{2k} = 1`.

use crate::error::{Error, Result};

const RESCALE_ABOVE: f64 = 1e200;
const RESCALE_BY: f64 = 1e-200;

/// `J_0(x), …, J_{max_order}(x)` for `x ≥ 0`.
pub fn bessel_j_sequence(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    // start far enough past the turning point that the dominant solution
    // has decayed below double precision (Airy-scale margin ~ x^(1/3))
    let reach = (max_order as f64).max(x);
    let start = reach + 20.0 * reach.cbrt() + 30.0;
    let mut m = start.ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }

    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let prev = k as f64 * two_over_x * cur - next;
        if k <= max_order {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            next *= RESCALE_BY;
            norm *= RESCALE_BY;
            out.iter_mut().for_each(|v| *v *= RESCALE_BY);
        }
    }
    out[0] = cur;
    norm += cur;
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Convergence {
            order: max_order as i64,
            x,
        });
    }
    out.iter_mut().for_each(|v| *v /= norm);
    Ok(out)
}

/// `J_q(x)` for any integer order and real argument, using
/// `J_{-q}(x) = (-1)^q J_q(x)` and `J_q(-x) = (-1)^q J_q(x)`.
pub fn bessel_j(q: i64, x: f64) -> Result<f64> {
    let order = q.unsigned_abs() as usize;
    let mut sign = 1.0;
    if q < 0 && order % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && order % 2 == 1 {
        sign = -sign;
    }
    let seq = bessel_j_sequence(order, x.abs())?;
    Ok(sign * seq[order])
}

/// Signed-order lookup into a sequence computed for `|q| ≤ seq.len() - 1`.
pub(crate) fn signed(seq: &[f64], q: i64) -> f64 {
    let v = seq[q.unsigned_abs() as usize];
    if q < 0 && q % 2 != 0 {
        -v
    } else {
        v
    }
}
