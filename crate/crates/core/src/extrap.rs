//! Limits of sampled sequences: polynomial (Richardson/Neville) extrapolation
//! to a zero abscissa and iterated Aitken acceleration.

use crate::error::{Error, Result};

/// Extrapolated value with an error estimate taken from the tableau.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limit {
    pub value: f64,
    pub error: f64,
}

/// Extrapolate samples `values[i] = g(h[i])` to `h = 0`, assuming `g` is smooth
/// in `h`. The Neville tableau diagonal with the smallest successive difference
/// is returned.
pub fn extrapolate_to_zero(h: &[f64], values: &[f64]) -> Limit {
    assert_eq!(h.len(), values.len());
    assert!(!h.is_empty());
    let n = h.len();
    let mut p: Vec<f64> = values.to_vec();
    let mut best = Limit { value: values[n - 1], error: f64::INFINITY };
    if n >= 2 {
        best.error = (values[n - 1] - values[n - 2]).abs();
    }
    let mut diag_prev = values[0];
    for col in 1..n {
        for i in (col..n).rev() {
            let hi = h[i];
            let hj = h[i - col];
            p[i] = (hj * p[i] - hi * p[i - 1]) / (hj - hi);
        }
        let diag = p[n - 1];
        let prev = if col == 1 { values[n - 1] } else { diag_prev };
        let err = (diag - prev).abs();
        if err < best.error {
            best = Limit { value: diag, error: err };
        }
        diag_prev = diag;
    }
    best
}

/// Extrapolate `g(T)` sampled on `T_k` to `T = 0`, assuming an expansion in powers of `√T`.
pub fn limit_in_sqrt(ts: &[f64], values: &[f64]) -> Limit {
    let h: Vec<f64> = ts.iter().map(|t| t.sqrt()).collect();
    extrapolate_to_zero(&h, values)
}

/// Extrapolate `g(T)` sampled on `T_k` to `T = 0`, assuming an expansion in integer powers of `T`.
pub fn limit_in_t(ts: &[f64], values: &[f64]) -> Limit {
    extrapolate_to_zero(ts, values)
}

/// Fail when an extrapolated limit is not resolved to `tol` (absolute, scaled by `1 + |value|`).
pub fn require_converged(l: Limit, tol: f64, what: &str) -> Result<f64> {
    if l.value.is_finite() && l.error <= tol * (1.0 + l.value.abs()) {
        Ok(l.value)
    } else {
        Err(Error::convergence(format!("extrapolation of {what}"), l.error))
    }
}

/// Iterated Aitken Δ² acceleration; returns the last accelerated term.
pub fn aitken(seq: &[f64]) -> f64 {
    let mut s = seq.to_vec();
    while s.len() >= 3 {
        let mut next = Vec::with_capacity(s.len() - 2);
        for i in 0..s.len() - 2 {
            let d2 = s[i + 2] - 2.0 * s[i + 1] + s[i];
            next.push(if d2.abs() < 1e-300 { s[i + 2] } else { s[i + 2] - (s[i + 2] - s[i + 1]).powi(2) / d2 });
        }
        s = next;
    }
    *s.last().expect("aitken needs at least one term")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_limits_are_exact() {
        let ts: Vec<f64> = (0..8).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let vals: Vec<f64> = ts.iter().map(|t| 3.0 + 2.0 * t - 5.0 * t * t + t.powi(3)).collect();
        let l = limit_in_t(&ts, &vals);
        assert_abs_diff_eq!(l.value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn half_integer_expansion() {
        let ts: Vec<f64> = (0..10).map(|k| 0.01 * 0.5f64.powi(k)).collect();
        let vals: Vec<f64> = ts.iter().map(|t| 1.5 + 0.7 * t.sqrt() - 2.0 * t + (1.0 + t).ln() * t.sqrt()).collect();
        let l = limit_in_sqrt(&ts, &vals);
        assert_abs_diff_eq!(l.value, 1.5, epsilon = 1e-11);
        assert!(l.error < 1e-9);
    }

    #[test]
    fn aitken_accelerates_geometric_tail() {
        let seq: Vec<f64> = (0..6).map(|k| 2.0 + 0.3 * 0.5f64.powi(k) + 0.01 * 0.25f64.powi(k)).collect();
        assert_abs_diff_eq!(aitken(&seq), 2.0, epsilon = 1e-6);
    }
}
