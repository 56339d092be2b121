//! Closed-form and quadrature envelopes used as comparison curves.

use crate::error::{Error, Result};
use crate::grid::DIM;

/// `((p−1)/C)^{1−1/p} t^{−(1−1/p)}` with `C = 4p(p−1)/(p+1)² · mass^{−1/(p−1)}`.
pub fn theoretical_lp_envelope(p: f64, mass: f64, t: f64) -> Result<f64> {
    if !(p > 1.0) || !(t > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "envelope needs p > 1, mass > 0, t > 0 (p={p}, mass={mass}, t={t})"
        )));
    }
    let c = 4.0 * p * (p - 1.0) / (p + 1.0).powi(2) * mass.powf(-1.0 / (p - 1.0));
    let e = 1.0 - 1.0 / p;
    Ok(((p - 1.0) / c).powf(e) * t.powf(-e))
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Upper solution of `y' = c t^{−(d−1)/d} y + C t^{−(d−2)/d}`, `y(0) = y0`:
/// `e^{c d t^{1/d}} (y0 + C ∫₀ᵗ e^{−c d s^{1/d}} s^{−(d−2)/d} ds)`.
/// The integral is taken in `v = s^{1/d}`, where the integrand `d v e^{−c d v}`
/// is smooth.
pub fn moment_envelope(m: f64, y0: f64, t: f64, c: f64, big_c: f64) -> Result<f64> {
    if !(m >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("moment envelope needs m >= 0, t >= 0 (m={m}, t={t})")));
    }
    let d = DIM as f64;
    let v_end = t.powf(1.0 / d);
    let integral = if big_c == 0.0 {
        0.0
    } else {
        let f = |v: f64| d * v * (-c * d * v).exp();
        adaptive_simpson(&f, 0.0, v_end, 1e-13 * (1.0 + v_end * v_end))
    };
    Ok((c * d * v_end).exp() * (y0 + big_c * integral))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_envelope_values() {
        let e = theoretical_lp_envelope(2.0, 1.0, 1.0).unwrap();
        assert!((e - (9.0f64 / 8.0).sqrt()).abs() < 1e-14);
        let doubled = theoretical_lp_envelope(2.0, 2.0, 1.0).unwrap();
        assert!((doubled / e - 2f64.sqrt()).abs() < 1e-14);
        assert!(theoretical_lp_envelope(2.0, 1.0, 1e-12).unwrap() > 1e5);
        assert!(theoretical_lp_envelope(1.0, 1.0, 1.0).is_err());
        assert!(theoretical_lp_envelope(2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn moment_envelope_trivial_and_monotone() {
        assert_eq!(moment_envelope(2.0, 3.5, 7.0, 0.0, 0.0).unwrap(), 3.5);
        let mut last = 0.0;
        for i in 0..50 {
            let y = moment_envelope(2.0, 1.0, 0.1 * i as f64, 0.3, 0.7).unwrap();
            assert!(y >= last);
            last = y;
        }
    }
}
