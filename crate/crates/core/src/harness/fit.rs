//! Log-log rate fits, decay windows and envelope fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{moment_envelope, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares slope of `log value` against `log t` over samples with
/// `t` in the closed window.
pub fn fit_decay_rate(samples: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let inside: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if inside.len() < 5 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples in [{}, {}]; at least 5 needed",
            inside.len(),
            window.0,
            window.1
        )));
    }
    if let Some(&(t, v)) = inside.iter().find(|&&(t, v)| !(t > 0.0) || !(v > 0.0)) {
        return Err(Error::InsufficientSamples(format!("nonpositive sample ({t}, {v})")));
    }
    let xs: Vec<f64> = inside.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|s| s.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("all samples share one time".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms,
        window,
        samples: inside.len(),
    })
}

fn default_boundary_tol() -> f64 {
    1e-4
}
fn default_transient_steps() -> f64 {
    10.0
}
fn default_linf_fraction() -> Option<f64> {
    Some(0.25)
}

/// How a decay window is cut out of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Requested window; clipped by the rules below.
    #[serde(default)]
    pub t_a: Option<f64>,
    #[serde(default)]
    pub t_b: Option<f64>,
    /// The window ends before the first sample whose boundary-shell mass
    /// fraction reaches this value.
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    /// The window starts no earlier than this many first steps.
    #[serde(default = "default_transient_steps")]
    pub transient_steps: f64,
    /// The window starts once `‖u‖_∞` has dropped to this fraction of its
    /// initial value, i.e. once the data has forgotten its initial width.
    #[serde(default = "default_linf_fraction")]
    pub linf_fraction: Option<f64>,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            t_a: None,
            t_b: None,
            boundary_tol: default_boundary_tol(),
            transient_steps: default_transient_steps(),
            linf_fraction: default_linf_fraction(),
        }
    }
}

/// Decay window of a trajectory: `[start, end]` with both ends at samples.
pub fn decay_window(traj: &Trajectory, spec: &WindowSpec) -> Result<(f64, f64)> {
    let recs = &traj.records;
    let mut start = spec.transient_steps * traj.first_dt;
    if let Some(t_a) = spec.t_a {
        start = start.max(t_a);
    }
    if let Some(frac) = spec.linf_fraction {
        let limit = frac * recs[0].linf;
        let hit = recs
            .iter()
            .find(|r| r.linf <= limit)
            .ok_or_else(|| Error::InsufficientSamples(format!("sup norm never drops to {frac} of its initial value")))?;
        start = start.max(hit.time);
    }
    let mut end = spec.t_b.unwrap_or(f64::INFINITY);
    if let Some(breach) = recs.iter().find(|r| r.boundary_fraction >= spec.boundary_tol) {
        let before = recs
            .iter()
            .filter(|r| r.time < breach.time)
            .map(|r| r.time)
            .fold(0.0, f64::max);
        end = end.min(before);
    }
    end = end.min(recs.last().map_or(0.0, |r| r.time));
    if !(end > start) {
        return Err(Error::InsufficientSamples(format!("empty decay window [{start}, {end}]")));
    }
    Ok((start, end))
}

/// `max/min` of `t^a · value` over samples inside the window.
pub fn scaled_variation(samples: &[(f64, f64)], a: f64, window: (f64, f64)) -> f64 {
    let vals: Vec<f64> = samples
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|(t, v)| t.powf(a) * v)
        .collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFit {
    pub m: f64,
    pub y0: f64,
    pub c: f64,
    pub big_c: f64,
    /// Largest `y(t_i) / envelope(t_i)` over samples.
    pub max_ratio: f64,
    pub nondecreasing: bool,
}

/// Fits `(c, C)` for `y' ≤ c t^{−2/3} y + C t^{−1/3}` to a sampled moment
/// series starting at `t = 0`. `c ≥ 0` comes from nonnegative least squares
/// on the increments; `C` is then the smallest value making the envelope a
/// supersolution across every sampled increment.
pub fn fit_moment_envelope(m: f64, series: &[(f64, f64)]) -> Result<MomentFit> {
    if series.len() < 3 || series[0].0 != 0.0 {
        return Err(Error::InsufficientSamples("moment fit needs >= 3 samples starting at t = 0".into()));
    }
    let d = crate::grid::DIM as f64;
    let e1 = 1.0 / d;
    let e2 = 2.0 / d;
    // ∫ s^{−(d−1)/d} and ∫ s^{−(d−2)/d} over each increment
    let incr: Vec<(f64, f64, f64, f64)> = series
        .windows(2)
        .map(|w| {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            let i1 = d * (t1.powf(e1) - t0.powf(e1));
            let i2 = d / 2.0 * (t1.powf(e2) - t0.powf(e2));
            (y1 - y0, y0 * i1, i2, y0)
        })
        .collect();
    let (mut saa, mut sab, mut sbb, mut sya, mut syb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(dy, a, b, _) in &incr {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sya += dy * a;
        syb += dy * b;
    }
    let det = saa * sbb - sab * sab;
    let mut c = if det.abs() > 0.0 { (sya * sbb - syb * sab) / det } else { 0.0 };
    let big_c_ls = if det.abs() > 0.0 { (syb * saa - sya * sab) / det } else { 0.0 };
    if !(c >= 0.0) || !(big_c_ls >= 0.0) {
        // active set: one coefficient pinned at zero
        let c_only = if saa > 0.0 { (sya / saa).max(0.0) } else { 0.0 };
        let resid_c: f64 = incr.iter().map(|&(dy, a, _, _)| (dy - c_only * a).powi(2)).sum();
        let k_only = if sbb > 0.0 { (syb / sbb).max(0.0) } else { 0.0 };
        let resid_k: f64 = incr.iter().map(|&(dy, _, b, _)| (dy - k_only * b).powi(2)).sum();
        c = if resid_c <= resid_k { c_only } else { 0.0 };
    }
    let big_c = incr
        .iter()
        .filter(|x| x.2 > 0.0)
        .map(|&(dy, a, b, _)| (dy - c * a) / b)
        .fold(0.0, f64::max);
    let y0 = series[0].1;
    let mut max_ratio: f64 = 0.0;
    for &(t, y) in series {
        let env = moment_envelope(m, y0, t, c, big_c)?;
        max_ratio = max_ratio.max(y / env);
    }
    let nondecreasing = series.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-8));
    Ok(MomentFit {
        m,
        y0,
        c,
        big_c,
        max_ratio,
        nondecreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&t: &f64| (t, t.powf(-0.5))).collect();
        let fit = fit_decay_rate(&s, (1.0, 16.0)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.samples, 5);
    }

    #[test]
    fn constant_series_and_errors() {
        let s: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, 3.0)).collect();
        assert!(fit_decay_rate(&s, (0.0, 10.0)).unwrap().slope.abs() < 1e-14);
        assert!(fit_decay_rate(&s, (0.0, 3.0)).is_err());
        let mut bad = s.clone();
        bad[2].1 = 0.0;
        assert!(fit_decay_rate(&bad, (0.0, 10.0)).is_err());
    }

    #[test]
    fn variation_of_scaled_series() {
        let s: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, (i as f64).powf(-0.5))).collect();
        assert!((scaled_variation(&s, 0.5, (1.0, 10.0)) - 1.0).abs() < 1e-12);
        assert!((scaled_variation(&s, 0.0, (1.0, 4.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn moment_fit_bounds_its_series() {
        // y = 1 + t + sin-like wiggle, nondecreasing
        let s: Vec<(f64, f64)> = (0..40).map(|i| {
            let t = 0.25 * i as f64;
            (t, 1.0 + t + 0.1 * (t - t.sin()))
        }).collect();
        let fit = fit_moment_envelope(2.0, &s).unwrap();
        assert!(fit.c >= 0.0 && fit.big_c >= 0.0);
        assert!(fit.max_ratio <= 1.0 + 1e-9, "{}", fit.max_ratio);
        assert!(fit.nondecreasing);
        assert!(fit_moment_envelope(2.0, &s[1..]).is_err());
    }
}
