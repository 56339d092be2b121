//! Level-set machinery: exponent calculus, dyadic truncation schedules,
//! level energies and the implied constants of the energy recursion.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{linf_norm, positive_power, quadratic_form, weighted_grad_energy};
use crate::grid::{gradient, ScalarField, SymMatrixField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiParams {
    pub d: usize,
    pub p: f64,
    pub m: f64,
    pub gamma: f64,
    pub beta1: f64,
    pub epsilon: f64,
    pub m_min: f64,
    pub valid: bool,
    /// The first violated constraint, if any.
    pub violation: Option<String>,
}

/// Exponents for dimension `d`, integrability `p` and weight order `m`.
/// Invalid inputs are reported through `valid`, never as an error.
pub fn parameters(d: usize, p: f64, m: f64) -> DeGiorgiParams {
    let df = d as f64;
    let gamma = -1.0 + 2.0 * p / df - 3.0 * (df - 2.0) * (p - 1.0) / m;
    let beta1 = 2.0 / df - 3.0 * (df - 2.0) / m;
    let epsilon = (1.0 - 2.0 / df) / (1.0 + gamma);
    let m_min = 1.5 * df * (df - 2.0) * f64::max(1.0, (p - 1.0) / (p - df / 2.0));
    let violation = if d < 3 {
        Some(format!("needs d >= 3, got {d}"))
    } else if !(p > df / 2.0) {
        Some(format!("needs p > d/2 = {}, got {p}", df / 2.0))
    } else if !(m > m_min) {
        Some(format!("needs m > {m_min}, got {m}"))
    } else {
        None
    };
    DeGiorgiParams {
        d,
        p,
        m,
        gamma,
        beta1,
        epsilon,
        m_min,
        valid: violation.is_none(),
        violation,
    }
}

/// Levels `C_k = M(1 − 2^{−k})` and gates `T_k = (t/2)(1 − 2^{−k})`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub cap: f64,
    pub t: f64,
    pub depth: usize,
    pub levels: Vec<f64>,
    pub gates: Vec<f64>,
}

impl LevelSchedule {
    /// `T_k` for any `k`, including `k = K + 1`.
    pub fn gate(&self, k: usize) -> f64 {
        0.5 * self.t * (1.0 - 0.5f64.powi(k as i32))
    }
}

pub fn schedule(cap: f64, t: f64, depth: usize) -> Result<LevelSchedule> {
    if !(cap > 0.0) || !(t > 0.0) || depth == 0 {
        return Err(Error::InvalidParameter(format!(
            "schedule needs M > 0, t > 0, K >= 1 (M={cap}, t={t}, K={depth})"
        )));
    }
    let frac = |k: usize| 1.0 - 0.5f64.powi(k as i32);
    Ok(LevelSchedule {
        cap,
        t,
        depth,
        levels: (0..=depth).map(|k| cap * frac(k)).collect(),
        gates: (0..=depth).map(|k| 0.5 * t * frac(k)).collect(),
    })
}

/// `(u − c)_+`.
pub fn truncate(u: &ScalarField, c: f64) -> ScalarField {
    u.map(|v| (v - c).max(0.0))
}

/// Largest value over cells of `(u−c)_+ − (u−c')_+^{1+a}/(c−c')^a` for
/// `c' < c`; the pointwise truncation inequality says this is `≤ 0`.
pub fn truncation_gap(u: &ScalarField, c_prev: f64, c: f64, a: f64) -> Result<f64> {
    if !(c > c_prev) || !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("needs c' < c and a > 0 (c'={c_prev}, c={c}, a={a})")));
    }
    let gap = c - c_prev;
    Ok(u
        .data()
        .iter()
        .map(|&v| (v - c).max(0.0) - (v - c_prev).max(0.0).powf(1.0 + a) / gap.powf(a))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Per-level quantities of one time sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSample {
    pub time: f64,
    /// Rectangle-rule weight: the time until the next sample.
    pub weight: f64,
    /// `∑ (u−C_k)_+^p h³`.
    pub level_mass: Vec<f64>,
    /// `∑ |∇(u−C_k)_+^{p/2}|² ⟨x⟩^{−d} h³`.
    pub grad_weighted: Vec<f64>,
    /// `∑ ⟨A∇(u−C_k)_+^{p/2}, ∇(u−C_k)_+^{p/2}⟩ h³`, when `A` is given.
    pub grad_a: Option<Vec<f64>>,
}

pub fn level_sample(
    u: &ScalarField,
    a: Option<&SymMatrixField>,
    sched: &LevelSchedule,
    p: f64,
    time: f64,
    weight: f64,
) -> Result<LevelSample> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("level energies need p > 1, got {p}")));
    }
    let vol = u.grid().cell_volume();
    let d = crate::grid::DIM as f64;
    let mut level_mass = Vec::with_capacity(sched.levels.len());
    let mut grad_weighted = Vec::with_capacity(sched.levels.len());
    let mut grad_a = a.map(|_| Vec::with_capacity(sched.levels.len()));
    for &c in &sched.levels {
        let cut = truncate(u, c);
        level_mass.push(cut.data().iter().map(|v| v.powf(p)).sum::<f64>() * vol);
        let w = positive_power(&cut, 0.5 * p);
        grad_weighted.push(weighted_grad_energy(&w, -d));
        if let (Some(a), Some(out)) = (a, grad_a.as_mut()) {
            out.push(quadratic_form(a, &gradient(&w)));
        }
    }
    Ok(LevelSample {
        time,
        weight,
        level_mass,
        grad_weighted,
        grad_a,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub schedule: LevelSchedule,
    pub p: f64,
    pub c_p: f64,
    /// `E_k` with the `⟨x⟩^{−d}` weighted gradient term.
    pub energies: Vec<f64>,
    /// `E_k` with the `A`-weighted gradient term, when available.
    pub energies_a: Option<Vec<f64>>,
    pub samples_per_level: Vec<usize>,
}

/// Default `C(p) = 4(p−1)/p`.
pub fn default_c_p(p: f64) -> f64 {
    4.0 * (p - 1.0) / p
}

/// `E_k = sup_{τ ∈ (T_{k+1}, t)} ∑(u−C_k)_+^p + C(p) ∫_{T_{k+1}}^t (gradient term)`,
/// sup over samples and rectangle rule in time.
pub fn energies(samples: &[LevelSample], sched: &LevelSchedule, p: f64, c_p: f64) -> Result<EnergySeries> {
    let t = sched.t;
    let dense = samples.iter().filter(|s| s.time > 0.25 * t && s.time < t).count();
    if dense < 16 {
        return Err(Error::InsufficientSamples(format!(
            "{dense} samples in (t/4, t); at least 16 needed"
        )));
    }
    let have_a = samples.iter().all(|s| s.grad_a.is_some());
    let mut out = Vec::new();
    let mut out_a = Vec::new();
    let mut counts = Vec::new();
    for k in 0..=sched.depth {
        let lo = sched.gate(k + 1);
        let window: Vec<&LevelSample> = samples.iter().filter(|s| s.time > lo && s.time < t).collect();
        let sup = window.iter().map(|s| s.level_mass[k]).fold(0.0, f64::max);
        let grad: f64 = window.iter().map(|s| s.grad_weighted[k] * s.weight).sum();
        out.push(sup + c_p * grad);
        if have_a {
            let grad_a: f64 = window
                .iter()
                .map(|s| s.grad_a.as_ref().map_or(0.0, |g| g[k]) * s.weight)
                .sum();
            out_a.push(sup + c_p * grad_a);
        }
        counts.push(window.len());
    }
    Ok(EnergySeries {
        schedule: sched.clone(),
        p,
        c_p,
        energies: out,
        energies_a: have_a.then_some(out_a),
        samples_per_level: counts,
    })
}

/// Builds level samples from stored `(t, u, A)` snapshots; weights are the
/// gaps to the next snapshot (the last one gets zero weight).
pub fn level_samples_from_snapshots(
    snaps: &[(f64, ScalarField, Option<SymMatrixField>)],
    sched: &LevelSchedule,
    p: f64,
) -> Result<Vec<LevelSample>> {
    snaps
        .iter()
        .enumerate()
        .map(|(i, (t, u, a))| {
            let weight = snaps.get(i + 1).map_or(0.0, |next| next.0 - t);
            level_sample(u, a.as_ref(), sched, p, *t, weight)
        })
        .collect()
}

/// Collects level samples during a run. The cap `M` is fixed at the first
/// step inside `(t/4, t)` as `cap_factor · ‖u‖_∞`, which bounds `u` on the
/// whole window when the sup norm does not increase.
#[derive(Debug, Clone)]
pub struct LevelAccumulator {
    pub t: f64,
    pub depth: usize,
    pub p: f64,
    pub cap_factor: f64,
    pub with_a: bool,
    sched: Option<LevelSchedule>,
    samples: Vec<LevelSample>,
    window_sup: f64,
}

impl LevelAccumulator {
    pub fn new(t: f64, depth: usize, p: f64, cap_factor: f64, with_a: bool) -> Self {
        Self {
            t,
            depth,
            p,
            cap_factor,
            with_a,
            sched: None,
            samples: Vec::new(),
            window_sup: 0.0,
        }
    }

    /// Feed the state at the start of a step of length `dt`.
    pub fn observe(&mut self, time: f64, dt: f64, u: &ScalarField, a: &SymMatrixField) -> Result<()> {
        if !(time > 0.25 * self.t && time < self.t) {
            return Ok(());
        }
        let linf = linf_norm(u);
        self.window_sup = self.window_sup.max(linf);
        if self.sched.is_none() {
            let cap = self.cap_factor * linf;
            self.sched = Some(schedule(if cap > 0.0 { cap } else { 1.0 }, self.t, self.depth)?);
        }
        let sched = self.sched.as_ref().expect("set above");
        let weight = dt.min(self.t - time);
        let a = self.with_a.then_some(a);
        self.samples.push(level_sample(u, a, sched, self.p, time, weight)?);
        Ok(())
    }

    /// Largest sampled `‖u‖_∞` in the window.
    pub fn window_sup(&self) -> f64 {
        self.window_sup
    }

    pub fn finish(&self, c_p: f64) -> Result<EnergySeries> {
        let sched = self
            .sched
            .as_ref()
            .ok_or_else(|| Error::InsufficientSamples("no samples in (t/4, t)".into()))?;
        energies(&self.samples, sched, self.p, c_p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    /// `(k, κ_k)` for levels with `E_{k−1} > 0`.
    pub kappa: Vec<(usize, f64)>,
    pub max_kappa: f64,
    /// Slope of `log E_k` against `k` over positive energies.
    pub geometric_rate: Option<f64>,
    /// Fitted ratio of successive differences of `log E_k`: equals `1+β₁`
    /// for an exactly super-geometric series.
    pub super_exponent: Option<f64>,
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Super-geometric exponent of a positive series `E_k`: least-squares slope
/// of `log |Δ log E_k|` against `k`, exponentiated.
pub fn super_geometric_exponent(series: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = series.iter().take_while(|e| **e > 0.0).map(|e| e.ln()).collect();
    let diffs: Vec<(f64, f64)> = logs
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k as f64, w[1] - w[0]))
        .filter(|(_, d)| *d != 0.0)
        .collect();
    let xs: Vec<f64> = diffs.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = diffs.iter().map(|d| d.1.abs().ln()).collect();
    least_squares_slope(&xs, &ys).map(f64::exp)
}

/// `κ_k = E_k t M^{1+γ} / E_{k−1}^{1+β₁}` per level.
pub fn recursion_report(series: &[f64], params: &DeGiorgiParams, cap: f64, t: f64) -> Result<RecursionReport> {
    if !params.valid {
        return Err(Error::InvalidParameter(format!(
            "invalid exponents: {}",
            params.violation.clone().unwrap_or_default()
        )));
    }
    let kappa: Vec<(usize, f64)> = (1..series.len())
        .filter(|&k| series[k - 1] > 0.0)
        .map(|k| (k, series[k] * t * cap.powf(1.0 + params.gamma) / series[k - 1].powf(1.0 + params.beta1)))
        .collect();
    let max_kappa = kappa.iter().map(|k| k.1).fold(0.0, f64::max);
    let pos: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .take_while(|(_, e)| **e > 0.0)
        .map(|(k, e)| (k as f64, e.ln()))
        .collect();
    let xs: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pos.iter().map(|p| p.1).collect();
    Ok(RecursionReport {
        kappa,
        max_kappa,
        geometric_rate: least_squares_slope(&xs, &ys),
        super_exponent: super_geometric_exponent(series),
    })
}

/// `degiorgi.csv` contents: `k,C_k,T_k,E_k,kappa_k` (empty κ where undefined).
pub fn degiorgi_csv(series: &EnergySeries, report: Option<&RecursionReport>) -> String {
    let mut out = String::from("k,C_k,T_k,E_k,kappa_k\n");
    for (k, e) in series.energies.iter().enumerate() {
        let kappa = report
            .and_then(|r| r.kappa.iter().find(|(j, _)| *j == k))
            .map(|(_, v)| format!("{v:e}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{k},{:e},{:e},{e:e},{kappa}",
            series.schedule.levels[k], series.schedule.gates[k]
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_preset, Preset};

    #[test]
    fn worked_parameters() {
        let q = parameters(3, 3.0, 27.0);
        assert!(q.valid);
        assert!((q.gamma - 7.0 / 9.0).abs() < 1e-12);
        assert!((q.beta1 - 5.0 / 9.0).abs() < 1e-12);
        assert!((q.epsilon - 0.1875).abs() < 1e-12);
        assert!(q.epsilon <= 0.25);
        let bad = parameters(3, 2.0, 9.0);
        assert!(!bad.valid);
        assert!((bad.m_min - 9.0).abs() < 1e-12);
        let limit = parameters(3, 3.0, 1e15);
        assert!((limit.gamma - 1.0).abs() < 1e-12);
        assert!(!parameters(3, 1.4, 100.0).valid);
    }

    #[test]
    fn epsilon_bound_for_large_moments() {
        for p in [2.5, 3.0, 4.0, 8.0] {
            for m in [18.5, 30.0, 100.0] {
                let q = parameters(3, p, m);
                assert!(q.valid);
                assert!(q.epsilon > 0.0 && q.epsilon <= 1.0 / (p + 1.0) + 1e-15, "{p} {m}");
            }
        }
    }

    #[test]
    fn dyadic_schedule() {
        let s = schedule(1.0, 1.0, 3).unwrap();
        assert_eq!(s.levels, vec![0.0, 0.5, 0.75, 0.875]);
        assert_eq!(s.gates, vec![0.0, 0.25, 0.375, 0.4375]);
        let s = schedule(3.0, 2.0, 10).unwrap();
        for k in 1..=10 {
            assert!((s.levels[k] - s.levels[k - 1] - 3.0 * 0.5f64.powi(k as i32)).abs() < 1e-15);
            assert!((s.gate(k + 1) - s.gate(k) - 2.0 * 0.5f64.powi(k as i32 + 2)).abs() < 1e-15);
        }
        assert!(schedule(0.0, 1.0, 3).is_err());
        assert!(schedule(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn truncation_cases() {
        let g = make_grid(16, 8.0).unwrap();
        let u = sample_preset(&g, &Preset::Gaussian { mass: 1.0, sigma: 1.0, center: [0.0; 3] }).unwrap();
        assert_eq!(truncate(&u, 0.0), u);
        assert!(truncate(&u, u.max()).data().iter().all(|v| *v == 0.0));
        for a in [0.5, 1.0, 2.0] {
            let gap = truncation_gap(&u, 0.01, 0.03, a).unwrap();
            assert!(gap <= 1e-13, "{gap}");
        }
    }

    #[test]
    fn zero_trajectory_has_zero_energies() {
        let g = make_grid(16, 8.0).unwrap();
        let s = schedule(1.0, 1.0, 4).unwrap();
        let snaps: Vec<_> = (0..20).map(|i| (0.26 + 0.035 * i as f64, ScalarField::zeros(g), None)).collect();
        let samples = level_samples_from_snapshots(&snaps, &s, 3.0).unwrap();
        let series = energies(&samples, &s, 3.0, default_c_p(3.0)).unwrap();
        assert!(series.energies.iter().all(|e| *e == 0.0));
        let report = recursion_report(&series.energies, &parameters(3, 3.0, 27.0), 1.0, 1.0).unwrap();
        assert!(report.kappa.is_empty());
        let too_few = &samples[..10];
        assert!(energies(too_few, &s, 3.0, 1.0).is_err());
    }

    #[test]
    fn synthetic_super_geometric_series() {
        let beta: f64 = 5.0 / 9.0;
        let series: Vec<f64> = (0..8).map(|k| 2.0 * 0.3f64.powf((1.0 + beta).powi(k))).collect();
        let fit = super_geometric_exponent(&series).unwrap();
        assert!((fit - (1.0 + beta)).abs() < 1e-6, "{fit}");
    }

    #[test]
    fn csv_layout() {
        let s = schedule(1.0, 1.0, 2).unwrap();
        let series = EnergySeries {
            schedule: s,
            p: 3.0,
            c_p: 1.0,
            energies: vec![1.0, 0.5, 0.1],
            energies_a: None,
            samples_per_level: vec![20, 18, 17],
        };
        let csv = degiorgi_csv(&series, None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,C_k,T_k,E_k,kappa_k");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0e0,0e0,1e0,"));
    }
}
