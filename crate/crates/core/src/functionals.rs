//! Norms, moments, entropy, energies and numerical checks of the functional
//! inequalities that drive the decay estimates.
//!
//! Every check returns an [`InequalityReport`]. A `0/0` ratio is reported as
//! a passing ratio of zero: each inequality holds trivially at `u ≡ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, Grid, ScalarField, SymMatrixField, VectorField, DIM};

const D: f64 = DIM as f64;

/// Weight exponent `m` of `⟨x⟩^m = (1+|x|²)^{m/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec(f64);

impl MomentSpec {
    pub fn new(m: f64) -> Result<Self> {
        if !(m >= 0.0) {
            return Err(Error::InvalidParameter(format!("moment order must be >= 0, got {m}")));
        }
        Ok(Self(m))
    }

    pub fn order(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub ratio: f64,
    pub params: Vec<(String, f64)>,
    pub threshold: Option<f64>,
    pub pass: bool,
    /// Family member with the worst ratio, when a family is evaluated.
    pub worst_case: Option<String>,
    /// Extra named terms (e.g. the separate right-hand terms).
    #[serde(default)]
    pub terms: Vec<(String, f64)>,
}

impl InequalityReport {
    pub fn new(name: &str, left: f64, right: f64, threshold: Option<f64>) -> Self {
        let ratio = if left == 0.0 {
            0.0
        } else if right == 0.0 {
            f64::INFINITY
        } else {
            left / right
        };
        let pass = match threshold {
            Some(t) => ratio.is_finite() && ratio <= t,
            None => ratio.is_finite(),
        };
        Self {
            name: name.to_string(),
            left,
            right,
            ratio,
            params: Vec::new(),
            threshold,
            pass,
            worst_case: None,
            terms: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.push((key.to_string(), value));
        self
    }

    pub fn with_term(mut self, key: &str, value: f64) -> Self {
        self.terms.push((key.to_string(), value));
        self
    }

    /// Report with the largest ratio in `reports`, tagged with its index.
    pub fn worst_of(reports: &[InequalityReport]) -> Option<InequalityReport> {
        let (i, worst) = reports
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio))?;
        let mut out = worst.clone();
        out.worst_case = Some(format!("member {i}"));
        out.pass = reports.iter().all(|r| r.pass);
        Some(out)
    }
}

fn check_p(p: f64, min: f64) -> Result<()> {
    if !(p >= min) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} below {min}")));
    }
    Ok(())
}

pub fn lp_norm(u: &ScalarField, p: f64) -> Result<f64> {
    check_p(p, 1.0)?;
    let vol = u.grid().cell_volume();
    let s: f64 = if p == 1.0 {
        u.data().iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        u.data().iter().map(|v| v * v).sum()
    } else {
        u.data().iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((s * vol).powf(1.0 / p))
}

pub fn linf_norm(u: &ScalarField) -> f64 {
    u.data().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `∑ |u| ⟨x⟩^m h³`.
pub fn weighted_l1m(u: &ScalarField, m: f64) -> Result<f64> {
    let m = MomentSpec::new(m)?.order();
    let grid = u.grid();
    let s: f64 = u
        .data()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let x = grid.center(idx);
            v.abs() * (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(0.5 * m)
        })
        .sum();
    Ok(s * grid.cell_volume())
}

/// `∑ u log u h³` over cells with `u > 0`.
pub fn entropy(u: &ScalarField) -> f64 {
    let s: f64 = u.data().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
    s * u.grid().cell_volume()
}

/// `(u)_+^{p/2}` for nonnegative-part powers.
pub fn positive_power(u: &ScalarField, exponent: f64) -> ScalarField {
    u.map(|v| if v > 0.0 { v.powf(exponent) } else { 0.0 })
}

/// `∑ ⟨A ∇w, ∇w⟩ h³` for a precomputed gradient.
pub fn quadratic_form(a: &SymMatrixField, grad: &VectorField) -> f64 {
    let grid = a.grid();
    let mut s = 0.0;
    for idx in 0..grid.num_cells() {
        let g = grad.at(idx);
        let m = a.packed(idx);
        s += m[0] * g[0] * g[0]
            + m[1] * g[1] * g[1]
            + m[2] * g[2] * g[2]
            + 2.0 * (m[3] * g[0] * g[1] + m[4] * g[0] * g[2] + m[5] * g[1] * g[2]);
    }
    s * grid.cell_volume()
}

/// `∑ ⟨A ∇u^{p/2}, ∇u^{p/2}⟩ h³`.
pub fn dissipation(u: &ScalarField, p: f64, a: &SymMatrixField) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("dissipation needs p > 1, got {p}")));
    }
    u.check_grid(a.grid())?;
    let w = positive_power(u, 0.5 * p);
    Ok(quadratic_form(a, &gradient(&w)))
}

/// `∑ |∇f|² ⟨x⟩^w h³`.
pub fn weighted_grad_energy(f: &ScalarField, weight_exponent: f64) -> f64 {
    let grid = f.grid();
    let g = gradient(f);
    let s: f64 = (0..grid.num_cells())
        .map(|idx| {
            let x = grid.center(idx);
            let v = g.at(idx);
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
                * (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(0.5 * weight_exponent)
        })
        .sum();
    s * grid.cell_volume()
}

/// Weighted Poincaré check `∫u^{p+1} ≤ ((p+1)/p)² ∫⟨A∇u^{p/2},∇u^{p/2}⟩`,
/// one report per normalization in `sweep`. `a` was computed with `a_c_d`.
pub fn check_weighted_poincare(
    u: &ScalarField,
    p: f64,
    a: &SymMatrixField,
    a_c_d: f64,
    sweep: &[f64],
) -> Result<Vec<InequalityReport>> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("poincare needs p > 1, got {p}")));
    }
    let left = lp_norm(&u.map(|v| v.max(0.0)), p + 1.0)?.powf(p + 1.0);
    let diss = dissipation(u, p, a)?;
    let constant = ((p + 1.0) / p).powi(2);
    Ok(sweep
        .iter()
        .map(|&c_d| {
            let right = constant * diss * c_d / a_c_d;
            InequalityReport::new("weighted_poincare", left, right, None)
                .with_param("p", p)
                .with_param("c_d", c_d)
        })
        .collect())
}

/// Weighted Sobolev terms: `(∑|f|^{2d/(d−2)}⟨x⟩^{−3d})^{(d−2)/d}` against
/// `∑|∇f|²⟨x⟩^{−d}` and `(∑|f|^s)^{2/s}`. The ratio is the empirical
/// constant `lhs / (grad + Ls)`.
pub fn check_weighted_sobolev(f: &ScalarField, s: f64) -> Result<InequalityReport> {
    let crit = 2.0 * D / (D - 2.0);
    if !(1.0..=crit).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [1, {crit}]")));
    }
    let grid = f.grid();
    let vol = grid.cell_volume();
    let bracket = grid.bracket();
    let lhs_sum: f64 = f
        .data()
        .iter()
        .zip(&bracket)
        .map(|(v, b)| v.abs().powf(crit) * b.powf(-3.0 * D))
        .sum();
    let lhs = (lhs_sum * vol).powf((D - 2.0) / D);
    let grad = weighted_grad_energy(f, -D);
    let ls = lp_norm(f, s)?.powi(2);
    Ok(InequalityReport::new("weighted_sobolev", lhs, grad + ls, None)
        .with_param("s", s)
        .with_term("grad", grad)
        .with_term("ls", ls))
}

/// Admissible `(p, q)` for the interpolation inequalities: `p > 1` and
/// `p + 2/d < q < (1 + 2/d) p`. Returns the weight order `m`.
pub fn interpolation_moment(p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("interpolation needs p > 1, got {p}")));
    }
    let (lo, hi) = (p + 2.0 / D, (1.0 + 2.0 / D) * p);
    if !(q > lo && q < hi) {
        return Err(Error::InvalidParameter(format!("q = {q} outside ({lo}, {hi})")));
    }
    Ok(3.0 * D * (D - 2.0) * (p - 1.0) / ((D + 2.0) * p - D * q))
}

/// Exponents `(a, b)` of `‖g‖_p` and `‖g⟨·⟩^m‖_1` in the interpolation bounds.
fn interpolation_exponents(p: f64, q: f64) -> (f64, f64) {
    (
        p * (q - p - 2.0 / D) / (p - 1.0),
        ((D + 2.0) * p - D * q) / (D * (p - 1.0)),
    )
}

/// Pure Hölder interpolation with constant one:
/// `‖g‖_q^q ≤ ‖⟨·⟩^{−3(d−2)/p} g‖_{dp/(d−2)}^p ‖g‖_p^a ‖g⟨·⟩^m‖_1^b`.
pub fn check_interpolation_star(g: &ScalarField, p: f64, q: f64) -> Result<InequalityReport> {
    let m = interpolation_moment(p, q)?;
    let (ea, eb) = interpolation_exponents(p, q);
    let grid = g.grid();
    let vol = grid.cell_volume();
    let bracket = grid.bracket();
    let left = lp_norm(g, q)?.powf(q);
    let weighted_sum: f64 = g
        .data()
        .iter()
        .zip(&bracket)
        .map(|(v, b)| v.abs().powf(D * p / (D - 2.0)) * b.powf(-3.0 * D))
        .sum();
    let weighted = (weighted_sum * vol).powf((D - 2.0) / D);
    let right = weighted * lp_norm(g, p)?.powf(ea) * weighted_l1m(g, m)?.powf(eb);
    Ok(InequalityReport::new("interpolation_star", left, right, Some(1.0 + 1e-6))
        .with_param("p", p)
        .with_param("q", q)
        .with_param("m", m))
}

/// Interpolation with the gradient term; the ratio is the empirical constant.
pub fn check_interpolation_full(g: &ScalarField, p: f64, q: f64) -> Result<InequalityReport> {
    let m = interpolation_moment(p, q)?;
    let (ea, eb) = interpolation_exponents(p, q);
    let left = lp_norm(g, q)?.powf(q);
    let lp = lp_norm(g, p)?;
    let grad = weighted_grad_energy(&positive_power(g, 0.5 * p), -D);
    let right = (grad + lp.powf(p)) * lp.powf(ea) * weighted_l1m(g, m)?.powf(eb);
    Ok(InequalityReport::new("interpolation_full", left, right, None)
        .with_param("p", p)
        .with_param("q", q)
        .with_param("m", m)
        .with_term("grad", grad))
}

/// `‖A‖_∞ / (‖u‖_p^{p(d−2)/(d(p−1))} ‖u‖_1^{(2p−d)/(d(p−1))})`, `p > d/2`.
pub fn a_bound_ratio(u: &ScalarField, p: f64, a: &SymMatrixField) -> Result<InequalityReport> {
    if !(p > D / 2.0) {
        return Err(Error::InvalidParameter(format!("A bound needs p > d/2, got {p}")));
    }
    let ea = p * (D - 2.0) / (D * (p - 1.0));
    let eb = (2.0 * p - D) / (D * (p - 1.0));
    let right = lp_norm(u, p)?.powf(ea) * lp_norm(u, 1.0)?.powf(eb);
    Ok(InequalityReport::new("a_bound", a.sup_spectral_norm(), right, None).with_param("p", p))
}

/// `‖div A‖_∞ / (‖u‖_p^{p(d−1)/(d(p−1))} ‖u‖_1^{(p−d)/(d(p−1))})`, `p > d`.
pub fn div_bound_ratio(u: &ScalarField, p: f64, div_a: &VectorField) -> Result<InequalityReport> {
    if !(p > D) {
        return Err(Error::InvalidParameter(format!("div A bound needs p > d, got {p}")));
    }
    let ea = p * (D - 1.0) / (D * (p - 1.0));
    let eb = (p - D) / (D * (p - 1.0));
    let right = lp_norm(u, p)?.powf(ea) * lp_norm(u, 1.0)?.powf(eb);
    Ok(InequalityReport::new("div_a_bound", div_a.sup_norm(), right, None).with_param("p", p))
}

/// Both coefficient bounds at one exponent; needs `p > d`.
pub fn coefficient_bound_ratios(
    u: &ScalarField,
    p: f64,
    a: &SymMatrixField,
    div_a: &VectorField,
) -> Result<(InequalityReport, InequalityReport)> {
    Ok((a_bound_ratio(u, p, a)?, div_bound_ratio(u, p, div_a)?))
}

/// Random test family: sums of 1–5 Gaussians, widths in `[2h, L/8]`,
/// centers in the inner half-box.
pub fn random_family(grid: &Grid, seed: u64, size: usize) -> Result<Vec<ScalarField>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let count = rng.gen_range(1..=5);
            let member_seed = rng.gen();
            crate::grid::sample_preset(
                grid,
                &crate::grid::Preset::RandomBumps {
                    seed: member_seed,
                    count,
                    mass: 1.0,
                },
            )
        })
        .collect()
}
