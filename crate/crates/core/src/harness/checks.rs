//! Acceptance evaluators. Each returns an [`AcceptanceItem`] plus a detail
//! document that the harness writes to `checks/<name>.json`.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::fit::{decay_window, fit_decay_rate, fit_moment_envelope, scaled_variation, WindowSpec};
use super::settings::{DeGiorgiSettings, FamilySettings, HomogeneitySettings, KernelSettings, PoincareSettings};
use crate::degiorgi::{default_c_p, parameters, recursion_report, schedule, truncation_gap, EnergySeries, LevelAccumulator, RecursionReport};
use crate::error::{Error, Result};
use crate::fft::ConvolutionPlan;
use crate::functionals::{check_interpolation_star, check_weighted_poincare, coefficient_bound_ratios, random_family, InequalityReport};
use crate::grid::{gradient, make_grid, sample_preset, Grid, Preset, ScalarField, DIM};
use crate::kernel::{compute_a, compute_div_a, newtonian_potential, quadrature_oracle_a, reference, sym_eigenvalues, KernelTable, DEFAULT_C_D};
use crate::solver::{run_observed, theoretical_lp_envelope, Mode, SolverConfig, Trajectory};

/// `(id, name)` of every acceptance item, in order.
pub const CRITERIA: [(u8, &str); 13] = [
    (1, "kernel_oracle"),
    (2, "structural_identities"),
    (3, "conservation"),
    (4, "coefficient_homogeneity"),
    (5, "interpolation_truncation"),
    (6, "lp_decay"),
    (7, "heat_comparison"),
    (8, "linf_decay"),
    (9, "moment_envelope"),
    (10, "level_energies"),
    (11, "poincare_sweep"),
    (12, "ellipticity_floor"),
    (13, "plot_determinism"),
];

/// Normalization at which the double divergence of `A[u]` returns `−u`.
pub const CALIBRATED_C_D: f64 = DEFAULT_C_D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceItem {
    pub id: u8,
    pub name: String,
    pub status: Status,
    pub threshold: String,
    pub measured: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn criterion_name(id: u8) -> String {
    CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or_else(|| format!("item_{id}"), |c| c.1.to_string())
}

impl AcceptanceItem {
    pub fn evaluated(id: u8, pass: bool, threshold: &str, measured: Value) -> Self {
        Self {
            id,
            name: criterion_name(id),
            status: if pass { Status::Pass } else { Status::Fail },
            threshold: threshold.to_string(),
            measured,
            note: None,
        }
    }

    pub fn not_run(id: u8, note: &str) -> Self {
        Self {
            id,
            name: criterion_name(id),
            status: Status::NotRun,
            threshold: String::new(),
            measured: Value::Null,
            note: Some(note.to_string()),
        }
    }

    /// A failed item carrying the error that stopped its evaluation.
    pub fn errored(id: u8, err: &dyn std::fmt::Display) -> Self {
        Self {
            id,
            name: criterion_name(id),
            status: Status::Fail,
            threshold: String::new(),
            measured: Value::Null,
            note: Some(format!("evaluation aborted: {err}")),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub item: AcceptanceItem,
    pub detail: Value,
}

/// JSON cannot hold infinities; they are written as strings.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn frobenius(m: &[f64; 6]) -> f64 {
    (m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + 2.0 * (m[3] * m[3] + m[4] * m[4] + m[5] * m[5])).sqrt()
}

fn nearest_cell(grid: &Grid, x: [f64; 3]) -> usize {
    let n = grid.n();
    let c = x.map(|v| (((v + 0.5 * grid.len()) / grid.h()).floor().max(0.0) as usize).min(n - 1));
    grid.index(c[0], c[1], c[2])
}

fn gaussian(grid: &Grid, mass: f64, sigma: f64) -> Result<ScalarField> {
    sample_preset(grid, &Preset::Gaussian { mass, sigma, center: [0.0; 3] })
}

struct Kernel {
    grid: Grid,
    plan: ConvolutionPlan,
    table: KernelTable,
}

impl Kernel {
    fn new(n: usize, len: f64) -> Result<Self> {
        let grid = make_grid(n, len)?;
        let plan = ConvolutionPlan::new(&grid);
        let table = KernelTable::new(&grid, &plan, DEFAULT_C_D)?;
        Ok(Self { grid, plan, table })
    }
}

/// FFT coefficient against the direct-sum oracle at random cells, and the
/// refinement order of its error against the analytic Gaussian coefficient.
pub fn kernel_oracle(s: &KernelSettings) -> Result<CheckOutcome> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s.seed);
    let points: Vec<[f64; 3]> = (0..s.points)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-s.region..s.region)))
        .collect();
    let mut per_grid = Vec::new();
    let mut oracle_max = Vec::new();
    let mut exact_rms = Vec::new();
    let mut spacing = Vec::new();
    for n in [s.n_coarse, s.n_fine] {
        let k = Kernel::new(n, s.len)?;
        let u = gaussian(&k.grid, 1.0, s.sigma)?;
        let a = compute_a(&u, &k.table, &k.plan)?;
        let cells: Vec<usize> = points.iter().map(|x| nearest_cell(&k.grid, *x)).collect();
        let oracle = quadrature_oracle_a(&u, &cells, DEFAULT_C_D);
        let mut rows = Vec::new();
        let (mut worst, mut sq) = (0.0f64, 0.0);
        for (&cell, o) in cells.iter().zip(&oracle) {
            let fft = a.packed(cell);
            let diff: [f64; 6] = std::array::from_fn(|i| fft[i] - o[i]);
            let err_oracle = frobenius(&diff) / frobenius(o);
            let x = k.grid.center(cell);
            let exact = reference::gaussian_a(1.0, s.sigma, [0.0; 3], x, DEFAULT_C_D);
            let diff: [f64; 6] = std::array::from_fn(|i| fft[i] - exact[i]);
            let err_exact = frobenius(&diff) / frobenius(&exact);
            worst = worst.max(err_oracle);
            sq += err_exact * err_exact;
            rows.push(json!({"cell": cell, "x": x, "err_vs_oracle": err_oracle, "err_vs_analytic": err_exact}));
        }
        let rms = (sq / cells.len() as f64).sqrt();
        per_grid.push(json!({"n": n, "h": k.grid.h(), "max_err_vs_oracle": worst, "rms_err_vs_analytic": rms, "points": rows}));
        oracle_max.push(worst);
        exact_rms.push(rms);
        spacing.push(k.grid.h());
    }
    let order = (exact_rms[0] / exact_rms[1]).ln() / (spacing[0] / spacing[1]).ln();
    let pass = oracle_max[0] <= 0.01 && oracle_max[1] <= 0.01 && order >= 1.8;
    let measured = json!({
        "max_err_vs_oracle": oracle_max,
        "rms_err_vs_analytic": exact_rms,
        "order": order,
    });
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(1, pass, "oracle rel err <= 1e-2; order >= 1.8", measured),
        detail: json!({"sigma": s.sigma, "grids": per_grid, "order": order}),
    })
}

/// Trace and divergence identities, exact symmetry and the PSD floor on
/// a Gaussian and a two-bump field.
pub fn structural_identities(n: usize, len: f64) -> Result<CheckOutcome> {
    let k = Kernel::new(n, len)?;
    let fields = [
        ("gaussian", gaussian(&k.grid, 1.0, 1.0)?),
        (
            "two_bumps",
            sample_preset(&k.grid, &Preset::TwoBumps { mass: 1.0, sigma: 1.0, separation: 3.0 })?,
        ),
    ];
    let factor = (DIM - 1) as f64 * DEFAULT_C_D;
    let mut rows = Vec::new();
    let (mut trace_worst, mut div_worst, mut psd_worst) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut symmetric = true;
    for (name, u) in &fields {
        let a = compute_a(u, &k.table, &k.plan)?;
        let phi = newtonian_potential(u, &k.table, &k.plan)?;
        let tr = a.trace();
        let (mut num_t, mut den_t) = (0.0f64, 0.0f64);
        for (t, p) in tr.data().iter().zip(phi.data()) {
            num_t = num_t.max((t - factor * p).abs());
            den_t = den_t.max((factor * p).abs());
        }
        let trace_rel = num_t / den_t;

        let div = compute_div_a(u, &k.table, &k.plan)?;
        let grad = gradient(&phi);
        let (mut num_d, mut den_d) = (0.0, 0.0);
        for axis in 0..DIM {
            for (x, g) in div.component(axis).iter().zip(grad.component(axis)) {
                num_d += (x - factor * g).powi(2);
                den_d += x * x;
            }
        }
        let div_rel = (num_d / den_d).sqrt();

        // λ_min / λ_max per cell; the floor asks for ≥ −1e−12
        let mut psd = f64::INFINITY;
        for idx in 0..k.grid.num_cells() {
            let m = a.at(idx);
            symmetric &= (0..3).all(|i| (0..3).all(|j| m[i][j] == m[j][i]));
            let ev = sym_eigenvalues(a.packed(idx));
            let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
            if hi > 0.0 {
                psd = psd.min(lo / hi);
            } else if lo < 0.0 {
                psd = f64::NEG_INFINITY;
            }
        }
        trace_worst = trace_worst.max(trace_rel);
        div_worst = div_worst.max(div_rel);
        psd_worst = psd_worst.min(psd);
        rows.push(json!({"field": name, "trace_rel": trace_rel, "div_rel_l2": div_rel, "min_eig_ratio": num(psd)}));
    }
    let pass = trace_worst <= 1e-10 && div_worst <= 1e-3 && symmetric && psd_worst >= -1e-12;
    let measured = json!({
        "trace_rel": trace_worst,
        "div_rel_l2": div_worst,
        "symmetric": symmetric,
        "min_eig_ratio": num(psd_worst),
    });
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            2,
            pass,
            "trace <= 1e-10; div paths <= 1e-3 (L2); symmetric; min eig >= -1e-12 max eig",
            measured,
        ),
        detail: json!({"n": n, "L": len, "fields": rows}),
    })
}

fn bound_ratios(k: &Kernel, u: &ScalarField, p: f64) -> Result<(InequalityReport, InequalityReport, f64)> {
    let a = compute_a(u, &k.table, &k.plan)?;
    let div = compute_div_a(u, &k.table, &k.plan)?;
    let (ra, rd) = coefficient_bound_ratios(u, p, &a, &div)?;
    Ok((ra, rd, a.sup_spectral_norm()))
}

/// Mass-scaling and dilation invariance of both coefficient-bound ratios.
pub fn homogeneity(s: &HomogeneitySettings) -> Result<CheckOutcome> {
    let k = Kernel::new(s.n, s.len)?;
    let bump = |width: f64| {
        ScalarField::from_fn(k.grid, |x| (-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width)).exp())
    };
    let u = bump(s.sigma);
    let (ra, rd, sup) = bound_ratios(&k, &u, s.p)?;
    let (ma, md, msup) = bound_ratios(&k, &u.scaled(s.mu), s.p)?;
    let mass_dev = [
        (ma.ratio / ra.ratio - 1.0).abs(),
        (md.ratio / rd.ratio - 1.0).abs(),
        (msup / (s.mu * sup) - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mut dilation = Vec::new();
    let mut dil_dev = 0.0f64;
    for &lambda in &s.lambdas {
        let (la, ld, _) = bound_ratios(&k, &bump(lambda * s.sigma), s.p)?;
        let (da, dd) = (la.ratio / ra.ratio - 1.0, ld.ratio / rd.ratio - 1.0);
        dil_dev = dil_dev.max(da.abs()).max(dd.abs());
        dilation.push(json!({"lambda": lambda, "a_ratio": la.ratio, "div_ratio": ld.ratio, "a_dev": da, "div_dev": dd}));
    }
    let pass = mass_dev <= 1e-10 && dil_dev <= 0.02;
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            4,
            pass,
            "mass scaling <= 1e-10 rel; dilation <= 2%",
            json!({"mass_scaling_dev": mass_dev, "dilation_dev": dil_dev, "n": s.n}),
        ),
        detail: json!({
            "n": s.n, "L": s.len, "p": s.p, "sigma": s.sigma, "mu": s.mu,
            "base": {"a_ratio": ra.ratio, "div_ratio": rd.ratio, "sup_a": sup},
            "mass_scaled": {"a_ratio": ma.ratio, "div_ratio": md.ratio, "sup_a": msup},
            "dilation": dilation,
        }),
    })
}

/// Constant-one interpolation over a random family, and the pointwise
/// truncation inequality between consecutive dyadic levels.
pub fn interpolation_truncation(s: &FamilySettings) -> Result<CheckOutcome> {
    let grid = make_grid(s.n, s.len)?;
    let family = random_family(&grid, s.seed, s.size)?;
    let mut star = Vec::new();
    let mut star_worst = 0.0f64;
    for &(p, q) in &s.pq {
        let reports = family
            .iter()
            .map(|g| check_interpolation_star(g, p, q))
            .collect::<Result<Vec<_>>>()?;
        let worst = InequalityReport::worst_of(&reports).expect("nonempty family");
        star_worst = star_worst.max(worst.ratio);
        star.push(json!({"p": p, "q": q, "m": worst.params.iter().find(|x| x.0 == "m").map(|x| x.1),
            "worst_ratio": worst.ratio, "worst_case": worst.worst_case}));
    }
    let mut gap_worst = f64::NEG_INFINITY;
    for u in &family {
        let sched = schedule(u.max(), 1.0, s.depth)?;
        for k in 1..=s.depth {
            for &a in &s.truncation_a {
                gap_worst = gap_worst.max(truncation_gap(u, sched.levels[k - 1], sched.levels[k], a)?);
            }
        }
    }
    let pass = star_worst <= 1.0 + 1e-6 && gap_worst <= 1e-13;
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            5,
            pass,
            "star ratio <= 1 + 1e-6; truncation gap <= 1e-13",
            json!({"star_worst_ratio": star_worst, "truncation_worst_gap": gap_worst}),
        ),
        detail: json!({"n": s.n, "seed": s.seed, "size": s.size, "star": star, "truncation_a": s.truncation_a, "truncation_worst_gap": gap_worst}),
    })
}

/// The Poincaré ratio over a Gaussian family across normalizations. The
/// calibrated normalization is cross-checked by computing `div div A[u]`
/// against `−u` on the grid.
pub fn poincare_sweep(s: &PoincareSettings) -> Result<CheckOutcome> {
    let k = Kernel::new(s.n, s.len)?;
    let mut rows = Vec::new();
    let (mut mass_dev, mut prop_dev) = (0.0f64, 0.0f64);
    let mut monotone = true;
    let mut calibrated_worst = 0.0f64;
    let mut calibration = Vec::new();
    for &sigma in &s.sigmas {
        let base = gaussian(&k.grid, 1.0, sigma)?;
        let a = compute_a(&base, &k.table, &k.plan)?;
        // ⟨div div A, u⟩ = −8π c_d ⟨u, u⟩ in the continuum
        let div = compute_div_a(&base, &k.table, &k.plan)?;
        let mut divdiv = ScalarField::zeros(k.grid);
        for axis in 0..DIM {
            let comp = ScalarField::from_vec(k.grid, div.component(axis).to_vec())?;
            let g = gradient(&comp);
            for (o, v) in divdiv.data_mut().iter_mut().zip(g.component(axis)) {
                *o += v;
            }
        }
        let uu: f64 = base.data().iter().map(|v| v * v).sum();
        let du: f64 = divdiv.data().iter().zip(base.data()).map(|(d, v)| d * v).sum();
        calibration.push(json!({"sigma": sigma, "c_d": DEFAULT_C_D * (-uu / du)}));
        for &p in &s.p_list {
            let mut by_mass = Vec::new();
            for &mass in &s.masses {
                let u = base.scaled(mass);
                let a_m = a.scaled(mass);
                let reports = check_weighted_poincare(&u, p, &a_m, DEFAULT_C_D, &s.c_d_sweep)?;
                by_mass.push(reports);
            }
            for (reports, &mass) in by_mass.iter().zip(&s.masses) {
                for (r, r0) in reports.iter().zip(&by_mass[0]) {
                    mass_dev = mass_dev.max((r.ratio / r0.ratio - 1.0).abs());
                }
                let scaled: Vec<f64> = reports.iter().zip(&s.c_d_sweep).map(|(r, c)| r.ratio * c).collect();
                for w in scaled.iter() {
                    prop_dev = prop_dev.max((w / scaled[0] - 1.0).abs());
                }
                let mut order: Vec<(f64, f64)> = reports.iter().zip(&s.c_d_sweep).map(|(r, &c)| (c, r.ratio)).collect();
                order.sort_by(|x, y| x.0.total_cmp(&y.0));
                monotone &= order.windows(2).all(|w| w[1].1 < w[0].1);
                let at_cal = check_weighted_poincare(&base.scaled(mass), p, &a.scaled(mass), DEFAULT_C_D, &[CALIBRATED_C_D])?[0].ratio;
                calibrated_worst = calibrated_worst.max(at_cal);
                rows.push(json!({
                    "sigma": sigma, "p": p, "mass": mass,
                    "sweep": reports.iter().zip(&s.c_d_sweep).map(|(r, c)| json!({"c_d": c, "ratio": r.ratio})).collect::<Vec<_>>(),
                    "ratio_at_calibrated": at_cal,
                    "continuum_gaussian_ratio": 4.0 * p / (p + 1.0).powi(2),
                }));
            }
        }
    }
    let pass = mass_dev <= 1e-10 && prop_dev <= 1e-10 && monotone && calibrated_worst <= 1.0;
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            11,
            pass,
            "mass invariance <= 1e-10; ratio * c_d constant; decreasing in c_d; ratio <= 1 at calibrated c_d",
            json!({"mass_dev": mass_dev, "proportionality_dev": prop_dev, "monotone": monotone,
                "calibrated_c_d": CALIBRATED_C_D, "max_ratio_at_calibrated": calibrated_worst}),
        ),
        detail: json!({
            "calibrated_c_d": CALIBRATED_C_D,
            "calibration_rule": "normalization at which div div A[u] = -u",
            "grid_calibration": calibration,
            "c_d_sweep": s.c_d_sweep,
            "rows": rows,
        }),
    })
}

fn worst_increase(series: &[f64]) -> f64 {
    series
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Mass drift, entropy and `L^p` monotonicity, and the negativity floor on
/// every run.
pub fn conservation(runs: &[(&str, &Trajectory)]) -> CheckOutcome {
    let mut rows = Vec::new();
    let (mut drift_w, mut incr_w, mut neg_w) = (0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (name, traj) in runs {
        let m0 = traj.records[0].mass;
        let drift = traj.records.iter().map(|r| (r.mass - m0).abs() / m0.abs()).fold(0.0, f64::max);
        let entropy: Vec<f64> = traj.records.iter().map(|r| r.entropy).collect();
        let mut incr = worst_increase(&entropy);
        let mut lp_incr = Vec::new();
        for &p in &traj.config.p_list {
            if let Some(s) = traj.lp_series(p) {
                let v: Vec<f64> = s.iter().map(|x| x.1).collect();
                let w = worst_increase(&v);
                incr = incr.max(w);
                lp_incr.push(json!({"p": p, "worst_increase": w}));
            }
        }
        let neg = traj
            .records
            .iter()
            .map(|r| -r.min_u / r.linf)
            .fold(f64::NEG_INFINITY, f64::max);
        drift_w = drift_w.max(drift);
        incr_w = incr_w.max(incr);
        neg_w = neg_w.max(neg);
        rows.push(json!({"run": name, "mass_drift": drift, "entropy_worst_increase": worst_increase(&entropy),
            "lp": lp_incr, "worst_negativity": neg, "steps": traj.steps, "samples": traj.records.len()}));
    }
    let pass = drift_w <= 1e-10 && incr_w <= 1e-8 && neg_w <= 1e-8;
    CheckOutcome {
        item: AcceptanceItem::evaluated(
            3,
            pass,
            "mass drift <= 1e-10; entropy and Lp increase <= 1e-8 rel; min u >= -1e-8 sup u",
            json!({"mass_drift": drift_w, "worst_increase": incr_w, "worst_negativity": neg_w, "runs": runs.len()}),
        ),
        detail: json!({"runs": rows}),
    }
}

/// Positivity and non-collapse of the weighted ellipticity floor.
pub fn ellipticity(runs: &[(&str, &Trajectory)]) -> CheckOutcome {
    let mut rows = Vec::new();
    let (mut min_floor, mut spread) = (f64::INFINITY, 1.0f64);
    for (name, traj) in runs {
        let f0 = traj.records[0].ellipticity_floor;
        let lo = traj.records.iter().map(|r| r.ellipticity_floor).fold(f64::INFINITY, f64::min);
        let hi = traj.records.iter().map(|r| r.ellipticity_floor).fold(f64::NEG_INFINITY, f64::max);
        let s = (f0 / lo).max(hi / f0);
        min_floor = min_floor.min(lo);
        spread = spread.max(s);
        rows.push(json!({"run": name, "initial": f0, "min": lo, "max": hi, "spread": num(s)}));
    }
    let pass = min_floor > 0.0 && spread <= 10.0;
    CheckOutcome {
        item: AcceptanceItem::evaluated(
            12,
            pass,
            "floor > 0 at every sample; within 10x of its initial value",
            json!({"min_floor": min_floor, "max_spread": num(spread)}),
        ),
        detail: json!({"runs": rows}),
    }
}

/// `L²` decay of the main run over its decay window.
pub fn lp_decay(traj: &Trajectory, spec: &WindowSpec) -> Result<CheckOutcome> {
    let window = decay_window(traj, spec)?;
    let series = traj
        .lp_series(2.0)
        .ok_or_else(|| Error::Config("p = 2 must be in the run's p_list".into()))?;
    let fit = fit_decay_rate(&series, window)?;
    let variation = scaled_variation(&series, 0.5, window);
    let mass = traj.records[0].mass;
    let envelope_ratio = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|&(t, v)| theoretical_lp_envelope(2.0, mass, t).map(|e| v / e))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let pass = (-0.65..=-0.35).contains(&fit.slope) && variation <= 3.0;
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            6,
            pass,
            "slope in [-0.65, -0.35]; t^(1/2) |u|_2 varies <= 3x",
            json!({"slope": fit.slope, "variation": variation, "window": [window.0, window.1],
                "max_ratio_to_envelope": envelope_ratio}),
        ),
        detail: json!({"fit": fit, "variation": variation, "max_ratio_to_envelope": envelope_ratio,
            "envelope": "(9 |u_in|_1 / (8 t))^(1/2)"}),
    })
}

/// `t^{1+ε} ‖u‖_∞` over the same window.
pub fn linf_decay(traj: &Trajectory, spec: &WindowSpec) -> Result<CheckOutcome> {
    let window = decay_window(traj, spec)?;
    let eps = parameters(DIM, 3.0, 27.0).epsilon;
    let series = traj.linf_series();
    let fit = fit_decay_rate(&series, window)?;
    let variation = scaled_variation(&series, 1.0 + eps, window);
    let pass = variation <= 3.0;
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            8,
            pass,
            "t^(1+eps) |u|_inf varies <= 3x, eps = 0.1875",
            json!({"epsilon": eps, "variation": variation, "slope": fit.slope, "window": [window.0, window.1]}),
        ),
        detail: json!({"epsilon": eps, "fit": fit, "variation": variation}),
    })
}

/// Paired `L²` slopes of the Landau and heat runs.
pub fn heat_comparison(landau: &Trajectory, heat: &Trajectory, spec: &WindowSpec) -> Result<CheckOutcome> {
    let slope = |traj: &Trajectory| -> Result<super::fit::RateFit> {
        let window = decay_window(traj, spec)?;
        let series = traj
            .lp_series(2.0)
            .ok_or_else(|| Error::Config("p = 2 must be in the run's p_list".into()))?;
        fit_decay_rate(&series, window)
    };
    let (fl, fh) = (slope(landau)?, slope(heat)?);
    let pass = fh.slope <= -0.65 && fl.slope >= fh.slope + 0.1;
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            7,
            pass,
            "slope_heat <= -0.65; slope_landau >= slope_heat + 0.1",
            json!({"slope_heat": fh.slope, "slope_landau": fl.slope, "gap": fl.slope - fh.slope}),
        ),
        detail: json!({"landau": fl, "heat": fh}),
    })
}

/// Fitted moment envelopes for every configured moment of a run.
pub fn moments(traj: &Trajectory) -> Result<CheckOutcome> {
    let mut fits = Vec::new();
    for &m in &traj.config.m_list {
        let series = traj.moment_series(m).expect("configured moment");
        fits.push(fit_moment_envelope(m, &series)?);
    }
    let worst = fits.iter().map(|f| f.max_ratio).fold(0.0, f64::max);
    let monotone = fits.iter().all(|f| f.nondecreasing);
    let pass = worst <= 1.0 + 1e-9 && monotone && !fits.is_empty();
    Ok(CheckOutcome {
        item: AcceptanceItem::evaluated(
            9,
            pass,
            "moment <= fitted envelope (1e-9 slack) on [0, T]; every moment nondecreasing",
            json!({"max_ratio_to_envelope": worst, "nondecreasing": monotone,
                "fits": fits.iter().map(|f| json!({"m": f.m, "c": f.c, "C": f.big_c})).collect::<Vec<_>>()}),
        ),
        detail: json!({"fits": fits}),
    })
}

/// One level-energy run: the trajectory, its energies and the recursion.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub n: usize,
    pub trajectory: Trajectory,
    pub series: EnergySeries,
    pub report: RecursionReport,
}

pub fn level_run(s: &DeGiorgiSettings, n: usize) -> Result<LevelRun> {
    let params = parameters(DIM, s.p, s.m);
    let mut config = SolverConfig::new(
        n,
        s.len,
        Preset::Gaussian { mass: 1.0, sigma: s.sigma, center: [0.0; 3] },
        s.t,
        Mode::LandauDiffusion,
    );
    config.p_list = vec![2.0, s.p];
    let mut acc = LevelAccumulator::new(s.t, s.depth, s.p, s.cap_factor, true);
    let trajectory = run_observed(&config, &mut |view| acc.observe(view.time, view.dt, view.u, view.a))?;
    let series = acc.finish(s.c_p.unwrap_or_else(|| default_c_p(s.p)))?;
    let report = recursion_report(&series.energies, &params, series.schedule.cap, s.t)?;
    Ok(LevelRun {
        n,
        trajectory,
        series,
        report,
    })
}

/// Level-energy monotonicity, finite recursion constants stable across
/// grids, and the worked exponents.
pub fn level_energies(runs: &[LevelRun]) -> CheckOutcome {
    let q = parameters(3, 3.0, 27.0);
    let worked = (q.gamma - 7.0 / 9.0).abs() <= 1e-12 && (q.beta1 - 5.0 / 9.0).abs() <= 1e-12 && (q.epsilon - 0.1875).abs() <= 1e-12;
    let mut monotone = true;
    let mut finite = true;
    let mut rows = Vec::new();
    for r in runs {
        let e = &r.series.energies;
        let mono = e.windows(2).all(|w| w[1] <= w[0]);
        let fin = !r.report.kappa.is_empty() && r.report.kappa.iter().all(|k| k.1.is_finite());
        monotone &= mono;
        finite &= fin;
        rows.push(json!({"n": r.n, "cap": r.series.schedule.cap, "energies": e, "energies_a": r.series.energies_a,
            "kappa": r.report.kappa, "max_kappa": r.report.max_kappa, "geometric_rate": r.report.geometric_rate,
            "super_exponent": r.report.super_exponent, "samples_per_level": r.series.samples_per_level, "monotone": mono}));
    }
    let maxes: Vec<f64> = runs.iter().map(|r| r.report.max_kappa).collect();
    let hi = maxes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = maxes.iter().copied().fold(f64::INFINITY, f64::min);
    let stability = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let pass = worked && monotone && finite && stability <= 2.0 && runs.len() >= 2;
    CheckOutcome {
        item: AcceptanceItem::evaluated(
            10,
            pass,
            "E_k nonincreasing in k; kappa finite; max kappa within 2x across grids; worked exponents to 1e-12",
            json!({"monotone": monotone, "kappa_finite": finite, "max_kappa": maxes, "max_kappa_spread": num(stability),
                "gamma": q.gamma, "beta1": q.beta1, "epsilon": q.epsilon}),
        ),
        detail: json!({"params": q, "runs": rows}),
    }
}
