//! Explicit time integration of `u_t = div(A[u]∇u)`.
//!
//! Each step recomputes `A[u]` once, freezes it, and advances with the
//! two-stage midpoint rule. The heat baseline runs the same scheme with
//! `A = Id`.

mod envelope;
mod stencil;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use envelope::{adaptive_simpson, moment_envelope, theoretical_lp_envelope};
pub use stencil::{apply_diffusion, apply_into, StencilScratch, Transverse};

use crate::error::{Error, Result};
use crate::fft::ConvolutionPlan;
use crate::functionals::{check_weighted_poincare, dissipation, entropy, linf_norm, lp_norm, weighted_l1m};
use crate::grid::{boundary_mass_fraction, integrate, make_grid, sample_preset, Grid, Preset, ScalarField, SymMatrixField, DIM};
use crate::kernel::{compute_a, ellipticity_profile, sym_eigen_max, KernelTable, DEFAULT_C_D};
use crate::snapshot::save_snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    LandauDiffusion,
    HeatBaseline,
}

/// When `A[u]` is recomputed. Only per-step refresh is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefreshPolicy {
    #[default]
    PerStep,
}

fn default_len() -> f64 {
    16.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_c_d() -> f64 {
    DEFAULT_C_D
}
fn default_p_list() -> Vec<f64> {
    vec![2.0]
}
fn default_m_list() -> Vec<f64> {
    vec![2.0]
}
fn default_negativity_tol() -> f64 {
    1e-8
}
fn default_dt_max() -> f64 {
    f64::INFINITY
}
fn default_per_decade() -> usize {
    32
}
fn default_decades() -> f64 {
    3.0
}
fn default_shell() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub n: usize,
    #[serde(default = "default_len", rename = "L")]
    pub len: f64,
    pub preset: Preset,
    pub t_end: f64,
    /// CFL safety factor σ.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub refresh: RefreshPolicy,
    /// Transverse derivative used in the face fluxes.
    #[serde(default)]
    pub transverse: Transverse,
    pub mode: Mode,
    #[serde(default = "default_c_d")]
    pub c_d: f64,
    /// Explicit sample times; when absent, log-spaced times are used.
    #[serde(default)]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default = "default_per_decade")]
    pub samples_per_decade: usize,
    /// Decades below `t_end` covered by the log-spaced samples.
    #[serde(default = "default_decades")]
    pub sample_decades: f64,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<f64>,
    /// Negativity tolerance relative to the current sup norm.
    #[serde(default = "default_negativity_tol")]
    pub negativity_tol: f64,
    /// Step used when `A ≡ 0`; also an upper cap on every step.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Shell width (cells) for the boundary-mass diagnostic.
    #[serde(default = "default_shell")]
    pub boundary_shell: usize,
    /// Keep sampled fields in memory.
    #[serde(default)]
    pub keep_snapshots: bool,
    /// Persist sampled fields here.
    #[serde(default)]
    pub snapshot_dir: Option<PathBuf>,
    /// Where to dump the state on a non-finite abort.
    #[serde(default)]
    pub dump_dir: Option<PathBuf>,
}

impl SolverConfig {
    pub fn new(n: usize, len: f64, preset: Preset, t_end: f64, mode: Mode) -> Self {
        Self {
            n,
            len,
            preset,
            t_end,
            cfl: default_cfl(),
            refresh: RefreshPolicy::PerStep,
            transverse: Transverse::default(),
            mode,
            c_d: default_c_d(),
            sample_times: None,
            samples_per_decade: default_per_decade(),
            sample_decades: default_decades(),
            p_list: default_p_list(),
            m_list: default_m_list(),
            negativity_tol: default_negativity_tol(),
            dt_max: default_dt_max(),
            boundary_shell: default_shell(),
            keep_snapshots: false,
            snapshot_dir: None,
            dump_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        make_grid(self.n, self.len)?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.c_d > 0.0) {
            return bad(format!("c_d must be positive, got {}", self.c_d));
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.negativity_tol >= 0.0) {
            return bad(format!("negativity_tol must be >= 0, got {}", self.negativity_tol));
        }
        if let Some(times) = &self.sample_times {
            if times.iter().any(|&s| !(s > 0.0 && s <= self.t_end)) {
                return bad("sample times must lie in (0, t_end]".into());
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return bad("sample times must be increasing".into());
            }
        } else if self.samples_per_decade == 0 || !(self.sample_decades > 0.0) {
            return bad("log sampling needs samples_per_decade >= 1 and sample_decades > 0".into());
        }
        if self.p_list.iter().any(|&p| !(p >= 1.0)) {
            return bad("every p must be >= 1".into());
        }
        if self.m_list.iter().any(|&m| !(m >= 0.0)) {
            return bad("every m must be >= 0".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.n, self.len)
    }

    /// Sample times in `(0, t_end]`, always ending at `t_end`.
    pub fn sample_schedule(&self) -> Vec<f64> {
        let mut times = match &self.sample_times {
            Some(t) => t.clone(),
            None => {
                let count = (self.sample_decades * self.samples_per_decade as f64).round() as usize;
                (0..=count)
                    .map(|i| self.t_end * 10f64.powf(-self.sample_decades + i as f64 / self.samples_per_decade as f64))
                    .collect()
            }
        };
        if times.last().map_or(true, |&t| t < self.t_end) {
            times.push(self.t_end);
        }
        times
    }

    /// Exponent used for the in-run Poincaré ratio and dissipation checks.
    fn poincare_p(&self) -> f64 {
        self.p_list.iter().copied().find(|&p| p > 1.0).unwrap_or(2.0)
    }
}

/// `σ h² / (2d λ_max)`, or `dt_max` when `A ≡ 0`.
pub fn cfl_dt(a: &SymMatrixField, h: f64, sigma: f64, dt_max: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!("CFL factor must lie in (0, 1], got {sigma}")));
    }
    let lmax = (0..a.grid().num_cells())
        .map(|idx| sym_eigen_max(a.packed(idx)))
        .fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Ok(dt_max);
    }
    Ok((sigma * h * h / (2.0 * DIM as f64 * lmax)).min(dt_max))
}

/// Kernel data for Landau runs; `None` parts for the heat baseline.
pub struct SolverContext {
    grid: Grid,
    mode: Mode,
    plan: Option<ConvolutionPlan>,
    table: Option<KernelTable>,
    scratch: StencilScratch,
    transverse: Transverse,
}

impl SolverContext {
    pub fn new(grid: Grid, mode: Mode, c_d: f64) -> Result<Self> {
        let (plan, table) = match mode {
            Mode::LandauDiffusion => {
                let plan = ConvolutionPlan::new(&grid);
                let table = KernelTable::new(&grid, &plan, c_d)?;
                (Some(plan), Some(table))
            }
            Mode::HeatBaseline => (None, None),
        };
        Ok(Self {
            grid,
            mode,
            plan,
            table,
            scratch: StencilScratch::new(&grid),
            transverse: Transverse::default(),
        })
    }

    pub fn with_transverse(mut self, transverse: Transverse) -> Self {
        self.transverse = transverse;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The coefficient that drives the evolution of `u`.
    pub fn coefficients(&self, u: &ScalarField) -> Result<SymMatrixField> {
        match (&self.plan, &self.table) {
            (Some(plan), Some(table)) => compute_a(u, table, plan),
            _ => {
                u.check_grid(&self.grid)?;
                Ok(SymMatrixField::identity(self.grid, 1.0))
            }
        }
    }

    pub fn kernel(&self) -> Option<(&KernelTable, &ConvolutionPlan)> {
        Some((self.table.as_ref()?, self.plan.as_ref()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub min_u: f64,
    /// Relative mass change over the step.
    pub mass_drift: f64,
}

/// One midpoint step of length `dt` with `a` frozen.
pub fn step_with(u: &ScalarField, a: &SymMatrixField, dt: f64, ctx: &mut SolverContext) -> Result<(ScalarField, StepReport)> {
    let grid = ctx.grid;
    u.check_grid(&grid)?;
    u.check_grid(a.grid())?;
    let len = grid.num_cells();
    let mut k = vec![0.0; len];
    apply_into(&grid, u.data(), a, ctx.transverse, &mut ctx.scratch, &mut k);
    let half: Vec<f64> = u.data().iter().zip(&k).map(|(v, t)| v + 0.5 * dt * t).collect();
    apply_into(&grid, &half, a, ctx.transverse, &mut ctx.scratch, &mut k);
    let next: Vec<f64> = u.data().iter().zip(&k).map(|(v, t)| v + dt * t).collect();
    let next = ScalarField::from_vec(grid, next)?;
    let (m0, m1) = (integrate(u), integrate(&next));
    let mass_drift = if m0 == 0.0 { m1.abs() } else { (m1 - m0).abs() / m0.abs() };
    let min_u = next.min();
    Ok((next, StepReport { dt, min_u, mass_drift }))
}

/// Full step: coefficients at the step start, CFL step capped by `dt_cap`.
/// Returns the new state, the coefficient used, and the report.
pub fn step(
    u: &ScalarField,
    ctx: &mut SolverContext,
    config: &SolverConfig,
    dt_cap: f64,
) -> Result<(ScalarField, SymMatrixField, StepReport)> {
    let a = ctx.coefficients(u)?;
    let dt = cfl_dt(&a, ctx.grid.h(), config.cfl, config.dt_max)?.min(dt_cap);
    let (next, report) = step_with(u, &a, dt, ctx)?;
    Ok((next, a, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    pub entropy: f64,
    /// `(p, ‖u‖_p)` for the configured exponents.
    pub lp: Vec<(f64, f64)>,
    pub linf: f64,
    pub l1m: Vec<(f64, f64)>,
    /// `(p, dissipation)` for configured `p > 1`.
    pub diss: Vec<(f64, f64)>,
    pub poincare_ratio: f64,
    pub ellipticity_floor: f64,
    pub min_u: f64,
    /// Step that produced this state (0 for the initial state).
    pub dt: f64,
    pub boundary_fraction: f64,
    pub step: usize,
}

/// All per-sample quantities of `u` given its coefficient `a`.
pub fn diagnostics(u: &ScalarField, a: &SymMatrixField, time: f64, dt: f64, step: usize, config: &SolverConfig) -> Result<DiagnosticsRecord> {
    let lp = config
        .p_list
        .iter()
        .map(|&p| Ok((p, lp_norm(u, p)?)))
        .collect::<Result<Vec<_>>>()?;
    let l1m = config
        .m_list
        .iter()
        .map(|&m| Ok((m, weighted_l1m(u, m)?)))
        .collect::<Result<Vec<_>>>()?;
    let diss = config
        .p_list
        .iter()
        .filter(|&&p| p > 1.0)
        .map(|&p| Ok((p, dissipation(u, p, a)?)))
        .collect::<Result<Vec<_>>>()?;
    let p = config.poincare_p();
    let poincare = check_weighted_poincare(u, p, a, 1.0, &[1.0])?;
    Ok(DiagnosticsRecord {
        time,
        mass: integrate(u),
        entropy: entropy(u),
        lp,
        linf: linf_norm(u),
        l1m,
        diss,
        poincare_ratio: poincare[0].ratio,
        ellipticity_floor: ellipticity_profile(a, u.grid()).0,
        min_u: u.min(),
        dt,
        boundary_fraction: boundary_mass_fraction(u, config.boundary_shell.min((u.grid().n() - 1) / 4))?,
        step,
    })
}

/// What an observer sees at the start of every step.
pub struct StepView<'a> {
    pub time: f64,
    pub dt: f64,
    pub u: &'a ScalarField,
    pub a: &'a SymMatrixField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub records: Vec<DiagnosticsRecord>,
    pub initial: ScalarField,
    pub final_state: ScalarField,
    pub first_dt: f64,
    pub steps: usize,
    /// Sampled fields, when `keep_snapshots` is set.
    pub snapshots: Vec<(f64, ScalarField)>,
    pub snapshot_paths: Vec<PathBuf>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    /// `(t, ‖u(t)‖_p)` for a configured `p`.
    pub fn lp_series(&self, p: f64) -> Option<Vec<(f64, f64)>> {
        self.records
            .iter()
            .map(|r| r.lp.iter().find(|(q, _)| *q == p).map(|&(_, v)| (r.time, v)))
            .collect()
    }

    pub fn linf_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.time, r.linf)).collect()
    }

    pub fn moment_series(&self, m: f64) -> Option<Vec<(f64, f64)>> {
        self.records
            .iter()
            .map(|r| r.l1m.iter().find(|(q, _)| *q == m).map(|&(_, v)| (r.time, v)))
            .collect()
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string(), "mass".into(), "entropy".into()];
        cols.extend(self.config.p_list.iter().map(|p| format!("lp{p}")));
        cols.push("linf".into());
        cols.extend(self.config.m_list.iter().map(|m| format!("l1m{m}")));
        cols.extend(self.config.p_list.iter().filter(|&&p| p > 1.0).map(|p| format!("diss{p}")));
        cols.extend(["poincare_ratio", "ellipticity_floor", "min_u", "dt"].map(String::from));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.records {
            let mut row: Vec<f64> = vec![r.time, r.mass, r.entropy];
            row.extend(r.lp.iter().map(|x| x.1));
            row.push(r.linf);
            row.extend(r.l1m.iter().map(|x| x.1));
            row.extend(r.diss.iter().map(|x| x.1));
            row.extend([r.poincare_ratio, r.ellipticity_floor, r.min_u, r.dt]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub fn run(config: &SolverConfig) -> Result<Trajectory> {
    run_observed(config, &mut |_| Ok(()))
}

/// Like [`run`], calling `observer` at the start of every step.
pub fn run_observed(config: &SolverConfig, observer: &mut dyn FnMut(&StepView) -> Result<()>) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.grid()?;
    let initial = sample_preset(&grid, &config.preset)?;
    let mut ctx = SolverContext::new(grid, config.mode, config.c_d)?.with_transverse(config.transverse);
    run_from(config, initial, &mut ctx, observer)
}

/// Runs from a given initial state with a prepared context.
pub fn run_from(
    config: &SolverConfig,
    initial: ScalarField,
    ctx: &mut SolverContext,
    observer: &mut dyn FnMut(&StepView) -> Result<()>,
) -> Result<Trajectory> {
    config.validate()?;
    initial.check_grid(ctx.grid())?;
    let targets = config.sample_schedule();
    let mut next_target = 0;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut snapshot_paths = Vec::new();
    let mut u = initial.clone();
    let mut t = 0.0;
    let mut steps = 0;
    let mut first_dt = f64::NAN;
    let mut last_dt = 0.0;

    let mut keep = |u: &ScalarField, t: f64, records_len: usize| -> Result<()> {
        if config.keep_snapshots {
            snapshots.push((t, u.clone()));
        }
        if let Some(dir) = &config.snapshot_dir {
            let path = dir.join(format!("u_{records_len:05}.bin"));
            save_snapshot(u, t, "u", &path)?;
            snapshot_paths.push(path);
        }
        Ok(())
    };

    let a0 = ctx.coefficients(&u)?;
    records.push(diagnostics(&u, &a0, 0.0, 0.0, 0, config)?);
    keep(&u, 0.0, 0)?;
    let mut a = a0;

    while t < config.t_end {
        let remaining = config.t_end - t;
        let mut dt = cfl_dt(&a, ctx.grid().h(), config.cfl, config.dt_max)?;
        if dt >= remaining * (1.0 - 1e-12) {
            dt = remaining;
        }
        if steps == 0 {
            first_dt = dt;
        }

        // nearest-step sampling: record this state if it is closer to the
        // pending target than the state after the step
        let mut record_here = false;
        while next_target < targets.len() && targets[next_target] <= t + dt {
            if targets[next_target] - t <= t + dt - targets[next_target] {
                record_here = true;
                next_target += 1;
            } else {
                break;
            }
        }
        if record_here && records.last().map_or(true, |r| r.time < t) {
            records.push(diagnostics(&u, &a, t, last_dt, steps, config)?);
            keep(&u, t, records.len() - 1)?;
        }

        observer(&StepView { time: t, dt, u: &u, a: &a })?;
        let (next, report) = step_with(&u, &a, dt, ctx)?;
        steps += 1;
        let t_next = if dt == remaining { config.t_end } else { t + dt };

        if !next.is_finite() {
            let dump = match &config.dump_dir {
                Some(dir) => {
                    let path = dir.join("nonfinite_state.bin");
                    save_snapshot(&next, t_next, "u_nonfinite", &path).ok().map(|_| path)
                }
                None => None,
            };
            return Err(Error::NonFinite { time: t_next, step: steps, dump });
        }
        let tol = config.negativity_tol * linf_norm(&next);
        if report.min_u < -tol {
            return Err(Error::Negativity { time: t_next, min: report.min_u, tol });
        }

        u = next;
        t = t_next;
        last_dt = dt;
        a = ctx.coefficients(&u)?;

        // targets now strictly behind us are served by this state
        let mut record_now = false;
        while next_target < targets.len() && targets[next_target] <= t {
            record_now = true;
            next_target += 1;
        }
        if record_now || t >= config.t_end {
            records.push(diagnostics(&u, &a, t, last_dt, steps, config)?);
            keep(&u, t, records.len() - 1)?;
        }
    }

    Ok(Trajectory {
        config: config.clone(),
        records,
        initial,
        final_state: u,
        first_dt,
        steps,
        snapshots,
        snapshot_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat_config(n: usize, len: f64, sigma: f64, t_end: f64) -> SolverConfig {
        SolverConfig::new(
            n,
            len,
            Preset::Gaussian { mass: 1.0, sigma, center: [0.0; 3] },
            t_end,
            Mode::HeatBaseline,
        )
    }

    #[test]
    fn cfl_examples() {
        let g = make_grid(8, 2.0).unwrap();
        let id = SymMatrixField::identity(g, 1.0);
        let dt = cfl_dt(&id, 0.25, 0.5, f64::INFINITY).unwrap();
        assert!((dt - 0.5 * 0.0625 / 6.0).abs() < 1e-15);
        let dt2 = cfl_dt(&SymMatrixField::identity(g, 2.0), 0.25, 0.5, f64::INFINITY).unwrap();
        assert!((dt / dt2 - 2.0).abs() < 1e-14);
        assert_eq!(cfl_dt(&SymMatrixField::zeros(g), 0.25, 0.5, 0.1).unwrap(), 0.1);
        assert!(cfl_dt(&id, 0.25, 1.5, 1.0).is_err());
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = make_grid(16, 8.0).unwrap();
        let mut ctx = SolverContext::new(g, Mode::LandauDiffusion, DEFAULT_C_D).unwrap();
        let cfg = heat_config(16, 8.0, 1.0, 1.0);
        let (next, _, report) = step(&ScalarField::zeros(g), &mut ctx, &cfg, 0.1).unwrap();
        assert!(next.data().iter().all(|v| *v == 0.0));
        assert_eq!(report.dt, 0.1);
    }

    #[test]
    fn landau_step_conserves_mass() {
        let g = make_grid(32, 12.0).unwrap();
        let u = sample_preset(&g, &Preset::Gaussian { mass: 1.0, sigma: 1.0, center: [0.3, -0.2, 0.1] }).unwrap();
        let mut ctx = SolverContext::new(g, Mode::LandauDiffusion, DEFAULT_C_D).unwrap();
        let cfg = SolverConfig::new(32, 12.0, Preset::Spike { mass: 1.0 }, 1.0, Mode::LandauDiffusion);
        let (_, _, report) = step(&u, &mut ctx, &cfg, f64::INFINITY).unwrap();
        assert!(report.mass_drift < 1e-12, "{}", report.mass_drift);
        assert!(report.dt > 0.0);
    }

    #[test]
    fn short_run_records_single_sample_at_end() {
        let mut cfg = heat_config(16, 8.0, 1.0, 1e-5);
        cfg.sample_times = Some(vec![1e-5]);
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.records.len(), 2);
        assert_eq!(traj.records[1].time, 1e-5);
        assert_eq!(traj.steps, 1);
    }

    #[test]
    fn heat_run_matches_gaussian_and_conserves() {
        let cfg = heat_config(32, 12.0, 1.0, 0.25);
        let traj = run(&cfg).unwrap();
        let m0 = traj.records[0].mass;
        for w in traj.records.windows(2) {
            assert!(w[1].time > w[0].time);
            assert!(w[1].entropy <= w[0].entropy + 1e-8 * w[0].entropy.abs());
            assert!(w[1].lp[0].1 <= w[0].lp[0].1 * (1.0 + 1e-8));
        }
        for r in &traj.records {
            assert!((r.mass - m0).abs() <= 1e-10 * m0);
        }
        // second moment of the heat solution grows as 3(σ² + 2t)
        let last = traj.records.last().unwrap();
        let second = last.l1m[0].1 - last.mass;
        assert!((second - 3.0 * (1.0 + 0.5)).abs() < 2e-2, "{second}");
    }

    #[test]
    fn csv_header_layout() {
        let mut cfg = heat_config(16, 8.0, 1.0, 1e-3);
        cfg.p_list = vec![1.0, 2.0, 3.0];
        cfg.m_list = vec![2.0, 4.0];
        let traj = run(&cfg).unwrap();
        assert_eq!(
            traj.csv_header(),
            "t,mass,entropy,lp1,lp2,lp3,linf,l1m2,l1m4,diss2,diss3,poincare_ratio,ellipticity_floor,min_u,dt"
        );
        let csv = traj.to_csv();
        let cols = csv.lines().next().unwrap().split(',').count();
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == cols));
    }

    #[test]
    fn config_validation() {
        let mut cfg = heat_config(16, 8.0, 1.0, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.cfl = 1.5;
        assert!(cfg.validate().is_err());
        cfg.cfl = 0.5;
        cfg.sample_times = Some(vec![0.5, 0.2]);
        assert!(cfg.validate().is_err());
        cfg.sample_times = Some(vec![0.0]);
        assert!(cfg.validate().is_err());
        cfg.sample_times = None;
        cfg.t_end = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn log_schedule_has_requested_density() {
        let cfg = heat_config(16, 8.0, 1.0, 10.0);
        let s = cfg.sample_schedule();
        assert_eq!(s.len(), 97);
        assert!((s[0] - 0.01).abs() < 1e-15);
        assert_eq!(*s.last().unwrap(), 10.0);
    }
}
