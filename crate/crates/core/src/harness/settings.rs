//! Experiment configuration. Every section has defaults, so a config file
//! only needs `experiment = "..."`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fit::WindowSpec;
use crate::error::{Error, Result};
use crate::grid::Preset;
use crate::solver::{Mode, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LpDecay,
    LinfDecay,
    HeatComparison,
    Moments,
    Inequalities,
    Degiorgi,
    KernelValidate,
    All,
}

impl ExperimentKind {
    /// Acceptance items an experiment evaluates. Conservation (3) and the
    /// ellipticity floor (12) ride along with every experiment that runs the
    /// solver.
    pub fn items(self) -> &'static [u8] {
        match self {
            Self::KernelValidate => &[1, 2],
            Self::Inequalities => &[4, 5, 11],
            Self::LpDecay => &[3, 6, 12],
            Self::LinfDecay => &[3, 8, 12],
            Self::Moments => &[3, 9, 12],
            Self::HeatComparison => &[3, 7, 12],
            Self::Degiorgi => &[3, 10, 12],
            Self::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSettings {
    pub n_coarse: usize,
    pub n_fine: usize,
    #[serde(rename = "L")]
    pub len: f64,
    pub sigma: f64,
    pub points: usize,
    pub seed: u64,
    /// Random points are drawn from `[−region, region]³`.
    pub region: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self {
            n_coarse: 64,
            n_fine: 128,
            len: 16.0,
            sigma: 1.0,
            points: 10,
            seed: 7,
            region: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogeneitySettings {
    /// Both dilates must be resolved (width ≥ 3h) and contained (4 widths
    /// inside the half box); at `L = 16` that needs `n = 128`.
    pub n: usize,
    #[serde(rename = "L")]
    pub len: f64,
    pub sigma: f64,
    pub p: f64,
    pub mu: f64,
    pub lambdas: Vec<f64>,
}

impl Default for HomogeneitySettings {
    fn default() -> Self {
        Self {
            n: 128,
            len: 16.0,
            sigma: 1.0,
            p: 4.0,
            mu: 3.0,
            lambdas: vec![0.5, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySettings {
    pub n: usize,
    #[serde(rename = "L")]
    pub len: f64,
    pub seed: u64,
    pub size: usize,
    /// `(p, q)` pairs for the interpolation check.
    pub pq: Vec<(f64, f64)>,
    pub depth: usize,
    pub truncation_a: Vec<f64>,
}

impl Default for FamilySettings {
    fn default() -> Self {
        Self {
            n: 64,
            len: 16.0,
            seed: 11,
            size: 100,
            pq: vec![(2.0, 3.0), (3.0, 4.0)],
            depth: 8,
            truncation_a: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareSettings {
    pub n: usize,
    #[serde(rename = "L")]
    pub len: f64,
    pub sigmas: Vec<f64>,
    pub masses: Vec<f64>,
    pub p_list: Vec<f64>,
    pub c_d_sweep: Vec<f64>,
}

impl Default for PoincareSettings {
    fn default() -> Self {
        Self {
            n: 64,
            len: 16.0,
            sigmas: vec![1.0, 1.5, 2.0],
            masses: vec![1.0, 10.0],
            p_list: vec![2.0, 3.0],
            c_d_sweep: vec![1.0 / (4.0 * PI), 1.0 / (8.0 * PI), 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeGiorgiSettings {
    pub n_list: Vec<usize>,
    #[serde(rename = "L")]
    pub len: f64,
    pub sigma: f64,
    pub t: f64,
    pub depth: usize,
    pub p: f64,
    pub m: f64,
    pub cap_factor: f64,
    /// Gradient-term constant; `4(p−1)/p` when absent.
    pub c_p: Option<f64>,
}

impl Default for DeGiorgiSettings {
    fn default() -> Self {
        Self {
            n_list: vec![64, 96],
            len: 16.0,
            sigma: 1.0,
            t: 8.0,
            depth: 8,
            p: 3.0,
            m: 27.0,
            cap_factor: 1.0,
            c_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSettings {
    pub t_end: f64,
}

impl Default for HeatSettings {
    fn default() -> Self {
        Self { t_end: 2.0 }
    }
}

/// The main Landau run: spike data on the default grid.
pub fn default_main_run() -> SolverConfig {
    let mut config = SolverConfig::new(64, 16.0, Preset::Spike { mass: 1.0 }, 300.0, Mode::LandauDiffusion);
    config.p_list = vec![2.0, 3.0];
    config.m_list = vec![2.0, 4.0];
    config
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_main_run")]
    pub run: SolverConfig,
    #[serde(default)]
    pub heat: HeatSettings,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub kernel: KernelSettings,
    #[serde(default)]
    pub homogeneity: HomogeneitySettings,
    #[serde(default)]
    pub family: FamilySettings,
    #[serde(default)]
    pub poincare: PoincareSettings,
    #[serde(default)]
    pub degiorgi: DeGiorgiSettings,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            output_dir: default_output_dir(),
            run: default_main_run(),
            heat: HeatSettings::default(),
            window: WindowSpec::default(),
            kernel: KernelSettings::default(),
            homogeneity: HomogeneitySettings::default(),
            family: FamilySettings::default(),
            poincare: PoincareSettings::default(),
            degiorgi: DeGiorgiSettings::default(),
        }
    }

    /// Parses TOML or JSON, chosen by extension; other extensions try JSON
    /// first.
    pub fn from_str_with_ext(text: &str, ext: Option<&str>) -> Result<Self> {
        let json = || serde_json::from_str::<Self>(text).map_err(|e| Error::Config(format!("json: {e}")));
        let toml = || toml::from_str::<Self>(text).map_err(|e| Error::Config(format!("toml: {e}")));
        let config = match ext {
            Some("json") => json()?,
            Some("toml") => toml()?,
            _ => json().or_else(|_| toml())?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_with_ext(&text, path.extension().and_then(|e| e.to_str()))
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.run.mode != Mode::LandauDiffusion {
            return Err(Error::Config("the main run must use mode = landau_diffusion".into()));
        }
        if !self.run.p_list.contains(&2.0) {
            return Err(Error::Config("the main run needs p = 2 in p_list".into()));
        }
        if !(self.heat.t_end > 0.0) {
            return Err(Error::Config(format!("heat t_end must be positive, got {}", self.heat.t_end)));
        }
        if self.degiorgi.n_list.is_empty() {
            return Err(Error::Config("degiorgi n_list is empty".into()));
        }
        if self.family.size == 0 {
            return Err(Error::Config("family size must be >= 1".into()));
        }
        Ok(())
    }

    /// The paired heat run: the main run's grid and data with `A = Id`.
    pub fn heat_run(&self) -> SolverConfig {
        let mut config = self.run.clone();
        config.mode = Mode::HeatBaseline;
        config.t_end = self.heat.t_end;
        config.sample_times = None;
        config
    }
}
