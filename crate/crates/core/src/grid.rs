//! Uniform cell-centered grid on a cube, field containers and discrete calculus.
//!
//! Cells are indexed `(i, j, k)` with `i` fastest; cell centers sit at
//! `(i + 1/2) h - L/2`. All quadratures are midpoint sums weighted by `h³`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension used by every code path.
pub const DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    len: f64,
}

impl Grid {
    /// `n` points per axis on a box of edge `len`.
    pub fn new(n: usize, len: f64) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n must be even, got {n}")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n must be at least 8, got {n}")));
        }
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidGrid(format!("L must be positive, got {len}")));
        }
        Ok(Self { n, len })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn h(&self) -> f64 {
        self.len / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    /// Coordinate of the center of cell `i` along any axis.
    #[inline]
    pub fn center_1d(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h() - 0.5 * self.len
    }

    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.coords(idx);
        [self.center_1d(i), self.center_1d(j), self.center_1d(k)]
    }

    /// Japanese bracket `(1 + |x|²)^{1/2}` at every cell center.
    pub fn bracket(&self) -> Vec<f64> {
        (0..self.num_cells())
            .map(|idx| {
                let x = self.center(idx);
                (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
            })
            .collect()
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(n: usize, len: f64) -> Result<Grid> {
    Grid::new(n, len)
}

/// One real value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.num_cells()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.num_cells()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.num_cells() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid needs {}",
                data.len(),
                grid.num_cells()
            )));
        }
        Ok(Self { grid, data })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.num_cells()).map(|idx| f(grid.center(idx))).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    /// `alpha * self + beta * other`.
    pub fn lincomb(&self, alpha: f64, other: &ScalarField, beta: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        grid.check_same(&self.grid)
    }
}

/// Three real components per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![0.0; grid.num_cells()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_components(grid: Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.num_cells()) {
            return Err(Error::InvalidGrid("component length mismatch".into()));
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// Largest Euclidean norm over cells.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.num_cells())
            .map(|idx| {
                let v = self.at(idx);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Symmetric 3×3 matrix per cell, stored as components (11, 22, 33, 12, 13, 23).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrixField {
    grid: Grid,
    comps: [Vec<f64>; 6],
}

/// Component order of [`SymMatrixField`] as `(row, col)` pairs.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Position of entry `(a, b)` in the six-component storage.
#[inline]
pub fn sym_slot(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

impl SymMatrixField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![0.0; grid.num_cells()];
        Self {
            grid,
            comps: std::array::from_fn(|_| z.clone()),
        }
    }

    /// `scale · Id` at every cell.
    pub fn identity(grid: Grid, scale: f64) -> Self {
        let mut out = Self::zeros(grid);
        for c in 0..3 {
            out.comps[c].fill(scale);
        }
        out
    }

    pub fn from_components(grid: Grid, comps: [Vec<f64>; 6]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.num_cells()) {
            return Err(Error::InvalidGrid("component length mismatch".into()));
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, slot: usize) -> &[f64] {
        &self.comps[slot]
    }

    pub fn component_mut(&mut self, slot: usize) -> &mut [f64] {
        &mut self.comps[slot]
    }

    /// Full matrix at a cell.
    #[inline]
    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        let c = |s: usize| self.comps[s][idx];
        [
            [c(0), c(3), c(4)],
            [c(3), c(1), c(5)],
            [c(4), c(5), c(2)],
        ]
    }

    #[inline]
    pub fn packed(&self, idx: usize) -> [f64; 6] {
        std::array::from_fn(|s| self.comps[s][idx])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            comps: std::array::from_fn(|s| self.comps[s].iter().map(|v| v * factor).collect()),
        }
    }

    pub fn trace(&self) -> ScalarField {
        let data = (0..self.grid.num_cells())
            .map(|i| self.comps[0][i] + self.comps[1][i] + self.comps[2][i])
            .collect();
        ScalarField {
            grid: self.grid,
            data,
        }
    }

    /// Largest pointwise spectral norm over cells.
    pub fn sup_spectral_norm(&self) -> f64 {
        (0..self.grid.num_cells())
            .map(|idx| {
                let ev = crate::kernel::sym_eigenvalues(self.packed(idx));
                ev[0].abs().max(ev[2].abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

/// Midpoint rule: cell sum times `h³`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.data.iter().sum::<f64>() * f.grid.cell_volume()
}

/// Second-order derivative along `axis` with one-sided second-order stencils
/// on the two boundary layers.
fn derivative_into(grid: &Grid, f: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let stride = [1, n, n * n][axis];
    let inv2h = 0.5 / grid.h();
    for idx in 0..grid.num_cells() {
        let pos = grid.coords(idx)[axis];
        out[idx] = if pos == 0 {
            (-3.0 * f[idx] + 4.0 * f[idx + stride] - f[idx + 2 * stride]) * inv2h
        } else if pos == n - 1 {
            (3.0 * f[idx] - 4.0 * f[idx - stride] + f[idx - 2 * stride]) * inv2h
        } else {
            (f[idx + stride] - f[idx - stride]) * inv2h
        };
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid;
    let mut out = VectorField::zeros(grid);
    for axis in 0..3 {
        derivative_into(&grid, &f.data, axis, &mut out.comps[axis]);
    }
    out
}

/// Fraction of the total mass held by the outer shell of `shell_width` cells.
/// Zero total mass gives 0.
pub fn boundary_mass_fraction(f: &ScalarField, shell_width: usize) -> Result<f64> {
    let n = f.grid.n();
    if 4 * shell_width >= n {
        return Err(Error::InvalidParameter(format!(
            "shell width {shell_width} must be below n/4 = {}",
            n / 4
        )));
    }
    let in_shell = |p: usize| p < shell_width || p >= n - shell_width;
    let mut total = 0.0;
    let mut shell = 0.0;
    for (idx, &v) in f.data.iter().enumerate() {
        let [i, j, k] = f.grid.coords(idx);
        total += v;
        if in_shell(i) || in_shell(j) || in_shell(k) {
            shell += v;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(shell / total)
}

/// Initial-data presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Gaussian {
        mass: f64,
        sigma: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// Gaussian of width `3h` at the origin: the grid proxy for rough L¹ data.
    Spike { mass: f64 },
    /// Two equal Gaussians at `(±separation/2, 0, 0)` sharing `mass`.
    TwoBumps {
        mass: f64,
        sigma: f64,
        separation: f64,
    },
    AnisotropicGaussian {
        mass: f64,
        sigmas: [f64; 3],
        #[serde(default)]
        center: [f64; 3],
    },
    /// `count` Gaussians with widths in `[2h, L/8]` and centers in the inner
    /// half-box, rescaled to the requested discrete mass.
    RandomBumps { seed: u64, count: usize, mass: f64 },
}

fn gaussian_value(mass: f64, sigmas: [f64; 3], center: [f64; 3], x: [f64; 3]) -> f64 {
    let norm = mass / ((2.0 * std::f64::consts::PI).powf(1.5) * sigmas[0] * sigmas[1] * sigmas[2]);
    let q: f64 = (0..3)
        .map(|a| {
            let r = (x[a] - center[a]) / sigmas[a];
            r * r
        })
        .sum();
    norm * (-0.5 * q).exp()
}

fn check_bump(grid: &Grid, sigmas: &[f64], center: [f64; 3]) -> Result<()> {
    let min = 2.0 * grid.h();
    for &s in sigmas {
        if s < min * (1.0 - 1e-12) {
            return Err(Error::UnderResolved { sigma: s, min });
        }
    }
    let limit = 0.25 * grid.len();
    if center.iter().any(|c| c.abs() > limit) {
        return Err(Error::CenterNearBoundary { center, limit });
    }
    Ok(())
}

fn check_mass(field: &ScalarField, mass: f64) -> Result<()> {
    let sampled = integrate(field);
    if (sampled - mass).abs() > 1e-3 * mass.abs() {
        return Err(Error::TruncatedMass {
            requested: mass,
            sampled,
        });
    }
    Ok(())
}

/// Samples a preset onto the grid.
pub fn sample_preset(grid: &Grid, preset: &Preset) -> Result<ScalarField> {
    let grid = *grid;
    match *preset {
        Preset::Gaussian {
            mass,
            sigma,
            center,
        } => {
            check_bump(&grid, &[sigma], center)?;
            let f = ScalarField::from_fn(grid, |x| gaussian_value(mass, [sigma; 3], center, x));
            check_mass(&f, mass)?;
            Ok(f)
        }
        Preset::Spike { mass } => {
            let sigma = 3.0 * grid.h();
            let f = ScalarField::from_fn(grid, |x| gaussian_value(mass, [sigma; 3], [0.0; 3], x));
            check_mass(&f, mass)?;
            Ok(f)
        }
        Preset::TwoBumps {
            mass,
            sigma,
            separation,
        } => {
            let a = [0.5 * separation, 0.0, 0.0];
            let b = [-0.5 * separation, 0.0, 0.0];
            check_bump(&grid, &[sigma], a)?;
            let f = ScalarField::from_fn(grid, |x| {
                gaussian_value(0.5 * mass, [sigma; 3], a, x)
                    + gaussian_value(0.5 * mass, [sigma; 3], b, x)
            });
            check_mass(&f, mass)?;
            Ok(f)
        }
        Preset::AnisotropicGaussian {
            mass,
            sigmas,
            center,
        } => {
            check_bump(&grid, &sigmas, center)?;
            let f = ScalarField::from_fn(grid, |x| gaussian_value(mass, sigmas, center, x));
            check_mass(&f, mass)?;
            Ok(f)
        }
        Preset::RandomBumps { seed, count, mass } => {
            if count == 0 {
                return Err(Error::InvalidParameter("random_bumps needs count >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (wmin, wmax) = (2.0 * grid.h(), grid.len() / 8.0);
            let q = 0.25 * grid.len();
            let bumps: Vec<(f64, f64, [f64; 3])> = (0..count)
                .map(|_| {
                    let weight = rng.gen_range(0.5..1.5);
                    let sigma = if wmax > wmin { rng.gen_range(wmin..wmax) } else { wmin };
                    let center = std::array::from_fn(|_| rng.gen_range(-q..q));
                    (weight, sigma, center)
                })
                .collect();
            let mut f = ScalarField::from_fn(grid, |x| {
                bumps
                    .iter()
                    .map(|&(w, s, c)| gaussian_value(w, [s; 3], c, x))
                    .sum()
            });
            let sampled = integrate(&f);
            let factor = mass / sampled;
            f.data.iter_mut().for_each(|v| *v *= factor);
            Ok(f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_centers() {
        let g = make_grid(8, 8.0).unwrap();
        assert_eq!(g.h(), 1.0);
        assert_eq!(g.center_1d(0), -3.5);
        assert_eq!(make_grid(64, 16.0).unwrap().h(), 0.25);
    }

    #[test]
    fn grid_rejects_bad_input() {
        let err = make_grid(7, 8.0).unwrap_err();
        assert!(err.to_string().contains("n must be even"));
        assert!(make_grid(6, 8.0).is_err());
        assert!(make_grid(8, 0.0).is_err());
        assert!(make_grid(8, -1.0).is_err());
    }

    #[test]
    fn integrate_trivial_cases() {
        let g = make_grid(8, 8.0).unwrap();
        assert_eq!(integrate(&ScalarField::zeros(g)), 0.0);
        assert_eq!(integrate(&ScalarField::constant(g, 2.0)), 1024.0);
    }

    #[test]
    fn gaussian_mass_matches_analytic_integral() {
        let g = make_grid(64, 16.0).unwrap();
        let f = sample_preset(
            &g,
            &Preset::Gaussian {
                mass: 1.0,
                sigma: 1.0,
                center: [0.0; 3],
            },
        )
        .unwrap();
        let m = integrate(&f);
        assert!((0.999..=1.001).contains(&m), "mass {m}");
    }

    #[test]
    fn spike_peak_is_the_sampled_formula_at_center_cell() {
        let g = make_grid(64, 16.0).unwrap();
        let f = sample_preset(&g, &Preset::Spike { mass: 1.0 }).unwrap();
        let s = 3.0 * g.h();
        // nearest cell center is at (h/2, h/2, h/2)
        let r2 = 3.0 * (0.5 * g.h()).powi(2);
        let expected = (2.0 * std::f64::consts::PI * s * s).powf(-1.5) * (-r2 / (2.0 * s * s)).exp();
        assert!((f.max() - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn presets_validate_inputs() {
        let g = make_grid(32, 8.0).unwrap();
        let under = Preset::Gaussian {
            mass: 1.0,
            sigma: 0.3,
            center: [0.0; 3],
        };
        assert!(matches!(sample_preset(&g, &under), Err(Error::UnderResolved { .. })));
        let off = Preset::Gaussian {
            mass: 1.0,
            sigma: 0.5,
            center: [3.0, 0.0, 0.0],
        };
        assert!(matches!(
            sample_preset(&g, &off),
            Err(Error::CenterNearBoundary { .. })
        ));
    }

    #[test]
    fn random_bumps_are_deterministic() {
        let g = make_grid(16, 8.0).unwrap();
        let p = Preset::RandomBumps {
            seed: 7,
            count: 4,
            mass: 2.0,
        };
        let a = sample_preset(&g, &p).unwrap();
        let b = sample_preset(&g, &p).unwrap();
        assert!(a
            .data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!((integrate(&a) - 2.0).abs() < 1e-12);
        assert!(a.min() >= 0.0);
    }

    #[test]
    fn gradient_of_constant_and_linear_fields() {
        let g = make_grid(16, 4.0).unwrap();
        let c = gradient(&ScalarField::constant(g, 3.0));
        assert!((0..3).all(|a| c.component(a).iter().all(|&v| v == 0.0)));
        let lin = gradient(&ScalarField::from_fn(g, |x| x[0]));
        for idx in 0..g.num_cells() {
            assert!((lin.at(idx)[0] - 1.0).abs() < 1e-12);
            assert!(lin.at(idx)[1].abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_gradient_is_second_order() {
        let err = |n: usize| {
            let g = make_grid(n, 12.0).unwrap();
            let f = ScalarField::from_fn(g, |x| gaussian_value(1.0, [1.0; 3], [0.0; 3], x));
            let gr = gradient(&f);
            (0..g.num_cells())
                .map(|idx| {
                    let x = g.center(idx);
                    let exact = -x[0] * f.data()[idx];
                    (gr.at(idx)[0] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn boundary_fraction_cases() {
        let g = make_grid(64, 16.0).unwrap();
        assert_eq!(boundary_mass_fraction(&ScalarField::zeros(g), 4).unwrap(), 0.0);
        let c = ScalarField::constant(g, 1.0);
        let w = 6;
        let inner = ((64 - 2 * w) as f64 / 64.0).powi(3);
        let frac = boundary_mass_fraction(&c, w).unwrap();
        assert!((frac - (1.0 - inner)).abs() < 1e-12);
        let narrow = sample_preset(
            &g,
            &Preset::Gaussian {
                mass: 1.0,
                sigma: 0.75,
                center: [0.0; 3],
            },
        )
        .unwrap();
        assert!(boundary_mass_fraction(&narrow, 4).unwrap() < 1e-8);
        assert!(boundary_mass_fraction(&c, 16).is_err());
    }

    #[test]
    fn radial_presets_are_invariant_under_axis_permutation() {
        let g = make_grid(32, 8.0).unwrap();
        let f = sample_preset(&g, &Preset::Spike { mass: 1.0 }).unwrap();
        for idx in 0..g.num_cells() {
            let [i, j, k] = g.coords(idx);
            let rotated = f.data()[g.index(j, g.n() - 1 - i, k)];
            assert!((rotated - f.data()[idx]).abs() <= 1e-15 * f.max());
            let swapped = f.data()[g.index(k, j, i)];
            assert!((swapped - f.data()[idx]).abs() <= 1e-15 * f.max());
        }
    }
}
