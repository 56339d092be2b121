//! Conservative flux form of `div(A∇u)` with zero flux through the box walls.
//!
//! Face fluxes use the arithmetic mean of the two adjacent cell matrices, a
//! two-point normal derivative, and four-point transverse derivatives (two
//! point where a neighbor falls outside the box). Every interior face flux is
//! added to one cell and subtracted from the other, so the cell sum of the
//! tendency vanishes up to round-off.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{sym_slot, Grid, ScalarField, SymMatrixField};

/// How the transverse derivative at a face is built from the four one-sided
/// differences around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transverse {
    /// Plain average of the two centered differences.
    Average,
    /// Minmod of the four one-sided differences: zero at a local extremum,
    /// which suppresses the undershoots of strongly anisotropic fluxes.
    #[default]
    Minmod,
}

/// Scratch space for [`apply_into`].
#[derive(Debug, Clone)]
pub struct StencilScratch {
    deriv: [Vec<f64>; 3],
}

impl StencilScratch {
    pub fn new(grid: &Grid) -> Self {
        let len = grid.num_cells();
        Self {
            deriv: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }
}

/// Cell-centered derivative along `axis`: centered inside, one-sided first
/// order on the wall layers.
fn cell_derivative(grid: &Grid, u: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let stride = [1, n, n * n][axis];
    let (inv_h, inv_2h) = (1.0 / grid.h(), 0.5 / grid.h());
    for idx in 0..grid.num_cells() {
        let pos = grid.coords(idx)[axis];
        out[idx] = if pos == 0 {
            (u[idx + stride] - u[idx]) * inv_h
        } else if pos == n - 1 {
            (u[idx] - u[idx - stride]) * inv_h
        } else {
            (u[idx + stride] - u[idx - stride]) * inv_2h
        };
    }
}

/// Forward difference along `axis`; NaN on the last layer marks "absent".
fn forward_difference(grid: &Grid, u: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let stride = [1, n, n * n][axis];
    let inv_h = 1.0 / grid.h();
    for idx in 0..grid.num_cells() {
        out[idx] = if grid.coords(idx)[axis] == n - 1 {
            f64::NAN
        } else {
            (u[idx + stride] - u[idx]) * inv_h
        };
    }
}

#[inline]
fn minmod_accumulate(acc: Option<f64>, v: f64) -> Option<f64> {
    if v.is_nan() {
        return acc;
    }
    Some(match acc {
        None => v,
        Some(a) if a > 0.0 && v > 0.0 => a.min(v),
        Some(a) if a < 0.0 && v < 0.0 => a.max(v),
        Some(_) => 0.0,
    })
}

/// Minmod of the available one-sided differences around the face `(p, q)`.
#[inline]
fn limited(fwd: &[f64], p: usize, q: usize, back: Option<usize>) -> f64 {
    let mut acc = minmod_accumulate(None, fwd[p]);
    acc = minmod_accumulate(acc, fwd[q]);
    if let Some(s) = back {
        acc = minmod_accumulate(acc, fwd[p - s]);
        acc = minmod_accumulate(acc, fwd[q - s]);
    }
    acc.unwrap_or(0.0)
}

/// Writes `div(A∇u)` into `out`.
pub fn apply_into(grid: &Grid, u: &[f64], a: &SymMatrixField, transverse: Transverse, scratch: &mut StencilScratch, out: &mut [f64]) {
    let n = grid.n();
    let inv_h = 1.0 / grid.h();
    for axis in 0..3 {
        match transverse {
            Transverse::Average => cell_derivative(grid, u, axis, &mut scratch.deriv[axis]),
            Transverse::Minmod => forward_difference(grid, u, axis, &mut scratch.deriv[axis]),
        }
    }
    out.fill(0.0);
    for j in 0..3 {
        let strides = [1, n, n * n];
        let stride = strides[j];
        let normal = a.component(sym_slot(j, j));
        let (k1, k2) = ((j + 1) % 3, (j + 2) % 3);
        let c1 = a.component(sym_slot(j, k1));
        let c2 = a.component(sym_slot(j, k2));
        let (g1, g2) = (&scratch.deriv[k1], &scratch.deriv[k2]);
        for k in 0..n {
            for jj in 0..n {
                for i in 0..n {
                    let pos = [i, jj, k];
                    if pos[j] == n - 1 {
                        continue;
                    }
                    let p = i + n * (jj + n * k);
                    let q = p + stride;
                    let (t1, t2) = match transverse {
                        Transverse::Average => (0.5 * (g1[p] + g1[q]), 0.5 * (g2[p] + g2[q])),
                        Transverse::Minmod => (
                            limited(g1, p, q, (pos[k1] > 0).then_some(strides[k1])),
                            limited(g2, p, q, (pos[k2] > 0).then_some(strides[k2])),
                        ),
                    };
                    let flux = 0.5
                        * ((normal[p] + normal[q]) * (u[q] - u[p]) * inv_h
                            + (c1[p] + c1[q]) * t1
                            + (c2[p] + c2[q]) * t2);
                    out[p] += flux * inv_h;
                    out[q] -= flux * inv_h;
                }
            }
        }
    }
}

/// Tendency `div(A∇u)` of the conservative discretization.
pub fn apply_diffusion(u: &ScalarField, a: &SymMatrixField, transverse: Transverse) -> Result<ScalarField> {
    let grid = *u.grid();
    u.check_grid(a.grid())?;
    let mut scratch = StencilScratch::new(&grid);
    let mut out = vec![0.0; grid.num_cells()];
    apply_into(&grid, u.data(), a, transverse, &mut scratch, &mut out);
    ScalarField::from_vec(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};

    fn random_inputs(grid: Grid, seed: u64) -> (ScalarField, SymMatrixField) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = ScalarField::from_vec(grid, (0..grid.num_cells()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let comps = std::array::from_fn(|s| {
            (0..grid.num_cells())
                .map(|_| if s < 3 { rng.gen_range(1.0..2.0) } else { rng.gen_range(-0.3..0.3) })
                .collect()
        });
        (u, SymMatrixField::from_components(grid, comps).unwrap())
    }

    #[test]
    fn constant_field_has_zero_tendency() {
        let g = make_grid(8, 4.0).unwrap();
        let (_, a) = random_inputs(g, 1);
        for tr in [Transverse::Average, Transverse::Minmod] {
            let out = apply_diffusion(&ScalarField::constant(g, 2.5), &a, tr).unwrap();
            assert!(out.data().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn identity_gives_seven_point_laplacian_inside() {
        let g = make_grid(10, 5.0).unwrap();
        let (u, _) = random_inputs(g, 2);
        let out = apply_diffusion(&u, &SymMatrixField::identity(g, 1.0), Transverse::Minmod).unwrap();
        let h2 = g.h() * g.h();
        let n = g.n();
        for k in 1..n - 1 {
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let p = g.index(i, j, k);
                    let f = u.data();
                    let lap = (f[p + 1] + f[p - 1] + f[p + n] + f[p - n] + f[p + n * n] + f[p - n * n] - 6.0 * f[p]) / h2;
                    assert!((out.data()[p] - lap).abs() < 1e-12 * lap.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn tendency_sums_to_zero() {
        let g = make_grid(12, 6.0).unwrap();
        for seed in 0..4 {
            let (u, a) = random_inputs(g, seed);
            for tr in [Transverse::Average, Transverse::Minmod] {
                let out = apply_diffusion(&u, &a, tr).unwrap();
                let total: f64 = out.data().iter().sum();
                let scale: f64 = out.data().iter().map(|v| v.abs()).sum();
                assert!(total.abs() <= 1e-13 * scale, "{total} vs {scale}");
            }
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let u = ScalarField::zeros(make_grid(8, 4.0).unwrap());
        let a = SymMatrixField::identity(make_grid(10, 4.0).unwrap(), 1.0);
        assert!(apply_diffusion(&u, &a, Transverse::Average).is_err());
    }
}
