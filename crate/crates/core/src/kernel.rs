//! Nonlocal coefficients by free-space convolution.
//!
//! `A[u] = c_d ∫ ℙ(x−y)/|x−y| u(y) dy` with `ℙ(z) = Id − z⊗z/|z|²`, together
//! with `div A[u] = −(d−1) c_d (u ∗ z/|z|³)` and the Newtonian potential
//! `u ∗ |z|⁻¹`. The ten kernels are sampled once on the doubled box and kept
//! in spectral form; each evaluation costs one forward and one inverse
//! transform per output component.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::ConvolutionPlan;
use crate::grid::{Grid, ScalarField, SymMatrixField, VectorField, DIM, SYM_PAIRS};

/// Default Coulomb normalization `1/(8π)`.
pub const DEFAULT_C_D: f64 = 1.0 / (8.0 * PI);

/// Values substituted for the singular origin sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginRegularization {
    /// Radius of the ball with the volume of one cell.
    pub r_eff: f64,
    /// Ball average of `1/|z|`.
    pub inverse_distance: f64,
    /// Ball average of each diagonal entry of `ℙ(z)/|z|`.
    pub projector_diagonal: f64,
}

impl OriginRegularization {
    pub fn for_spacing(h: f64) -> Self {
        let r_eff = h * (3.0 / (4.0 * PI)).cbrt();
        let inverse_distance = 1.5 / r_eff;
        let d = DIM as f64;
        Self {
            r_eff,
            inverse_distance,
            projector_diagonal: (d - 1.0) / d * inverse_distance,
        }
    }
}

/// Kernel index inside [`KernelTable`].
const MATRIX: [usize; 6] = [0, 1, 2, 3, 4, 5];
const ODD: [usize; 3] = [6, 7, 8];
const NEWTON: usize = 9;

/// `ℙ(z)_{ab}/|z|` for `z ≠ 0`.
#[inline]
pub fn projector_kernel(z: [f64; 3], a: usize, b: usize) -> f64 {
    let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    let r = r2.sqrt();
    let delta = if a == b { 1.0 } else { 0.0 };
    (delta - z[a] * z[b] / r2) / r
}

/// Spectral data of the sampled kernels on the padded grid.
pub struct KernelTable {
    grid: Grid,
    c_d: f64,
    origin: OriginRegularization,
    /// Real spectra of the six even matrix kernels and of `1/|z|`; imaginary
    /// spectra of the three odd kernels `z_j/|z|³`. Each is pre-multiplied by
    /// the quadrature weight `h³` and the inverse transform normalization.
    spectra: Vec<Vec<f64>>,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable")
            .field("grid", &self.grid)
            .field("c_d", &self.c_d)
            .field("origin", &self.origin)
            .finish()
    }
}

/// Sample of kernel `which` at the integer offset `o` (in cells).
fn kernel_sample(which: usize, o: [isize; 3], h: f64, reg: &OriginRegularization) -> f64 {
    if o == [0, 0, 0] {
        return match which {
            0..=2 => reg.projector_diagonal,
            NEWTON => reg.inverse_distance,
            _ => 0.0,
        };
    }
    let z = [o[0] as f64 * h, o[1] as f64 * h, o[2] as f64 * h];
    let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
    match which {
        0..=5 => {
            let (a, b) = SYM_PAIRS[which];
            projector_kernel(z, a, b)
        }
        6..=8 => z[which - 6] / (r * r * r),
        _ => 1.0 / r,
    }
}

impl KernelTable {
    pub fn new(grid: &Grid, plan: &ConvolutionPlan, c_d: f64) -> Result<Self> {
        if !(c_d > 0.0) {
            return Err(Error::InvalidParameter(format!("c_d must be positive, got {c_d}")));
        }
        if plan.n() != grid.n() {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                found: plan.n(),
            });
        }
        let n = grid.n() as isize;
        let big = plan.padded();
        let h = grid.h();
        let origin = OriginRegularization::for_spacing(h);
        let weight = grid.cell_volume() / (big * big * big) as f64;
        // Padded index m maps to offset m (m < n) or m − 2n (m > n). The plane
        // m = n never reaches the unpadded box and is left at zero so every
        // sampled kernel keeps its exact parity.
        let offset = |m: usize| -> Option<isize> {
            let m = m as isize;
            match m.cmp(&n) {
                std::cmp::Ordering::Less => Some(m),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(m - 2 * n),
            }
        };
        let mut spectra = Vec::with_capacity(10);
        let mut samples = vec![0.0; big * big * big];
        for which in 0..10 {
            for (idx, s) in samples.iter_mut().enumerate() {
                let (i, j, k) = (idx % big, (idx / big) % big, idx / (big * big));
                *s = match (offset(i), offset(j), offset(k)) {
                    (Some(a), Some(b), Some(c)) => kernel_sample(which, [a, b, c], h, &origin),
                    _ => 0.0,
                };
            }
            let spec = plan.forward_full(&samples);
            let odd = ODD.contains(&which);
            spectra.push(
                spec.iter()
                    .map(|c| weight * if odd { c.im } else { c.re })
                    .collect(),
            );
        }
        Ok(Self {
            grid: *grid,
            c_d,
            origin,
            spectra,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn c_d(&self) -> f64 {
        self.c_d
    }

    pub fn origin(&self) -> &OriginRegularization {
        &self.origin
    }

    fn check(&self, u: &ScalarField) -> Result<()> {
        u.check_grid(&self.grid)
    }

    fn convolve_even(&self, plan: &ConvolutionPlan, uh: &[Complex64], which: usize, buf: &mut Vec<Complex64>, out: &mut [f64]) {
        buf.clear();
        buf.extend(uh.iter().zip(&self.spectra[which]).map(|(a, &k)| a * k));
        plan.inverse_to_box(buf, out);
    }

    fn convolve_odd(&self, plan: &ConvolutionPlan, uh: &[Complex64], which: usize, buf: &mut Vec<Complex64>, out: &mut [f64]) {
        buf.clear();
        // (a + ib)(i k) = −b k + i a k
        buf.extend(
            uh.iter()
                .zip(&self.spectra[which])
                .map(|(a, &k)| Complex64::new(-a.im * k, a.re * k)),
        );
        plan.inverse_to_box(buf, out);
    }
}

/// `A[u]` at every cell.
pub fn compute_a(u: &ScalarField, table: &KernelTable, plan: &ConvolutionPlan) -> Result<SymMatrixField> {
    table.check(u)?;
    let grid = table.grid;
    let uh = plan.forward_padded(u.data());
    let mut buf = Vec::with_capacity(uh.len());
    let mut a = SymMatrixField::zeros(grid);
    for (slot, &which) in MATRIX.iter().enumerate() {
        let out = a.component_mut(slot);
        table.convolve_even(plan, &uh, which, &mut buf, out);
        out.iter_mut().for_each(|v| *v *= table.c_d);
    }
    Ok(a)
}

/// `div A[u]` through the odd kernel `z/|z|³`.
pub fn compute_div_a(u: &ScalarField, table: &KernelTable, plan: &ConvolutionPlan) -> Result<VectorField> {
    table.check(u)?;
    let grid = table.grid;
    let uh = plan.forward_padded(u.data());
    let mut buf = Vec::with_capacity(uh.len());
    let mut out = VectorField::zeros(grid);
    let factor = -((DIM - 1) as f64) * table.c_d;
    for (axis, &which) in ODD.iter().enumerate() {
        let comp = out.component_mut(axis);
        table.convolve_odd(plan, &uh, which, &mut buf, comp);
        comp.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(out)
}

/// `u ∗ |z|⁻¹`.
pub fn newtonian_potential(u: &ScalarField, table: &KernelTable, plan: &ConvolutionPlan) -> Result<ScalarField> {
    table.check(u)?;
    let uh = plan.forward_padded(u.data());
    let mut buf = Vec::with_capacity(uh.len());
    let mut out = vec![0.0; table.grid.num_cells()];
    table.convolve_even(plan, &uh, NEWTON, &mut buf, &mut out);
    ScalarField::from_vec(table.grid, out)
}

/// Direct midpoint sum of `c_d ℙ(x−y)/|x−y| u(y) h³` at selected cells,
/// skipping the self cell and adding its ball-averaged contribution.
pub fn quadrature_oracle_a(u: &ScalarField, points: &[usize], c_d: f64) -> Vec<[f64; 6]> {
    let grid = *u.grid();
    let vol = grid.cell_volume();
    let reg = OriginRegularization::for_spacing(grid.h());
    points
        .iter()
        .map(|&p| {
            let x = grid.center(p);
            let mut acc = [0.0; 6];
            for (q, &uq) in u.data().iter().enumerate() {
                if q == p || uq == 0.0 {
                    continue;
                }
                let y = grid.center(q);
                let z = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                for (slot, &(a, b)) in SYM_PAIRS.iter().enumerate() {
                    acc[slot] += projector_kernel(z, a, b) * uq;
                }
            }
            let self_mass = u.data()[p];
            for s in acc.iter_mut().take(3) {
                *s += reg.projector_diagonal * self_mass;
            }
            acc.map(|v| v * vol * c_d)
        })
        .collect()
}

/// Shift, scale and arccosine argument of the trigonometric closed form:
/// eigenvalues are `q + 2p cos(φ + 2πk/3)` with `φ = acos(r)/3`.
#[inline]
fn trig_parts(m: [f64; 6]) -> Option<(f64, f64, f64)> {
    let [a11, a22, a33, a12, a13, a23] = m;
    let off = a12 * a12 + a13 * a13 + a23 * a23;
    if off == 0.0 {
        return None;
    }
    let q = (a11 + a22 + a33) / 3.0;
    let (b11, b22, b33) = (a11 - q, a22 - q, a33 - q);
    let p2 = (b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * off) / 6.0;
    let p = p2.sqrt();
    let det = b11 * (b22 * b33 - a23 * a23) - a12 * (a12 * b33 - a23 * a13) + a13 * (a12 * a23 - b22 * a13);
    Some((q, p, (det / (2.0 * p2 * p)).clamp(-1.0, 1.0)))
}

/// Arccosine arguments closer to ±1 than this mean a nearly repeated pair.
const NEAR_DOUBLE: f64 = 1.0 - 1e-6;

/// Eigenvalues of a symmetric 3×3 matrix given as (11, 22, 33, 12, 13, 23),
/// ascending. Trigonometric closed form; when two eigenvalues nearly
/// coincide the arccosine loses accuracy and cyclic Jacobi rotations are
/// used instead.
pub fn sym_eigenvalues(m: [f64; 6]) -> [f64; 3] {
    let Some((q, p, r)) = trig_parts(m) else {
        let mut d = [m[0], m[1], m[2]];
        d.sort_by(f64::total_cmp);
        return d;
    };
    if r.abs() >= NEAR_DOUBLE {
        return jacobi_eigenvalues(m);
    }
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

/// Largest eigenvalue; relative accuracy about `1e-8` at worst, which is
/// ample for step-size control.
pub fn sym_eigen_max(m: [f64; 6]) -> f64 {
    match trig_parts(m) {
        Some((q, p, r)) => q + 2.0 * p * (r.acos() / 3.0).cos(),
        None => m[0].max(m[1]).max(m[2]),
    }
}

/// Smallest eigenvalue; exact closed form unless it belongs to a nearly
/// repeated pair.
pub fn sym_eigen_min(m: [f64; 6]) -> f64 {
    match trig_parts(m) {
        Some((_, _, r)) if r >= NEAR_DOUBLE => jacobi_eigenvalues(m)[0],
        Some((q, p, r)) => q + 2.0 * p * (r.acos() / 3.0 + 2.0 * PI / 3.0).cos(),
        None => m[0].min(m[1]).min(m[2]),
    }
}

/// Cyclic Jacobi rotations; accurate to a few ulps of the matrix norm,
/// including near repeated eigenvalues.
fn jacobi_eigenvalues(m: [f64; 6]) -> [f64; 3] {
    let [a11, a22, a33, a12, a13, a23] = m;
    let mut a = [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]];
    for _ in 0..32 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= 1e-36 * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut d = [a[0][0], a[1][1], a[2][2]];
    d.sort_by(f64::total_cmp);
    d
}

/// Minimum over cells of `λ_min(A(x))·⟨x⟩^d` and the cell where it occurs.
pub fn ellipticity_profile(a: &SymMatrixField, grid: &Grid) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for idx in 0..grid.num_cells() {
        let x = grid.center(idx);
        let bracket2 = 1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let v = sym_eigen_min(a.packed(idx)) * bracket2.powf(0.5 * DIM as f64);
        if v < best.0 {
            best = (v, idx);
        }
    }
    best
}

/// Closed-form coefficients for an isotropic Gaussian source.
pub mod reference {
    use super::*;

    fn sqrt_2_over_pi() -> f64 {
        (2.0 / PI).sqrt()
    }

    /// `(ψ'(r)/r, ψ''(r))` for the unit Gaussian, `ψ = u ∗ |z|`.
    fn second_potential_derivatives(r: f64) -> (f64, f64) {
        let s = sqrt_2_over_pi();
        if r < 1e-3 {
            let r2 = r * r;
            return (s * (2.0 / 3.0 - r2 / 15.0), s * (2.0 / 3.0) * (1.0 - 0.3 * r2));
        }
        let e = (-0.5 * r * r).exp();
        let erf = libm::erf(r / std::f64::consts::SQRT_2);
        let mass_within = erf - s * r * e;
        let fourth = 3.0 * erf - s * (3.0 * r + r * r * r) * e;
        let d1 = mass_within - fourth / (3.0 * r * r) + (2.0 * r / 3.0) * s * e;
        let d2 = 2.0 * fourth / (3.0 * r * r * r) + (2.0 / 3.0) * s * e;
        (d1 / r, d2)
    }

    /// `A[u](x)` for `u` a Gaussian of the given mass and width centered at `center`.
    pub fn gaussian_a(mass: f64, sigma: f64, center: [f64; 3], x: [f64; 3], c_d: f64) -> [f64; 6] {
        let z = [(x[0] - center[0]) / sigma, (x[1] - center[1]) / sigma, (x[2] - center[2]) / sigma];
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let (tangential, radial) = second_potential_derivatives(r);
        let scale = mass * c_d / sigma;
        std::array::from_fn(|slot| {
            let (a, b) = SYM_PAIRS[slot];
            let delta = if a == b { 1.0 } else { 0.0 };
            let proj = if r > 0.0 { z[a] * z[b] / (r * r) } else { 0.0 };
            scale * (tangential * (delta - proj) + radial * proj)
        })
    }

    /// Newtonian potential of the same Gaussian.
    pub fn gaussian_potential(mass: f64, sigma: f64, center: [f64; 3], x: [f64; 3]) -> f64 {
        let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2)).sqrt();
        if r < 1e-12 * sigma {
            return mass * sqrt_2_over_pi() / sigma;
        }
        mass * libm::erf(r / (std::f64::consts::SQRT_2 * sigma)) / r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_preset, Preset};

    #[test]
    fn projector_kernel_algebra() {
        let a = 1.7;
        let tr: f64 = (0..3).map(|i| projector_kernel([0.3, -1.1, 0.4], i, i)).sum();
        let r = (0.09f64 + 1.21 + 0.16).sqrt();
        assert!((tr - 2.0 / r).abs() < 1e-14);
        assert_eq!(projector_kernel([a, 0.0, 0.0], 0, 1), 0.0);
        assert_eq!(projector_kernel([a, 0.0, 0.0], 0, 0), 0.0);
        assert!((projector_kernel([0.0, a, 0.0], 0, 0) - 1.0 / a).abs() < 1e-15);
    }

    #[test]
    fn origin_regularization_values() {
        let reg = OriginRegularization::for_spacing(0.5);
        let vol = 4.0 / 3.0 * PI * reg.r_eff.powi(3);
        assert!((vol - 0.125).abs() < 1e-15);
        assert!((reg.projector_diagonal - reg.inverse_distance * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_match_known_matrices() {
        assert_eq!(sym_eigenvalues([2.0, 2.0, 2.0, 0.0, 0.0, 0.0]), [2.0; 3]);
        let ev = sym_eigenvalues([2.0, 2.0, 3.0, 1.0, 0.0, 0.0]);
        for (a, b) in ev.iter().zip([1.0, 3.0, 3.0]) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
        let ev = sym_eigenvalues([0.0; 6]);
        assert_eq!(ev, [0.0; 3]);
        // rank-one projector plus a tiny multiple of the identity
        let v = [0.48f64, -0.6, 0.64];
        let eps = 1e-9;
        let m = std::array::from_fn(|s| {
            let (a, b) = SYM_PAIRS[s];
            v[a] * v[b] + if a == b { eps } else { 0.0 }
        });
        let ev = sym_eigenvalues(m);
        assert!((ev[0] - eps).abs() < 1e-15 && (ev[1] - eps).abs() < 1e-15, "{ev:?}");
        assert!((sym_eigen_min(m) - eps).abs() < 1e-15);
        assert!((sym_eigen_max(m) - 1.0 - eps).abs() < 1e-12);
    }

    #[test]
    fn extreme_eigenvalues_agree_with_full_solve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let ev = sym_eigenvalues(m);
            assert!((sym_eigen_min(m) - ev[0]).abs() < 1e-12);
            assert!((sym_eigen_max(m) - ev[2]).abs() < 1e-7);
            let trace = m[0] + m[1] + m[2];
            assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-12);
        }
        // tangential far-field shape: repeated top pair, small radial value
        let x = [0.6f64, 0.0, 0.8];
        let m = std::array::from_fn(|s| {
            let (a, b) = SYM_PAIRS[s];
            (if a == b { 1.0 } else { 0.0 }) - 0.999 * x[a] * x[b]
        });
        assert!((sym_eigen_min(m) - 1e-3).abs() < 1e-14);
    }

    #[test]
    fn zero_density_gives_zero_coefficients() {
        let g = make_grid(8, 8.0).unwrap();
        let plan = ConvolutionPlan::new(&g);
        let table = KernelTable::new(&g, &plan, DEFAULT_C_D).unwrap();
        let u = ScalarField::zeros(g);
        let a = compute_a(&u, &table, &plan).unwrap();
        assert!((0..6).all(|s| a.component(s).iter().all(|&v| v == 0.0)));
        let d = compute_div_a(&u, &table, &plan).unwrap();
        assert_eq!(d.sup_norm(), 0.0);
        assert_eq!(newtonian_potential(&u, &table, &plan).unwrap().max(), 0.0);
        assert_eq!(ellipticity_profile(&a, &g).0, 0.0);
        assert!(quadrature_oracle_a(&u, &[0, 5], 1.0).iter().all(|m| m.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_mismatched_grid() {
        let g = make_grid(8, 8.0).unwrap();
        let plan = ConvolutionPlan::new(&g);
        let table = KernelTable::new(&g, &plan, DEFAULT_C_D).unwrap();
        let other = ScalarField::zeros(make_grid(10, 8.0).unwrap());
        assert!(compute_a(&other, &table, &plan).is_err());
        assert!(KernelTable::new(&g, &plan, 0.0).is_err());
    }

    #[test]
    fn fft_matches_direct_sum_on_small_grid() {
        let g = make_grid(16, 8.0).unwrap();
        let plan = ConvolutionPlan::new(&g);
        let table = KernelTable::new(&g, &plan, DEFAULT_C_D).unwrap();
        let u = sample_preset(&g, &Preset::RandomBumps { seed: 11, count: 3, mass: 1.0 }).unwrap();
        let a = compute_a(&u, &table, &plan).unwrap();
        let pts = [0, 100, 2000, 4095, g.index(8, 8, 8)];
        let oracle = quadrature_oracle_a(&u, &pts, DEFAULT_C_D);
        for (p, o) in pts.iter().zip(&oracle) {
            let m = a.packed(*p);
            for s in 0..6 {
                assert!((m[s] - o[s]).abs() < 1e-12 * (1.0 + o[0].abs()), "{m:?} vs {o:?}");
            }
        }
    }

    #[test]
    fn identity_matrix_profile_is_center_value() {
        let g = make_grid(8, 8.0).unwrap();
        let a = SymMatrixField::identity(g, 1.0);
        let (v, idx) = ellipticity_profile(&a, &g);
        let x = g.center(idx);
        assert!((v - (1.0f64 + 3.0 * 0.25).powf(1.5)).abs() < 1e-12);
        assert!(x.iter().all(|c| c.abs() == 0.5));
    }

    #[test]
    fn reference_trace_matches_potential() {
        for x in [[0.3, 0.1, -0.2], [2.0, 1.0, 0.5], [1e-4, 0.0, 0.0]] {
            let a = reference::gaussian_a(2.0, 0.7, [0.0; 3], x, 1.0);
            let phi = reference::gaussian_potential(2.0, 0.7, [0.0; 3], x);
            assert!((a[0] + a[1] + a[2] - 2.0 * phi).abs() < 1e-9 * phi, "{a:?} {phi}");
        }
    }
}
