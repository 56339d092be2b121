//! Zero-padded real 3-D transforms on the doubled box.
//!
//! A field on the `n³` grid is embedded in a `(2n)³` array whose other
//! entries are zero. Circular convolution on the padded array then equals the
//! aperiodic convolution inside the original box. The transforms skip lanes
//! that are identically zero on the way in and lanes whose output is discarded
//! on the way out.
//!
//! Spectra use the half-complex layout `s[kx + H (y + N z)]` with `N = 2n` and
//! `H = n + 1`.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

pub struct ConvolutionPlan {
    n: usize,
    big: usize,
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("n", &self.n)
            .field("padded", &self.big)
            .finish()
    }
}

impl ConvolutionPlan {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let big = 2 * n;
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Self {
            n,
            big,
            half: big / 2 + 1,
            r2c: rp.plan_fft_forward(big),
            c2r: rp.plan_fft_inverse(big),
            fwd: cp.plan_fft_forward(big),
            inv: cp.plan_fft_inverse(big),
        }
    }

    /// Points per axis of the unpadded grid.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per axis of the padded grid.
    pub fn padded(&self) -> usize {
        self.big
    }

    pub fn spectrum_len(&self) -> usize {
        self.half * self.big * self.big
    }

    /// Unnormalized forward transform of an `n³` field zero-padded to `(2n)³`.
    pub fn forward_padded(&self, data: &[f64]) -> Vec<Complex64> {
        assert_eq!(data.len(), self.n * self.n * self.n);
        let n = self.n;
        self.forward_impl(n, |j, k, lane: &mut [f64]| {
            let src = n * (j + n * k);
            lane[..n].copy_from_slice(&data[src..src + n]);
            lane[n..].fill(0.0);
        })
    }

    /// Unnormalized forward transform of a full `(2n)³` real array.
    pub fn forward_full(&self, data: &[f64]) -> Vec<Complex64> {
        let big = self.big;
        assert_eq!(data.len(), big * big * big);
        self.forward_impl(big, |j, k, lane: &mut [f64]| {
            let src = big * (j + big * k);
            lane.copy_from_slice(&data[src..src + big]);
        })
    }

    fn forward_impl(&self, active: usize, fill: impl Fn(usize, usize, &mut [f64])) -> Vec<Complex64> {
        let (big, half) = (self.big, self.half);
        let mut spec = vec![Complex64::new(0.0, 0.0); self.spectrum_len()];

        let mut lane = self.r2c.make_input_vec();
        let mut out = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for k in 0..active {
            for j in 0..active {
                fill(j, k, &mut lane);
                self.r2c
                    .process_with_scratch(&mut lane, &mut out, &mut scratch)
                    .expect("r2c lengths match the plan");
                let dst = half * (j + big * k);
                spec[dst..dst + half].copy_from_slice(&out);
            }
        }

        self.axis_pass(&mut spec, 1, active, &self.fwd);
        self.axis_pass(&mut spec, 2, big, &self.fwd);
        spec
    }

    /// Unnormalized inverse transform; writes only the unpadded `n³` box.
    /// `spec` is used as workspace.
    pub fn inverse_to_box(&self, spec: &mut [Complex64], out: &mut [f64]) {
        let (n, big, half) = (self.n, self.big, self.half);
        assert_eq!(spec.len(), self.spectrum_len());
        assert_eq!(out.len(), n * n * n);

        self.axis_pass(spec, 2, big, &self.inv);
        self.axis_pass(spec, 1, n, &self.inv);

        let mut lane = self.c2r.make_input_vec();
        let mut res = self.c2r.make_output_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        for k in 0..n {
            for j in 0..n {
                let src = half * (j + big * k);
                lane.copy_from_slice(&spec[src..src + half]);
                lane[0].im = 0.0;
                lane[half - 1].im = 0.0;
                self.c2r
                    .process_with_scratch(&mut lane, &mut res, &mut scratch)
                    .expect("c2r lengths match the plan");
                let dst = n * (j + n * k);
                out[dst..dst + n].copy_from_slice(&res[..n]);
            }
        }
    }

    /// Complex transforms along `axis` (1 = y, 2 = z). For the y pass only the
    /// first `planes` z-planes are touched.
    fn axis_pass(&self, spec: &mut [Complex64], axis: usize, planes: usize, fft: &Arc<dyn Fft<f64>>) {
        let (big, half) = (self.big, self.half);
        let mut tmp = vec![Complex64::new(0.0, 0.0); half * big];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        match axis {
            1 => {
                for z in 0..planes {
                    let plane = &mut spec[half * big * z..half * big * (z + 1)];
                    for y in 0..big {
                        for kx in 0..half {
                            tmp[kx * big + y] = plane[kx + half * y];
                        }
                    }
                    fft.process_with_scratch(&mut tmp, &mut scratch);
                    for y in 0..big {
                        for kx in 0..half {
                            plane[kx + half * y] = tmp[kx * big + y];
                        }
                    }
                }
            }
            2 => {
                let zstride = half * big;
                for y in 0..planes {
                    for z in 0..big {
                        let row = &spec[half * y + zstride * z..half * (y + 1) + zstride * z];
                        for (kx, v) in row.iter().enumerate() {
                            tmp[kx * big + z] = *v;
                        }
                    }
                    fft.process_with_scratch(&mut tmp, &mut scratch);
                    for z in 0..big {
                        let row = &mut spec[half * y + zstride * z..half * (y + 1) + zstride * z];
                        for (kx, v) in row.iter_mut().enumerate() {
                            *v = tmp[kx * big + z];
                        }
                    }
                }
            }
            _ => unreachable!("axis 0 is handled by the real transforms"),
        }
    }
}
