//! FFT pair, spectral derivatives and the exact kinetic flow on a periodic grid.
//!
//! The forward transform is unnormalized and the inverse carries the `1/n`
//! factor, so `inverse(forward(f)) == f`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, WaveField};

pub struct SpectralPlan {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    k: Vec<Vec<f64>>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("grid", &self.grid).finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.points().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.points().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let k: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.wavenumbers(a)).collect();
        let k2 = broadcast(grid, |idx| idx.iter().enumerate().map(|(a, &i)| k[a][i].powi(2)).sum());
        SpectralPlan { grid: grid.clone(), forward, inverse, k, k2 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Wavenumbers of `axis` in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.k[axis]
    }

    /// `|k|^2` for every Fourier mode, flat in storage order.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.grid.len(), "field does not match plan grid");
        let d = self.grid.dim();
        let points = self.grid.points();
        let strides = self.grid.strides();
        for axis in 0..d {
            let plan = &plans[axis];
            let n = points[axis];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            if axis == d - 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let stride = strides[axis];
            let block = n * stride;
            let mut line = vec![Complex64::default(); n];
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, z) in line.iter_mut().enumerate() {
                        *z = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, z) in line.iter().enumerate() {
                        data[base + i * stride] = *z;
                    }
                }
            }
        }
    }

    /// Forward transform of a copy.
    pub fn spectrum(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut s = f.to_vec();
        self.forward(&mut s);
        s
    }

    /// Spectral partial derivatives, one field per axis.
    pub fn gradient(&self, f: &[Complex64]) -> Vec<Vec<Complex64>> {
        let spec = self.spectrum(f);
        self.gradient_from_spectrum(&spec)
    }

    pub fn gradient_from_spectrum(&self, spec: &[Complex64]) -> Vec<Vec<Complex64>> {
        (0..self.grid.dim())
            .map(|axis| {
                let kk = broadcast(&self.grid, |idx| self.k[axis][idx[axis]]);
                let mut out: Vec<Complex64> =
                    spec.iter().zip(&kk).map(|(z, &k)| z * Complex64::new(0.0, k)).collect();
                self.inverse(&mut out);
                out
            })
            .collect()
    }

    /// Gradient of a real field.
    pub fn gradient_real(&self, f: &[f64]) -> Vec<Vec<Complex64>> {
        let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.gradient(&c)
    }

    /// `sum_j |d_j f|^2` at every point.
    pub fn gradient_norm_squared(&self, f: &[Complex64]) -> Vec<f64> {
        let grads = self.gradient(f);
        let mut out = vec![0.0; f.len()];
        for g in &grads {
            for (o, z) in out.iter_mut().zip(g) {
                *o += z.norm_sqr();
            }
        }
        out
    }

    pub fn laplacian(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut s = self.spectrum(f);
        for (z, k2) in s.iter_mut().zip(&self.k2) {
            *z *= -k2;
        }
        self.inverse(&mut s);
        s
    }

    /// Spectral Laplacian of a real field (imaginary roundoff discarded).
    pub fn laplacian_real(&self, f: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.laplacian(&c).into_iter().map(|z| z.re).collect()
    }

    /// Fourier multiplier of the free flow `i h psi_t = -(h^2/2) Lap psi` over `dt`.
    pub fn kinetic_multiplier(&self, dt: f64, h: f64) -> Vec<Complex64> {
        self.k2.iter().map(|k2| Complex64::from_polar(1.0, -0.5 * h * k2 * dt)).collect()
    }

    /// Exact free flow over `dt`: each mode picks up `exp(-i h |k|^2 dt / 2)`.
    pub fn apply_kinetic(&self, psi: &mut WaveField, dt: f64, h: f64) {
        if dt == 0.0 {
            return;
        }
        let m = self.kinetic_multiplier(dt, h);
        self.apply_multiplier(&mut psi.values, &m);
    }

    /// `f <- IFFT(m * FFT(f))`.
    pub fn apply_multiplier(&self, f: &mut [Complex64], m: &[Complex64]) {
        self.forward(f);
        for (z, w) in f.iter_mut().zip(m) {
            *z *= w;
        }
        self.inverse(f);
    }

    /// Translate a band-limited field by `shift` (Fourier phase shift).
    pub fn translate(&self, f: &mut [Complex64], shift: &[f64]) {
        let m = broadcast(&self.grid, |idx| {
            let phase: f64 = idx.iter().enumerate().map(|(a, &i)| -self.k[a][i] * shift[a]).sum();
            phase
        });
        let m: Vec<Complex64> = m.into_iter().map(|p| Complex64::from_polar(1.0, p)).collect();
        self.apply_multiplier(f, &m);
    }

    /// 2/3-rule mask: keeps modes with `|k_a| <= (2/3) k_nyquist` on every axis.
    pub fn dealias_mask(&self) -> Vec<Complex64> {
        let cut: Vec<f64> = (0..self.grid.dim()).map(|a| 2.0 / 3.0 * self.grid.nyquist(a)).collect();
        broadcast(&self.grid, |idx| {
            let keep = idx.iter().enumerate().all(|(a, &i)| self.k[a][i].abs() <= cut[a] + 1e-12);
            if keep {
                1.0
            } else {
                0.0
            }
        })
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect()
    }

    /// Fraction of spectral power in the top octave (`|k_a| > k_nyquist / 2`
    /// on some axis).
    pub fn top_octave_fraction(&self, f: &[Complex64]) -> f64 {
        let spec = self.spectrum(f);
        let half: Vec<f64> = (0..self.grid.dim()).map(|a| 0.5 * self.grid.nyquist(a)).collect();
        let top = broadcast(&self.grid, |idx| {
            if idx.iter().enumerate().any(|(a, &i)| self.k[a][i].abs() > half[a] + 1e-12) {
                1.0
            } else {
                0.0
            }
        });
        let mut total = 0.0;
        let mut tail = 0.0;
        for (z, t) in spec.iter().zip(&top) {
            let p = z.norm_sqr();
            total += p;
            tail += p * t;
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    /// Smallest `|k|` such that the spectral power beyond it is at most
    /// `threshold` of the total.
    pub fn effective_bandwidth(&self, f: &[Complex64], threshold: f64) -> f64 {
        let spec = self.spectrum(f);
        let mut modes: Vec<(f64, f64)> =
            spec.iter().zip(&self.k2).map(|(z, &k2)| (k2, z.norm_sqr())).collect();
        let total: f64 = modes.iter().map(|m| m.1).sum();
        if total == 0.0 {
            return 0.0;
        }
        modes.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut tail = 0.0;
        for (k2, p) in modes {
            tail += p;
            if tail > threshold * total {
                return k2.sqrt();
            }
        }
        0.0
    }
}

/// Evaluate `f(multi_index)` on every grid point in storage order.
pub(crate) fn broadcast<T>(grid: &Grid, f: impl Fn(&[usize]) -> T) -> Vec<T> {
    let mut idx = vec![0usize; grid.dim()];
    (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            f(&idx)
        })
        .collect()
}

/// Fourth-order centered finite-difference Laplacian on the periodic grid.
/// Used as an independent cross-check of the spectral operator.
pub fn laplacian_fd4(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let strides = grid.strides();
    let mut out = vec![0.0; f.len()];
    let mut idx = vec![0usize; grid.dim()];
    for flat in 0..f.len() {
        grid.unravel(flat, &mut idx);
        let mut acc = 0.0;
        for a in 0..grid.dim() {
            let n = grid.points()[a];
            let dx = grid.spacing(a);
            let at = |off: isize| {
                let i = (idx[a] as isize + off).rem_euclid(n as isize) as usize;
                f[flat - idx[a] * strides[a] + i * strides[a]]
            };
            acc += (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * dx * dx);
        }
        out[flat] = acc;
    }
    out
}

/// Fourth-order centered first derivative along `axis`.
pub fn derivative_fd4(grid: &Grid, f: &[Complex64], axis: usize) -> Vec<Complex64> {
    let strides = grid.strides();
    let n = grid.points()[axis];
    let dx = grid.spacing(axis);
    let mut idx = vec![0usize; grid.dim()];
    (0..f.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            let at = |off: isize| {
                let i = (idx[axis] as isize + off).rem_euclid(n as isize) as usize;
                f[flat - idx[axis] * strides[axis] + i * strides[axis]]
            };
            (-at(2) + at(1) * 8.0 - at(-1) * 8.0 + at(-2)) / (12.0 * dx)
        })
        .collect()
}
