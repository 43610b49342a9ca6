//! Periodic boxes and the fields sampled on them.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A periodic box `[-L/2, L/2)` per axis, sampled at `n` uniform points.
///
/// Storage order is row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lengths: Vec<f64>,
    points: Vec<usize>,
}

impl Grid {
    pub fn new(lengths: &[f64], points: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() != points.len() {
            return Err(Error::InvalidGrid(format!(
                "need one extent and one point count per axis, got {} and {}",
                lengths.len(),
                points.len()
            )));
        }
        for (&l, &n) in lengths.iter().zip(points) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("extent must be positive, got {l}")));
            }
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "point count must be even and at least 4, got {n}"
                )));
            }
        }
        Ok(Grid { lengths: lengths.to_vec(), points: points.to_vec() })
    }

    /// Same extent and resolution on every axis.
    pub fn cubic(dim: usize, length: f64, points: usize) -> Result<Self> {
        Grid::new(&vec![length; dim], &vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    /// Smallest spacing over all axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight `dx_1 * ... * dx_N`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        -0.5 * self.lengths[axis] + index as f64 * self.spacing(axis)
    }

    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Discrete Fourier lattice in standard FFT order: `0, 1, ..., n/2-1, -n/2, ..., -1`
    /// times `2 pi / L`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis] as i64;
        let dk = 2.0 * PI / self.lengths[axis];
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * dk).collect()
    }

    /// Largest representable wavenumber on `axis`.
    pub fn nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = flat % self.points[a];
            flat /= self.points[a];
        }
    }

    /// Position of a flat index.
    pub fn position(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.dim()];
        self.unravel(flat, &mut idx);
        for a in 0..self.dim() {
            out[a] = self.coordinate(a, idx[a]);
        }
    }

    /// Coordinates of every point, `len() * dim()` values, point-major.
    pub fn positions(&self) -> Vec<f64> {
        let d = self.dim();
        let axes: Vec<Vec<f64>> = (0..d).map(|a| self.axis_coordinates(a)).collect();
        let mut out = Vec::with_capacity(self.len() * d);
        let mut idx = vec![0usize; d];
        for flat in 0..self.len() {
            self.unravel(flat, &mut idx);
            for a in 0..d {
                out.push(axes[a][idx[a]]);
            }
        }
        out
    }

    /// `|x|^2` at every point.
    pub fn radius_squared(&self) -> Vec<f64> {
        let d = self.dim();
        self.positions().chunks(d).map(|x| x.iter().map(|v| v * v).sum()).collect()
    }

    /// Flat index of the origin (the grid always contains it).
    pub fn origin_index(&self) -> usize {
        let strides = self.strides();
        (0..self.dim()).map(|a| self.points[a] / 2 * strides[a]).sum()
    }

    /// Whether a point lies in the outer shell of the box, i.e. beyond
    /// `inner_fraction * L/2` on some axis.
    pub fn in_outer_shell(&self, x: &[f64], inner_fraction: f64) -> bool {
        x.iter().zip(&self.lengths).any(|(xi, l)| xi.abs() > inner_fraction * 0.5 * l)
    }
}

/// A real scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(RealField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        RealField { values: vec![0.0; grid.len()], grid: grid.clone() }
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = grid.positions().chunks(d).map(f).collect();
        RealField { grid: grid.clone(), values }
    }

    /// `sum u^2 dx^N`.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &RealField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Barycenter of the density `u^2`.
    pub fn density_barycenter(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for (x, &u) in self.grid.positions().chunks(d).zip(&self.values) {
            let rho = u * u;
            den += rho;
            for a in 0..d {
                num[a] += x[a] * rho;
            }
        }
        num.iter().map(|n| n / den).collect()
    }

    /// Root mean square radius of the density `u^2` about its barycenter.
    pub fn rms_width(&self) -> f64 {
        let d = self.grid.dim();
        let c = self.density_barycenter();
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, &u) in self.grid.positions().chunks(d).zip(&self.values) {
            let rho = u * u;
            let r2: f64 = x.iter().zip(&c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
            num += r2 * rho;
            den += rho;
        }
        (num / den).sqrt()
    }
}

/// The complex wavefunction `psi(t, .)` on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(WaveField { grid, values, time })
    }

    pub fn from_fn(grid: &Grid, time: f64, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let values = grid.positions().chunks(d).map(f).collect();
        WaveField { grid: grid.clone(), values, time }
    }

    pub fn from_real(field: &RealField, time: f64) -> Self {
        WaveField { grid: field.grid.clone(), values: field.to_complex(), time }
    }

    /// Hylenic charge `sum |psi|^2 dx^N`.
    pub fn charge(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn modulus(&self) -> RealField {
        RealField { grid: self.grid.clone(), values: self.values.iter().map(|z| z.norm()).collect() }
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `||a - b||_{L2}`.
    pub fn l2_distance(&self, other: &WaveField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
            * self.grid.cell_volume().sqrt()
    }

    /// Fraction of the charge in the outer shell of the box (beyond 80 % of
    /// the half-width on some axis).
    pub fn boundary_mass_fraction(&self) -> f64 {
        let d = self.grid.dim();
        let mut outer = 0.0;
        let mut total = 0.0;
        for (x, z) in self.grid.positions().chunks(d).zip(&self.values) {
            let rho = z.norm_sqr();
            total += rho;
            if self.grid.in_outer_shell(x, 0.8) {
                outer += rho;
            }
        }
        if total > 0.0 {
            outer / total
        } else {
            0.0
        }
    }
}
