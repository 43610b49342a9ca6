//! Band-limited (trigonometric) interpolation between periodic grids.
//!
//! Target coordinates are separable: axis `a` of the target samples the source
//! at `(x_a - shift_a) / scale`. The tensor-product interpolant is applied one
//! axis at a time. Points that land outside the source box get zero.

use crate::grid::{Grid, RealField};

/// Periodic cardinal function of an even-length grid, `t` in grid units.
fn cardinal(t: f64, n: usize) -> f64 {
    let nf = n as f64;
    let s = (std::f64::consts::PI * t / nf).sin();
    if s.abs() < 1e-12 {
        // the node itself or one of its periodic copies
        return 1.0;
    }
    let c = (std::f64::consts::PI * t / nf).cos();
    (std::f64::consts::PI * t).sin() * c / (nf * s)
}

/// Row-major `targets.len() x n` interpolation matrix for one axis.
fn axis_matrix(source: &Grid, axis: usize, targets: &[f64]) -> Vec<f64> {
    let n = source.points()[axis];
    let dx = source.spacing(axis);
    let x0 = source.coordinate(axis, 0);
    let half = 0.5 * source.lengths()[axis];
    let mut m = vec![0.0; targets.len() * n];
    for (i, &xi) in targets.iter().enumerate() {
        if xi < -half || xi >= half {
            continue;
        }
        let t0 = (xi - x0) / dx;
        let nearest = t0.round();
        let row = &mut m[i * n..(i + 1) * n];
        if (t0 - nearest).abs() < 1e-12 {
            row[(nearest as usize).min(n - 1)] = 1.0;
            continue;
        }
        for (j, r) in row.iter_mut().enumerate() {
            *r = cardinal(t0 - j as f64, n);
        }
    }
    m
}

/// Resample `f` onto `target`, reading source coordinates
/// `xi_a = (x_a - shift_a) / scale`.
pub fn resample(f: &RealField, target: &Grid, shift: &[f64], scale: f64) -> RealField {
    let src = &f.grid;
    let d = src.dim();
    assert_eq!(d, target.dim(), "dimension mismatch");
    let mut shape: Vec<usize> = src.points().to_vec();
    let mut data = f.values.clone();
    for axis in 0..d {
        let xi: Vec<f64> = target
            .axis_coordinates(axis)
            .iter()
            .map(|x| (x - shift[axis]) / scale)
            .collect();
        let m = axis_matrix(src, axis, &xi);
        let n_in = shape[axis];
        let n_out = xi.len();
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * n_out * inner];
        for o in 0..outer {
            for i in 0..n_out {
                let row = &m[i * n_in..(i + 1) * n_in];
                let dst = &mut out[(o * n_out + i) * inner..(o * n_out + i + 1) * inner];
                for (j, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let srcline = &data[(o * n_in + j) * inner..(o * n_in + j + 1) * inner];
                    for (dv, sv) in dst.iter_mut().zip(srcline) {
                        *dv += w * sv;
                    }
                }
            }
        }
        shape[axis] = n_out;
        data = out;
    }
    RealField { grid: target.clone(), values: data }
}
