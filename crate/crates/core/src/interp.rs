//! Interpolation between nested grids. Index-space coordinates put element
//! centres on integers; samples beyond the outermost centres clamp to the border.

use num_complex::Complex64;

use crate::grid::{ComplexField, Field, Grid, ScalarField};
use crate::vec2::Vec2;

#[inline]
fn split(u: f64, n: usize) -> (usize, usize, f64) {
    let max = (n - 1) as f64;
    let u = u.clamp(0.0, max);
    let i0 = (u.floor() as usize).min(n - 1);
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, u - i0 as f64)
}

/// Bilinear value at index-space coordinates `(u, v)`.
#[inline]
pub fn bilinear_index(f: &ScalarField, u: f64, v: f64) -> f64 {
    let g = f.grid();
    let (i0, i1, tx) = split(u, g.nx());
    let (j0, j1, ty) = split(v, g.ny());
    let a = f.at(i0, j0) * (1.0 - tx) + f.at(i1, j0) * tx;
    let b = f.at(i0, j1) * (1.0 - tx) + f.at(i1, j1) * tx;
    a * (1.0 - ty) + b * ty
}

#[inline]
pub fn bilinear(f: &ScalarField, p: Vec2) -> f64 {
    let (u, v) = f.grid().to_index_space(p);
    bilinear_index(f, u, v)
}

pub fn bilinear_complex(f: &ComplexField, p: Vec2) -> Complex64 {
    let g = f.grid();
    let (u, v) = g.to_index_space(p);
    let (i0, i1, tx) = split(u, g.nx());
    let (j0, j1, ty) = split(v, g.ny());
    let a = f.at(i0, j0) * (1.0 - tx) + f.at(i1, j0) * tx;
    let b = f.at(i0, j1) * (1.0 - tx) + f.at(i1, j1) * tx;
    a * (1.0 - ty) + b * ty
}

#[inline]
pub fn nearest<T: Copy>(f: &Field<T>, p: Vec2) -> T {
    let (i, j) = f.grid().nearest(p);
    *f.at(i, j)
}

/// Bilinear resampling onto the element centres of another grid.
pub fn resample_bilinear(f: &ScalarField, target: &Grid) -> ScalarField {
    let src = *f.grid();
    let gx: Vec<_> = (0..target.nx()).map(|i| split(src.to_index_space(target.centre(i, 0)).0, src.nx())).collect();
    let gy: Vec<_> = (0..target.ny()).map(|j| split(src.to_index_space(target.centre(0, j)).1, src.ny())).collect();
    ScalarField::from_fn(*target, |i, j| {
        let (i0, i1, tx) = gx[i];
        let (j0, j1, ty) = gy[j];
        let a = f.at(i0, j0) * (1.0 - tx) + f.at(i1, j0) * tx;
        let b = f.at(i0, j1) * (1.0 - tx) + f.at(i1, j1) * tx;
        a * (1.0 - ty) + b * ty
    })
}

/// Nearest-element resampling onto another grid.
pub fn resample_nearest<T: Copy>(f: &Field<T>, target: &Grid) -> Field<T> {
    let src = *f.grid();
    Field::from_fn(*target, |i, j| {
        let (a, b) = src.nearest(target.centre(i, j));
        *f.at(a, b)
    })
}

/// Catmull-Rom weights for taps at offsets −1, 0, 1, 2.
#[inline]
fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Taps and weights for each refined position along one axis.
fn cubic_taps(n: usize, factor: usize) -> Vec<([usize; 4], [f64; 4])> {
    (0..n * factor)
        .map(|k| {
            let u = (k as f64 + 0.5) / factor as f64 - 0.5;
            let base = u.floor();
            let w = catmull_rom(u - base);
            let b = base as isize;
            let clamp = |o: isize| (b + o).clamp(0, n as isize - 1) as usize;
            ([clamp(-1), clamp(0), clamp(1), clamp(2)], w)
        })
        .collect()
}

/// Separable bicubic upscaling of a complex field by an integer factor.
pub fn upscale_bicubic(f: &ComplexField, factor: usize) -> ComplexField {
    assert!(factor >= 1);
    if factor == 1 {
        return f.clone();
    }
    let g = *f.grid();
    let fine = g.refine(factor);
    let tx = cubic_taps(g.nx(), factor);
    let ty = cubic_taps(g.ny(), factor);
    // Pass along x: (fine nx) × (coarse ny).
    let mut rows = vec![Complex64::new(0.0, 0.0); fine.nx() * g.ny()];
    for j in 0..g.ny() {
        let src = &f.values()[j * g.nx()..(j + 1) * g.nx()];
        let dst = &mut rows[j * fine.nx()..(j + 1) * fine.nx()];
        for (d, (idx, w)) in dst.iter_mut().zip(&tx) {
            *d = src[idx[0]] * w[0] + src[idx[1]] * w[1] + src[idx[2]] * w[2] + src[idx[3]] * w[3];
        }
    }
    let nxf = fine.nx();
    let mut out = Vec::with_capacity(fine.len());
    for (idx, w) in &ty {
        let r = |k: usize| &rows[idx[k] * nxf..(idx[k] + 1) * nxf];
        let (r0, r1, r2, r3) = (r(0), r(1), r(2), r(3));
        out.extend((0..nxf).map(|i| r0[i] * w[0] + r1[i] * w[1] + r2[i] * w[2] + r3[i] * w[3]));
    }
    ComplexField::from_values(fine, out).expect("sizes match by construction")
}
