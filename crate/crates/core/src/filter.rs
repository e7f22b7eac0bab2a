//! Small stencil filters on element fields.

use std::f64::consts::PI;

use crate::grid::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Zero,
    Replicate,
}

fn padded(f: &ScalarField, i: isize, j: isize, pad: Padding) -> f64 {
    match pad {
        Padding::Replicate => *f.at_clamped(i, j),
        Padding::Zero => f.get(i, j).copied().unwrap_or(0.0),
    }
}

/// Apply a 3×3 stencil `w[dj+1][di+1]`.
pub fn stencil3(f: &ScalarField, w: &[[f64; 3]; 3], pad: Padding) -> ScalarField {
    ScalarField::from_fn(*f.grid(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let mut acc = 0.0;
        for (dj, row) in w.iter().enumerate() {
            for (di, &wv) in row.iter().enumerate() {
                if wv != 0.0 {
                    acc += wv * padded(f, i + di as isize - 1, j + dj as isize - 1, pad);
                }
            }
        }
        acc
    })
}

/// 3×3 box mean.
pub fn mean3(f: &ScalarField, pad: Padding) -> ScalarField {
    stencil3(f, &[[1.0 / 9.0; 3]; 3], pad)
}

/// Sobel gradient `(∂/∂x, ∂/∂y)` with replicated borders, unnormalised.
pub fn sobel(f: &ScalarField) -> (ScalarField, ScalarField) {
    let gx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let gy = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    (stencil3(f, &gx, Padding::Replicate), stencil3(f, &gy, Padding::Replicate))
}

/// Integral of sqrt(1 − x²).
fn circle_primitive(x: f64) -> f64 {
    0.5 * (x * (1.0 - x * x).max(0.0).sqrt() + x.clamp(-1.0, 1.0).asin())
}

/// Weights of the unit-radius circular averaging filter: each pixel gets the
/// fraction of the unit disc (centred on the middle pixel) that it covers.
pub fn pillbox_weights() -> [[f64; 3]; 3] {
    let s3 = 3f64.sqrt() / 2.0;
    let corner = (circle_primitive(s3) - circle_primitive(0.5)) - 0.5 * (s3 - 0.5);
    let edge = (s3 - 0.5) + 2.0 * (circle_primitive(1.0) - circle_primitive(s3));
    let centre = PI - 4.0 * edge - 4.0 * corner;
    let (c, e, m) = (corner / PI, edge / PI, centre / PI);
    [[c, e, c], [e, m, e], [c, e, c]]
}

pub fn pillbox3(f: &ScalarField, pad: Padding) -> ScalarField {
    stencil3(f, &pillbox_weights(), pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn pillbox_matches_disc_overlap() {
        let w = pillbox_weights();
        let total: f64 = w.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((w[1][1] - 1.0 / PI).abs() < 1e-12);
        // Monte Carlo-free check: integrate the disc over the edge pixel on a fine lattice.
        let n = 2000;
        let mut hits = 0usize;
        for a in 0..n {
            for b in 0..n {
                let x = 0.5 + (a as f64 + 0.5) / n as f64;
                let y = -0.5 + (b as f64 + 0.5) / n as f64;
                if x * x + y * y <= 1.0 {
                    hits += 1;
                }
            }
        }
        let edge = hits as f64 / (n * n) as f64 / PI;
        assert!((w[1][2] - edge).abs() < 1e-4);
        assert!((w[0][0] - 0.025078).abs() < 1e-5);
    }

    #[test]
    fn mean_of_one_hot() {
        let g = Grid::with_corner_at_origin(5, 5, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |i, j| if (i, j) == (2, 2) { 0.5 } else { 0.0 });
        let m = mean3(&f, Padding::Zero);
        assert!((m.at(1, 1) - 0.5 / 9.0).abs() < 1e-15);
        assert_eq!(*m.at(0, 0), 0.0);
    }

    #[test]
    fn padding_modes_differ_at_border() {
        let g = Grid::with_corner_at_origin(3, 3, 1.0).unwrap();
        let f = ScalarField::filled(g, 1.0);
        assert!((mean3(&f, Padding::Replicate).at(0, 0) - 1.0).abs() < 1e-15);
        assert!((mean3(&f, Padding::Zero).at(0, 0) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn sobel_of_ramp() {
        let g = Grid::with_corner_at_origin(5, 4, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |i, j| 2.0 * i as f64 - 3.0 * j as f64);
        let (gx, gy) = sobel(&f);
        assert!((gx.at(2, 1) - 16.0).abs() < 1e-12);
        assert!((gy.at(2, 1) + 24.0).abs() < 1e-12);
    }
}
