//! Design metrics other than compliance: connectivity, local periodicity and the S/R measures.

use std::collections::VecDeque;

use serde::Serialize;

use crate::bc::{BcSpec, NodeLattice};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, ScalarField};
use crate::math::direction;
use crate::vec2::Vec2;

/// 4-connected component labels of the solid pixels (`None` for void), and the count.
pub fn label_components(mask: &Mask) -> (Vec<Option<u32>>, usize) {
    let grid = *mask.grid();
    let mut labels = vec![None; grid.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if !mask.values()[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = grid.coords(k);
            let mut visit = |n: usize| {
                if mask.values()[n] && labels[n].is_none() {
                    labels[n] = Some(next);
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < grid.nx() {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - grid.nx());
            }
            if j + 1 < grid.ny() {
                visit(k + grid.nx());
            }
        }
        next += 1;
    }
    (labels, next as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub components: usize,
    pub load_connected: bool,
}

/// Solid pixels touching the nodes of a region.
fn region_pixels(mask: &Mask, nodes: &NodeLattice, ids: impl Iterator<Item = usize>) -> Vec<usize> {
    let grid = mask.grid();
    let mut px: Vec<usize> = ids
        .flat_map(|id| nodes.adjacent_elements(id))
        .map(|(i, j)| grid.index(i, j))
        .filter(|&k| mask.values()[k])
        .collect();
    px.sort_unstable();
    px.dedup();
    px
}

/// Component count, and whether every load reaches a support through solid pixels.
pub fn connectivity(mask: &Mask, bc: Option<&BcSpec>) -> Connectivity {
    let (labels, components) = label_components(mask);
    let Some(bc) = bc else {
        return Connectivity { components, load_connected: components > 0 };
    };
    let nodes = NodeLattice::of(mask.grid());
    let fixed = region_pixels(mask, &nodes, bc.fixed.iter().flat_map(|s| s.region.nodes(&nodes)).map(|n| n.0));
    let anchored: std::collections::HashSet<u32> = fixed.iter().filter_map(|&k| labels[k]).collect();
    let load_connected = !bc.loads.is_empty()
        && bc.loads.iter().all(|l| {
            let px = region_pixels(mask, &nodes, l.region.nodes(&nodes).into_iter().map(|n| n.0));
            !px.is_empty() && px.iter().all(|&k| labels[k].is_some_and(|c| anchored.contains(&c)))
        });
    Connectivity { components, load_connected }
}

/// Local wavelength statistics normalised by the target wavelength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WavelengthStats {
    pub median_ratio: f64,
    pub iqr: f64,
    pub segments: usize,
    pub reliable: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub const MIN_SEGMENTS: usize = 10;

/// Crossing-density periodicity estimate.
///
/// Short scan lines are cast through seed pixels along the local wave
/// direction. Each line counts solid/void transitions; a line whose length is
/// spanned by `n` transitions (n ≥ 2) gives a wavelength of
/// `2 · (distance between first and last transition) / (n − 1)`. Seeds inside
/// `exclude` are skipped, as are lines that leave the grid or cross an
/// excluded pixel.
pub fn periodicity_estimate(design: &Mask, theta: &ScalarField, exclude: &Mask, omega: f64, spacing_px: usize) -> WavelengthStats {
    let grid = *design.grid();
    let lambda = 1.0 / omega;
    let half_len = 1.5 * lambda;
    let step = 0.25 * grid.h();
    let steps = (2.0 * half_len / step).ceil() as usize;
    let tgrid = *theta.grid();
    let spacing = spacing_px.max(1);
    let mut ratios = Vec::new();
    for j in (spacing / 2..grid.ny()).step_by(spacing) {
        'seed: for i in (spacing / 2..grid.nx()).step_by(spacing) {
            if *exclude.at(i, j) {
                continue;
            }
            let c = grid.centre(i, j);
            let (ti, tj) = tgrid.nearest(c);
            let d = direction(*theta.at(ti, tj));
            let start = c - d * half_len;
            let mut prev: Option<bool> = None;
            let mut crossings = Vec::new();
            for s in 0..=steps {
                let p = start + d * (s as f64 * step);
                let Some((a, b)) = pixel_of(&grid, p) else { continue 'seed };
                if *exclude.at(a, b) {
                    continue 'seed;
                }
                let v = *design.at(a, b);
                if prev.is_some_and(|q| q != v) {
                    crossings.push(s as f64 * step);
                }
                prev = Some(v);
            }
            if crossings.len() >= 3 {
                let span = crossings[crossings.len() - 1] - crossings[0];
                ratios.push(2.0 * span / (crossings.len() - 1) as f64 / lambda);
            }
        }
    }
    if ratios.is_empty() {
        return WavelengthStats { median_ratio: f64::NAN, iqr: f64::NAN, segments: 0, reliable: false };
    }
    ratios.sort_by(f64::total_cmp);
    WavelengthStats {
        median_ratio: quantile(&ratios, 0.5),
        iqr: quantile(&ratios, 0.75) - quantile(&ratios, 0.25),
        segments: ratios.len(),
        reliable: ratios.len() >= MIN_SEGMENTS,
    }
}

fn pixel_of(grid: &Grid, p: Vec2) -> Option<(usize, usize)> {
    let (u, v) = grid.to_index_space(p);
    let (a, b) = (u.round(), v.round());
    (a >= 0.0 && b >= 0.0 && (a as usize) < grid.nx() && (b as usize) < grid.ny()).then_some((a as usize, b as usize))
}

/// Pixels within `radius` of any of `centres`.
pub fn disc_mask(grid: &Grid, centres: &[Vec2], radius: f64) -> Mask {
    let mut m = vec![false; grid.len()];
    let r = (radius / grid.h()).ceil() as isize;
    for c in centres {
        let (ci, cj) = grid.nearest(*c);
        for j in (cj as isize - r).max(0)..=(cj as isize + r).min(grid.ny() as isize - 1) {
            for i in (ci as isize - r).max(0)..=(ci as isize + r).min(grid.nx() as isize - 1) {
                let k = grid.index(i as usize, j as usize);
                if (grid.centre_of(k) - *c).norm() <= radius {
                    m[k] = true;
                }
            }
        }
    }
    Mask::from_values(*grid, m).expect("sized by grid")
}

/// Compliance-volume product `S = C · V`.
pub fn cv_product(c: f64, v: f64) -> f64 {
    c * v
}

/// `R = (C_d V_d) / (C_ref V_ref)`.
pub fn ratio(c_d: f64, v_d: f64, c_ref: f64, v_ref: f64) -> Result<f64> {
    let s_ref = cv_product(c_ref, v_ref);
    if !(s_ref > 0.0 && s_ref.is_finite()) {
        return Err(Error::ZeroReference);
    }
    Ok(cv_product(c_d, v_d) / s_ref)
}
