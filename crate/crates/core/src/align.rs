//! Phase alignment of the phasor kernels of one layer.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::case::{KernelSet, PhasorKernel, BASE_ANISO_R};
use crate::error::{Error, Result};
use crate::filter::{pillbox3, sobel, Padding};
use crate::grid::{Mask, ScalarField};
use crate::math::{aniso_norm, arg, heaviside};
use crate::vec2::Vec2;

/// Starting phases for the alignment sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseInit {
    /// Keep the kernels' phases (zero when freshly built).
    Zero,
    /// Breadth-first pass over the neighbourhood graph from the first kernel
    /// in sweep order, each kernel averaging only already-visited neighbours.
    Propagate,
}

/// How the neighbourhood radius is compared against the oriented distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusMode {
    /// `aniso_norm(Δx / h_c) < (R / h_c)²`.
    Squared,
    /// `aniso_norm(Δx) < R`.
    Radius,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignConfig {
    /// Neighbourhood radius in coarse elements.
    pub radius_elems: f64,
    /// Base anisotropy ratio; the pair is `(r, 1/r)`.
    pub base_r: f64,
    pub iterations: usize,
    pub radius_mode: RadiusMode,
    /// Treat opposing neighbours as flipped oscillators. Off gives the plain rule.
    pub extended: bool,
    pub init: PhaseInit,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            radius_elems: 2.0,
            base_r: BASE_ANISO_R,
            iterations: 20,
            radius_mode: RadiusMode::Squared,
            extended: true,
            init: PhaseInit::Propagate,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_elems >= 1.0 && self.radius_elems.is_finite()) {
            return Err(Error::InvalidArgument(format!("alignment radius must be at least one element, got {}", self.radius_elems)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("at least one alignment iteration is required".into()));
        }
        if !(self.base_r > 0.0) {
            return Err(Error::InvalidArgument("anisotropy ratio must be positive".into()));
        }
        Ok(())
    }
}

/// Thin-member detection results for one layer.
#[derive(Clone, Debug)]
pub struct ThinMemberData {
    /// Kernel elements whose filtered active indicator lies strictly inside (0, 1).
    pub boundary: Vec<usize>,
    /// Gradient angles of the filtered indicator (phasor convention).
    pub kappa: ScalarField,
    pub dkappa_raw: ScalarField,
    pub dkappa: ScalarField,
}

/// Blend kernels towards isotropy where opposing boundaries of a thin member meet.
pub fn thin_member_blend(set: &mut KernelSet, z_tilde: &ScalarField, theta: &ScalarField) -> ThinMemberData {
    let grid = *z_tilde.grid();
    let (gx, gy) = sobel(z_tilde);
    let kappa = gx.zip_map(&gy, |&x, &y| (-y).atan2(x));
    let map = set.element_map();
    let in_b = Mask::from_fn(grid, |i, j| {
        let z = *z_tilde.at(i, j);
        map[grid.index(i, j)].is_some() && z > 0.0 && z < 1.0
    });
    let boundary: Vec<usize> = (0..grid.len()).filter(|&k| in_b.values()[k]).collect();

    let mut raw = ScalarField::filled(grid, 0.0);
    for &e in &boundary {
        let (i, j) = grid.coords(e);
        let ke = *kappa.at(i, j);
        let mut best: f64 = 0.0;
        for dj in -2..=2isize {
            for di in -2..=2isize {
                let (a, b) = (i as isize + di, j as isize + dj);
                if in_b.get(a, b) == Some(&true) {
                    let km = *kappa.at(a as usize, b as usize);
                    best = best.max(0.5 * (1.0 - (ke - km).cos()));
                }
            }
        }
        let gate = 1.0 - heaviside((ke - theta.at(i, j)).abs().cos().abs(), 0.99);
        raw.values_mut()[e] = best * gate;
    }
    let dkappa = pillbox3(&raw, Padding::Replicate).map(|v| v.clamp(0.0, 1.0));
    for k in &mut set.kernels {
        let dk = *dkappa.at(k.element.0, k.element.1);
        k.dkappa = dk;
        k.aniso = crate::math::Anisotropy::blended(BASE_ANISO_R, dk);
    }
    ThinMemberData { boundary, kappa, dkappa_raw: raw, dkappa }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbour {
    pub index: usize,
    /// `|d_j · d_i|`.
    pub weight: f64,
    /// Opposing directions: use `π − φ_i` and `−d_i`.
    pub flip: bool,
    /// Oscillator phase `2πω d̃_ij · (x_j − x_i)`.
    pub offset: f64,
}

impl Neighbour {
    /// Kernel `i` (at `index`) as seen from kernel `j`.
    pub fn between(kj: &PhasorKernel, ki: &PhasorKernel, index: usize, omega: f64, extended: bool) -> Self {
        let dot = kj.d.dot(ki.d);
        let flip = extended && dot < 0.0;
        let dt = if flip { -ki.d } else { ki.d };
        Neighbour { index, weight: dot.abs(), flip, offset: TAU * omega * dt.dot(kj.x0 - ki.x0) }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Neighbourhood {
    pub lists: Vec<Vec<Neighbour>>,
}

/// Membership test between kernel `j` and an offset `x_j − x_i`.
fn is_neighbour(delta: Vec2, theta_j: f64, a: crate::math::Anisotropy, h: f64, cfg: &AlignConfig) -> bool {
    match cfg.radius_mode {
        RadiusMode::Squared => aniso_norm(delta * (1.0 / h), theta_j, a) < cfg.radius_elems * cfg.radius_elems,
        RadiusMode::Radius => aniso_norm(delta, theta_j, a) < cfg.radius_elems * h,
    }
}

pub fn build_neighbourhoods(set: &KernelSet, cfg: &AlignConfig) -> Neighbourhood {
    let grid = set.grid;
    let h = grid.h();
    let map = set.element_map();
    let bound = match cfg.radius_mode {
        RadiusMode::Squared => cfg.radius_elems * cfg.radius_elems,
        RadiusMode::Radius => cfg.radius_elems,
    };
    let lists = set
        .kernels
        .iter()
        .enumerate()
        .map(|(j, kj)| {
            let reach = (bound / kj.aniso.r1.min(kj.aniso.r2)).ceil() as isize + 1;
            let (ei, ej) = (kj.element.0 as isize, kj.element.1 as isize);
            let mut out = Vec::new();
            for b in (ej - reach).max(0)..=(ej + reach).min(grid.ny() as isize - 1) {
                for a in (ei - reach).max(0)..=(ei + reach).min(grid.nx() as isize - 1) {
                    let Some(i) = map[grid.index(a as usize, b as usize)] else { continue };
                    if i == j {
                        continue;
                    }
                    let ki = &set.kernels[i];
                    let delta = kj.x0 - ki.x0;
                    if !is_neighbour(delta, kj.theta, kj.aniso, h, cfg) {
                        continue;
                    }
                    out.push(Neighbour::between(kj, ki, i, set.omega, cfg.extended));
                }
            }
            out
        })
        .collect();
    Neighbourhood { lists }
}

/// Boundary kernel data used to order the alignment sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryOrientation {
    pub x0: Vec2,
    pub tau: f64,
    /// All 3×3 neighbours within the boundary set agree in direction (min cos ≥ 0).
    pub coherent: bool,
}

/// Kernels sorted by distance to the nearest boundary kernel oriented like them;
/// kernels with no such boundary kernel follow in row-major order.
pub fn alignment_order(set: &KernelSet, boundary: &[BoundaryOrientation]) -> Vec<usize> {
    let coherent: Vec<&BoundaryOrientation> = boundary.iter().filter(|b| b.coherent).collect();
    let mut keyed: Vec<(f64, usize)> = set
        .kernels
        .iter()
        .enumerate()
        .map(|(k, ker)| {
            let d = coherent
                .iter()
                .filter(|b| (b.tau - ker.theta).cos().abs() >= 0.95)
                .map(|b| (ker.x0 - b.x0).norm())
                .fold(f64::INFINITY, f64::min);
            (d, k)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, k)| k).collect()
}

/// Weighted phasor sum seen by kernel `j`.
fn upsilon(set: &KernelSet, nb: &[Neighbour]) -> Complex64 {
    nb.iter()
        .map(|n| {
            let phi = set.kernels[n.index].phi;
            let cand = if n.flip { PI - phi } else { phi };
            Complex64::from_polar(n.weight, n.offset + cand)
        })
        .sum()
}

/// One in-place sweep in the given order.
pub fn align_iteration(set: &mut KernelSet, nbhd: &Neighbourhood, order: &[usize]) {
    for &j in order {
        let u = upsilon(set, &nbhd.lists[j]);
        if u.norm() > 1e-12 {
            set.kernels[j].phi = arg(u);
        }
    }
}

/// Seed phases by a breadth-first walk. Starting from all-zero phases a
/// symmetric neighbourhood is already a fixed point of the sweep whenever
/// cos(2πω h_c) > 0 across the laminations, and the sweeps then only
/// unwind it slowly from the domain edges.
pub fn propagate_phases(set: &mut KernelSet, nbhd: &Neighbourhood, order: &[usize]) {
    let mut visited = vec![false; set.len()];
    let mut done = vec![false; set.len()];
    let mut queue = std::collections::VecDeque::new();
    for &seed in order {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(j) = queue.pop_front() {
            let u: Complex64 = nbhd.lists[j]
                .iter()
                .filter(|n| done[n.index])
                .map(|n| {
                    let phi = set.kernels[n.index].phi;
                    Complex64::from_polar(n.weight, n.offset + if n.flip { PI - phi } else { phi })
                })
                .sum();
            if u.norm() > 1e-12 {
                set.kernels[j].phi = arg(u);
            }
            done[j] = true;
            for n in &nbhd.lists[j] {
                if !visited[n.index] {
                    visited[n.index] = true;
                    queue.push_back(n.index);
                }
            }
        }
    }
}

pub fn align(set: &mut KernelSet, nbhd: &Neighbourhood, order: &[usize], iterations: usize) {
    for _ in 0..iterations {
        align_iteration(set, nbhd, order);
    }
}

/// Per-kernel incoherence `1 − |υ_j| / Σ weights` (0 for kernels without weight).
pub fn alignment_residuals(set: &KernelSet, nbhd: &Neighbourhood) -> Vec<f64> {
    nbhd.lists
        .iter()
        .map(|nb| {
            let w: f64 = nb.iter().map(|n| n.weight).sum();
            if w > 0.0 {
                1.0 - upsilon(set, nb).norm() / w
            } else {
                0.0
            }
        })
        .collect()
}
