//! Branch (phase singularity) detection, closure and pinching.

use std::f64::consts::{PI, TAU};

use crate::grid::{ComplexField, Grid, Mask, ScalarField};
use crate::interp::bilinear_index;
use crate::math::{aniso_norm_sq, direction, smoothstep, stripe_direction, triangular, wrap_angle, Anisotropy};
use crate::sample::OrientationField;
use crate::vec2::Vec2;

/// How candidate singularities are located on the sampled field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullDetector {
    /// Strict 8-neighbour minima of |G| below a fraction of the median magnitude.
    Threshold,
    /// Pixels at a 2×2 plaquette carrying a full phase winding (minimum-|G| corner).
    Winding,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchConfig {
    pub detector: NullDetector,
    /// Null threshold as a fraction of the median |G| over the detection region.
    pub null_ratio: f64,
    pub k_max: usize,
    /// Anisotropy of the closure and pinch Gaussians.
    pub aniso: Anisotropy,
    /// Half-width of the closure window in wavelengths.
    pub window: f64,
    /// Radius around the closure centre that the pinch may modify, in wavelengths.
    pub pinch_radius: f64,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            detector: NullDetector::Winding,
            null_ratio: 0.05,
            k_max: 3,
            aniso: Anisotropy { r1: 1.0 / PI, r2: 1.0 },
            window: 2.0,
            pinch_radius: 1.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    pub gamma: Vec2,
    /// Degree of connection in [0, 1].
    pub degree: f64,
    /// Closure side, ±1.
    pub direction: f64,
    pub gamma_c: Vec2,
    pub gamma_o: Vec2,
    pub local_theta: f64,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

fn is_strict_min(mag: impl Fn(usize) -> f64, grid: &Grid, i: usize, j: usize) -> bool {
    if i == 0 || j == 0 || i + 1 >= grid.nx() || j + 1 >= grid.ny() {
        return false;
    }
    let c = mag(grid.index(i, j));
    for dj in -1..=1isize {
        for di in -1..=1isize {
            if (di, dj) != (0, 0) && mag(grid.index((i as isize + di) as usize, (j as isize + dj) as usize)) <= c {
                return false;
            }
        }
    }
    true
}

/// Singular points of `field` inside `region`, sorted by (y, x).
pub fn find_branch_points(field: &ComplexField, region: &Mask, cfg: &BranchConfig) -> Vec<Vec2> {
    let grid = *field.grid();
    assert_eq!(region.grid(), &grid);
    let mag: Vec<f64> = field.values().iter().map(|z| z.norm()).collect();
    let mut found: Vec<(usize, usize)> = match cfg.detector {
        NullDetector::Threshold => {
            let Some(med) = median((0..grid.len()).filter(|&k| region.values()[k]).map(|k| mag[k]).collect()) else {
                return Vec::new();
            };
            let thr = cfg.null_ratio * med;
            grid.iter_ij()
                .filter(|&(i, j)| {
                    let k = grid.index(i, j);
                    region.values()[k] && mag[k] < thr && is_strict_min(|n| mag[n], &grid, i, j)
                })
                .collect()
        }
        NullDetector::Winding => {
            let ph: Vec<f64> = field.values().iter().map(|z| z.im.atan2(z.re)).collect();
            let mut out = Vec::new();
            for j in 0..grid.ny().saturating_sub(1) {
                for i in 0..grid.nx().saturating_sub(1) {
                    let c = [grid.index(i, j), grid.index(i + 1, j), grid.index(i + 1, j + 1), grid.index(i, j + 1)];
                    if !c.iter().all(|&k| region.values()[k]) {
                        continue;
                    }
                    let wind: f64 = (0..4).map(|a| wrap_angle(ph[c[(a + 1) % 4]] - ph[c[a]])).sum();
                    if wind.abs() > PI {
                        let best = *c.iter().min_by(|&&a, &&b| mag[a].total_cmp(&mag[b]).then(a.cmp(&b))).unwrap();
                        out.push(grid.coords(best));
                    }
                }
            }
            out
        }
    };
    found.sort_by_key(|&(i, j)| (j, i));
    found.dedup();
    found.into_iter().map(|(i, j)| grid.centre(i, j)).collect()
}

/// Nearest strict |G| minimum to `p` within `radius`, else the pixel nearest `p`.
pub fn snap_to_minimum(field: &ComplexField, p: Vec2, radius: f64) -> Vec2 {
    let grid = *field.grid();
    let vals = field.values();
    let (u, v) = grid.to_index_space(p);
    let r = (radius / grid.h()).ceil() as isize;
    let (ci, cj) = (u.round() as isize, v.round() as isize);
    let mut best: Option<(f64, usize, usize)> = None;
    for j in (cj - r).max(0)..=(cj + r).min(grid.ny() as isize - 1) {
        for i in (ci - r).max(0)..=(ci + r).min(grid.nx() as isize - 1) {
            let (i, j) = (i as usize, j as usize);
            let d = (grid.centre(i, j) - p).norm();
            if d <= radius && is_strict_min(|n| vals[n].norm(), &grid, i, j) && best.is_none_or(|b| d < b.0) {
                best = Some((d, i, j));
            }
        }
    }
    match best {
        Some((_, i, j)) => grid.centre(i, j),
        None => {
            let (i, j) = grid.nearest(p);
            grid.centre(i, j)
        }
    }
}

fn sample_at(f: &ScalarField, p: Vec2) -> f64 {
    let (u, v) = f.grid().to_index_space(p);
    bilinear_index(f, u, v)
}

/// Degree of connection and closure geometry for a singularity at `gamma`.
pub fn classify_branch(gamma: Vec2, sine: &ScalarField, orient: &OrientationField, omega: f64) -> BranchPoint {
    let grid = *sine.grid();
    let lambda = 1.0 / omega;
    let (u, v) = grid.to_index_space(gamma);
    let r = (0.5 * lambda / grid.h()).ceil() as isize + 1;
    let (ci, cj) = (u.round() as isize, v.round() as isize);
    let (mut sum, mut n) = (0.0, 0usize);
    for j in (cj - r).max(0)..=(cj + r).min(grid.ny() as isize - 1) {
        for i in (ci - r).max(0)..=(ci + r).min(grid.nx() as isize - 1) {
            if (grid.centre(i as usize, j as usize) - gamma).norm() <= 0.5 * lambda * (1.0 + 1e-9) {
                sum += sine.at(i as usize, j as usize);
                n += 1;
            }
        }
    }
    let rho_mean = if n > 0 { sum / n as f64 } else { sample_at(sine, gamma) };
    let degree = ((rho_mean + 1.0) / 2.0).clamp(0.0, 1.0);
    let (gi, gj) = grid.nearest(gamma);
    let theta = *orient.theta_hat.at(gi, gj);
    let nhat = direction(theta);
    let plus = sample_at(sine, gamma + nhat * (lambda / 3.0));
    let minus = sample_at(sine, gamma - nhat * (lambda / 3.0));
    let dir = if plus - minus < 0.0 { -1.0 } else { 1.0 };
    let shift = dir * (1.0 - degree);
    BranchPoint {
        gamma,
        degree,
        direction: dir,
        gamma_c: gamma + nhat * (shift * lambda / 3.0),
        gamma_o: gamma + nhat * (shift * lambda),
        local_theta: theta,
    }
}

/// Inclusive index window of half-width `half` around `p`.
fn window(grid: &Grid, p: Vec2, half: f64) -> (usize, usize, usize, usize) {
    let (u, v) = grid.to_index_space(p);
    let r = half / grid.h();
    let lo = |x: f64| (x - r).ceil().max(0.0) as usize;
    let hi = |x: f64, n: usize| ((x + r).floor().max(0.0) as usize).min(n - 1);
    (lo(u), hi(u, grid.nx()), lo(v), hi(v, grid.ny()))
}

/// Closure fields of one branch over its window (row-major within the window).
#[derive(Clone, Debug)]
pub struct BranchClosureFields {
    pub i0: usize,
    pub j0: usize,
    pub nx: usize,
    pub ny: usize,
    pub pi: Vec<f64>,
    pub pi_hat: Vec<f64>,
    pub shift: Vec<f64>,
    pub rho_hat: Vec<f64>,
}

pub fn closure_fields(phase: &ScalarField, orient: &OrientationField, bp: &BranchPoint, omega: f64, cfg: &BranchConfig) -> BranchClosureFields {
    let grid = *phase.grid();
    let (i0, i1, j0, j1) = window(&grid, bp.gamma_c, cfg.window / omega);
    let (nx, ny) = (i1 + 1 - i0, j1 + 1 - j0);
    let n = nx * ny;
    let (mut pi, mut pi_hat, mut shift, mut rho_hat) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for j in j0..=j1 {
        for i in i0..=i1 {
            let x = grid.centre(i, j);
            let phi = *phase.at(i, j);
            let th = *orient.theta_hat.at(i, j);
            let d2 = aniso_norm_sq(x - bp.gamma_c, th, cfg.aniso);
            let p = (-2.0 * omega * omega * d2 * (1.0 - 0.5 * phi.sin())).exp();
            let ph = smoothstep(p);
            let s = ph * PI * (1.0 - triangular(phi));
            let r = triangular_of_sine((phi + s).sin().max((phi - s).sin()));
            pi.push(p);
            pi_hat.push(ph);
            shift.push(s);
            rho_hat.push(r);
        }
    }
    BranchClosureFields { i0, j0, nx, ny, pi, pi_hat, shift, rho_hat }
}

#[inline]
fn triangular_of_sine(s: f64) -> f64 {
    (s.clamp(-1.0, 1.0).asin() / PI + 0.5).clamp(0.0, 1.0)
}

/// Union the branch closure into `rho`.
pub fn close_branch(rho: &mut ScalarField, phase: &ScalarField, orient: &OrientationField, bp: &BranchPoint, omega: f64, cfg: &BranchConfig) {
    let f = closure_fields(phase, orient, bp, omega, cfg);
    apply_closure(rho, &f);
}

/// Max-union of the closure window into `rho`; returns the previous window values.
fn apply_closure(rho: &mut ScalarField, f: &BranchClosureFields) -> Vec<f64> {
    let nx = rho.grid().nx();
    let vals = rho.values_mut();
    let mut old = Vec::with_capacity(f.nx * f.ny);
    for wj in 0..f.ny {
        for wi in 0..f.nx {
            let k = (f.j0 + wj) * nx + f.i0 + wi;
            old.push(vals[k]);
            vals[k] = vals[k].max(f.rho_hat[wj * f.nx + wi]);
        }
    }
    old
}

fn restore(rho: &mut ScalarField, f: &BranchClosureFields, old: &[f64]) {
    let nx = rho.grid().nx();
    let vals = rho.values_mut();
    for wj in 0..f.ny {
        let k = (f.j0 + wj) * nx + f.i0;
        vals[k..k + f.nx].copy_from_slice(&old[wj * f.nx..(wj + 1) * f.nx]);
    }
}

/// One pinch step's geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinchStep {
    pub k: usize,
    pub delta: f64,
    pub gamma_k: Vec2,
    pub gamma_bar_k: Vec2,
    pub r1_bar: f64,
}

pub fn pinch_steps(bp: &BranchPoint, k_max: usize, r1: f64) -> Vec<PinchStep> {
    assert!(k_max >= 2, "at least two pinch steps are required");
    (1..=k_max)
        .map(|k| {
            let t = (k - 1) as f64 / (k_max - 1) as f64;
            let delta = (1.0 - bp.degree) * t;
            let d2 = delta * delta;
            PinchStep {
                k,
                delta,
                gamma_k: bp.gamma_o * delta + bp.gamma_c * (1.0 - delta),
                gamma_bar_k: bp.gamma_o * d2 + bp.gamma_c * (1.0 - d2),
                r1_bar: (1.0 - t) * r1,
            }
        })
        .collect()
}

/// Per-pixel gather offsets (in pixels) for one pinch step, over `pixels`.
pub fn pinch_displacements(
    grid: &Grid,
    pixels: &[usize],
    step: &PinchStep,
    orient: &OrientationField,
    mu: &ScalarField,
    omega: f64,
    omega_hat_px: f64,
    k_max: usize,
    aniso: Anisotropy,
) -> Vec<Vec2> {
    let (gi, gj) = grid.nearest(step.gamma_k);
    let th_k = *orient.theta_hat.at(gi, gj);
    let (t, d) = (stripe_direction(th_k), direction(th_k));
    let w2 = omega * omega;
    // Analytic gradient of exp(−ω² D²) at each pixel.
    let grads: Vec<Vec2> = pixels
        .iter()
        .map(|&k| {
            let v = grid.centre_of(k) - step.gamma_k;
            let (a, b) = (v.dot(t), v.dot(d));
            let pinch = (-w2 * (aniso.r1 * aniso.r1 * a * a + aniso.r2 * aniso.r2 * b * b)).exp();
            (t * (aniso.r1 * aniso.r1 * a) + d * (aniso.r2 * aniso.r2 * b)) * (-2.0 * w2 * pinch)
        })
        .collect();
    let gmax = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
    if gmax <= 0.0 {
        return vec![Vec2::ZERO; pixels.len()];
    }
    let local_aniso = Anisotropy { r1: step.r1_bar, r2: aniso.r2 };
    pixels
        .iter()
        .zip(&grads)
        .map(|(&k, g)| {
            let x = grid.centre_of(k);
            let th = orient.theta_hat.values()[k];
            let m = mu.values()[k];
            let dx = aniso_norm_sq(x - step.gamma_bar_k, th, local_aniso);
            let lin = 2.0 * omega / (2.0 - m) * direction(th).dot(x - step.gamma_k).abs();
            let local = (-2.0 * w2 * dx - lin).exp();
            // Gather from further out along −∇Π: material moves towards the centre.
            -*g * (local * (1.0 - m) * omega_hat_px / (k_max as f64 * gmax))
        })
        .collect()
}

type IndexBox = (usize, usize, usize, usize);

/// 4-connected solid pieces of `rho ≥ 1 − mu` inside an index box, and how
/// many of them stay clear of the box border (enclosed islands).
fn window_pieces(rho: &ScalarField, mu: &ScalarField, (i0, i1, j0, j1): IndexBox) -> (usize, usize) {
    let (w, h) = (i1 + 1 - i0, j1 + 1 - j0);
    let solid: Vec<bool> = (j0..=j1)
        .flat_map(|j| (i0..=i1).map(move |i| (i, j)))
        .map(|(i, j)| *rho.at(i, j) >= 1.0 - *mu.at(i, j))
        .collect();
    let mut seen = vec![false; solid.len()];
    let (mut count, mut islands) = (0, 0);
    let mut stack = Vec::new();
    for start in 0..solid.len() {
        if !solid[start] || seen[start] {
            continue;
        }
        count += 1;
        let mut border = false;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (a, b) = (k % w, k / w);
            border |= a == 0 || b == 0 || a + 1 == w || b + 1 == h;
            let mut push = |n: usize| {
                if solid[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if a > 0 {
                push(k - 1);
            }
            if a + 1 < w {
                push(k + 1);
            }
            if b > 0 {
                push(k - w);
            }
            if b + 1 < h {
                push(k + w);
            }
        }
        if !border {
            islands += 1;
        }
    }
    (count, islands)
}

fn grow(grid: &Grid, (i0, i1, j0, j1): IndexBox, m: usize) -> IndexBox {
    (i0.saturating_sub(m), (i1 + m).min(grid.nx() - 1), j0.saturating_sub(m), (j1 + m).min(grid.ny() - 1))
}

/// Guard box around a branch edit: the edited box plus one wavelength.
fn guard_box(grid: &Grid, edit: IndexBox, omega: f64) -> IndexBox {
    grow(grid, edit, (1.0 / (omega * grid.h())).ceil() as usize + 1)
}

fn splits(before: (usize, usize), after: (usize, usize)) -> bool {
    after.0 > before.0 || after.1 > before.1
}

/// Incremental pinch of `rho` about the branch. Pixels further than the pinch
/// radius from the closure centre are untouched. A step that would split the
/// thresholded material around the branch into more pieces is skipped.
pub fn pinch_branch(rho: &mut ScalarField, bp: &BranchPoint, mu: &ScalarField, orient: &OrientationField, omega: f64, omega_hat_px: f64, cfg: &BranchConfig) {
    let grid = *rho.grid();
    let radius = cfg.pinch_radius / omega;
    let (i0, i1, j0, j1) = window(&grid, bp.gamma_c, radius);
    let pixels: Vec<usize> = (j0..=j1)
        .flat_map(|j| (i0..=i1).map(move |i| (i, j)))
        .filter(|&(i, j)| (grid.centre(i, j) - bp.gamma_c).norm() <= radius)
        .map(|(i, j)| grid.index(i, j))
        .collect();
    if pixels.is_empty() {
        return;
    }
    let guard = guard_box(&grid, (i0, i1, j0, j1), omega);
    let mut pieces = window_pieces(rho, mu, guard);
    for step in pinch_steps(bp, cfg.k_max, cfg.aniso.r1) {
        let p = pinch_displacements(&grid, &pixels, &step, orient, mu, omega, omega_hat_px, cfg.k_max, cfg.aniso);
        let next: Vec<f64> = pixels
            .iter()
            .zip(&p)
            .map(|(&k, off)| {
                let (i, j) = grid.coords(k);
                bilinear_index(rho, i as f64 + off.x, j as f64 + off.y).clamp(0.0, 1.0)
            })
            .collect();
        let old: Vec<f64> = pixels.iter().map(|&k| rho.values()[k]).collect();
        for (&k, &v) in pixels.iter().zip(&next) {
            rho.values_mut()[k] = v;
        }
        let after = window_pieces(rho, mu, guard);
        if splits(pieces, after) {
            for (&k, &v) in pixels.iter().zip(&old) {
                rho.values_mut()[k] = v;
            }
        } else {
            pieces = after;
        }
    }
}

/// Outcome of the branch pass on one layer.
#[derive(Clone, Debug)]
pub struct BranchRepair {
    pub rho: ScalarField,
    pub points: Vec<BranchPoint>,
}

/// Close every branch then pinch them in (y, x) order. `points` are physical
/// positions already snapped to the grid of `field`.
pub fn repair_branches(
    field: &ComplexField,
    points: &[Vec2],
    orient: &OrientationField,
    mu: &ScalarField,
    omega: f64,
    omega_hat_px: f64,
    cfg: &BranchConfig,
) -> BranchRepair {
    let (phase, _) = crate::sample::to_phase(field);
    let sine = phase.map(|p| p.sin());
    let mut rho = crate::math::to_triangular(&phase);
    let mut bps: Vec<BranchPoint> = points.iter().map(|&g| classify_branch(g, &sine, orient, omega)).collect();
    bps.sort_by(|a, b| a.gamma.y.total_cmp(&b.gamma.y).then(a.gamma.x.total_cmp(&b.gamma.x)));
    for bp in &bps {
        // Closure only adds material; it is dropped if that leaves a detached island.
        let f = closure_fields(&phase, orient, bp, omega, cfg);
        if f.nx == 0 || f.ny == 0 {
            continue;
        }
        let guard = guard_box(rho.grid(), (f.i0, f.i0 + f.nx - 1, f.j0, f.j0 + f.ny - 1), omega);
        let before = window_pieces(&rho, mu, guard);
        let saved = apply_closure(&mut rho, &f);
        if splits(before, window_pieces(&rho, mu, guard)) {
            restore(&mut rho, &f, &saved);
        }
    }
    for bp in &bps {
        pinch_branch(&mut rho, bp, mu, orient, omega, omega_hat_px, cfg);
    }
    BranchRepair { rho, points: bps }
}

/// Total phase winding around a closed loop of samples, in turns.
pub fn winding_number(samples: &[num_complex::Complex64]) -> f64 {
    let n = samples.len();
    (0..n).map(|k| wrap_angle(samples[(k + 1) % n].arg() - samples[k].arg())).sum::<f64>() / TAU
}
