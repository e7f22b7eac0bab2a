//! Evaluation of the filtered phasor field on an intermediate grid.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::case::{KernelSet, PhasorKernel};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Mask, ScalarField};
use crate::interp::{bilinear_index, upscale_bicubic};
use crate::math::{aniso_norm_sq, arg, direction, wrap_angle};
use crate::vec2::Vec2;

/// Magnitude below which a sample has no defined phase.
pub const SINGULAR_EPS: f64 = 1e-9;

/// Orientation upsampled from the coarse grid, with the local interpolation
/// inconsistency `correct` (1 where interpolated directions cancel).
#[derive(Clone, Debug)]
pub struct OrientationField {
    pub theta_hat: ScalarField,
    pub consistency: ScalarField,
}

impl OrientationField {
    pub fn grid(&self) -> &Grid {
        self.theta_hat.grid()
    }

    pub fn direction_at(&self, idx: usize) -> Vec2 {
        direction(self.theta_hat.values()[idx])
    }
}

pub fn upsample_orientations(theta: &ScalarField, fine: &Grid) -> OrientationField {
    let src = *theta.grid();
    let cos = theta.map(|t| t.cos());
    let sin = theta.map(|t| t.sin());
    let n = fine.len();
    let mut theta_hat = Vec::with_capacity(n);
    let mut consistency = Vec::with_capacity(n);
    for idx in 0..n {
        let p = fine.centre_of(idx);
        let (u, v) = src.to_index_space(p);
        let (c, s) = (bilinear_index(&cos, u, v), bilinear_index(&sin, u, v));
        let correct = 1.0 - 2.0 * (c * c + s * s - 0.5).max(0.0);
        let (ni, nj) = src.nearest(p);
        let a_lin = s.atan2(c);
        let a_nn = sin.at(ni, nj).atan2(*cos.at(ni, nj));
        // Blend through the wrapped difference so ±π neighbours do not average to 0.
        theta_hat.push(wrap_angle(a_lin + correct * wrap_angle(a_nn - a_lin)));
        consistency.push(correct);
    }
    OrientationField {
        theta_hat: ScalarField::from_values(*fine, theta_hat).expect("sized by grid"),
        consistency: ScalarField::from_values(*fine, consistency).expect("sized by grid"),
    }
}

/// Which support test truncates a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffRule {
    /// Keep points with `exp(−β²Δ²/(α+β)) > threshold`.
    Envelope,
    /// Keep points with `exp(−πβΔ) > threshold`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleConfig {
    pub cutoff: CutoffRule,
    pub threshold: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { cutoff: CutoffRule::Envelope, threshold: 1e-6 }
    }
}

impl SampleConfig {
    /// Largest anisotropic distance inside the support.
    pub fn max_delta(&self, beta: f64, alpha: f64) -> f64 {
        let l = -self.threshold.ln();
        match self.cutoff {
            CutoffRule::Envelope => (l * (alpha + beta)).sqrt() / beta,
            CutoffRule::Linear => l / (PI * beta),
        }
    }

    #[inline]
    fn inside(&self, delta_sq: f64, beta: f64, alpha: f64) -> bool {
        match self.cutoff {
            CutoffRule::Envelope => (-beta * beta * delta_sq / (alpha + beta)).exp() > self.threshold,
            CutoffRule::Linear => (-PI * beta * delta_sq.sqrt()).exp() > self.threshold,
        }
    }
}

/// Per-point geometry of one kernel's contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelContribution {
    pub delta: f64,
    pub lambda: Vec2,
    pub alpha: f64,
}

impl KernelContribution {
    pub fn new(k: &PhasorKernel, alpha: f64, x: Vec2, d_hat: Vec2) -> Self {
        KernelContribution {
            delta: aniso_norm_sq(x - k.x0, k.theta, k.envelope).sqrt(),
            lambda: (k.d - d_hat) * k.omega,
            alpha,
        }
    }

    /// Gaussian × filter × oscillator at `x`.
    pub fn value(&self, k: &PhasorKernel, x: Vec2) -> Complex64 {
        let v = x - k.x0;
        let ab = self.alpha + k.beta;
        let re = -(k.beta * k.beta * self.delta * self.delta + PI * PI * self.lambda.norm_sq()) / ab;
        let im = 2.0 * self.alpha * self.lambda.dot(v) / ab + TAU * k.omega * k.d.dot(v) + k.phi;
        Complex64::from_polar(re.exp(), im)
    }
}

/// Index-space bounding box (inclusive) of a kernel's support on `grid`.
fn support_box(k: &PhasorKernel, grid: &Grid, max_delta: f64) -> Option<(usize, usize, usize, usize)> {
    // Ellipse semi-axes: along the stripes max_delta/r1, across them max_delta/r2.
    let t = Vec2::new(k.theta.sin(), k.theta.cos());
    let a = max_delta / k.envelope.r1;
    let b = max_delta / k.envelope.r2;
    let ex = ((a * t.x).powi(2) + (b * k.d.x).powi(2)).sqrt();
    let ey = ((a * t.y).powi(2) + (b * k.d.y).powi(2)).sqrt();
    let (u0, v0) = grid.to_index_space(k.x0 - Vec2::new(ex, ey));
    let (u1, v1) = grid.to_index_space(k.x0 + Vec2::new(ex, ey));
    let (nx, ny) = (grid.nx() as f64, grid.ny() as f64);
    if u1 < -1.0 || v1 < -1.0 || u0 > nx || v0 > ny {
        return None;
    }
    let lo = |u: f64| u.floor().max(0.0) as usize;
    let hi = |u: f64, n: usize| (u.ceil().max(0.0) as usize).min(n - 1);
    Some((lo(u0), hi(u1, grid.nx()), lo(v0), hi(v1, grid.ny())))
}

const BAND_ROWS: usize = 16;

/// Sum of all kernel contributions on `grid`. Each point accumulates kernels
/// in ascending index order, so the result does not depend on thread count.
pub fn sample_field(set: &KernelSet, grid: &Grid, orient: &OrientationField, cfg: &SampleConfig) -> ComplexField {
    assert_eq!(orient.grid(), grid, "orientation field must live on the sample grid");
    let nx = grid.nx();
    let dirs: Vec<Vec2> = orient.theta_hat.values().iter().map(|&t| direction(t)).collect();
    let boxes: Vec<_> = set
        .kernels
        .iter()
        .map(|k| support_box(k, grid, cfg.max_delta(k.beta, set.alpha)))
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    values.par_chunks_mut(nx * BAND_ROWS).enumerate().for_each(|(band, out)| {
        let j_lo = band * BAND_ROWS;
        let j_hi = j_lo + out.len() / nx - 1;
        for (k, bx) in set.kernels.iter().zip(&boxes) {
            let Some((i0, i1, b0, b1)) = *bx else { continue };
            if b1 < j_lo || b0 > j_hi {
                continue;
            }
            for j in b0.max(j_lo)..=b1.min(j_hi) {
                for i in i0..=i1 {
                    let idx = j * nx + i;
                    let x = grid.centre(i, j);
                    let dsq = aniso_norm_sq(x - k.x0, k.theta, k.envelope);
                    if !cfg.inside(dsq, k.beta, set.alpha) {
                        continue;
                    }
                    let c = KernelContribution { delta: dsq.sqrt(), lambda: (k.d - dirs[idx]) * k.omega, alpha: set.alpha };
                    out[idx - j_lo * nx] += c.value(k, x);
                }
            }
        }
    });
    ComplexField::from_values(*grid, values).expect("sized by grid")
}

/// Instantaneous phase and the mask of points where it is undefined.
pub fn to_phase(field: &ComplexField) -> (ScalarField, Mask) {
    let singular = field.map(|z| z.norm() < SINGULAR_EPS);
    let phase = field.zip_map(&singular, |&z, &s| if s { 0.0 } else { arg(z) });
    (phase, singular)
}

pub fn to_sine(phase: &ScalarField) -> ScalarField {
    phase.map(|p| p.sin())
}

pub fn upscale_complex(field: &ComplexField, factor: usize) -> Result<ComplexField> {
    if factor == 0 {
        return Err(Error::InvalidArgument("upscaling factor must be at least 1".into()));
    }
    Ok(upscale_bicubic(field, factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::PhasorKernel;
    use crate::math::{aniso_norm, to_triangular};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(theta: f64, phi: f64, omega: f64, h_c: f64) -> (KernelSet, Grid) {
        let coarse = Grid::with_corner_at_origin(4, 4, h_c).unwrap();
        let mut k = PhasorKernel::new((2, 2), coarse.centre(2, 2), theta, omega, omega / h_c);
        k.phi = phi;
        let beta = k.beta;
        (KernelSet { layer: 0, grid: coarse, kernels: vec![k], omega, alpha: beta }, coarse)
    }

    /// Closed form written out longhand, independent of `KernelContribution`.
    fn oracle(k: &PhasorKernel, alpha: f64, x: Vec2, theta_hat: f64, cfg: &SampleConfig) -> Complex64 {
        let (vx, vy) = (x.x - k.x0.x, x.y - k.x0.y);
        let (s, c) = k.theta.sin_cos();
        let m0 = (s * vx + c * vy) / PI;
        let m1 = PI * (-c * vx + s * vy);
        let delta = (m0 * m0 + m1 * m1).sqrt();
        let keep = match cfg.cutoff {
            CutoffRule::Envelope => (-(k.beta * delta).powi(2) / (alpha + k.beta)).exp() > cfg.threshold,
            CutoffRule::Linear => (-PI * k.beta * delta).exp() > cfg.threshold,
        };
        if !keep {
            return Complex64::new(0.0, 0.0);
        }
        let lx = k.omega * (c - theta_hat.cos());
        let ly = k.omega * (-s + theta_hat.sin());
        let num = Complex64::new(k.beta * k.beta * delta * delta + PI * PI * (lx * lx + ly * ly), -2.0 * alpha * (lx * vx + ly * vy));
        let filt = (-num / (alpha + k.beta)).exp();
        let osc = Complex64::new(0.0, 2.0 * PI * k.omega * (c * vx - s * vy) + k.phi).exp();
        filt * osc
    }

    fn orient_const(grid: Grid, t: f64) -> OrientationField {
        OrientationField { theta_hat: ScalarField::filled(grid, t), consistency: ScalarField::filled(grid, 0.0) }
    }

    #[test]
    fn kernel_at_own_centre_is_its_phasor() {
        let (set, _) = single(0.3, 0.0, 30.0, 0.025);
        let k = &set.kernels[0];
        let c = KernelContribution::new(k, set.alpha, k.x0, k.d);
        let v = c.value(k, k.x0);
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn half_period_along_wave_vector() {
        let (set, _) = single(0.7, 0.0, 30.0, 0.025);
        let k = &set.kernels[0];
        let x = k.x0 + k.d * (1.0 / (2.0 * k.omega));
        let v = KernelContribution::new(k, set.alpha, x, k.d).value(k, x);
        let delta = aniso_norm(k.d * (1.0 / (2.0 * k.omega)), k.theta, k.envelope);
        let expect = -(-k.beta * delta * delta / 2.0).exp();
        assert!((v.re - expect).abs() < 1e-12 && v.im.abs() < 1e-12, "{v} vs {expect}");
    }

    #[test]
    fn opposite_phases_cancel() {
        let (mut set, _) = single(0.2, 0.0, 30.0, 0.025);
        let mut k2 = set.kernels[0].clone();
        k2.phi = PI;
        set.kernels.push(k2);
        let g = set.grid.refine(8);
        let f = sample_field(&set, &g, &orient_const(g, 0.2), &SampleConfig::default());
        assert!(f.values().iter().all(|z| z.norm() < 1e-12));
        let (_, sing) = to_phase(&f);
        assert_eq!(sing.count(), g.len());
    }

    #[test]
    fn matches_oracle_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for cfg in [SampleConfig::default(), SampleConfig { cutoff: CutoffRule::Linear, threshold: 1e-6 }] {
            let mut inside = 0;
            for _ in 0..500 {
                let theta = rng.random_range(-PI..PI);
                let phi = rng.random_range(-PI..PI);
                let omega = rng.random_range(10.0..60.0);
                let (set, coarse) = single(theta, phi, omega, 0.025);
                let g = coarse.refine(rng.random_range(4..12));
                let th = theta + rng.random_range(-0.3..0.3);
                let f = sample_field(&set, &g, &orient_const(g, th), &cfg);
                let idx = rng.random_range(0..g.len());
                let expect = oracle(&set.kernels[0], set.alpha, g.centre_of(idx), th, &cfg);
                let got = f.values()[idx];
                if expect == Complex64::new(0.0, 0.0) {
                    assert_eq!(got, expect);
                } else {
                    inside += 1;
                    assert!((got - expect).norm() < 1e-12, "{got} vs {expect}");
                }
            }
            if cfg.cutoff == CutoffRule::Envelope {
                assert!(inside > 50, "too few samples inside the support: {inside}");
            }
        }
    }

    #[test]
    fn points_outside_support_are_exact_zero() {
        let (set, coarse) = single(0.0, 0.4, 30.0, 0.025);
        let g = coarse.refine(8);
        let cfg = SampleConfig::default();
        let f = sample_field(&set, &g, &orient_const(g, 0.0), &cfg);
        let k = &set.kernels[0];
        let dmax = cfg.max_delta(k.beta, set.alpha);
        for idx in 0..g.len() {
            let dl = aniso_norm(g.centre_of(idx) - k.x0, k.theta, k.envelope);
            if dl > dmax * 1.0001 {
                assert_eq!(f.values()[idx], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn matching_orientation_only_narrows_bandwidth() {
        let (set, _) = single(0.5, 0.0, 20.0, 0.05);
        let k = &set.kernels[0];
        for s in [0.001, 0.004, 0.01] {
            let x = k.x0 + Vec2::new(s, -0.5 * s);
            let c = KernelContribution::new(k, set.alpha, x, k.d);
            let v = c.value(k, x);
            let expect = (-k.beta * k.beta * c.delta * c.delta / (set.alpha + k.beta)).exp();
            assert!((v.norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_thread_count_independent() {
        let coarse = Grid::with_corner_at_origin(10, 10, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernels: Vec<_> = coarse
            .iter_ij()
            .map(|(i, j)| {
                let mut k = PhasorKernel::new((i, j), coarse.centre(i, j), rng.random_range(-0.5..0.5), 8.0, 80.0);
                k.phi = rng.random_range(-PI..PI);
                k
            })
            .collect();
        let set = KernelSet { layer: 0, grid: coarse, kernels, omega: 8.0, alpha: 80.0 };
        let g = coarse.refine(6);
        let th = ScalarField::from_fn(coarse, |i, j| set.kernels[coarse.index(i, j)].theta);
        let o = upsample_orientations(&th, &g);
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| sample_field(&set, &g, &o, &SampleConfig::default()))
        };
        let a = run(1);
        let b = run(3);
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    #[test]
    fn phase_branch_conventions() {
        let g = Grid::with_corner_at_origin(3, 1, 1.0).unwrap();
        let f = ComplexField::from_values(g, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, -0.0)]).unwrap();
        let (p, s) = to_phase(&f);
        assert_eq!(p.values(), &[0.0, PI / 2.0, PI]);
        assert_eq!(s.count(), 0);
    }

    #[test]
    fn uniform_orientation_upsamples_to_itself() {
        let c = Grid::with_corner_at_origin(4, 3, 0.25).unwrap();
        let o = upsample_orientations(&ScalarField::filled(c, 0.3), &c.refine(5));
        assert!(o.theta_hat.values().iter().all(|t| (t - 0.3).abs() < 1e-12));
        assert!(o.consistency.values().iter().all(|v| v.abs() < 1e-12));
        // Nodes reproduce the coarse values.
        let th = ScalarField::from_fn(c, |i, j| 0.1 * i as f64 - 0.2 * j as f64);
        let o = upsample_orientations(&th, &c);
        for (a, b) in o.theta_hat.values().iter().zip(th.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn orientation_seams() {
        let c = Grid::with_corner_at_origin(2, 1, 1.0).unwrap();
        // Both sides point the same way across the ±π cut: no inconsistency, interpolated angle ≈ ±π.
        let th = ScalarField::from_values(c, vec![PI - 0.01, -PI + 0.01]).unwrap();
        let mid = Grid::new(1, 1, 1.0, Vec2::new(1.0, 0.5)).unwrap();
        let o = upsample_orientations(&th, &mid);
        let expect = 1.0 - 2.0 * ((0.01f64).cos().powi(2) - 0.5);
        assert!((o.consistency.values()[0] - expect).abs() < 1e-12);
        assert!(o.consistency.values()[0] < 1e-3);
        assert!((wrap_angle(o.theta_hat.values()[0] - PI)).abs() < 1e-4);
        // Opposing directions cancel: inconsistency 1, nearest neighbour wins.
        let th = ScalarField::from_values(c, vec![0.0, PI]).unwrap();
        let o = upsample_orientations(&th, &mid);
        assert!((o.consistency.values()[0] - 1.0).abs() < 1e-12);
        let t = o.theta_hat.values()[0];
        assert!(t.abs() < 1e-12 || (t.abs() - PI).abs() < 1e-12);
    }

    fn plane_wave_error(samples_per_period: f64) -> f64 {
        let omega = 4.0;
        let src = Grid::with_corner_at_origin(64, 8, 1.0 / (samples_per_period * omega)).unwrap();
        let wave = |p: Vec2| Complex64::new(0.0, TAU * omega * p.x).exp();
        let f = ComplexField::from_fn(src, |i, j| wave(src.centre(i, j)));
        let up = upscale_complex(&f, 4).unwrap();
        let g = up.grid();
        // Interior columns only: the clamped border taps are not a plane wave.
        let mut err: f64 = 0.0;
        for j in 0..g.ny() {
            for i in 8..g.nx() - 8 {
                err = err.max((up.at(i, j) - wave(g.centre(i, j))).norm());
            }
        }
        err
    }

    #[test]
    fn upscale_plane_wave() {
        // Catmull-Rom error is third order: about 4e-3 at 10 samples per period.
        assert!(plane_wave_error(10.0) < 5e-3);
        assert!(plane_wave_error(16.0) < 1e-3);
        let g = Grid::with_corner_at_origin(5, 4, 0.1).unwrap();
        let f = ComplexField::from_fn(g, |i, j| Complex64::new(i as f64, j as f64));
        assert!(upscale_complex(&f, 0).is_err());
        assert_eq!(upscale_complex(&f, 1).unwrap().values(), f.values());
        let c = ComplexField::filled(g, Complex64::new(0.3, -2.0));
        assert!(upscale_complex(&c, 3).unwrap().values().iter().all(|z| (z - c.values()[0]).norm() < 1e-14));
    }

    proptest! {
        #[test]
        fn sine_and_triangle_ranges(re in -5.0..5.0f64, im in -5.0..5.0f64) {
            let g = Grid::with_corner_at_origin(1, 1, 1.0).unwrap();
            let f = ComplexField::from_values(g, vec![Complex64::new(re, im)]).unwrap();
            let (p, _) = to_phase(&f);
            let v = p.values()[0];
            prop_assert!((-PI..=PI).contains(&v));
            prop_assert!(to_sine(&p).values()[0].abs() <= 1.0);
            let r = to_triangular(&p).values()[0];
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
