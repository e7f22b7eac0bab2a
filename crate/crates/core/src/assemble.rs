//! The full pipeline from a coarse solution to a binary design raster.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::align::{align, alignment_order, alignment_residuals, build_neighbourhoods, propagate_phases, thin_member_blend, AlignConfig, PhaseInit};
use crate::boundary::{boundary_fields, build_boundary_kernels, smooth_solid_regions, solid_mask};
use crate::branches::{find_branch_points, repair_branches, snap_to_minimum, BranchConfig, BranchPoint};
use crate::case::{build_indicators, build_kernels, CoarseSolution, KernelSet, Layer};
use crate::error::{Error, Result, Stage};
use crate::grid::{Grid, Mask, ScalarField};
use crate::interp::{resample_bilinear, resample_nearest};
use crate::math::to_triangular;
use crate::metrics::label_components;
use crate::plan::{ResolutionPlan, DEFAULT_PIXEL_CAP};
use crate::sample::{sample_field, to_phase, upsample_orientations, upscale_complex, SampleConfig};
use crate::vec2::Vec2;

/// Frequencies (per unit of the shorter domain side) for which the output
/// periodicity is reliable.
pub const ADVISORY_BAND: (f64, f64) = (24.0, 80.0);

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub omega: f64,
    /// Minimum feature size in fine pixels.
    pub h_min: f64,
    pub align: AlignConfig,
    pub sample: SampleConfig,
    pub branch: BranchConfig,
    pub boundary: bool,
    pub branch_repair: bool,
    /// Constant added to every kernel phase after alignment.
    pub phase_shift: f64,
    /// Recorded in outputs; every reduction is ordered regardless.
    pub deterministic: bool,
    pub pixel_cap: usize,
    /// Keep intermediate fields in the output.
    pub keep_fields: bool,
    /// Solid pieces with fewer fine pixels than this are dropped.
    pub min_island_px: usize,
}

impl PipelineConfig {
    pub fn new(omega: f64) -> Self {
        PipelineConfig {
            omega,
            h_min: 3.0,
            align: AlignConfig::default(),
            sample: SampleConfig::default(),
            branch: BranchConfig::default(),
            boundary: true,
            branch_repair: true,
            phase_shift: 0.0,
            deterministic: true,
            pixel_cap: DEFAULT_PIXEL_CAP,
            keep_fields: false,
            // A square twice the minimum feature size.
            min_island_px: 36,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.h_min > 0.0) {
            return Err(Error::InvalidArgument(format!("h_min must be positive, got {}", self.h_min)));
        }
        if self.branch.k_max < 2 {
            return Err(Error::InvalidArgument("k_max must be at least 2".into()));
        }
        if !self.phase_shift.is_finite() {
            return Err(Error::InvalidArgument("phase shift must be finite".into()));
        }
        self.align.validate()
    }

    /// Whether `omega` falls outside the reliable band for a grid of this size.
    pub fn periodicity_advisory(&self, grid: &Grid) -> bool {
        let scaled = self.omega * grid.width().min(grid.height());
        !(ADVISORY_BAND.0..=ADVISORY_BAND.1).contains(&scaled)
    }
}

/// Binary design on the fine grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignRaster {
    pub grid: Grid,
    pub solid: Mask,
}

impl DesignRaster {
    pub fn volume_fraction(&self) -> f64 {
        self.solid.fraction()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub kernels_ms: f64,
    pub boundary_ms: f64,
    pub align_ms: f64,
    pub sample_ms: f64,
    pub branch_ms: f64,
    pub assemble_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug)]
pub struct LayerReport {
    pub kernels: usize,
    /// Singularities found on the first intermediate grid.
    pub detected: Vec<Vec2>,
    /// Classified branches on the second intermediate grid.
    pub branches: Vec<BranchPoint>,
    pub mean_residual: f64,
    pub max_residual: f64,
}

/// Intermediate fields, kept on request.
#[derive(Clone, Debug)]
pub struct DebugFields {
    pub phase_i2: Vec<ScalarField>,
    pub theta_i2: Vec<ScalarField>,
    /// Density after branch repair, on the fine grid.
    pub rho: Vec<ScalarField>,
    pub mu: Vec<ScalarField>,
    /// Union of the thresholded layers before the boundary is applied.
    pub union: Mask,
    pub s: Mask,
    pub ds: Mask,
    pub solid: Mask,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub raster: DesignRaster,
    pub plan: ResolutionPlan,
    pub timings: StageTimings,
    pub layers: Vec<LayerReport>,
    pub advisory: bool,
    pub warnings: Vec<String>,
    pub fields: Option<DebugFields>,
}

/// Solid where `rho ≥ 1 − mu`; void wherever `mu` is below `mu_min`.
pub fn threshold_layer(rho: &ScalarField, mu: &ScalarField, mu_min: f64) -> Mask {
    rho.zip_map(mu, |&r, &m| m >= mu_min - 1e-12 && r >= 1.0 - m)
}

/// Clear 4-connected solid pieces with fewer than `min_px` pixels.
pub fn remove_specks(mask: &Mask, min_px: usize) -> Mask {
    if min_px <= 1 {
        return mask.clone();
    }
    let (labels, n) = label_components(mask);
    let mut size = vec![0usize; n];
    for l in labels.iter().flatten() {
        size[*l as usize] += 1;
    }
    let vals = labels.iter().map(|l| l.is_some_and(|l| size[l as usize] >= min_px)).collect();
    Mask::from_values(*mask.grid(), vals).expect("same grid")
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

struct LayerResult {
    report: LayerReport,
    solid: Mask,
    phase_i2: ScalarField,
    theta_i2: ScalarField,
    rho: ScalarField,
    mu: ScalarField,
    t_align: f64,
    t_sample: f64,
    t_branch: f64,
    t_assemble: f64,
}

struct Grids {
    i1: Grid,
    i2: Grid,
    fine: Grid,
}

fn run_layer(
    mut set: KernelSet,
    layer: &Layer,
    z: &ScalarField,
    order: &[usize],
    grids: &Grids,
    plan: &ResolutionPlan,
    mu_min: f64,
    cfg: &PipelineConfig,
) -> Result<LayerResult> {
    let t = Instant::now();
    let nbhd = build_neighbourhoods(&set, &cfg.align);
    if cfg.align.init == PhaseInit::Propagate {
        propagate_phases(&mut set, &nbhd, order);
    }
    align(&mut set, &nbhd, order, cfg.align.iterations);
    let res = alignment_residuals(&set, &nbhd);
    if cfg.phase_shift != 0.0 {
        set.shift_phases(cfg.phase_shift);
    }
    let t_align = ms(t);

    let t = Instant::now();
    let orient1 = upsample_orientations(&layer.theta, &grids.i1);
    let g1 = sample_field(&set, &grids.i1, &orient1, &cfg.sample);
    if g1.values().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::pipeline(Stage::Sample, format!("non-finite field on layer {}", set.layer)));
    }
    let region = resample_bilinear(z, &grids.i1).map(|&v| v >= 0.5);
    let detected = find_branch_points(&g1, &region, &cfg.branch);
    let g2 = upscale_complex(&g1, plan.i_ratio())?;
    drop(g1);
    let t_sample = ms(t);

    let t = Instant::now();
    let orient2 = upsample_orientations(&layer.theta, &grids.i2);
    let mu2 = resample_bilinear(&layer.mu, &grids.i2);
    let half_wave = 0.5 / cfg.omega;
    let mut snapped: Vec<Vec2> = detected.iter().map(|&p| snap_to_minimum(&g2, p, half_wave)).collect();
    snapped.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    snapped.dedup();
    let (phase_i2, _) = to_phase(&g2);
    let (rho2, branches) = if cfg.branch_repair {
        let rep = repair_branches(&g2, &snapped, &orient2, &mu2, cfg.omega, plan.omega_hat_px, &cfg.branch);
        (rep.rho, rep.points)
    } else {
        (to_triangular(&phase_i2), Vec::new())
    };
    let t_branch = ms(t);

    let t = Instant::now();
    let rho = resample_bilinear(&rho2, &grids.fine);
    let mu = resample_bilinear(&layer.mu, &grids.fine);
    let solid = threshold_layer(&rho, &mu, mu_min);
    let t_assemble = ms(t);

    let n = res.len().max(1) as f64;
    Ok(LayerResult {
        report: LayerReport {
            kernels: set.len(),
            detected,
            branches,
            mean_residual: res.iter().sum::<f64>() / n,
            max_residual: res.iter().copied().fold(0.0, f64::max),
        },
        solid,
        phase_i2,
        theta_i2: orient2.theta_hat,
        rho,
        mu,
        t_align,
        t_sample,
        t_branch,
        t_assemble,
    })
}

/// Run every stage on `sol` and threshold the result into a binary design.
pub fn dehomogenise(sol: &CoarseSolution, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let total = Instant::now();
    let coarse = *sol.grid();
    let plan = ResolutionPlan::new(coarse.h(), cfg.omega, sol.mu_min(), cfg.h_min)?;
    plan.check_memory(coarse.nx(), coarse.ny(), cfg.pixel_cap)?;
    let grids = Grids { i1: coarse.refine(plan.i_up1), i2: coarse.refine(plan.i_up2), fine: coarse.refine(plan.f_total) };
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();
    let advisory = cfg.periodicity_advisory(&coarse);
    if advisory {
        warnings.push(format!(
            "omega {} is outside the reliable band {}..{} for this domain",
            cfg.omega, ADVISORY_BAND.0, ADVISORY_BAND.1
        ));
    }

    let t = Instant::now();
    let inds = build_indicators(sol);
    let mut sets = build_kernels(sol, &inds, cfg.omega)?;
    for (l, set) in sets.iter_mut().enumerate() {
        thin_member_blend(set, &inds.z_tilde[l], &sol.layers()[l].theta);
    }
    timings.kernels_ms = ms(t);

    let fine = grids.fine;
    if inds.s.values().iter().all(|&v| v == 0.0) {
        warnings.push("the case has no material; the design is empty".into());
        timings.total_ms = ms(total);
        let empty = Mask::filled(fine, false);
        return Ok(PipelineOutput {
            raster: DesignRaster { grid: fine, solid: empty.clone() },
            plan,
            timings,
            layers: sets
                .iter()
                .map(|s| LayerReport { kernels: s.len(), detected: Vec::new(), branches: Vec::new(), mean_residual: 0.0, max_residual: 0.0 })
                .collect(),
            advisory,
            warnings,
            fields: cfg.keep_fields.then(|| DebugFields {
                phase_i2: Vec::new(),
                theta_i2: Vec::new(),
                rho: Vec::new(),
                mu: Vec::new(),
                union: empty.clone(),
                s: empty.clone(),
                ds: empty.clone(),
                solid: empty,
            }),
        });
    }

    let t = Instant::now();
    let bset = build_boundary_kernels(sol, &inds, cfg.omega);
    let factor = plan.f_total / plan.i_up1;
    let (s_mask, ds, solid) = if cfg.boundary {
        let bf = boundary_fields(sol, &inds, &bset, cfg.omega, &grids.i1, factor, &cfg.sample)
            .map_err(|e| Error::pipeline(Stage::Boundary, e.to_string()))?;
        let solid = smooth_solid_regions(sol, &inds, cfg.omega, &grids.i1, factor, &cfg.sample)
            .map_err(|e| Error::pipeline(Stage::Boundary, e.to_string()))?;
        (bf.s, bf.ds, solid)
    } else {
        let s = resample_nearest(&inds.s, &fine).map(|&v| v > 0.5);
        let solid = resample_nearest(&solid_mask(&inds), &fine).map(|&v| v > 0.5);
        (s, Mask::filled(fine, false), solid)
    };
    timings.boundary_ms = ms(t);

    let orientations = bset.orientations();
    let results: Vec<Result<LayerResult>> = sets
        .into_par_iter()
        .enumerate()
        .map(|(l, set)| {
            let order = alignment_order(&set, &orientations);
            run_layer(set, &sol.layers()[l], &inds.z[l], &order, &grids, &plan, sol.mu_min(), cfg)
        })
        .collect();
    let results: Vec<LayerResult> = results.into_iter().collect::<Result<_>>()?;
    for r in &results {
        timings.align_ms += r.t_align;
        timings.sample_ms += r.t_sample;
        timings.branch_ms += r.t_branch;
        timings.assemble_ms += r.t_assemble;
    }

    let t = Instant::now();
    let n = fine.len();
    let mut union = vec![false; n];
    for r in &results {
        for (u, &v) in union.iter_mut().zip(r.solid.values()) {
            *u |= v;
        }
    }
    let design: Vec<bool> = (0..n)
        .map(|k| (union[k] && s_mask.values()[k]) || ds.values()[k] || solid.values()[k])
        .collect();
    let design = Mask::from_values(fine, design)?;
    let raster = DesignRaster { grid: fine, solid: remove_specks(&design, cfg.min_island_px) };
    timings.assemble_ms += ms(t);
    timings.total_ms = ms(total);

    let union = Mask::from_values(fine, union)?;
    let mut layers = Vec::with_capacity(results.len());
    let mut fields = cfg.keep_fields.then(|| DebugFields {
        phase_i2: Vec::new(),
        theta_i2: Vec::new(),
        rho: Vec::new(),
        mu: Vec::new(),
        union,
        s: s_mask,
        ds,
        solid,
    });
    for r in results {
        if let Some(f) = fields.as_mut() {
            f.phase_i2.push(r.phase_i2);
            f.theta_i2.push(r.theta_i2);
            f.rho.push(r.rho);
            f.mu.push(r.mu);
        }
        layers.push(r.report);
    }
    Ok(PipelineOutput { raster, plan, timings, layers, advisory, warnings, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::Layer;
    use std::f64::consts::PI;

    fn uniform(n: usize, mu: f64, theta: f64) -> CoarseSolution {
        let g = Grid::with_corner_at_origin(n, n, 1.0 / n as f64).unwrap();
        let layer = Layer { mu: ScalarField::filled(g, mu), theta: ScalarField::filled(g, theta) };
        CoarseSolution::new(g, 0.1, vec![layer], None).unwrap()
    }

    #[test]
    fn specks_below_the_floor_are_cleared() {
        let g = Grid::with_corner_at_origin(10, 10, 0.1).unwrap();
        let m = Mask::from_fn(g, |i, j| i < 3 || (i, j) == (6, 6) || ((6..8).contains(&i) && j == 2));
        let out = remove_specks(&m, 3);
        assert_eq!(out.count(), 30);
        assert_eq!(remove_specks(&m, 2).count(), 32);
        assert_eq!(remove_specks(&m, 0), m);
    }

    #[test]
    fn threshold_examples() {
        let g = Grid::with_corner_at_origin(4, 1, 1.0).unwrap();
        let rho = ScalarField::from_values(g, vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        let full = threshold_layer(&rho, &ScalarField::filled(g, 1.0), 0.1);
        assert!(full.values().iter().all(|&b| b));
        let none = threshold_layer(&rho, &ScalarField::filled(g, 0.05), 0.1);
        assert!(none.values().iter().all(|&b| !b));
        let half = threshold_layer(&rho, &ScalarField::filled(g, 0.5), 0.1);
        assert_eq!(half.values(), &[false, false, true, true]);
    }

    #[test]
    fn triangular_wave_fill_is_mu() {
        // Analytic level set: the upper μ of each triangular period is solid.
        let n = 1000;
        let g = Grid::with_corner_at_origin(n, 1, 1.0 / n as f64).unwrap();
        let omega = 10.0;
        let rho = ScalarField::from_fn(g, |i, _| crate::math::triangular(crate::math::wrap_angle(2.0 * PI * omega * g.centre(i, 0).x)));
        for mu in [0.2, 0.5, 0.7] {
            let m = threshold_layer(&rho, &ScalarField::filled(g, mu), 0.1);
            let per_period = n as f64 / omega;
            assert!((m.fraction() - mu).abs() <= omega / n as f64 * 1.0 + 1.0 / per_period, "mu {mu}: {}", m.fraction());
        }
    }

    #[test]
    fn void_case_gives_empty_design() {
        let out = dehomogenise(&uniform(8, 0.0, 0.0), &PipelineConfig::new(3.0)).unwrap();
        assert_eq!(out.raster.volume_fraction(), 0.0);
        assert!(!out.warnings.is_empty());
        let p = out.plan;
        assert_eq!(out.raster.grid.nx(), 8 * p.f_total);
    }

    #[test]
    fn uniform_stripes_fill_fraction() {
        let sol = uniform(40, 0.5, 0.0);
        let mut cfg = PipelineConfig::new(30.0);
        cfg.keep_fields = true;
        let out = dehomogenise(&sol, &cfg).unwrap();
        let g = out.raster.grid;
        assert_eq!((g.nx(), g.ny()), (40 * out.plan.f_total, 40 * out.plan.f_total));
        // Scanline count along x away from the boundary band.
        let margin = g.nx() / 8;
        let (mut solid, mut total) = (0usize, 0usize);
        for j in (margin..g.ny() - margin).step_by(7) {
            for i in margin..g.nx() - margin {
                total += 1;
                solid += *out.raster.solid.at(i, j) as usize;
            }
        }
        let frac = solid as f64 / total as f64;
        assert!((frac - 0.5).abs() <= 0.03, "fill {frac}");
        assert!(out.layers[0].branches.is_empty());
        let f = out.fields.unwrap();
        assert!(f.ds.values().iter().zip(f.s.values()).all(|(&d, &s)| !d || s));
    }

    #[test]
    fn layer_order_does_not_matter() {
        let g = Grid::with_corner_at_origin(12, 12, 1.0 / 12.0).unwrap();
        let a = Layer { mu: ScalarField::filled(g, 0.3), theta: ScalarField::filled(g, 0.0) };
        let b = Layer { mu: ScalarField::filled(g, 0.2), theta: ScalarField::filled(g, 0.5 * PI) };
        let ab = CoarseSolution::new(g, 0.1, vec![a.clone(), b.clone()], None).unwrap();
        let ba = CoarseSolution::new(g, 0.1, vec![b, a], None).unwrap();
        let cfg = PipelineConfig::new(12.0);
        let x = dehomogenise(&ab, &cfg).unwrap();
        let y = dehomogenise(&ba, &cfg).unwrap();
        assert_eq!(x.raster, y.raster);
    }

    #[test]
    fn advisory_band() {
        let g = Grid::with_corner_at_origin(10, 10, 0.1).unwrap();
        assert!(PipelineConfig::new(8.0).periodicity_advisory(&g));
        assert!(!PipelineConfig::new(30.0).periodicity_advisory(&g));
    }

    #[test]
    fn rejects_bad_config() {
        let sol = uniform(8, 0.5, 0.0);
        assert!(dehomogenise(&sol, &PipelineConfig::new(-1.0)).is_err());
        let mut cfg = PipelineConfig::new(3.0);
        cfg.pixel_cap = 10;
        let err = dehomogenise(&sol, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
