//! Design metrics and their JSON form.

use serde::Serialize;

use crate::assemble::{PipelineConfig, PipelineOutput, StageTimings};
use crate::bc::BcSpec;
use crate::case::CoarseSolution;
use crate::error::{Error, Result};
use crate::fem;
use crate::grid::{Grid, Mask, ScalarField};
use crate::interp::resample_nearest;
use crate::metrics::{connectivity, cv_product, disc_mask, periodicity_estimate, ratio, WavelengthStats};
use crate::plan::ResolutionPlan;
use crate::vec2::Vec2;

pub const SCHEMA: u32 = 1;

/// Pipeline switches echoed into the metrics file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flags {
    pub boundary: bool,
    pub branch_repair: bool,
    pub extended_alignment: bool,
    pub detector: String,
    pub phase_shift: f64,
    pub deterministic: bool,
    pub iterations: usize,
}

impl Flags {
    pub fn of(cfg: &PipelineConfig) -> Self {
        Flags {
            boundary: cfg.boundary,
            branch_repair: cfg.branch_repair,
            extended_alignment: cfg.align.extended,
            detector: format!("{:?}", cfg.branch.detector).to_lowercase(),
            phase_shift: cfg.phase_shift,
            deterministic: cfg.deterministic,
            iterations: cfg.align.iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub schema: u32,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(rename = "C_ref")]
    pub c_ref: Option<f64>,
    #[serde(rename = "V_ref")]
    pub v_ref: f64,
    pub components: usize,
    pub load_connected: bool,
    pub wavelength_median_ratio: Option<f64>,
    pub wavelength: WavelengthStats,
    pub periodicity_advisory: bool,
    pub branch_points: usize,
    pub plan: ResolutionPlan,
    pub timings_ms: StageTimings,
    pub flags: Flags,
    pub warnings: Vec<String>,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialise")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Solve for the compliance of the design.
    pub fem: bool,
    /// Also solve the homogenised reference on the fine grid.
    pub reference: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { fem: true, reference: true }
    }
}

/// Homogenised density `min(Σμ, 1)` on another grid by nearest sampling.
pub fn homogenised_density(sol: &CoarseSolution, target: &Grid) -> ScalarField {
    let rho = sol.sum_mu().map(|&m| m.clamp(0.0, 1.0));
    resample_nearest(&rho, target)
}

/// Fine pixels where local periodicity is not expected: coarse elements
/// within one element of void, full solid or the domain edge, plus
/// one wavelength around every branch point.
pub fn periodicity_exclusion(sol: &CoarseSolution, fine: &Grid, centres: &[Vec2], omega: f64) -> Mask {
    let coarse = *sol.grid();
    let sum = sol.sum_mu();
    let plain = |i: isize, j: isize| sum.get(i, j).is_some_and(|&m| m >= sol.mu_min() - 1e-12 && m < 0.99);
    let near_band = Mask::from_fn(coarse, |i, j| {
        let (i, j) = (i as isize, j as isize);
        !(-1..=1).all(|dj| (-1..=1).all(|di| plain(i + di, j + dj)))
    });
    let mut ex = resample_nearest(&near_band, fine);
    let windows = disc_mask(fine, centres, 1.0 / omega);
    for (e, w) in ex.values_mut().iter_mut().zip(windows.values()) {
        *e |= *w;
    }
    ex
}

/// Orientation of the thickest layer, used for periodicity scan lines.
fn dominant_theta(sol: &CoarseSolution) -> &ScalarField {
    let layers = sol.layers();
    let k = (0..layers.len()).max_by(|&a, &b| layers[a].mu.mean().total_cmp(&layers[b].mu.mean())).unwrap_or(0);
    &layers[k].theta
}

/// Everything that can be measured from a binary design alone.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMetrics {
    pub c: Option<f64>,
    pub v: f64,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub c_ref: Option<f64>,
    pub v_ref: f64,
    pub components: usize,
    pub load_connected: bool,
    pub wavelength: WavelengthStats,
}

/// Compliance, volume, connectivity and periodicity of `design`, which must
/// lie on a refinement of the case grid. `branch_centres` are excluded from
/// the periodicity scan together with the band around void and solid.
pub fn evaluate_design(sol: &CoarseSolution, design: &Mask, omega: f64, branch_centres: &[Vec2], opts: EvalOptions) -> Result<DesignMetrics> {
    let fine = *design.grid();
    let coarse = *sol.grid();
    let factor = fine.nx() / coarse.nx().max(1);
    if factor == 0 || fine != coarse.refine(factor) {
        return Err(Error::InvalidArgument(format!(
            "design grid {}x{} is not a refinement of the {}x{} case grid",
            fine.nx(),
            fine.ny(),
            coarse.nx(),
            coarse.ny()
        )));
    }
    let bc: Option<&BcSpec> = sol.bc();
    let v = design.fraction();
    let rho_ref = homogenised_density(sol, &fine);
    let v_ref = rho_ref.mean();

    let (mut c, mut c_ref) = (None, None);
    if let (Some(bc), true) = (bc, opts.fem) {
        c = Some(fem::compliance_mask(design, bc)?.compliance);
        if opts.reference {
            c_ref = Some(fem::compliance(&rho_ref, bc)?.compliance);
        }
    }
    let s = c.map(|c| cv_product(c, v));
    let r = match (c, c_ref) {
        (Some(c), Some(cr)) => Some(ratio(c, v, cr, v_ref)?),
        _ => None,
    };

    let conn = connectivity(design, bc);
    let exclude = periodicity_exclusion(sol, &fine, branch_centres, omega);
    let spacing = (0.5 / (omega * fine.h())).round().max(1.0) as usize;
    let wavelength = if sol.num_layers() == 0 {
        WavelengthStats { median_ratio: f64::NAN, iqr: f64::NAN, segments: 0, reliable: false }
    } else {
        periodicity_estimate(design, dominant_theta(sol), &exclude, omega, spacing)
    };
    Ok(DesignMetrics { c, v, s, r, c_ref, v_ref, components: conn.components, load_connected: conn.load_connected, wavelength })
}

impl Metrics {
    /// Assemble the metrics file from a design measurement and the run record.
    pub fn new(d: DesignMetrics, plan: ResolutionPlan, timings: StageTimings, flags: Flags, branch_points: usize, advisory: bool, mut warnings: Vec<String>) -> Self {
        if !d.wavelength.reliable {
            warnings.push(format!("periodicity estimate is unreliable ({} scan segments)", d.wavelength.segments));
        }
        Metrics {
            schema: SCHEMA,
            c: d.c,
            v: d.v,
            s: d.s,
            r: d.r,
            c_ref: d.c_ref,
            v_ref: d.v_ref,
            components: d.components,
            load_connected: d.load_connected,
            wavelength_median_ratio: d.wavelength.median_ratio.is_finite().then_some(d.wavelength.median_ratio),
            wavelength: d.wavelength,
            periodicity_advisory: advisory,
            branch_points,
            plan,
            timings_ms: timings,
            flags,
            warnings,
        }
    }
}

/// Branch and singularity positions of a run, for periodicity exclusion.
pub fn branch_centres(out: &PipelineOutput) -> Vec<Vec2> {
    out.layers
        .iter()
        .flat_map(|l| l.detected.iter().copied().chain(l.branches.iter().map(|b| b.gamma)))
        .collect()
}

/// Compliance, volume, connectivity and periodicity of a pipeline result.
pub fn evaluate(sol: &CoarseSolution, cfg: &PipelineConfig, out: &PipelineOutput, opts: EvalOptions) -> Result<Metrics> {
    let d = evaluate_design(sol, &out.raster.solid, cfg.omega, &branch_centres(out), opts)?;
    let branch_points = out.layers.iter().map(|l| l.branches.len()).sum();
    Ok(Metrics::new(d, out.plan, out.timings, Flags::of(cfg), branch_points, out.advisory, out.warnings.clone()))
}
