//! Timing sweeps over synthetic cases.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};

use crate::assemble::{dehomogenise, PipelineConfig, StageTimings};
use crate::grid::Mask;
use crate::plan::ResolutionPlan;
use crate::synth::{synth, SynthKind};

pub const CSV_HEADER: &str = "n_c,omega,mu_min,h_min,i_up1,i_up2,f_up,t_align_ms,t_sample_ms,t_branch_ms,t_boundary_ms,t_assemble_ms,t_total_ms";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub n_c: usize,
    pub omega: f64,
    pub mu_min: f64,
    pub h_min: f64,
}

impl SweepPoint {
    /// The `n_c·ω/μ_min` predictor.
    pub fn predictor(&self) -> f64 {
        self.n_c as f64 * self.omega / self.mu_min
    }
}

/// Cartesian product of the ranges, `n_c` outermost.
pub fn grid_points(n_c: &[usize], omega: &[f64], mu_min: &[f64], h_min: &[f64]) -> Vec<SweepPoint> {
    let mut out = Vec::with_capacity(n_c.len() * omega.len() * mu_min.len() * h_min.len());
    for &n_c in n_c {
        for &omega in omega {
            for &mu_min in mu_min {
                for &h_min in h_min {
                    out.push(SweepPoint { n_c, omega, mu_min, h_min });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub point: SweepPoint,
    /// Recomputed from the point, never read back from input.
    pub plan: Option<ResolutionPlan>,
    pub timings: StageTimings,
    /// Hash of the binary design, for determinism checks.
    pub raster_hash: Option<u64>,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// `n_c² (i_up1 + i_up2)`.
    pub fn work_estimate(&self) -> Option<f64> {
        self.plan.map(|p| p.work_estimate(self.point.n_c))
    }
}

pub fn mask_hash(mask: &Mask) -> u64 {
    let mut h = DefaultHasher::new();
    mask.grid().nx().hash(&mut h);
    mask.grid().ny().hash(&mut h);
    mask.values().hash(&mut h);
    h.finish()
}

/// Synthesise a case at `mu = mu_min` and time one pipeline run on it.
pub fn run_point(kind: SynthKind, point: SweepPoint, base: &PipelineConfig) -> SweepRecord {
    let mut rec = SweepRecord { point, plan: None, timings: StageTimings::default(), raster_hash: None, error: None };
    let mut cfg = base.clone();
    cfg.omega = point.omega;
    cfg.h_min = point.h_min;
    let run = synth(kind, point.n_c, point.mu_min, point.mu_min).and_then(|sol| {
        rec.plan = Some(ResolutionPlan::new(sol.h(), point.omega, point.mu_min, point.h_min)?);
        dehomogenise(&sol, &cfg)
    });
    match run {
        Ok(out) => {
            rec.timings = out.timings;
            rec.raster_hash = Some(mask_hash(&out.raster.solid));
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Run every point in order; failures are recorded and the sweep goes on.
pub fn run_sweep(kind: SynthKind, points: &[SweepPoint], base: &PipelineConfig, mut progress: impl FnMut(&SweepRecord)) -> Vec<SweepRecord> {
    points
        .iter()
        .map(|&p| {
            let r = run_point(kind, p, base);
            progress(&r);
            r
        })
        .collect()
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when fewer than two points or no spread in x or y.
    pub r2: Option<f64>,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return LinearFit { slope: f64::NAN, intercept: y.first().copied().unwrap_or(f64::NAN), r2: None };
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return LinearFit { slope: f64::NAN, intercept: my, r2: None };
    }
    let slope = sxy / sxx;
    let r2 = (syy > 0.0).then(|| sxy * sxy / (sxx * syy));
    LinearFit { slope, intercept: my - slope * mx, r2 }
}

/// Fit of total time against `n_c·ω/μ_min` over the successful records.
pub fn time_fit(records: &[SweepRecord]) -> LinearFit {
    let (x, y): (Vec<f64>, Vec<f64>) = records.iter().filter(|r| r.ok()).map(|r| (r.point.predictor(), r.timings.total_ms)).unzip();
    linear_fit(&x, &y)
}

/// CSV with the fixed header; failed runs keep their parameters and leave
/// the rest empty.
pub fn write_csv(records: &[SweepRecord], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let p = r.point;
        write!(w, "{},{},{},{}", p.n_c, p.omega, p.mu_min, p.h_min)?;
        match (r.plan, r.ok()) {
            (Some(plan), true) => {
                let t = r.timings;
                writeln!(
                    w,
                    ",{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
                    plan.i_up1, plan.i_up2, plan.f_up, t.align_ms, t.sample_ms, t.branch_ms, t.boundary_ms, t.assemble_ms, t.total_ms
                )?;
            }
            (Some(plan), false) => writeln!(w, ",{},{},{},,,,,,", plan.i_up1, plan.i_up2, plan.f_up)?,
            (None, _) => writeln!(w, ",,,,,,,,,")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = linear_fit(&x, &y);
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
        assert!((f.r2.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(linear_fit(&[2.0], &[5.0]).r2, None);
        assert_eq!(linear_fit(&[2.0, 2.0], &[5.0, 6.0]).r2, None);
    }

    #[test]
    fn single_record_sweep() {
        let pts = grid_points(&[8], &[16.0], &[0.2], &[3.0]);
        let recs = run_sweep(SynthKind::Square, &pts, &PipelineConfig::new(16.0), |_| {});
        assert_eq!(recs.len(), 1);
        assert!(recs[0].ok(), "{:?}", recs[0].error);
        assert!(recs[0].timings.total_ms >= 0.0);
        assert_eq!(time_fit(&recs).r2, None);
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn failed_runs_are_recorded() {
        let pts = grid_points(&[4, 8], &[16.0], &[0.2], &[3.0]);
        let recs = run_sweep(SynthKind::Square, &pts, &PipelineConfig::new(16.0), |_| {});
        assert!(!recs[0].ok() && recs[1].ok());
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        for line in String::from_utf8(buf).unwrap().lines() {
            assert_eq!(line.split(',').count(), 13);
        }
    }

    #[test]
    fn repeated_runs_hash_equal() {
        let p = SweepPoint { n_c: 10, omega: 20.0, mu_min: 0.2, h_min: 3.0 };
        let cfg = PipelineConfig::new(20.0);
        let (a, b) = (run_point(SynthKind::Circle, p, &cfg), run_point(SynthKind::Circle, p, &cfg));
        assert!(a.raster_hash.is_some());
        assert_eq!(a.raster_hash, b.raster_hash);
    }
}
