//! Choice of the intermediate and fine upscaling factors.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack so that products such as 0.8/0.1 = 7.999… do not round up.
const EPS: f64 = 1e-9;

/// Default cap on fine raster pixels.
pub const DEFAULT_PIXEL_CAP: usize = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolutionPlan {
    pub omega: f64,
    pub h_c: f64,
    pub mu_min: f64,
    pub h_min: f64,
    pub i_up1: usize,
    pub i_up2: usize,
    pub f_up: usize,
    /// `f_up · i_up2`, coarse element to fine pixel.
    pub f_total: usize,
    /// Pixels per wavelength on the second intermediate grid.
    pub omega_hat_px: f64,
}

fn ceil_int(x: f64) -> usize {
    ((x - EPS).ceil() as usize).max(1)
}

impl ResolutionPlan {
    /// Smallest factors meeting the sampling, thickness and feature-size bounds.
    pub fn new(h_c: f64, omega: f64, mu_min: f64, h_min: f64) -> Result<Self> {
        for (name, v) in [("h_c", h_c), ("omega", omega), ("mu_min", mu_min), ("h_min", h_min)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let w = h_c * omega;
        let i_up1 = ceil_int(w / 0.1);
        let need2 = ceil_int(2.0 * w / mu_min).max(i_up1);
        let i_up2 = need2.div_ceil(i_up1) * i_up1;
        let omega_hat_px = i_up2 as f64 / w;
        let f_up = ceil_int(h_min / (omega_hat_px * mu_min));
        Ok(ResolutionPlan { omega, h_c, mu_min, h_min, i_up1, i_up2, f_up, f_total: f_up * i_up2, omega_hat_px })
    }

    /// Factor from the first to the second intermediate grid.
    pub fn i_ratio(&self) -> usize {
        self.i_up2 / self.i_up1
    }

    pub fn h_i1(&self) -> f64 {
        self.h_c / self.i_up1 as f64
    }

    pub fn h_i2(&self) -> f64 {
        self.h_c / self.i_up2 as f64
    }

    pub fn h_f(&self) -> f64 {
        self.h_c / self.f_total as f64
    }

    /// Wavelength in fine pixels.
    pub fn wavelength_px(&self) -> f64 {
        1.0 / (self.omega * self.h_f())
    }

    /// Fine-grid dimensions for an `nx × ny` coarse grid, rejecting plans over `cap` pixels.
    pub fn check_memory(&self, nx: usize, ny: usize, cap: usize) -> Result<(usize, usize)> {
        let (fx, fy) = (nx * self.f_total, ny * self.f_total);
        let pixels = fx * fy;
        if pixels > cap {
            return Err(Error::MemoryCap { pixels, cap, nx, ny, f_total: self.f_total });
        }
        Ok((fx, fy))
    }

    /// Complexity predictor `n_c² (i_up1 + i_up2)`.
    pub fn work_estimate(&self, n_c: usize) -> f64 {
        (n_c * n_c * (self.i_up1 + self.i_up2)) as f64
    }
}

impl std::fmt::Display for ResolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "omega={} h_c={} mu_min={} h_min={}: i_up1={} i_up2={} f_up={} F_up={} ({:.2} px/wavelength on i_up2, {:.2} on fine)",
            self.omega,
            self.h_c,
            self.mu_min,
            self.h_min,
            self.i_up1,
            self.i_up2,
            self.f_up,
            self.f_total,
            self.omega_hat_px,
            self.wavelength_px()
        )
    }
}

/// Relative periodicity on a grid of spacing `h`: `1 / (ω h)` pixels per wavelength.
pub fn epsilon(omega: f64, h: f64) -> f64 {
    1.0 / (omega * h)
}

/// Frequency giving `eps` pixels per wavelength on spacing `h`.
pub fn omega_from_epsilon(eps: f64, h: f64) -> f64 {
    1.0 / (eps * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_factors() {
        // h_c·ω = 0.8 in every row.
        for (mu, i1, i2) in [(0.05, 8, 32), (0.10, 8, 16), (0.20, 8, 8)] {
            let p = ResolutionPlan::new(0.02, 40.0, mu, 3.0).unwrap();
            assert_eq!((p.i_up1, p.i_up2), (i1, i2), "mu_min {mu}");
        }
    }

    #[test]
    fn fine_factor_resolves_min_feature() {
        let p = ResolutionPlan::new(0.025, 30.0, 0.1, 3.0).unwrap();
        assert_eq!((p.i_up1, p.i_up2), (8, 16));
        // 16 / 0.75 px per wavelength × 0.1 ≈ 2.13 px < 3 → double.
        assert_eq!(p.f_up, 2);
        assert_eq!(p.f_total, 32);
    }

    #[test]
    fn memory_cap_reports_sizes() {
        let p = ResolutionPlan::new(0.025, 30.0, 0.1, 3.0).unwrap();
        assert_eq!(p.check_memory(40, 40, DEFAULT_PIXEL_CAP).unwrap(), (1280, 1280));
        match p.check_memory(40, 40, 1000) {
            Err(Error::MemoryCap { pixels, f_total, .. }) => assert_eq!((pixels, f_total), (1280 * 1280, 32)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(ResolutionPlan::new(0.0, 30.0, 0.1, 3.0).is_err());
        assert!(ResolutionPlan::new(0.1, 30.0, -0.1, 3.0).is_err());
    }

    #[test]
    fn epsilon_round_trip() {
        let e = epsilon(30.0, 0.01);
        assert!((omega_from_epsilon(e, 0.01) - 30.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn plan_invariants(w in 0.05..3.0f64, mu in 0.02..0.5f64, hmin in 1.0..6.0f64) {
            let h_c = 0.05;
            let p = ResolutionPlan::new(h_c, w / h_c, mu, hmin).unwrap();
            let wc = h_c * p.omega;
            prop_assert!(p.i_up1 as f64 >= wc / 0.1 - 1e-6);
            prop_assert!(p.i_up2 as f64 >= 2.0 * wc / mu - 1e-6);
            prop_assert!(p.i_up2 >= p.i_up1);
            prop_assert_eq!(p.i_up2 % p.i_up1, 0);
            prop_assert!(p.f_up as f64 * p.omega_hat_px * mu >= hmin - 1e-6);
            // Minimality.
            prop_assert!(p.i_up1 == 1 || ((p.i_up1 - 1) as f64) < wc / 0.1 + 1e-6);
            prop_assert!(p.f_up == 1 || ((p.f_up - 1) as f64) * p.omega_hat_px * mu < hmin + 1e-6);
        }
    }
}
