//! Oriented distances and small analytic helpers.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::vec2::Vec2;

/// Directional weights of the oriented distance: `r1` scales the component
/// along the stripes, `r2` the component along the wave vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    pub r1: f64,
    pub r2: f64,
}

impl Anisotropy {
    pub const ISOTROPIC: Anisotropy = Anisotropy { r1: 1.0, r2: 1.0 };
    /// Default lamination anisotropy (1/π, π).
    pub const LAMINATION: Anisotropy = Anisotropy { r1: 1.0 / PI, r2: PI };

    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite() {
            Ok(Anisotropy { r1, r2 })
        } else {
            Err(Error::InvalidArgument(format!("anisotropy weights must be positive, got ({r1}, {r2})")))
        }
    }

    /// Blend towards isotropy: `t = 0` keeps `(r, 1/r)`, `t = 1` gives `(1, 1)`.
    pub fn blended(base_r: f64, t: f64) -> Self {
        Anisotropy { r1: base_r * (1.0 - t) + t, r2: (1.0 - t) / base_r + t }
    }
}

/// Wave-vector direction for an orientation angle.
#[inline]
pub fn direction(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), -theta.sin())
}

/// Direction along the stripes for an orientation angle (orthogonal to [`direction`]).
#[inline]
pub fn stripe_direction(theta: f64) -> Vec2 {
    Vec2::new(theta.sin(), theta.cos())
}

/// Squared oriented distance.
#[inline]
pub fn aniso_norm_sq(v: Vec2, theta: f64, a: Anisotropy) -> f64 {
    let (s, c) = theta.sin_cos();
    let p = a.r1 * (s * v.x + c * v.y);
    let q = a.r2 * (-c * v.x + s * v.y);
    p * p + q * q
}

/// Norm of `[[r1 sinθ, r1 cosθ], [−r2 cosθ, r2 sinθ]] · v`.
#[inline]
pub fn aniso_norm(v: Vec2, theta: f64, a: Anisotropy) -> f64 {
    let (s, c) = theta.sin_cos();
    (a.r1 * (s * v.x + c * v.y)).hypot(a.r2 * (-c * v.x + s * v.y))
}

#[inline]
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Inclusive step: 1 when `delta >= eta`.
#[inline]
pub fn heaviside(delta: f64, eta: f64) -> f64 {
    if delta >= eta {
        1.0
    } else {
        0.0
    }
}

/// Triangular density of a phase value.
#[inline]
pub fn triangular(phi: f64) -> f64 {
    (phi.sin().asin() / PI + 0.5).clamp(0.0, 1.0)
}

pub fn to_triangular(phase: &ScalarField) -> ScalarField {
    phase.map(|&p| triangular(p))
}

/// Wrap into [−π, π).
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Argument in [−π, π] with the negative real axis mapped to +π.
#[inline]
pub fn arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a == -PI {
        PI
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aniso_norm_examples() {
        let lam = Anisotropy::LAMINATION;
        assert!((aniso_norm(Vec2::new(1.0, 0.0), 0.0, Anisotropy::ISOTROPIC) - 1.0).abs() < 1e-15);
        assert!((aniso_norm(Vec2::new(0.0, 1.0), 0.0, lam) - 1.0 / PI).abs() < 1e-15);
        assert!((aniso_norm(Vec2::new(1.0, 0.0), 0.0, lam) - PI).abs() < 1e-15);
    }

    #[test]
    fn aniso_norm_splits_along_stripes_and_wave() {
        let a = Anisotropy::new(0.3, 2.5).unwrap();
        let theta = 0.7;
        let v = Vec2::new(0.4, -1.3);
        let along = v.dot(stripe_direction(theta));
        let across = v.dot(direction(theta));
        let expect = ((a.r1 * along).powi(2) + (a.r2 * across).powi(2)).sqrt();
        assert!((aniso_norm(v, theta, a) - expect).abs() < 1e-14);
        assert!((aniso_norm_sq(v, theta, a) - expect * expect).abs() < 1e-13);
    }

    #[test]
    fn helper_examples() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(1.5), 1.0);
        assert_eq!(heaviside(0.99, 0.99), 1.0);
        assert_eq!(heaviside(0.5, 0.99), 0.0);
        assert_eq!(heaviside(-1.0, 0.0), 0.0);
        assert!((triangular(PI / 2.0) - 1.0).abs() < 1e-15);
        assert!((triangular(0.0) - 0.5).abs() < 1e-15);
        assert!(triangular(-PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
        assert_eq!(arg(Complex64::new(-1.0, -0.0)), PI);
        assert_eq!(arg(Complex64::new(0.0, 1.0)), PI / 2.0);
        assert_eq!(arg(Complex64::new(1.0, 0.0)), 0.0);
    }

    #[test]
    fn blend_endpoints() {
        assert_eq!(Anisotropy::blended(1.0 / PI, 1.0), Anisotropy::ISOTROPIC);
        let b = Anisotropy::blended(1.0 / PI, 0.0);
        assert!((b.r1 - 1.0 / PI).abs() < 1e-15 && (b.r2 - PI).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn aniso_norm_is_homogeneous(x in -10.0..10.0f64, y in -10.0..10.0f64, th in -PI..PI,
                                      r1 in 0.05..5.0f64, r2 in 0.05..5.0f64, c in -20.0..20.0f64) {
            let a = Anisotropy::new(r1, r2).unwrap();
            let v = Vec2::new(x, y);
            let lhs = aniso_norm(v * c, th, a);
            let rhs = c.abs() * aniso_norm(v, th, a);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn isotropic_norm_is_euclidean(x in -10.0..10.0f64, y in -10.0..10.0f64, th in -PI..PI) {
            let v = Vec2::new(x, y);
            prop_assert!((aniso_norm(v, th, Anisotropy::ISOTROPIC) - v.norm()).abs() < 1e-12);
        }

        #[test]
        fn triangular_is_periodic_and_complementary(phi in -10.0..10.0f64) {
            prop_assert!((triangular(phi) - triangular(phi + TAU)).abs() < 1e-9);
            prop_assert!((triangular(phi) + triangular(phi + PI) - 1.0).abs() < 1e-9);
            let r = triangular(phi);
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn smoothstep_is_symmetric(t in 0.0..=1.0f64) {
            prop_assert!((smoothstep(t) + smoothstep(1.0 - t) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn wrap_lands_in_range(a in -100.0..100.0f64) {
            let w = wrap_angle(a);
            prop_assert!((-PI..PI).contains(&w));
            prop_assert!(((w - a) / TAU - ((w - a) / TAU).round()).abs() < 1e-9);
        }
    }
}
