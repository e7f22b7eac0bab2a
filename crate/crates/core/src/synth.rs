//! Synthetic single-layer cases on the unit square.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::bc::{BcSpec, Dofs, Edge, Load, Region, Support};
use crate::case::{CoarseSolution, Layer};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::math::wrap_angle;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Uniform θ = 0 (stripes along y), uniaxial load along the stripes.
    Stripes,
    /// Radial stripes about the centre over the full square.
    Square,
    /// Radial stripes inside the inscribed disc, void outside.
    Circle,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stripes" => Ok(SynthKind::Stripes),
            "square" => Ok(SynthKind::Square),
            "circle" => Ok(SynthKind::Circle),
            other => Err(Error::InvalidArgument(format!("unknown synthetic case `{other}` (stripes, square, circle)"))),
        }
    }
}

pub const CENTRE: (f64, f64) = (0.5, 0.5);

/// Disc radius for an `n_c` grid: inscribed, inset by 3/4 of an element so
/// the disc never reaches the domain edge.
pub fn disc_radius(n_c: usize) -> f64 {
    0.5 - 0.75 / n_c as f64
}

/// Orientation whose wave vector is tangential to circles about the centre.
pub fn radial_theta(x: f64, y: f64) -> f64 {
    wrap_angle(-((y - CENTRE.1).atan2(x - CENTRE.0) + 0.5 * PI))
}

/// Build a case with uniform thickness `mu` on an `n_c × n_c` grid.
pub fn synth(kind: SynthKind, n_c: usize, mu: f64, mu_min: f64) -> Result<CoarseSolution> {
    if n_c < 8 {
        return Err(Error::InvalidArgument(format!("n_c must be at least 8, got {n_c}")));
    }
    if !(mu_min > 0.0 && mu_min < 1.0) || !(mu >= mu_min && mu <= 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < mu_min <= mu <= 1, got mu={mu}, mu_min={mu_min}")));
    }
    let h = 1.0 / n_c as f64;
    let grid = Grid::with_corner_at_origin(n_c, n_c, h)?;
    let (cx, cy) = CENTRE;
    let radius = disc_radius(n_c);
    let layer = match kind {
        SynthKind::Stripes => Layer { mu: ScalarField::filled(grid, mu), theta: ScalarField::filled(grid, 0.0) },
        SynthKind::Square | SynthKind::Circle => {
            let theta = ScalarField::from_fn(grid, |i, j| {
                let p = grid.centre(i, j);
                radial_theta(p.x, p.y)
            });
            let mu = ScalarField::from_fn(grid, |i, j| {
                let p = grid.centre(i, j);
                let inside = kind == SynthKind::Square || (p.x - cx).hypot(p.y - cy) <= radius;
                if inside { mu } else { 0.0 }
            });
            Layer { mu, theta }
        }
    };
    let bc = match kind {
        SynthKind::Stripes => BcSpec::new(
            vec![Support { region: Region::edge(Edge::Bottom), dofs: Dofs::Xy }],
            vec![Load { region: Region::edge(Edge::Top), f: [0.0, 1.0] }],
        ),
        SynthKind::Square => BcSpec::new(
            vec![Support { region: Region::edge(Edge::Left), dofs: Dofs::Xy }],
            vec![Load { region: Region::area(1.0 - h, 0.5 - h, 1.0, 0.5 + h), f: [0.0, -1.0] }],
        ),
        SynthKind::Circle => BcSpec::new(
            vec![Support { region: Region::ring(cx, cy, radius - 2.0 * h, radius), dofs: Dofs::Xy }],
            vec![Load { region: Region::disc(cx, cy, 0.1), f: [0.0, -1.0] }],
        ),
    };
    CoarseSolution::new(grid, mu_min, vec![layer], Some(bc))
}
