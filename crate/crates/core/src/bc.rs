//! Boundary-condition block of a case file and its resolution onto FE nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dofs {
    #[default]
    Xy,
    X,
    Y,
}

impl Dofs {
    pub fn fixes_x(self) -> bool {
        matches!(self, Dofs::Xy | Dofs::X)
    }

    pub fn fixes_y(self) -> bool {
        matches!(self, Dofs::Xy | Dofs::Y)
    }
}

/// Node selector: exactly one of `edge`, `box` (x0, y0, x1, y1), `disc`
/// (cx, cy, r), `ring` (cx, cy, r_in, r_out) or `at` (nearest node).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub area: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disc: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[f64; 2]>,
}

impl Region {
    pub fn edge(e: Edge) -> Self {
        Region { edge: Some(e), ..Default::default() }
    }

    pub fn area(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Region { area: Some([x0, y0, x1, y1]), ..Default::default() }
    }

    pub fn disc(cx: f64, cy: f64, r: f64) -> Self {
        Region { disc: Some([cx, cy, r]), ..Default::default() }
    }

    pub fn ring(cx: f64, cy: f64, r_in: f64, r_out: f64) -> Self {
        Region { ring: Some([cx, cy, r_in, r_out]), ..Default::default() }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Region { at: Some([x, y]), ..Default::default() }
    }

    fn validate(&self, path: &str) -> Result<()> {
        let set = [self.edge.is_some(), self.area.is_some(), self.disc.is_some(), self.ring.is_some(), self.at.is_some()];
        if set.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::case(path, "exactly one of `edge`, `box`, `disc`, `ring`, `at` is required"));
        }
        let finite = self
            .area
            .iter()
            .flatten()
            .chain(self.disc.iter().flatten())
            .chain(self.ring.iter().flatten())
            .chain(self.at.iter().flatten());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::case(path, "coordinates must be finite"));
        }
        Ok(())
    }

    /// Selected nodes of a node lattice, with the weights used to spread a
    /// total load (trapezoidal along edges, uniform otherwise).
    pub fn nodes(&self, nodes: &NodeLattice) -> Vec<(usize, f64)> {
        let (na, nb) = (nodes.na, nodes.nb);
        let tol = 1e-9 * nodes.h;
        if let Some(e) = self.edge {
            let line: Vec<usize> = match e {
                Edge::Left => (0..nb).map(|b| nodes.id(0, b)).collect(),
                Edge::Right => (0..nb).map(|b| nodes.id(na - 1, b)).collect(),
                Edge::Bottom => (0..na).map(|a| nodes.id(a, 0)).collect(),
                Edge::Top => (0..na).map(|a| nodes.id(a, nb - 1)).collect(),
            };
            let n = line.len();
            return line
                .into_iter()
                .enumerate()
                .map(|(k, id)| (id, if n > 1 && (k == 0 || k == n - 1) { 0.5 } else { 1.0 }))
                .collect();
        }
        if let Some([x, y]) = self.at {
            return vec![(nodes.nearest(Vec2::new(x, y)), 1.0)];
        }
        let inside: Box<dyn Fn(Vec2) -> bool> = if let Some([x0, y0, x1, y1]) = self.area {
            Box::new(move |p: Vec2| p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol)
        } else if let Some([cx, cy, r]) = self.disc {
            Box::new(move |p: Vec2| (p - Vec2::new(cx, cy)).norm() <= r + tol)
        } else if let Some([cx, cy, r0, r1]) = self.ring {
            Box::new(move |p: Vec2| {
                let d = (p - Vec2::new(cx, cy)).norm();
                d >= r0 - tol && d <= r1 + tol
            })
        } else {
            unreachable!("validated region")
        };
        (0..nodes.len()).filter(|&id| inside(nodes.position(id))).map(|id| (id, 1.0)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    #[serde(flatten)]
    pub region: Region,
    #[serde(default)]
    pub dofs: Dofs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Load {
    #[serde(flatten)]
    pub region: Region,
    /// Total force applied over the selected nodes.
    pub f: [f64; 2],
}

fn default_e() -> f64 {
    1.0
}

fn default_nu() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcSpec {
    #[serde(default)]
    pub fixed: Vec<Support>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(rename = "E", default = "default_e")]
    pub e: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Void stiffness relative to `E`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_void_rel: Option<f64>,
}

impl BcSpec {
    pub const DEFAULT_VOID_REL: f64 = 1e-9;

    pub fn new(fixed: Vec<Support>, loads: Vec<Load>) -> Self {
        BcSpec { fixed, loads, e: 1.0, nu: 0.3, e_void_rel: None }
    }

    pub fn e_void(&self) -> f64 {
        self.e * self.e_void_rel.unwrap_or(Self::DEFAULT_VOID_REL)
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.e > 0.0 && self.e.is_finite()) {
            return Err(Error::case(format!("{path}.E"), "Young's modulus must be positive"));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(Error::case(format!("{path}.nu"), "Poisson ratio must lie in (-1, 0.5)"));
        }
        if let Some(r) = self.e_void_rel {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::case(format!("{path}.e_void_rel"), "must lie in (0, 1]"));
            }
        }
        for (k, s) in self.fixed.iter().enumerate() {
            s.region.validate(&format!("{path}.fixed[{k}]"))?;
        }
        for (k, l) in self.loads.iter().enumerate() {
            l.region.validate(&format!("{path}.loads[{k}]"))?;
            if !(l.f[0].is_finite() && l.f[1].is_finite()) {
                return Err(Error::case(format!("{path}.loads[{k}].f"), "load must be finite"));
            }
        }
        Ok(())
    }
}

/// Corner nodes of a grid's elements, `na = nx + 1` by `nb = ny + 1`.
#[derive(Clone, Copy, Debug)]
pub struct NodeLattice {
    pub na: usize,
    pub nb: usize,
    pub h: f64,
    pub corner: Vec2,
}

impl NodeLattice {
    pub fn of(grid: &Grid) -> Self {
        NodeLattice { na: grid.nx() + 1, nb: grid.ny() + 1, h: grid.h(), corner: grid.lower_left() }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.na * self.nb
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn id(&self, a: usize, b: usize) -> usize {
        b * self.na + a
    }

    #[inline]
    pub fn position(&self, id: usize) -> Vec2 {
        let (a, b) = (id % self.na, id / self.na);
        Vec2::new(self.corner.x + a as f64 * self.h, self.corner.y + b as f64 * self.h)
    }

    pub fn nearest(&self, p: Vec2) -> usize {
        let a = ((p.x - self.corner.x) / self.h).round().clamp(0.0, (self.na - 1) as f64) as usize;
        let b = ((p.y - self.corner.y) / self.h).round().clamp(0.0, (self.nb - 1) as f64) as usize;
        self.id(a, b)
    }

    /// Elements (i, j) touching a node.
    pub fn adjacent_elements(&self, id: usize) -> impl Iterator<Item = (usize, usize)> {
        let (a, b) = (id % self.na, id / self.na);
        let (nx, ny) = (self.na - 1, self.nb - 1);
        [(a.wrapping_sub(1), b.wrapping_sub(1)), (a, b.wrapping_sub(1)), (a.wrapping_sub(1), b), (a, b)]
            .into_iter()
            .filter(move |&(i, j)| i < nx && j < ny)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_selectors() {
        let js = r#"{"fixed":[{"edge":"bottom","dofs":"y"},{"at":[0,0]}],
                     "loads":[{"edge":"top","f":[0,-1]}],"E":2.0,"nu":0.25}"#;
        let bc: BcSpec = serde_json::from_str(js).unwrap();
        bc.validate("bc").unwrap();
        assert_eq!(bc.fixed[0].dofs, Dofs::Y);
        assert_eq!(bc.fixed[1].dofs, Dofs::Xy);
        assert_eq!(bc.e, 2.0);
        let back: BcSpec = serde_json::from_str(&serde_json::to_string(&bc).unwrap()).unwrap();
        assert_eq!(back, bc);
    }

    #[test]
    fn rejects_ambiguous_region() {
        let bc = BcSpec::new(
            vec![Support { region: Region { edge: Some(Edge::Left), at: Some([0.0, 0.0]), ..Default::default() }, dofs: Dofs::Xy }],
            vec![],
        );
        assert!(bc.validate("bc").is_err());
    }

    #[test]
    fn edge_weights_are_trapezoidal() {
        let g = Grid::with_corner_at_origin(4, 2, 0.25).unwrap();
        let nl = NodeLattice::of(&g);
        let top = Region::edge(Edge::Top).nodes(&nl);
        assert_eq!(top.len(), 5);
        let total: f64 = top.iter().map(|t| t.1).sum();
        assert_eq!(total, 4.0);
        assert!(top.iter().all(|&(id, _)| (nl.position(id).y - 0.5).abs() < 1e-12));
        let boxed = Region::area(0.0, 0.0, 0.25, 0.25).nodes(&nl);
        assert_eq!(boxed.len(), 4);
        assert_eq!(nl.adjacent_elements(nl.id(0, 0)).count(), 1);
        assert_eq!(nl.adjacent_elements(nl.id(2, 1)).count(), 4);
    }
}
