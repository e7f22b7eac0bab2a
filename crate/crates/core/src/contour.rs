//! Marching-squares extraction of closed interface polylines, plus the
//! inverse scanline fill used to check them.
//!
//! Samples sit at element centres; the field is padded with a ring of
//! "outside" values so every curve closes. Polylines keep solid on the left,
//! so outer boundaries run counter-clockwise. In a saddle cell the two solid
//! corners are joined only if the cell-centre mean lies strictly above the
//! level, which keeps diagonal-only contacts separate as in 4-connectivity.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use crate::grid::{Grid, Mask, ScalarField};
use crate::vec2::Vec2;

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    /// Vertices without the repeated closing point.
    pub points: Vec<Vec2>,
}

impl Polyline {
    /// Shoelace area; positive for counter-clockwise loops.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|k| {
                let (a, b) = (self.points[k], self.points[(k + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            * 0.5
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContourSet {
    pub polylines: Vec<Polyline>,
}

impl ContourSet {
    pub fn len(&self) -> usize {
        self.polylines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

/// Edge identifier on the padded sample lattice: horizontal edges join
/// (p, q)–(p+1, q), vertical ones (p, q)–(p, q+1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

/// Level set `field = level`, solid where `field > level`.
pub fn extract_contours(field: &ScalarField, level: f64) -> ContourSet {
    let g = *field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let outside = level - 1.0;
    // Padded lattice of (nx + 2) × (ny + 2) samples.
    let value = |p: usize, q: usize| -> f64 {
        if p == 0 || q == 0 || p > nx || q > ny {
            outside
        } else {
            *field.at(p - 1, q - 1)
        }
    };
    let pos = |p: f64, q: f64| Vec2::new(g.origin().x + (p - 1.0) * g.h(), g.origin().y + (q - 1.0) * g.h());
    let crossing = |e: EdgeKey| -> Vec2 {
        let ((p0, q0), (p1, q1)) = match e {
            EdgeKey::H(p, q) => ((p, q), (p + 1, q)),
            EdgeKey::V(p, q) => ((p, q), (p, q + 1)),
        };
        let (a, b) = (value(p0, q0), value(p1, q1));
        let t = if a == b { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
        pos(p0 as f64 + t * (p1 - p0) as f64, q0 as f64 + t * (q1 - q0) as f64)
    };

    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    let mut order: Vec<EdgeKey> = Vec::new();
    for q in 0..=ny {
        for p in 0..=nx {
            // Corners counter-clockwise from lower-left; edge k joins corner k to k+1.
            let c = [value(p, q), value(p + 1, q), value(p + 1, q + 1), value(p, q + 1)];
            let inside = c.map(|v| v > level);
            let edges = [EdgeKey::H(p, q), EdgeKey::V(p + 1, q), EdgeKey::H(p, q + 1), EdgeKey::V(p, q)];
            let n_in = inside.iter().filter(|&&b| b).count();
            if n_in == 0 || n_in == 4 {
                continue;
            }
            let saddle = n_in == 2 && inside[0] == inside[2];
            let joined = saddle && c.iter().sum::<f64>() / 4.0 > level;
            for k in 0..4 {
                // Solid to void walking counter-clockwise: a curve starts here.
                if !(inside[k] && !inside[(k + 1) % 4]) {
                    continue;
                }
                let end = if joined {
                    // Pair with the next void-to-solid edge counter-clockwise.
                    (1..4).map(|s| (k + s) % 4).find(|&m| !inside[m] && inside[(m + 1) % 4])
                } else {
                    (1..4).map(|s| (k + 4 - s) % 4).find(|&m| !inside[m] && inside[(m + 1) % 4])
                }
                .expect("a start crossing always has a matching end");
                next.insert(edges[k], edges[end]);
                order.push(edges[k]);
            }
        }
    }

    let mut polylines = Vec::new();
    let mut used: HashSet<EdgeKey> = HashSet::with_capacity(next.len());
    for &start in &order {
        if used.contains(&start) {
            continue;
        }
        let mut points = Vec::new();
        let mut e = start;
        loop {
            used.insert(e);
            points.push(crossing(e));
            e = next[&e];
            if e == start {
                break;
            }
        }
        polylines.push(Polyline { points });
    }
    ContourSet { polylines }
}

/// Contours of a binary raster at 0.5.
pub fn extract_mask_contours(mask: &Mask) -> ContourSet {
    extract_contours(&mask.to_scalar(), 0.5)
}

/// Scanline fill with the nonzero rule, sampling element centres.
pub fn rasterise(set: &ContourSet, grid: &Grid) -> Mask {
    let ny = grid.ny();
    let mut rows: Vec<Vec<(f64, i32)>> = vec![Vec::new(); ny];
    for pl in &set.polylines {
        let n = pl.points.len();
        for k in 0..n {
            let (a, b) = (pl.points[k], pl.points[(k + 1) % n]);
            if a.y == b.y {
                continue;
            }
            let (lo, hi, dir) = if a.y < b.y { (a, b, 1) } else { (b, a, -1) };
            let (v0, v1) = (grid.to_index_space(lo).1, grid.to_index_space(hi).1);
            let j0 = v0.ceil().max(0.0) as usize;
            let mut j = j0;
            // Half-open in y so shared vertices count once.
            while j < ny && (j as f64) < v1 {
                let y = grid.centre(0, j).y;
                let t = (y - lo.y) / (hi.y - lo.y);
                rows[j].push((lo.x + t * (hi.x - lo.x), dir));
                j += 1;
            }
        }
    }
    let mut out = Mask::filled(*grid, false);
    for (j, xs) in rows.iter_mut().enumerate() {
        xs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut wind = 0;
        let mut k = 0;
        for i in 0..grid.nx() {
            let x = grid.centre(i, j).x;
            while k < xs.len() && xs[k].0 <= x {
                wind += xs[k].1;
                k += 1;
            }
            if wind != 0 {
                out.values_mut()[grid.index(i, j)] = true;
            }
        }
    }
    out
}

/// One `<path>` per polyline in physical coordinates, y up through a flip.
pub fn write_svg(set: &ContourSet, grid: &Grid, mut w: impl Write) -> io::Result<()> {
    let ll = grid.lower_left();
    let (wd, ht) = (grid.width(), grid.height());
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        ll.x,
        -(ll.y + ht),
        wd,
        ht,
        grid.nx(),
        grid.ny()
    )?;
    writeln!(w, r#"<g transform="scale(1,-1)" fill="black" fill-rule="nonzero" stroke="none">"#)?;
    for pl in &set.polylines {
        write!(w, "<path d=\"")?;
        for (k, p) in pl.points.iter().enumerate() {
            write!(w, "{}{:.6} {:.6}", if k == 0 { "M" } else { " L" }, p.x, p.y)?;
        }
        writeln!(w, " Z\"/>")?;
    }
    writeln!(w, "</g>")?;
    writeln!(w, "</svg>")
}
