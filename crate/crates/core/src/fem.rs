//! Bilinear-quad plane-stress compliance on a structured element grid.
//!
//! Nodes are the element corners, numbered `b * (nx + 1) + a`. Each node owns
//! two dofs (x then y). Element nodes go counter-clockwise from lower-left.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};
use rayon::prelude::*;

use crate::bc::{BcSpec, NodeLattice};
use crate::error::{Error, Result};
use crate::grid::{Mask, ScalarField};

pub type ElementMatrix = [[f64; 8]; 8];

/// Unit-modulus stiffness of a square element (size independent in 2-D).
pub fn element_stiffness(nu: f64) -> ElementMatrix {
    let k = [
        0.5 - nu / 6.0,
        0.125 + nu / 8.0,
        -0.25 - nu / 12.0,
        -0.125 + 3.0 * nu / 8.0,
        -0.25 + nu / 12.0,
        -0.125 - nu / 8.0,
        nu / 6.0,
        0.125 - 3.0 * nu / 8.0,
    ];
    const IDX: [[usize; 8]; 8] = [
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ];
    let s = 1.0 / (1.0 - nu * nu);
    let mut ke = [[0.0; 8]; 8];
    for r in 0..8 {
        for c in 0..8 {
            ke[r][c] = s * k[IDX[r][c]];
        }
    }
    ke
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeResult {
    /// fᵀu.
    pub compliance: f64,
    /// Mean density.
    pub volume: f64,
    pub dofs: usize,
}

/// Resolved loads and supports on the node lattice.
#[derive(Clone, Debug)]
pub struct NodalBc {
    pub force: Vec<f64>,
    pub fixed: Vec<bool>,
}

impl NodalBc {
    /// Supports apply to every selected node. Each load is spread over the
    /// selected nodes for which `carries` holds; a load with no such node is
    /// an error.
    pub fn resolve(bc: &BcSpec, nodes: &NodeLattice, carries: impl Fn(usize) -> bool) -> Result<Self> {
        let n = nodes.len();
        let mut force = vec![0.0; 2 * n];
        let mut fixed = vec![false; 2 * n];
        for s in &bc.fixed {
            for (id, _) in s.region.nodes(nodes) {
                fixed[2 * id] |= s.dofs.fixes_x();
                fixed[2 * id + 1] |= s.dofs.fixes_y();
            }
        }
        for (k, l) in bc.loads.iter().enumerate() {
            let sel: Vec<(usize, f64)> = l.region.nodes(nodes).into_iter().filter(|&(id, _)| carries(id)).collect();
            let total: f64 = sel.iter().map(|s| s.1).sum();
            if total <= 0.0 {
                if l.f != [0.0, 0.0] {
                    return Err(Error::Singular(format!("load {k} touches no material")));
                }
                continue;
            }
            for (id, w) in sel {
                force[2 * id] += l.f[0] * w / total;
                force[2 * id + 1] += l.f[1] * w / total;
            }
        }
        Ok(NodalBc { force, fixed })
    }
}

/// Element moduli `E_void + ρ (E − E_void)`.
fn moduli(density: &ScalarField, bc: &BcSpec) -> Vec<f64> {
    let (e, ev) = (bc.e, bc.e_void());
    density.values().iter().map(|&r| ev + r.clamp(0.0, 1.0) * (e - ev)).collect()
}

/// Lower triangle of the global stiffness in compressed-column form, over
/// the free dofs given by `map` (`u32::MAX` marks a fixed dof).
fn assemble_lower(
    nodes: &NodeLattice,
    emod: &[f64],
    ke: &ElementMatrix,
    map: &[u32],
    nfree: usize,
) -> (Vec<u32>, Vec<u32>, Vec<f64>) {
    let (na, nb) = (nodes.na, nodes.nb);
    let (nx, ny) = (na - 1, nb - 1);
    // Local corner index of node (a, b) in element (i, j), counter-clockwise.
    let local = |a: usize, b: usize, i: usize, j: usize| match (a - i, b - j) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        _ => 3,
    };
    let columns: Vec<(Vec<u32>, Vec<f64>)> = (0..nodes.len())
        .into_par_iter()
        .flat_map_iter(|id| {
            let (a, b) = (id % na, id / na);
            (0..2).map(move |cn| (id, a, b, cn))
        })
        .filter(|&(id, _, _, cn)| map[2 * id + cn] != u32::MAX)
        .map(|(_, a, b, cn)| {
            let col = map[2 * (b * na + a) + cn];
            let mut rows = Vec::with_capacity(18);
            let mut vals = Vec::with_capacity(18);
            for mb in b.saturating_sub(1)..=(b + 1).min(nb - 1) {
                for ma in a.saturating_sub(1)..=(a + 1).min(na - 1) {
                    // Elements shared by both nodes.
                    let (i0, i1) = (a.max(ma).saturating_sub(1), a.min(ma).min(nx - 1));
                    let (j0, j1) = (b.max(mb).saturating_sub(1), b.min(mb).min(ny - 1));
                    for cm in 0..2 {
                        let r = map[2 * (mb * na + ma) + cm];
                        if r == u32::MAX || r < col {
                            continue;
                        }
                        let mut v = 0.0;
                        for j in j0..=j1 {
                            for i in i0..=i1 {
                                let (ln, lm) = (local(a, b, i, j), local(ma, mb, i, j));
                                v += emod[j * nx + i] * ke[2 * ln + cn][2 * lm + cm];
                            }
                        }
                        rows.push(r);
                        vals.push(v);
                    }
                }
            }
            (rows, vals)
        })
        .collect();
    debug_assert_eq!(columns.len(), nfree);
    let mut col_ptr = Vec::with_capacity(nfree + 1);
    col_ptr.push(0u32);
    let nnz: usize = columns.iter().map(|c| c.0.len()).sum();
    let mut row_idx = Vec::with_capacity(nnz);
    let mut val = Vec::with_capacity(nnz);
    for (r, v) in columns {
        row_idx.extend(r);
        val.extend(v);
        col_ptr.push(row_idx.len() as u32);
    }
    (col_ptr, row_idx, val)
}

/// Compliance of a density field (binary masks map to E and E_void).
pub fn compliance(density: &ScalarField, bc: &BcSpec) -> Result<FeResult> {
    bc.validate("bc")?;
    let grid = *density.grid();
    let nodes = NodeLattice::of(&grid);
    let ndof = 2 * nodes.len();
    if ndof >= u32::MAX as usize {
        return Err(Error::InvalidArgument(format!("{ndof} dofs exceed the solver index range")));
    }
    let solid_node = |id: usize| nodes.adjacent_elements(id).any(|(i, j)| *density.at(i, j) > 0.0);
    let nbc = NodalBc::resolve(bc, &nodes, solid_node)?;
    let nfixed = nbc.fixed.iter().filter(|&&f| f).count();
    if nfixed < 3 {
        return Err(Error::Singular(format!("only {nfixed} constrained dofs")));
    }
    let mut map = vec![u32::MAX; ndof];
    let mut nfree = 0usize;
    for (d, m) in map.iter_mut().enumerate() {
        if !nbc.fixed[d] {
            *m = nfree as u32;
            nfree += 1;
        }
    }
    let volume = density.mean();
    if nfree == 0 {
        return Ok(FeResult { compliance: 0.0, volume, dofs: 0 });
    }

    let emod = moduli(density, bc);
    let ke = element_stiffness(bc.nu);
    let (col_ptr, row_idx, val) = assemble_lower(&nodes, &emod, &ke, &map, nfree);
    let symbolic = SymbolicSparseColMat::new_checked(nfree, nfree, col_ptr, None, row_idx);
    let k = SparseColMat::new(symbolic, val);
    let llt = k
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Singular(format!("stiffness not positive definite ({e:?})")))?;

    let mut rhs = Mat::<f64>::zeros(nfree, 1);
    for d in 0..ndof {
        if map[d] != u32::MAX {
            rhs[(map[d] as usize, 0)] = nbc.force[d];
        }
    }
    let u = llt.solve(&rhs);
    let c: f64 = (0..nfree).map(|r| rhs[(r, 0)] * u[(r, 0)]).sum();
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Singular(format!("solve produced compliance {c}")));
    }
    Ok(FeResult { compliance: c, volume, dofs: nfree })
}

pub fn compliance_mask(mask: &Mask, bc: &BcSpec) -> Result<FeResult> {
    compliance(&mask.to_scalar(), bc)
}
