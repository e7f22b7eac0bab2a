//! Case files, indicator fields and phasor kernel construction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bc::BcSpec;
use crate::error::{Error, Result};
use crate::filter::{mean3, Padding};
use crate::grid::{Grid, ScalarField};
use crate::math::{direction, wrap_angle, Anisotropy};
use crate::vec2::Vec2;

/// Total thickness at or above which an element counts as solid.
pub const SOLID_SUM: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub mu: ScalarField,
    pub theta: ScalarField,
}

/// Homogenised input: per-layer thickness and orientation on the coarse grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseSolution {
    grid: Grid,
    mu_min: f64,
    layers: Vec<Layer>,
    bc: Option<BcSpec>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    theta: Vec<f64>,
    mu: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CaseFile {
    nx: usize,
    ny: usize,
    h: f64,
    mu_min: f64,
    layers: Vec<LayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bc: Option<BcSpec>,
}

impl CoarseSolution {
    pub fn new(grid: Grid, mu_min: f64, layers: Vec<Layer>, bc: Option<BcSpec>) -> Result<Self> {
        if !(mu_min > 0.0 && mu_min < 1.0) {
            return Err(Error::case("mu_min", format!("must lie in (0, 1), got {mu_min}")));
        }
        if layers.is_empty() {
            return Err(Error::case("layers", "at least one layer is required"));
        }
        for (l, layer) in layers.iter().enumerate() {
            if *layer.mu.grid() != grid || *layer.theta.grid() != grid {
                return Err(Error::case(format!("layers[{l}]"), "layer grid differs from the case grid"));
            }
            if let Some(k) = layer.mu.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
                let (i, j) = grid.coords(k);
                return Err(Error::case(
                    format!("layers[{l}].mu[{k}]"),
                    format!("thickness {} at element ({i}, {j}) is outside [0, 1]", layer.mu.values()[k]),
                ));
            }
            if let Some(k) = layer.theta.values().iter().position(|v| !(-PI..=PI).contains(v)) {
                return Err(Error::case(format!("layers[{l}].theta[{k}]"), "orientation outside [-pi, pi]"));
            }
        }
        if let Some(bc) = &bc {
            bc.validate("bc")?;
        }
        Ok(CoarseSolution { grid, mu_min, layers, bc })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mu_min(&self) -> f64 {
        self.mu_min
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn bc(&self) -> Option<&BcSpec> {
        self.bc.as_ref()
    }

    pub fn with_bc(mut self, bc: Option<BcSpec>) -> Self {
        self.bc = bc;
        self
    }

    /// Coarse element size `h_c`.
    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn sum_mu(&self) -> ScalarField {
        ScalarField::from_fn(self.grid, |i, j| self.layers.iter().map(|l| l.mu.at(i, j)).sum())
    }

    /// Canonical JSON form; `parse_case` of the result reproduces `self` exactly.
    pub fn to_json(&self) -> String {
        let file = CaseFile {
            nx: self.grid.nx(),
            ny: self.grid.ny(),
            h: self.grid.h(),
            mu_min: self.mu_min,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile { theta: l.theta.values().to_vec(), mu: l.mu.values().to_vec() })
                .collect(),
            bc: self.bc.clone(),
        };
        serde_json::to_string(&file).expect("case serialisation cannot fail")
    }
}

/// Parse and validate a case file. Orientations outside [−π, π] are wrapped.
pub fn parse_case(bytes: &[u8]) -> Result<CoarseSolution> {
    let file: CaseFile =
        serde_json::from_slice(bytes).map_err(|e| Error::case("<root>", format!("schema violation: {e}")))?;
    if file.nx == 0 || file.ny == 0 {
        return Err(Error::case("nx/ny", "grid dimensions must be positive"));
    }
    if !(file.h > 0.0 && file.h.is_finite()) {
        return Err(Error::case("h", "element size must be positive"));
    }
    let grid = Grid::with_corner_at_origin(file.nx, file.ny, file.h)?;
    let n = grid.len();
    let mut layers = Vec::with_capacity(file.layers.len());
    for (l, lf) in file.layers.into_iter().enumerate() {
        if lf.mu.len() != n {
            return Err(Error::case(format!("layers[{l}].mu"), format!("expected {n} values, got {}", lf.mu.len())));
        }
        if lf.theta.len() != n {
            return Err(Error::case(
                format!("layers[{l}].theta"),
                format!("expected {n} values, got {}", lf.theta.len()),
            ));
        }
        let theta = lf.theta.into_iter().map(|t| if (-PI..=PI).contains(&t) { t } else { wrap_angle(t) }).collect();
        layers.push(Layer {
            mu: ScalarField::from_values(grid, lf.mu)?,
            theta: ScalarField::from_values(grid, theta)?,
        });
    }
    CoarseSolution::new(grid, file.mu_min, layers, file.bc)
}

impl std::str::FromStr for CoarseSolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_case(s.as_bytes())
    }
}

/// Material indicators on the coarse grid.
#[derive(Clone, Debug)]
pub struct IndicatorSet {
    /// Any layer at or above `mu_min`.
    pub s: ScalarField,
    /// 3×3 mean of `s`, zero padding.
    pub s_tilde: ScalarField,
    /// `s · s_tilde`.
    pub s_hat_tilde: ScalarField,
    /// Per-layer material indicators.
    pub layer_s: Vec<ScalarField>,
    /// Per-layer 3×3 means with replication padding.
    pub layer_s_tilde: Vec<ScalarField>,
    /// Elementwise max of `layer_s_tilde`.
    pub s_bar: ScalarField,
    /// Active-kernel indicators.
    pub z: Vec<ScalarField>,
    /// 3×3 means of `z`, replication padding.
    pub z_tilde: Vec<ScalarField>,
    pub sum_mu: ScalarField,
}

impl IndicatorSet {
    /// Derive the filtered indicators from per-layer material and active masks.
    pub fn from_masks(layer_s: Vec<ScalarField>, z: Vec<ScalarField>, sum_mu: ScalarField) -> Self {
        let grid = *sum_mu.grid();
        let s = ScalarField::from_fn(grid, |i, j| {
            if layer_s.iter().any(|m| *m.at(i, j) > 0.5) {
                1.0
            } else {
                0.0
            }
        });
        let s_tilde = mean3(&s, Padding::Zero);
        let s_hat_tilde = s.zip_map(&s_tilde, |a, b| a * b);
        let layer_s_tilde: Vec<_> = layer_s.iter().map(|m| mean3(m, Padding::Replicate)).collect();
        let s_bar = ScalarField::from_fn(grid, |i, j| {
            layer_s_tilde.iter().map(|m| *m.at(i, j)).fold(0.0, f64::max)
        });
        let z_tilde = z.iter().map(|m| mean3(m, Padding::Replicate)).collect();
        IndicatorSet { s, s_tilde, s_hat_tilde, layer_s, layer_s_tilde, s_bar, z, z_tilde, sum_mu }
    }
}

pub fn build_indicators(sol: &CoarseSolution) -> IndicatorSet {
    let sum_mu = sol.sum_mu();
    let mu_min = sol.mu_min();
    let layer_s: Vec<_> =
        sol.layers().iter().map(|l| l.mu.map(|&m| if m >= mu_min { 1.0 } else { 0.0 })).collect();
    let z = sol
        .layers()
        .iter()
        .map(|l| l.mu.zip_map(&sum_mu, |&m, &s| if m >= mu_min && s <= SOLID_SUM { 1.0 } else { 0.0 }))
        .collect();
    IndicatorSet::from_masks(layer_s, z, sum_mu)
}

/// A localised oriented oscillator emitted from a coarse element centre.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasorKernel {
    pub element: (usize, usize),
    pub x0: Vec2,
    pub d: Vec2,
    pub theta: f64,
    pub omega: f64,
    pub beta: f64,
    pub phi: f64,
    /// Alignment neighbourhood anisotropy.
    pub aniso: Anisotropy,
    /// Envelope anisotropy used when sampling.
    pub envelope: Anisotropy,
    pub dkappa: f64,
}

impl PhasorKernel {
    pub fn new(element: (usize, usize), x0: Vec2, theta: f64, omega: f64, beta: f64) -> Self {
        PhasorKernel {
            element,
            x0,
            d: direction(theta),
            theta,
            omega,
            beta,
            phi: 0.0,
            aniso: Anisotropy::blended(BASE_ANISO_R, 0.0),
            envelope: Anisotropy::LAMINATION,
            dkappa: 0.0,
        }
    }

    /// Set the thin-member blend and the matching alignment anisotropy.
    pub fn set_dkappa(&mut self, dk: f64) {
        self.dkappa = dk.clamp(0.0, 1.0);
        self.aniso = Anisotropy::blended(BASE_ANISO_R, self.dkappa);
    }
}

/// Base alignment anisotropy ratio `r` (the pair is `(r, 1/r)`).
pub const BASE_ANISO_R: f64 = 1.0 / PI;

/// Kernels of one layer.
#[derive(Clone, Debug)]
pub struct KernelSet {
    pub layer: usize,
    pub grid: Grid,
    pub kernels: Vec<PhasorKernel>,
    pub omega: f64,
    /// Filter bandwidth.
    pub alpha: f64,
}

impl KernelSet {
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Coarse element index → kernel index.
    pub fn element_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.grid.len()];
        for (k, ker) in self.kernels.iter().enumerate() {
            map[self.grid.index(ker.element.0, ker.element.1)] = Some(k);
        }
        map
    }

    /// Add a constant to every phase, wrapped back into [−π, π].
    pub fn shift_phases(&mut self, c: f64) {
        for k in &mut self.kernels {
            k.phi = wrap_angle(k.phi + c);
        }
    }
}

/// One kernel per active element of each layer, in row-major order.
pub fn build_kernels(sol: &CoarseSolution, inds: &IndicatorSet, omega: f64) -> Result<Vec<KernelSet>> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {omega}")));
    }
    let grid = *sol.grid();
    let beta = omega / grid.h();
    Ok(sol
        .layers()
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let kernels = grid
                .iter_ij()
                .filter(|&(i, j)| *inds.z[l].at(i, j) > 0.5)
                .map(|(i, j)| PhasorKernel::new((i, j), grid.centre(i, j), *layer.theta.at(i, j), omega, beta))
                .collect();
            KernelSet { layer: l, grid, kernels, omega, alpha: beta }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_json(mu: &[f64], theta: &[f64], nx: usize, ny: usize) -> String {
        format!(
            r#"{{"nx":{nx},"ny":{ny},"h":0.5,"mu_min":0.1,"layers":[{{"theta":{theta:?},"mu":{mu:?}}}]}}"#
        )
    }

    #[test]
    fn minimal_case_parses() {
        let sol = parse_case(case_json(&[0.5; 4], &[0.0; 4], 2, 2).as_bytes()).unwrap();
        assert_eq!((sol.grid().nx(), sol.grid().ny(), sol.num_layers()), (2, 2, 1));
        assert_eq!(sol.grid().centre(0, 0), Vec2::new(0.25, 0.25));
    }

    #[test]
    fn out_of_range_mu_names_element() {
        let err = parse_case(case_json(&[0.5, 0.5, 1.2, 0.5], &[0.0; 4], 2, 2).as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layers[0].mu[2]") && msg.contains("(0, 1)"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn orientation_is_wrapped() {
        let sol = parse_case(case_json(&[0.5; 4], &[1.5 * PI, 0.0, 0.0, -PI], 2, 2).as_bytes()).unwrap();
        assert!((sol.layers()[0].theta.values()[0] + 0.5 * PI).abs() < 1e-12);
        assert_eq!(sol.layers()[0].theta.values()[3], -PI);
    }

    #[test]
    fn schema_errors_are_reported() {
        assert!(parse_case(b"{\"nx\":2}").is_err());
        assert!(parse_case(case_json(&[0.5; 3], &[0.0; 4], 2, 2).as_bytes()).is_err());
    }

    #[test]
    fn canonical_writer_round_trips_bit_exactly() {
        let g = Grid::with_corner_at_origin(5, 3, 1.0 / 3.0).unwrap();
        let mu = ScalarField::from_fn(g, |i, j| ((i * 7 + j * 3) % 10) as f64 / 9.7);
        let theta = ScalarField::from_fn(g, |i, j| ((i as f64) * 0.731 - (j as f64) * 1.113).sin() * 3.1);
        let sol = CoarseSolution::new(g, 0.1, vec![Layer { mu, theta }], None).unwrap();
        let back = parse_case(sol.to_json().as_bytes()).unwrap();
        assert_eq!(back, sol);
        for (a, b) in back.layers()[0].theta.values().iter().zip(sol.layers()[0].theta.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    fn one_layer(nx: usize, ny: usize, mu: impl FnMut(usize, usize) -> f64) -> CoarseSolution {
        let g = Grid::with_corner_at_origin(nx, ny, 1.0 / nx as f64).unwrap();
        let layer = Layer { mu: ScalarField::from_fn(g, mu), theta: ScalarField::filled(g, 0.0) };
        CoarseSolution::new(g, 0.1, vec![layer], None).unwrap()
    }

    #[test]
    fn void_domain_has_no_indicators() {
        let inds = build_indicators(&one_layer(4, 4, |_, _| 0.0));
        assert!(inds.s.values().iter().all(|&v| v == 0.0));
        assert!(inds.z[0].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_element_indicator_means() {
        let inds = build_indicators(&one_layer(5, 5, |i, j| if (i, j) == (2, 2) { 0.5 } else { 0.0 }));
        assert_eq!(inds.s.values().iter().sum::<f64>(), 1.0);
        for (i, j) in inds.s.grid().iter_ij() {
            let near = i.abs_diff(2) <= 1 && j.abs_diff(2) <= 1;
            let expect = if near { 1.0 / 9.0 } else { 0.0 };
            assert!((inds.s_tilde.at(i, j) - expect).abs() < 1e-15);
        }
        // The s-indicator mean of a 0.5-thickness element is 1/9; its thickness mean is 0.5/9.
        let thick = mean3(&one_layer(5, 5, |i, j| if (i, j) == (2, 2) { 0.5 } else { 0.0 }).layers()[0].mu, Padding::Zero);
        assert!((thick.at(1, 1) - 0.5 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn solid_elements_are_not_kernels() {
        let g = Grid::with_corner_at_origin(3, 1, 1.0 / 3.0).unwrap();
        let a = Layer { mu: ScalarField::from_values(g, vec![0.6, 0.5, 0.05]).unwrap(), theta: ScalarField::filled(g, 0.0) };
        let b = Layer { mu: ScalarField::from_values(g, vec![0.4, 0.49, 0.0]).unwrap(), theta: ScalarField::filled(g, 0.0) };
        let sol = CoarseSolution::new(g, 0.1, vec![a, b], None).unwrap();
        let inds = build_indicators(&sol);
        assert_eq!(inds.s.values(), &[1.0, 1.0, 0.0]);
        assert_eq!(inds.z[0].values(), &[0.0, 1.0, 0.0]);
        assert_eq!(inds.z[1].values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn kernels_follow_indicators() {
        let sol = one_layer(30, 30, |i, _| if i < 3 { 0.05 } else { 0.4 });
        let inds = build_indicators(&sol);
        let sets = build_kernels(&sol, &inds, 48.0).unwrap();
        assert_eq!(sets[0].len(), 27 * 30);
        for k in &sets[0].kernels {
            assert!((k.beta - 1440.0).abs() < 1e-9);
            assert_eq!(k.d, Vec2::new(1.0, -0.0));
            assert_eq!(k.phi, 0.0);
            assert!((k.d.norm() - 1.0).abs() < 1e-12);
        }
        assert!(build_kernels(&sol, &inds, 0.0).is_err());
    }
}
