//! Regular element grids and the fields that live on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// A regular grid of square elements. Values are stored per element,
/// row-major with index `j * nx + i`, and element (0,0) is the lower-left one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
    origin: Vec2,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: Vec2) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("grid must be non-empty, got {nx}x{ny}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("element size must be positive, got {h}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("grid origin must be finite".into()));
        }
        Ok(Grid { nx, ny, h, origin })
    }

    /// Grid whose lower-left corner sits at the physical origin.
    pub fn with_corner_at_origin(nx: usize, ny: usize, h: f64) -> Result<Self> {
        Grid::new(nx, ny, h, Vec2::new(0.5 * h, 0.5 * h))
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Physical centre of element (i, j).
    #[inline]
    pub fn centre(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.origin.x + i as f64 * self.h, self.origin.y + j as f64 * self.h)
    }

    #[inline]
    pub fn centre_of(&self, idx: usize) -> Vec2 {
        let (i, j) = self.coords(idx);
        self.centre(i, j)
    }

    /// Continuous index coordinates of a physical point; integer values land on element centres.
    #[inline]
    pub fn to_index_space(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.origin.x) / self.h, (p.y - self.origin.y) / self.h)
    }

    /// Nearest element to a physical point, clamped into the grid.
    pub fn nearest(&self, p: Vec2) -> (usize, usize) {
        let (u, v) = self.to_index_space(p);
        let clamp = |t: f64, n: usize| t.round().clamp(0.0, (n - 1) as f64) as usize;
        (clamp(u, self.nx), clamp(v, self.ny))
    }

    /// Lower-left corner of the covered domain.
    pub fn lower_left(&self) -> Vec2 {
        Vec2::new(self.origin.x - 0.5 * self.h, self.origin.y - 0.5 * self.h)
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.h
    }

    /// Each element split into `factor × factor` children covering the same domain.
    pub fn refine(&self, factor: usize) -> Grid {
        assert!(factor >= 1, "refinement factor must be at least 1");
        let h = self.h / factor as f64;
        let ll = self.lower_left();
        Grid {
            nx: self.nx * factor,
            ny: self.ny * factor,
            h,
            origin: Vec2::new(ll.x + 0.5 * h, ll.y + 0.5 * h),
        }
    }

    /// Iterator over all (i, j) in storage order.
    pub fn iter_ij(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }

    /// Whether the element is in the outermost ring.
    pub fn on_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }
}

/// Values of type `T` attached to every element of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;
pub type Mask = Field<bool>;

impl<T> Field<T> {
    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field needs {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.nx(),
                grid.ny(),
                values.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let values = grid.iter_ij().map(|(i, j)| f(i, j)).collect();
        Field { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.values[self.grid.index(i, j)]
    }

    /// Value at signed indices, clamped to the border (replication).
    #[inline]
    pub fn at_clamped(&self, i: isize, j: isize) -> &T {
        let ci = i.clamp(0, self.grid.nx() as isize - 1) as usize;
        let cj = j.clamp(0, self.grid.ny() as isize - 1) as usize;
        self.at(ci, cj)
    }

    /// Value at signed indices, `None` outside the grid.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> Option<&T> {
        if i < 0 || j < 0 || i >= self.grid.nx() as isize || j >= self.grid.ny() as isize {
            None
        } else {
            Some(self.at(i as usize, j as usize))
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    pub fn zip_map<U, V>(&self, other: &Field<U>, mut f: impl FnMut(&T, &U) -> V) -> Field<V> {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl<T: Clone> Field<T> {
    pub fn filled(grid: Grid, v: T) -> Self {
        Field { grid, values: vec![v; grid.len()] }
    }
}

impl ScalarField {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.values.len() as f64
    }

    pub fn to_scalar(&self) -> ScalarField {
        self.map(|&b| if b { 1.0 } else { 0.0 })
    }
}
