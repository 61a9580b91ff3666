//! Functions sampled at the cell midpoints of a uniform grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::math::{floor, is_finite_point, pairwise_sum, powf, Point};

/// `N^D` equal cells covering a bounded box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry<const D: usize> {
    pub bounds: Aabb<D>,
    pub cells_per_axis: usize,
}

impl<const D: usize> GridGeometry<D> {
    pub fn new(bounds: Aabb<D>, cells_per_axis: usize) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::invalid("a grid needs at least one cell per axis"));
        }
        if !bounds.is_bounded() || !is_finite_point(&bounds.lo) || !is_finite_point(&bounds.hi) {
            return Err(Error::invalid("grid box must be bounded"));
        }
        if (0..D).any(|k| !(bounds.hi[k] > bounds.lo[k])) {
            return Err(Error::invalid("grid box must have positive width on every axis"));
        }
        Ok(GridGeometry {
            bounds,
            cells_per_axis,
        })
    }

    /// The grid on `[-half, half]^D`.
    pub fn symmetric(half: f64, cells_per_axis: usize) -> Result<Self> {
        Self::new(Aabb::symmetric(half), cells_per_axis)
    }

    pub fn len(&self) -> usize {
        self.cells_per_axis.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell width along axis `k`.
    pub fn spacing(&self, k: usize) -> f64 {
        (self.bounds.hi[k] - self.bounds.lo[k]) / self.cells_per_axis as f64
    }

    /// Cell width along the first axis; the grids used for quadrature are
    /// cubic.
    pub fn h(&self) -> f64 {
        self.spacing(0)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..D).map(|k| self.spacing(k)).product()
    }

    /// Row-major: the last axis varies fastest.
    pub fn multi_index(&self, mut flat: usize) -> [usize; D] {
        let mut idx = [0usize; D];
        for k in (0..D).rev() {
            idx[k] = flat % self.cells_per_axis;
            flat /= self.cells_per_axis;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize; D]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.cells_per_axis + i)
    }

    pub fn midpoint(&self, flat: usize) -> Point<D> {
        let idx = self.multi_index(flat);
        let mut p = [0.0; D];
        for k in 0..D {
            p[k] = self.bounds.lo[k] + (idx[k] as f64 + 0.5) * self.spacing(k);
        }
        p
    }

    pub fn midpoints(&self) -> Vec<Point<D>> {
        (0..self.len()).map(|i| self.midpoint(i)).collect()
    }
}

/// A grid function; integrals use the midpoint rule `Σ values · h^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<const D: usize> {
    pub geometry: GridGeometry<D>,
    pub values: Vec<f64>,
}

impl<const D: usize> GridFunction<D> {
    pub fn new(geometry: GridGeometry<D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::invalid(format!(
                "grid has {} cells but {} values were given",
                geometry.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value {i} is not finite")));
        }
        Ok(GridFunction { geometry, values })
    }

    pub fn zeros(geometry: GridGeometry<D>) -> Self {
        GridFunction {
            geometry,
            values: vec![0.0; geometry.len()],
        }
    }

    /// Samples `f` at the cell midpoints.
    pub fn from_fn<F: Fn(&Point<D>) -> f64>(geometry: GridGeometry<D>, f: F) -> Result<Self> {
        let values = (0..geometry.len()).map(|i| f(&geometry.midpoint(i))).collect();
        Self::new(geometry, values)
    }

    pub fn compatible(&self, other: &GridFunction<D>) -> bool {
        self.geometry == other.geometry
    }

    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.geometry.cell_volume()
    }

    /// `‖f‖_1` by the midpoint rule.
    pub fn l1_norm(&self) -> f64 {
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        pairwise_sum(&abs) * self.geometry.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        GridFunction {
            geometry: self.geometry,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `alpha·self + beta·other`.
    pub fn combine(&self, alpha: f64, other: &GridFunction<D>, beta: f64) -> Result<Self> {
        if !self.compatible(other) {
            return Err(Error::IncompatibleGrids);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(GridFunction {
            geometry: self.geometry,
            values,
        })
    }

    pub fn sub(&self, other: &GridFunction<D>) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// Multilinear interpolation between cell midpoints. Inside the box but
    /// beyond the outermost midpoints the nearest midpoint value is used;
    /// points outside the box read 0.
    pub fn interpolate(&self, p: &Point<D>) -> f64 {
        if !self.geometry.bounds.contains(p) {
            return 0.0;
        }
        let n = self.geometry.cells_per_axis;
        let mut base = [0usize; D];
        let mut frac = [0.0; D];
        for k in 0..D {
            let t = (p[k] - self.geometry.bounds.lo[k]) / self.geometry.spacing(k) - 0.5;
            let t = t.clamp(0.0, (n - 1) as f64);
            let i = (floor(t) as usize).min(n.saturating_sub(2));
            base[k] = i;
            frac[k] = if n == 1 { 0.0 } else { t - i as f64 };
        }
        let mut acc = 0.0;
        for mask in 0..(1usize << D) {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..D {
                if (mask >> k) & 1 == 1 {
                    w *= frac[k];
                    idx[k] += 1;
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.geometry.flat_index(&idx)];
            }
        }
        acc
    }

    /// `f(-x)` sampled on the same grid; exact when the box is symmetric.
    pub fn reflect(&self) -> Self {
        let n = self.geometry.cells_per_axis;
        let values = (0..self.values.len())
            .map(|i| {
                let mut idx = self.geometry.multi_index(i);
                for v in idx.iter_mut() {
                    *v = n - 1 - *v;
                }
                self.values[self.geometry.flat_index(&idx)]
            })
            .collect();
        GridFunction {
            geometry: self.geometry,
            values,
        }
    }
}

/// `(Σ|g|^p h^D)^{1/p}` for `1 ≤ p < ∞`.
pub fn lp_norm<const D: usize>(g: &GridFunction<D>, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must lie in [1, ∞), got {p}")));
    }
    let powered: Vec<f64> = g.values.iter().map(|v| powf(v.abs(), p)).collect();
    Ok(powf(pairwise_sum(&powered) * g.geometry.cell_volume(), 1.0 / p))
}

/// `sup_λ λ·|{|g| ≥ λ}|` over the distinct values of `|g|`, which equals the
/// weak-L¹ quasi-norm of a grid function.
pub fn weak_l1_quasinorm<const D: usize>(g: &GridFunction<D>) -> f64 {
    let mut abs: Vec<f64> = g.values.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let cell = g.geometry.cell_volume();
    let mut best = 0.0f64;
    let mut i = 0;
    while i < abs.len() {
        let v = abs[i];
        if v == 0.0 {
            break;
        }
        let mut j = i;
        while j < abs.len() && abs[j] == v {
            j += 1;
        }
        best = best.max(v * j as f64 * cell);
        i = j;
    }
    best
}
