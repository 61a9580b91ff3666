//! The Calderón–Zygmund decomposition at height λ on a grid-aligned root
//! cube, and the weak-type measurements built on it.
//!
//! Cubes are addressed in cell-index space. The sum of `|f|` over a cube is
//! the sequential sum of its children's sums, so a parent sum never falls
//! below a child sum and averages are exact power-of-two rescalings. For
//! piecewise-constant `f` with dyadic-rational values every invariant holds
//! with exact equality.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Cube;
use crate::grid::{GridFunction, GridGeometry};
use crate::kernel::KernelSpec;
use crate::math::{exp2i, pairwise_sum, Point};
use crate::metric::{enlarged_cube, qtheta_threshold};
use crate::operator::TruncatedOperator;

pub use crate::grid::{lp_norm, weak_l1_quasinorm};

/// A dyadic subcube of the root in cell-index space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedCube<const D: usize> {
    pub cube: Cube<D>,
    /// Number of halvings from the root.
    pub depth: u32,
    pub first_cell: [usize; D],
    pub cells_per_side: usize,
    /// Average of `|f|` over the cube.
    pub abs_average: f64,
}

impl<const D: usize> SelectedCube<D> {
    pub fn contains_cell(&self, idx: &[usize; D]) -> bool {
        (0..D).all(|k| idx[k] >= self.first_cell[k] && idx[k] < self.first_cell[k] + self.cells_per_side)
    }

    fn cells(&self, geometry: &GridGeometry<D>) -> Vec<usize> {
        let m = self.cells_per_side;
        let total = m.pow(D as u32);
        (0..total)
            .map(|mut t| {
                let mut idx = [0usize; D];
                for k in (0..D).rev() {
                    idx[k] = self.first_cell[k] + t % m;
                    t /= m;
                }
                geometry.flat_index(&idx)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult<const D: usize> {
    pub lambda: f64,
    pub root: Cube<D>,
    pub cubes: Vec<SelectedCube<D>>,
    pub good: GridFunction<D>,
    /// `b_k = (f - avg_{Q_k} f) χ_{Q_k}`, one per selected cube.
    pub bad: Vec<GridFunction<D>>,
}

/// Where the root sits in the grid.
#[derive(Debug, Clone, Copy)]
struct RootCells<const D: usize> {
    origin: [usize; D],
    side: usize,
    depth: u32,
}

fn locate_root<const D: usize>(geometry: &GridGeometry<D>, root: &Cube<D>) -> Result<RootCells<D>> {
    let h = geometry.spacing(0);
    if (1..D).any(|k| geometry.spacing(k) != h) {
        return Err(Error::invalid("decomposition needs a grid with equal spacing on every axis"));
    }
    let ratio = root.side / h;
    if !(ratio >= 1.0) || ratio != crate::math::floor(ratio) || !(ratio as usize).is_power_of_two() {
        return Err(Error::invalid(format!(
            "root side {} is not a power-of-two multiple of the cell width {h}",
            root.side
        )));
    }
    let side = ratio as usize;
    let mut origin = [0usize; D];
    for k in 0..D {
        let off = (root.corner[k] - geometry.bounds.lo[k]) / h;
        if off != crate::math::floor(off) || off < 0.0 || off as usize + side > geometry.cells_per_axis {
            return Err(Error::invalid("root cube is not aligned with the grid or leaves its box"));
        }
        origin[k] = off as usize;
    }
    Ok(RootCells {
        origin,
        side,
        depth: side.trailing_zeros(),
    })
}

/// Bottom-up sums of `values` over the dyadic subcubes of the root, one array
/// per depth (row-major over subcube positions).
fn dyadic_sums<const D: usize>(
    geometry: &GridGeometry<D>,
    root: &RootCells<D>,
    value: impl Fn(f64) -> f64,
    f: &GridFunction<D>,
) -> Vec<Vec<f64>> {
    let depth = root.depth as usize;
    let mut levels: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    let m = root.side;
    let mut finest = vec![0.0; m.pow(D as u32)];
    for (t, slot) in finest.iter_mut().enumerate() {
        let mut idx = [0usize; D];
        let mut r = t;
        for k in (0..D).rev() {
            idx[k] = root.origin[k] + r % m;
            r /= m;
        }
        *slot = value(f.values[geometry.flat_index(&idx)]);
    }
    levels[depth] = finest;
    for d in (0..depth).rev() {
        let w = 1usize << d;
        let child_w = w * 2;
        let mut sums = vec![0.0; w.pow(D as u32)];
        for (t, slot) in sums.iter_mut().enumerate() {
            let pos = unflatten::<D>(t, w);
            let mut s = 0.0;
            for mask in 0..(1usize << D) {
                let mut c = [0usize; D];
                for k in 0..D {
                    c[k] = 2 * pos[k] + ((mask >> (D - 1 - k)) & 1);
                }
                s += levels[d + 1][flatten(&c, child_w)];
            }
            *slot = s;
        }
        levels[d] = sums;
    }
    levels
}

fn unflatten<const D: usize>(mut t: usize, w: usize) -> [usize; D] {
    let mut p = [0usize; D];
    for k in (0..D).rev() {
        p[k] = t % w;
        t /= w;
    }
    p
}

fn flatten<const D: usize>(p: &[usize; D], w: usize) -> usize {
    p.iter().fold(0, |acc, &i| acc * w + i)
}

/// Average of `|f|` over the root, with the same summation tree as the
/// decomposition.
pub fn root_abs_average<const D: usize>(f: &GridFunction<D>, root: &Cube<D>) -> Result<f64> {
    let cells = locate_root(&f.geometry, root)?;
    let sums = dyadic_sums(&f.geometry, &cells, f64::abs, f);
    Ok(sums[0][0] * exp2i(-((cells.depth as i32) * D as i32)))
}

/// Stopping-time decomposition: a subcube is selected the first time its
/// `|f|`-average exceeds λ.
pub fn cz_decompose<const D: usize>(f: &GridFunction<D>, lambda: f64, root: &Cube<D>) -> Result<DecompositionResult<D>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let geometry = f.geometry;
    let cells = locate_root(&geometry, root)?;
    let abs = dyadic_sums(&geometry, &cells, f64::abs, f);
    let signed = dyadic_sums(&geometry, &cells, |v| v, f);
    let depth = cells.depth as usize;
    let average = |d: usize, s: f64| s * exp2i(-(((depth - d) * D) as i32));
    let root_avg = average(0, abs[0][0]);
    if root_avg > lambda {
        return Err(Error::RootAverageAboveLambda {
            average: root_avg,
            lambda,
        });
    }

    let h = geometry.spacing(0);
    let mut cubes = Vec::new();
    let mut means = Vec::new();
    // depth-first in child order
    let mut stack: Vec<(usize, [usize; D])> = vec![(0, [0; D])];
    while let Some((d, pos)) = stack.pop() {
        if d == depth {
            continue;
        }
        let w = 1usize << (d + 1);
        let mut children = Vec::with_capacity(1 << D);
        for mask in 0..(1usize << D) {
            let mut c = [0usize; D];
            for k in 0..D {
                c[k] = 2 * pos[k] + ((mask >> (D - 1 - k)) & 1);
            }
            children.push(c);
        }
        for c in children.iter().rev() {
            let t = flatten(c, w);
            let avg = average(d + 1, abs[d + 1][t]);
            if avg > lambda {
                let per_side = cells.side >> (d + 1);
                let mut first = [0usize; D];
                let mut corner = [0.0; D];
                for k in 0..D {
                    first[k] = cells.origin[k] + c[k] * per_side;
                    corner[k] = geometry.bounds.lo[k] + first[k] as f64 * h;
                }
                cubes.push(SelectedCube {
                    cube: Cube::new(corner, per_side as f64 * h),
                    depth: (d + 1) as u32,
                    first_cell: first,
                    cells_per_side: per_side,
                    abs_average: avg,
                });
                means.push(average(d + 1, signed[d + 1][t]));
            } else {
                stack.push((d + 1, *c));
            }
        }
    }
    // the stack visits children last-to-first; restore child order
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&cubes[a], &cubes[b]);
        ca.first_cell.cmp(&cb.first_cell).then(ca.depth.cmp(&cb.depth))
    });
    let cubes: Vec<SelectedCube<D>> = order.iter().map(|&i| cubes[i]).collect();
    let means: Vec<f64> = order.iter().map(|&i| means[i]).collect();

    let mut good = f.clone();
    let mut bad = Vec::with_capacity(cubes.len());
    for (q, m) in cubes.iter().zip(&means) {
        let mut b = GridFunction::zeros(geometry);
        for idx in q.cells(&geometry) {
            b.values[idx] = f.values[idx] - m;
            good.values[idx] = *m;
        }
        bad.push(b);
    }
    Ok(DecompositionResult {
        lambda,
        root: *root,
        cubes,
        good,
        bad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvariantReport {
    pub disjoint: bool,
    pub average_bounds: bool,
    pub bounded_off_cubes: bool,
    pub mean_zero: bool,
    pub reconstruction: bool,
    pub measure_bound: bool,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.disjoint
            && self.average_bounds
            && self.bounded_off_cubes
            && self.mean_zero
            && self.reconstruction
            && self.measure_bound
    }
}

impl<const D: usize> DecompositionResult<D> {
    /// Re-checks the decomposition against `f`. `tolerance` bounds the
    /// absolute error allowed in `∫ b_k = 0` and `f = g + Σ b_k`; pass 0 for
    /// exact checks.
    pub fn check_invariants(&self, f: &GridFunction<D>, tolerance: f64) -> Result<InvariantReport> {
        let geometry = f.geometry;
        if geometry != self.good.geometry {
            return Err(Error::IncompatibleGrids);
        }
        let cells = locate_root(&geometry, &self.root)?;
        let abs = dyadic_sums(&geometry, &cells, f64::abs, f);
        let depth = cells.depth as usize;

        let mut disjoint = true;
        for (a, qa) in self.cubes.iter().enumerate() {
            for qb in &self.cubes[a + 1..] {
                let overlap = (0..D).all(|k| {
                    qa.first_cell[k] < qb.first_cell[k] + qb.cells_per_side
                        && qb.first_cell[k] < qa.first_cell[k] + qa.cells_per_side
                });
                disjoint &= !overlap;
            }
        }

        let cap = self.lambda * exp2i(D as i32);
        let mut average_bounds = true;
        for q in &self.cubes {
            let d = q.depth as usize;
            let w = 1usize << d;
            let mut pos = [0usize; D];
            for k in 0..D {
                pos[k] = (q.first_cell[k] - cells.origin[k]) / q.cells_per_side;
            }
            let avg = abs[d][flatten(&pos, w)] * exp2i(-(((depth - d) * D) as i32));
            average_bounds &= avg == q.abs_average && self.lambda <= avg && avg <= cap;
        }

        let mut bounded_off_cubes = true;
        let mut reconstruction = true;
        for k in 0..geometry.len() {
            let idx = geometry.multi_index(k);
            let in_root = (0..D).all(|a| idx[a] >= cells.origin[a] && idx[a] < cells.origin[a] + cells.side);
            let inside = self.cubes.iter().any(|q| q.contains_cell(&idx));
            if in_root && !inside && f.values[k].abs() > self.lambda {
                bounded_off_cubes = false;
            }
            let total = self.good.values[k] + self.bad.iter().map(|b| b.values[k]).sum::<f64>();
            if (total - f.values[k]).abs() > tolerance {
                reconstruction = false;
            }
        }

        let mean_zero = self
            .bad
            .iter()
            .all(|b| (pairwise_sum(&b.values) * geometry.cell_volume()).abs() <= tolerance);

        let selected: f64 = self.cubes.iter().map(|q| q.cube.volume()).sum();
        let measure_bound = selected * self.lambda <= f.l1_norm() * (1.0 + tolerance);

        Ok(InvariantReport {
            disjoint,
            average_bounds,
            bounded_off_cubes,
            mean_zero,
            reconstruction,
            measure_bound,
        })
    }

    pub fn bad_sum(&self) -> GridFunction<D> {
        let mut out = GridFunction::zeros(self.good.geometry);
        for b in &self.bad {
            for (o, v) in out.values.iter_mut().zip(&b.values) {
                *o += v;
            }
        }
        out
    }
}

/// Number of doublings in the λ ladder `2^j · avg_root|f|`, `j = 0..=12`.
pub const LADDER_STEPS: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeakTypeRow {
    pub function: usize,
    pub lambda: f64,
    pub cubes: usize,
    /// `|{|T_ε f| ≥ λ}|` on the grid.
    pub superlevel_measure: f64,
    /// `λ |{|T_ε f| ≥ λ}| / ‖f‖_1`.
    pub ratio: f64,
    /// `|⋃ (Q_k)_θ|` on the grid (infinite with a flat branch).
    pub b_star_measure: f64,
    /// `∫_{grid \ B*} |T_ε b|` with `b = Σ b_k`.
    pub bad_off_b_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakTypeReport {
    pub rows: Vec<WeakTypeRow>,
    pub max_ratio: f64,
    /// Per-function maxima of the ratio.
    pub function_max: Vec<f64>,
}

/// Runs the weak-type (1,1) measurement for every function of the family
/// over the λ ladder. All functions share the grid of the first one and
/// `root` must be aligned with it.
pub fn weak_type_experiment<const D: usize>(
    kernel: &KernelSpec<D>,
    family: &[GridFunction<D>],
    epsilon: f64,
    theta: f64,
    root: &Cube<D>,
) -> Result<WeakTypeReport> {
    let Some(first) = family.first() else {
        return Err(Error::invalid("the function family is empty"));
    };
    let threshold = qtheta_threshold(&kernel.curve);
    if !(theta > threshold) {
        return Err(Error::invalid(format!(
            "theta = {theta} does not exceed 2√n + 5√n·c_γ = {threshold}"
        )));
    }
    let geometry = first.geometry;
    if family.iter().any(|f| f.geometry != geometry) {
        return Err(Error::IncompatibleGrids);
    }
    let plan = TruncatedOperator::new(kernel, geometry, geometry, epsilon)?;
    let points: Vec<Point<D>> = geometry.midpoints();
    let cell = geometry.cell_volume();

    let mut rows = Vec::new();
    let mut function_max = Vec::with_capacity(family.len());
    for (fi, f) in family.iter().enumerate() {
        let norm = f.l1_norm();
        let base = root_abs_average(f, root)?;
        if norm == 0.0 || base == 0.0 {
            for j in 0..=LADDER_STEPS {
                rows.push(WeakTypeRow {
                    function: fi,
                    lambda: exp2i(j as i32) * base,
                    cubes: 0,
                    superlevel_measure: 0.0,
                    ratio: 0.0,
                    b_star_measure: 0.0,
                    bad_off_b_star: 0.0,
                });
            }
            function_max.push(0.0);
            continue;
        }
        let tf = plan.apply(f, epsilon)?;
        let mut fmax = 0.0f64;
        for j in 0..=LADDER_STEPS {
            let lambda = exp2i(j as i32) * base;
            let dec = cz_decompose(f, lambda, root)?;
            let count = tf.values.iter().filter(|v| v.abs() >= lambda).count();
            let superlevel = count as f64 * cell;
            let ratio = lambda * superlevel / norm;
            fmax = fmax.max(ratio);

            let mut in_star = vec![false; points.len()];
            let mut unbounded = false;
            for q in &dec.cubes {
                let e = enlarged_cube(&kernel.curve, &q.cube, theta)?;
                unbounded |= e.measure_upper_bound.is_infinite();
                let hits = crate::par::map_indices(points.len(), |k| !in_star[k] && e.contains(&points[k]));
                for (s, h) in in_star.iter_mut().zip(hits) {
                    *s |= h;
                }
            }
            let b_star = if unbounded {
                f64::INFINITY
            } else {
                in_star.iter().filter(|s| **s).count() as f64 * cell
            };
            let tb = if dec.cubes.is_empty() {
                0.0
            } else {
                let t = plan.apply(&dec.bad_sum(), epsilon)?;
                let off: Vec<f64> = t
                    .values
                    .iter()
                    .zip(&in_star)
                    .map(|(v, s)| if *s { 0.0 } else { v.abs() })
                    .collect();
                pairwise_sum(&off) * cell
            };
            rows.push(WeakTypeRow {
                function: fi,
                lambda,
                cubes: dec.cubes.len(),
                superlevel_measure: superlevel,
                ratio,
                b_star_measure: b_star,
                bad_off_b_star: tb,
            });
        }
        function_max.push(fmax);
    }
    let max_ratio = function_max.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(WeakTypeReport {
        rows,
        max_ratio,
        function_max,
    })
}
