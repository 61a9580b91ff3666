//! Truncated operators `T_ε f(x) = ∫_{ρ(x,y) ≥ ε} K(x,y) f(y) dy` on grids,
//! branch multipliers `f ↦ Σ_i b_i(x) f(γ_i(x)) χ_{D_i}(x)` and their
//! recovery from an operator difference.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{HyperCurve, Point};
use crate::grid::{GridFunction, GridGeometry};
use crate::kernel::{KernelSpec, SINGULAR_RHO};
use crate::math::{dist, pairwise_sum};
use crate::metric::rho_of;
use crate::partition::BranchDisjointPartition;

/// Precomputed truncation data and kernel values for every (output, input)
/// cell pair, valid for all `ε ≤ max_epsilon`.
///
/// For each pair the plan stores a cutoff `r` with `ρ ≥ ε ⇔ r ≥ ε` for every
/// admissible ε: the solver value of ρ where that is needed, or the lower
/// bound `ρ̃/(2c_γ + 2)` where it already exceeds `max_epsilon`. Excluded
/// terms enter the tree sum as exact zeros, so the summation order never
/// depends on ε.
pub struct TruncatedOperator<'k, const D: usize> {
    kernel: &'k KernelSpec<D>,
    pub input: GridGeometry<D>,
    pub output: GridGeometry<D>,
    pub max_epsilon: f64,
    cutoff: Vec<f64>,
    values: Vec<f64>,
}

impl<'k, const D: usize> TruncatedOperator<'k, D> {
    pub fn new(
        kernel: &'k KernelSpec<D>,
        input: GridGeometry<D>,
        output: GridGeometry<D>,
        max_epsilon: f64,
    ) -> Result<Self> {
        if !(max_epsilon > 0.0) || !max_epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be positive, got {max_epsilon}")));
        }
        let curve = &*kernel.curve;
        let factor = 2.0 * (curve.c_gamma + 1.0);
        let inputs = input.midpoints();
        let rows = crate::par::map_indices(output.len(), |o| {
            let x = output.midpoint(o);
            let mut cut = Vec::with_capacity(inputs.len());
            let mut val = Vec::with_capacity(inputs.len());
            for y in &inputs {
                let mut lower = f64::INFINITY;
                for b in &curve.branches {
                    let xi = b.domain.nearest_point(&x);
                    lower = lower.min(dist(&x, &xi) + dist(y, &b.forward(&xi)));
                }
                lower /= factor;
                let r = if lower >= max_epsilon {
                    lower
                } else {
                    curve
                        .branches
                        .iter()
                        .map(|b| rho_of(curve, b, &x, y))
                        .fold(f64::INFINITY, f64::min)
                };
                cut.push(r);
                val.push(if r < SINGULAR_RHO { 0.0 } else { kernel.eval_unchecked(&x, y) });
            }
            (cut, val)
        });
        let mut cutoff = Vec::with_capacity(output.len() * input.len());
        let mut values = Vec::with_capacity(output.len() * input.len());
        for (c, v) in rows {
            cutoff.extend(c);
            values.extend(v);
        }
        Ok(TruncatedOperator {
            kernel,
            input,
            output,
            max_epsilon,
            cutoff,
            values,
        })
    }

    pub fn kernel(&self) -> &KernelSpec<D> {
        self.kernel
    }

    /// `T_ε f` on the output grid.
    pub fn apply(&self, f: &GridFunction<D>, epsilon: f64) -> Result<GridFunction<D>> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if epsilon > self.max_epsilon {
            return Err(Error::invalid(format!(
                "epsilon {epsilon} exceeds the plan's maximum {}",
                self.max_epsilon
            )));
        }
        if f.geometry != self.input {
            return Err(Error::IncompatibleGrids);
        }
        let n_in = self.input.len();
        let cell = self.input.cell_volume();
        let out = crate::par::map_indices(self.output.len(), |o| {
            let cut = &self.cutoff[o * n_in..(o + 1) * n_in];
            let val = &self.values[o * n_in..(o + 1) * n_in];
            let terms: Vec<f64> = (0..n_in)
                .map(|k| {
                    let fk = f.values[k];
                    if fk == 0.0 || cut[k] < epsilon || cut[k] < SINGULAR_RHO {
                        0.0
                    } else {
                        val[k] * fk
                    }
                })
                .collect();
            pairwise_sum(&terms) * cell
        });
        GridFunction::new(self.output, out)
    }
}

/// `T_ε f` sampled on `out_points`; builds a one-off plan.
pub fn apply_truncated<const D: usize>(
    kernel: &KernelSpec<D>,
    f: &GridFunction<D>,
    epsilon: f64,
    out_points: &GridGeometry<D>,
) -> Result<GridFunction<D>> {
    TruncatedOperator::new(kernel, f.geometry, *out_points, epsilon)?.apply(f, epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    /// `‖T_{ε_k} f - T_{ε_{k+1}} f‖_∞` on the output grid.
    pub sup_differences: Vec<f64>,
    /// ε below the input cell width, where the quadrature is unreliable.
    pub unreliable: Vec<bool>,
    /// ε below four cell widths.
    pub below_recommended: Vec<bool>,
    /// Whether the differences decrease from the third entry on.
    pub monotone_after_two: bool,
}

/// `T_{ε_min} f` and the successive differences along a strictly decreasing
/// sequence of ε.
pub fn estimate_t0<const D: usize>(
    kernel: &KernelSpec<D>,
    f: &GridFunction<D>,
    epsilons: &[f64],
    out_geometry: &GridGeometry<D>,
) -> Result<(GridFunction<D>, ConvergenceReport)> {
    if epsilons.is_empty() {
        return Err(Error::invalid("at least one epsilon is required"));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("epsilons must be positive and strictly decreasing"));
    }
    let plan = TruncatedOperator::new(kernel, f.geometry, *out_geometry, epsilons[0])?;
    let mut outputs = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        outputs.push(plan.apply(f, e)?);
    }
    let sup_differences: Vec<f64> = outputs
        .windows(2)
        .map(|w| w[0].sub(&w[1]).map(|d| d.sup_norm()))
        .collect::<Result<_>>()?;
    let h = f.geometry.h();
    let monotone_after_two = sup_differences.iter().skip(1).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0]);
    let report = ConvergenceReport {
        epsilons: epsilons.to_vec(),
        unreliable: epsilons.iter().map(|e| *e < h).collect(),
        below_recommended: epsilons.iter().map(|e| *e < 4.0 * h).collect(),
        sup_differences,
        monotone_after_two,
    };
    Ok((outputs.pop().expect("nonempty"), report))
}

/// Sampled multipliers `b_i`, zero outside `D_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierField<const D: usize> {
    pub geometry: GridGeometry<D>,
    /// `values[i][cell]` is `b_i` at the cell midpoint.
    pub values: Vec<Vec<f64>>,
    /// `covered[i][cell]`: whether the value is backed by a partition cube
    /// (always true for declared fields).
    pub covered: Vec<Vec<bool>>,
}

impl<const D: usize> MultiplierField<D> {
    /// Samples one function per branch at the midpoints lying in `D_i`.
    pub fn from_fns(
        curve: &HyperCurve<D>,
        geometry: GridGeometry<D>,
        fns: &[&dyn Fn(&Point<D>) -> f64],
    ) -> Result<Self> {
        if fns.len() != curve.branch_count() {
            return Err(Error::invalid(format!(
                "{} multipliers given for {} branches",
                fns.len(),
                curve.branch_count()
            )));
        }
        let points = geometry.midpoints();
        let mut values = Vec::with_capacity(fns.len());
        for (b, f) in curve.branches.iter().zip(fns) {
            let v: Vec<f64> = points
                .iter()
                .map(|p| if b.domain.contains(p) { f(p) } else { 0.0 })
                .collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("multiplier values must be finite"));
            }
            values.push(v);
        }
        Ok(MultiplierField {
            geometry,
            covered: vec![vec![true; geometry.len()]; fns.len()],
            values,
        })
    }

    pub fn branch(&self, i: usize) -> GridFunction<D> {
        GridFunction {
            geometry: self.geometry,
            values: self.values[i].clone(),
        }
    }
}

/// `x ↦ Σ_i b_i(x) f(γ_i(x)) χ_{D_i}(x)` on the multiplier grid, with
/// `f(γ_i(x))` read by multilinear interpolation (0 outside f's box).
pub fn apply_multiplier<const D: usize>(
    curve: &HyperCurve<D>,
    b: &MultiplierField<D>,
    f: &GridFunction<D>,
) -> Result<GridFunction<D>> {
    if b.values.len() != curve.branch_count() {
        return Err(Error::invalid("multiplier field does not match the curve"));
    }
    let out = crate::par::map_indices(b.geometry.len(), |k| {
        let x = b.geometry.midpoint(k);
        let mut acc = 0.0;
        for (i, br) in curve.branches.iter().enumerate() {
            let bi = b.values[i][k];
            if bi != 0.0 && br.domain.contains(&x) {
                acc += bi * f.interpolate(&br.forward(&x));
            }
        }
        acc
    });
    GridFunction::new(b.geometry, out)
}

/// Operators acting on grid functions.
pub enum OperatorHandle<'a, const D: usize> {
    Truncated {
        plan: &'a TruncatedOperator<'a, D>,
        epsilon: f64,
    },
    Multiplier {
        curve: &'a HyperCurve<D>,
        field: &'a MultiplierField<D>,
    },
    /// `Σ c_k T_k`.
    Combination(Vec<(f64, OperatorHandle<'a, D>)>),
    BlackBox(Box<dyn Fn(&GridFunction<D>) -> Result<GridFunction<D>> + Sync + 'a>),
}

impl<'a, const D: usize> OperatorHandle<'a, D> {
    pub fn apply(&self, f: &GridFunction<D>) -> Result<GridFunction<D>> {
        match self {
            OperatorHandle::Truncated { plan, epsilon } => plan.apply(f, *epsilon),
            OperatorHandle::Multiplier { curve, field } => apply_multiplier(curve, field, f),
            OperatorHandle::Combination(terms) => {
                let mut acc: Option<GridFunction<D>> = None;
                for (c, op) in terms {
                    let v = op.apply(f)?;
                    acc = Some(match acc {
                        None => v.scale(*c),
                        Some(a) => a.combine(1.0, &v, *c)?,
                    });
                }
                acc.ok_or_else(|| Error::invalid("empty operator combination"))
            }
            OperatorHandle::BlackBox(op) => op(f),
        }
    }
}

/// Recovers `b_i(x) = h_j(x)` where `γ_i(x) ∈ I_j` and
/// `h_j = difference(χ_{I_j})`, for every cube of the partition.
///
/// The indicator of `I_j` on `input` marks the cells whose midpoint the
/// partition assigns to `I_j`, so boundary midpoints belong to one cube only.
pub fn recover_multipliers<const D: usize>(
    difference: &OperatorHandle<'_, D>,
    curve: &HyperCurve<D>,
    partition: &BranchDisjointPartition<D>,
    input: &GridGeometry<D>,
    out_geometry: &GridGeometry<D>,
) -> Result<MultiplierField<D>> {
    let owner: Vec<Option<usize>> = crate::par::map_indices(input.len(), |k| partition.cube_of(&input.midpoint(k)));
    let outputs = out_geometry.midpoints();
    // (cube, branch) per output cell and branch
    let mut targets: Vec<Vec<Option<usize>>> = vec![vec![None; outputs.len()]; curve.branch_count()];
    for (k, x) in outputs.iter().enumerate() {
        let all = partition.lookup_all(curve, x);
        for w in all.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::AmbiguousLookup {
                    index: k,
                    cube: w[0].0,
                    first: w[0].1,
                    second: w[1].1,
                });
            }
        }
        for (j, i) in all {
            targets[i][k] = Some(j);
        }
    }

    let mut values = vec![vec![0.0; outputs.len()]; curve.branch_count()];
    for j in 0..partition.len() {
        let needed = targets.iter().any(|t| t.contains(&Some(j)));
        if !needed {
            continue;
        }
        let chi = GridFunction::new(
            *input,
            owner.iter().map(|o| if *o == Some(j) { 1.0 } else { 0.0 }).collect(),
        )?;
        let h = difference.apply(&chi)?;
        if h.geometry != *out_geometry {
            return Err(Error::IncompatibleGrids);
        }
        for (i, t) in targets.iter().enumerate() {
            for (k, tk) in t.iter().enumerate() {
                if *tk == Some(j) {
                    values[i][k] = h.values[k];
                }
            }
        }
    }
    let covered = targets
        .iter()
        .map(|t| t.iter().map(Option::is_some).collect())
        .collect();
    Ok(MultiplierField {
        geometry: *out_geometry,
        values,
        covered,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierBound {
    /// `sup |b_i|² / |J_{γ_i}|` over the samples in `D_i`, per branch.
    pub per_branch: Vec<f64>,
    pub cap: f64,
    pub passed: bool,
}

/// Checks `|b_i(x)|² |J_{γ_i}(x)|^{-1} ≤ cap` at every sample in `D_i`. A
/// nonzero multiplier on a flat branch gives an infinite supremum.
pub fn multiplier_bound_check<const D: usize>(
    curve: &HyperCurve<D>,
    b: &MultiplierField<D>,
    cap: f64,
) -> Result<MultiplierBound> {
    if !(cap > 0.0) {
        return Err(Error::invalid("cap must be positive"));
    }
    if b.values.len() != curve.branch_count() {
        return Err(Error::invalid("multiplier field does not match the curve"));
    }
    let mut per_branch = Vec::with_capacity(curve.branch_count());
    for (i, br) in curve.branches.iter().enumerate() {
        let mut sup = 0.0f64;
        for (k, v) in b.values[i].iter().enumerate() {
            let x = b.geometry.midpoint(k);
            if *v == 0.0 || !br.domain.contains(&x) {
                continue;
            }
            let j = br.map.jacobian(&x).abs();
            sup = sup.max(if j == 0.0 { f64::INFINITY } else { v * v / j });
        }
        per_branch.push(sup);
    }
    let passed = per_branch.iter().all(|s| *s <= cap);
    Ok(MultiplierBound {
        per_branch,
        cap,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;
    use crate::geometry::Aabb;
    use crate::kernel::{hilbert, two_line_hilbert};
    use crate::math::{ln, sin};

    #[test]
    fn principal_value_at_two() {
        let k = two_line_hilbert();
        let geo = GridGeometry::symmetric(8.0, 1 << 12).unwrap();
        let f = GridFunction::from_fn(geo, |p| if p[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let out = GridGeometry::new(Aabb::new([1.75], [2.25]), 1).unwrap();
        let v = apply_truncated(&k, &f, 1e-3, &out).unwrap();
        assert!((v.values[0] - 2.0 * ln(3.0)).abs() < 1e-2);
    }

    #[test]
    fn odd_functions_are_annihilated() {
        let k = two_line_hilbert();
        let geo = GridGeometry::symmetric(4.0, 64).unwrap();
        let f = GridFunction::from_fn(geo, |p| p[0] * crate::math::exp(-p[0] * p[0])).unwrap();
        let plan = TruncatedOperator::new(&k, geo, geo, 0.5).unwrap();
        for e in [0.5, 0.1] {
            assert!(plan.apply(&f, e).unwrap().sup_norm() <= 1e-12 * f.sup_norm());
        }
    }

    #[test]
    fn constant_under_hilbert_cancels_at_the_center() {
        let k = hilbert();
        let geo = GridGeometry::symmetric(2.0, 64).unwrap();
        let f = GridFunction::from_fn(geo, |_| 1.0).unwrap();
        let out = GridGeometry::symmetric(0.01, 1).unwrap();
        let v = apply_truncated(&k, &f, 0.1, &out).unwrap();
        assert!(v.values[0].abs() <= 1e-10);
    }

    #[test]
    fn zero_input_and_bad_epsilons() {
        let k = two_line_hilbert();
        let geo = GridGeometry::symmetric(2.0, 16).unwrap();
        let z = GridFunction::zeros(geo);
        let (out, rep) = estimate_t0(&k, &z, &[0.5, 0.25, 0.125], &geo).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
        assert!(rep.sup_differences.iter().all(|d| *d == 0.0));
        assert!(estimate_t0(&k, &z, &[0.25, 0.5], &geo).is_err());
        assert!(apply_truncated(&k, &z, 0.0, &geo).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let t = curves::two_lines::<1>();
        let geo = GridGeometry::symmetric(4.0, 32).unwrap();
        let f = GridFunction::from_fn(geo, |p| p[0] * p[0] * p[0] + 1.0).unwrap();
        let one = |_: &Point<1>| 1.0;
        let zero = |_: &Point<1>| 0.0;
        let id = MultiplierField::from_fns(&t, geo, &[&one, &zero]).unwrap();
        assert_eq!(apply_multiplier(&t, &id, &f).unwrap(), f);
        let flip = MultiplierField::from_fns(&t, geo, &[&zero, &one]).unwrap();
        assert_eq!(apply_multiplier(&t, &flip, &f).unwrap(), f.reflect());

        let r = multiplier_bound_check(&t, &id, 1.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.per_branch, vec![1.0, 0.0]);
        let grow = |p: &Point<1>| p[0];
        let g = MultiplierField::from_fns(&t, GridGeometry::symmetric(8.0, 256).unwrap(), &[&grow, &zero]).unwrap();
        let r = multiplier_bound_check(&t, &g, 1.0).unwrap();
        assert!(!r.passed);
        assert!((r.per_branch[0] - 64.0).abs() < 1.0);
    }

    #[test]
    fn diamond_multiplier_is_one_inside() {
        let d = curves::diamond();
        let geo = GridGeometry::symmetric(2.0, 64).unwrap();
        let f = GridFunction::from_fn(geo, |p| if (0.0..=1.0).contains(&p[0]) { 1.0 } else { 0.0 }).unwrap();
        let one = |_: &Point<1>| 1.0;
        let zero = |_: &Point<1>| 0.0;
        let b = MultiplierField::from_fns(&d, geo, &[&one, &one, &one, &one, &zero]).unwrap();
        let out = apply_multiplier(&d, &b, &f).unwrap();
        for (k, v) in out.values.iter().enumerate() {
            let x = geo.midpoint(k)[0];
            if x.abs() < 0.9 {
                assert_eq!(*v, 1.0, "x = {x}");
            }
        }
    }

    #[test]
    fn recovery_round_trip() {
        let t = curves::two_lines::<1>();
        let geo = GridGeometry::symmetric(4.0, 64).unwrap();
        let part = crate::partition::build_partition(&t, &Aabb::symmetric(4.0), 6).unwrap();
        let one = |_: &Point<1>| 1.0;
        let s = |p: &Point<1>| sin(p[0]);
        let declared = MultiplierField::from_fns(&t, geo, &[&one, &s]).unwrap();
        let op = OperatorHandle::Multiplier {
            curve: &t,
            field: &declared,
        };
        let rec = recover_multipliers(&op, &t, &part, &geo, &geo).unwrap();
        for i in 0..2 {
            for k in 0..geo.len() {
                if rec.covered[i][k] {
                    assert!((rec.values[i][k] - declared.values[i][k]).abs() <= 1e-12);
                }
            }
        }
        let zero = OperatorHandle::BlackBox(Box::new(|f: &GridFunction<1>| Ok(GridFunction::zeros(f.geometry))));
        let rec = recover_multipliers(&zero, &t, &part, &geo, &geo).unwrap();
        assert!(rec.values.iter().flatten().all(|v| *v == 0.0));
    }
}
