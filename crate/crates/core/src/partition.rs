//! Dyadic partitions of the curve range on which distinct branches have
//! disjoint preimages.
//!
//! In one dimension each branch is monotone on every box of its domain, so
//! the preimage of a closed interval is computed exactly as one interval per
//! box. In higher dimensions preimage boxes come from inverting a lattice on
//! the cube and overlaps are resolved by sampling, which is probabilistic.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, CurveBranch, DyadicCube, HyperCurve, Point};
use crate::math::{ceil, exp2i, floor};

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDisjointPartition<const D: usize> {
    pub region: Aabb<D>,
    pub max_depth: u32,
    /// Accepted cubes ordered by `(level, corner)`.
    pub cubes: Vec<DyadicCube<D>>,
    /// Branches whose preimage of the cube has positive measure.
    pub owners: Vec<Vec<usize>>,
    /// Cubes still failing at `max_depth`.
    pub leftover: Vec<DyadicCube<D>>,
    /// Measure of `leftover` inside `region`.
    pub leftover_measure: f64,
    pub exceptional_points: Vec<Point<D>>,
    /// Whether the disjointness test was exact (one dimension) or sampled.
    pub exact_test: bool,
    index: BTreeMap<DyadicCube<D>, usize>,
}

/// The preimage of a closed cube under one branch, as a list of boxes. In one
/// dimension the boxes are the exact preimage intervals; otherwise they are
/// bounding boxes.
fn preimage_boxes<const D: usize>(b: &CurveBranch<D>, cube: &Aabb<D>) -> Vec<Aabb<D>> {
    if let Some(v) = b.map.constant_value() {
        return if cube.contains(&v) {
            b.domain.boxes().to_vec()
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    for dom in b.domain.boxes() {
        let mut hull: Option<Aabb<D>> = None;
        let mut add = |p: Point<D>| {
            let single = Aabb::new(p, p);
            hull = Some(match hull {
                Some(h) => h.hull(&single),
                None => single,
            });
        };
        for y in face_samples(cube) {
            if let Some(x) = b.map.inverse(&y) {
                if crate::math::is_finite_point(&x) && dom.distance(&x) <= 1e-12 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                    add(dom.clamp(&x));
                }
            }
        }
        // domain corners mapped into the cube
        for corner in box_corners(dom) {
            if crate::math::is_finite_point(&corner) && cube.contains(&b.forward(&corner)) {
                add(corner);
            }
        }
        if let Some(h) = hull {
            out.push(h);
        }
    }
    out
}

/// Corners in one dimension; otherwise a lattice with 2^6 points per axis on
/// every face.
fn face_samples<const D: usize>(cube: &Aabb<D>) -> Vec<Point<D>> {
    if D == 1 {
        return vec![cube.lo, cube.hi];
    }
    const PER_AXIS: usize = 1 << 6;
    let mut out = Vec::new();
    for fixed in 0..D {
        for side in [cube.lo[fixed], cube.hi[fixed]] {
            let free = D - 1;
            let total = PER_AXIS.pow(free as u32);
            for mut flat in 0..total {
                let mut p = [0.0; D];
                p[fixed] = side;
                for k in (0..D).filter(|&k| k != fixed) {
                    let i = flat % PER_AXIS;
                    flat /= PER_AXIS;
                    let t = i as f64 / (PER_AXIS - 1) as f64;
                    p[k] = cube.lo[k] + t * (cube.hi[k] - cube.lo[k]);
                }
                out.push(p);
            }
        }
    }
    out
}

fn box_corners<const D: usize>(b: &Aabb<D>) -> Vec<Point<D>> {
    (0..1usize << D)
        .map(|mask| {
            let mut p = [0.0; D];
            for k in 0..D {
                p[k] = if (mask >> k) & 1 == 1 { b.hi[k] } else { b.lo[k] };
            }
            p
        })
        .collect()
}

fn has_positive_measure<const D: usize>(boxes: &[Aabb<D>]) -> bool {
    boxes.iter().any(|b| b.volume() > 0.0)
}

fn boxes_overlap<const D: usize>(a: &[Aabb<D>], b: &[Aabb<D>]) -> Option<Aabb<D>> {
    for p in a {
        for q in b {
            if let Some(i) = p.intersect(q) {
                return Some(i);
            }
        }
    }
    None
}

const FINE_SAMPLES: usize = 4096;

/// Whether the preimages of the closed cube under distinct branches are
/// pairwise disjoint.
pub fn disjoint_preimage_test<const D: usize>(curve: &HyperCurve<D>, cube: &DyadicCube<D>) -> bool {
    let bounds = cube.bounds();
    let pre: Vec<Vec<Aabb<D>>> = curve.branches.iter().map(|b| preimage_boxes(b, &bounds)).collect();
    pairwise_disjoint(curve, &bounds, &pre)
}

fn pairwise_disjoint<const D: usize>(curve: &HyperCurve<D>, cube: &Aabb<D>, pre: &[Vec<Aabb<D>>]) -> bool {
    for i in 0..pre.len() {
        for j in i + 1..pre.len() {
            let Some(overlap) = boxes_overlap(&pre[i], &pre[j]) else {
                continue;
            };
            if D == 1 {
                return false;
            }
            // bounding boxes meet: look for a common point
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ ((i as u64) << 32) ^ j as u64);
            let (bi, bj) = (&curve.branches[i], &curve.branches[j]);
            for _ in 0..FINE_SAMPLES {
                let x = overlap.sample(&mut rng);
                if bi.domain.contains(&x)
                    && bj.domain.contains(&x)
                    && cube.contains(&bi.forward(&x))
                    && cube.contains(&bj.forward(&x))
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Splits dyadic cubes meeting `region` and the curve range until each is
/// free of exceptional points and passes [`disjoint_preimage_test`].
pub fn build_partition<const D: usize>(
    curve: &HyperCurve<D>,
    region: &Aabb<D>,
    max_depth: u32,
) -> Result<BranchDisjointPartition<D>> {
    if !region.is_bounded() || region.is_empty() {
        return Err(Error::invalid("partition region must be bounded and nonempty"));
    }
    let mut lo = [0i64; D];
    let mut hi = [0i64; D];
    for k in 0..D {
        lo[k] = floor(region.lo[k]) as i64;
        hi[k] = (ceil(region.hi[k]) as i64).max(lo[k] + 1);
    }
    let mut frontier = Vec::new();
    let mut corner = lo;
    'outer: loop {
        frontier.push(DyadicCube::new(0, corner));
        let mut k = D;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            corner[k] += 1;
            if corner[k] < hi[k] {
                break;
            }
            corner[k] = lo[k];
        }
    }

    let mut cubes = Vec::new();
    let mut owners = Vec::new();
    let mut leftover = Vec::new();
    for depth in 0..=max_depth as i32 {
        let decided = crate::par::map_indices(frontier.len(), |k| classify(curve, region, &frontier[k]));
        let mut next = Vec::new();
        for (cube, verdict) in frontier.iter().zip(decided) {
            match verdict {
                Verdict::Drop => {}
                Verdict::Accept(o) => {
                    cubes.push(*cube);
                    owners.push(o);
                }
                Verdict::Split if depth == max_depth as i32 => leftover.push(*cube),
                Verdict::Split => next.extend(cube.children()),
            }
        }
        frontier = next;
    }

    let leftover_measure = leftover
        .iter()
        .map(|c| c.bounds().intersect(region).map_or(0.0, |b| b.volume()))
        .sum();
    let index = cubes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    Ok(BranchDisjointPartition {
        region: *region,
        max_depth,
        cubes,
        owners,
        leftover,
        leftover_measure,
        exceptional_points: curve.intersection_points.clone(),
        exact_test: D == 1,
        index,
    })
}

enum Verdict {
    Drop,
    Accept(Vec<usize>),
    Split,
}

fn classify<const D: usize>(curve: &HyperCurve<D>, region: &Aabb<D>, cube: &DyadicCube<D>) -> Verdict {
    let bounds = cube.bounds();
    match bounds.intersect(region) {
        Some(b) if b.volume() > 0.0 => {}
        _ => return Verdict::Drop,
    }
    let pre: Vec<Vec<Aabb<D>>> = curve.branches.iter().map(|b| preimage_boxes(b, &bounds)).collect();
    let owners: Vec<usize> = (0..pre.len()).filter(|&i| has_positive_measure(&pre[i])).collect();
    if owners.is_empty() {
        return Verdict::Drop;
    }
    let exceptional = curve.intersection_points.iter().any(|y| bounds.contains(y));
    if exceptional || !pairwise_disjoint(curve, &bounds, &pre) {
        return Verdict::Split;
    }
    Verdict::Accept(owners)
}

impl<const D: usize> BranchDisjointPartition<D> {
    /// Lowest index of an accepted closed cube holding `y`.
    pub fn cube_of(&self, y: &Point<D>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for level in 0..=self.max_depth as i32 {
            let scale = exp2i(level);
            let base = DyadicCube::containing(level, y);
            // on a face the neighbouring cube also holds y
            for mask in 0..(1usize << D) {
                let mut corner = base.corner;
                let mut valid = true;
                for k in 0..D {
                    if (mask >> k) & 1 == 1 {
                        if y[k] * scale == corner[k] as f64 {
                            corner[k] -= 1;
                        } else {
                            valid = false;
                        }
                    }
                }
                if !valid {
                    continue;
                }
                if let Some(&j) = self.index.get(&DyadicCube::new(level, corner)) {
                    best = Some(best.map_or(j, |b| b.min(j)));
                }
            }
        }
        best
    }

    /// Every `(cube, branch)` with `x ∈ γ_i^{-1}(I_j)`, ordered by cube then
    /// branch.
    pub fn lookup_all(&self, curve: &HyperCurve<D>, x: &Point<D>) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = curve
            .branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.domain.contains(x))
            .filter_map(|(i, b)| self.cube_of(&b.forward(x)).map(|j| (j, i)))
            .collect();
        out.sort_unstable();
        out
    }

    /// The cube `j` with `γ_i(x) ∈ I_j`, if `x ∈ D_i`.
    pub fn lookup_branch(&self, curve: &HyperCurve<D>, i: usize, x: &Point<D>) -> Result<Option<usize>> {
        let b = curve.branch(i)?;
        if !b.domain.contains(x) {
            return Ok(None);
        }
        Ok(self.cube_of(&b.forward(x)))
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// The `(cube, branch)` pair holding `x` with the lowest cube index, or
/// `None` when `x ∉ γ^{-1}(⋃ I_j)`. Two branches reaching the same cube is an
/// [`Error::AmbiguousLookup`].
pub fn induced_map_lookup<const D: usize>(
    partition: &BranchDisjointPartition<D>,
    curve: &HyperCurve<D>,
    x: &Point<D>,
) -> Result<Option<(usize, usize)>> {
    let all = partition.lookup_all(curve, x);
    for w in all.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::AmbiguousLookup {
                index: 0,
                cube: w[0].0,
                first: w[0].1,
                second: w[1].1,
            });
        }
    }
    Ok(all.first().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;

    #[test]
    fn disjointness_examples() {
        let t = curves::two_lines::<1>();
        assert!(disjoint_preimage_test(&t, &DyadicCube::new(0, [1])));
        // [-1, 1] is not dyadic; its halves both contain 0 in both preimages
        assert!(!disjoint_preimage_test(&t, &DyadicCube::new(0, [0])));
        assert!(!disjoint_preimage_test(&t, &DyadicCube::new(0, [-1])));
        let d = curves::diamond();
        // [0.25, 0.5]
        assert!(disjoint_preimage_test(&d, &DyadicCube::new(2, [1])));
        let pre = preimage_boxes(&d.branches[0], &DyadicCube::<1>::new(2, [1]).bounds());
        assert_eq!(pre, vec![Aabb::new([0.5], [0.75])]);
        let pre = preimage_boxes(&d.branches[1], &DyadicCube::<1>::new(2, [1]).bounds());
        assert_eq!(pre, vec![Aabb::new([-0.75], [-0.5])]);
    }

    #[test]
    fn diagonal_never_splits() {
        let c = curves::diagonal::<1>();
        let p = build_partition(&c, &Aabb::symmetric(4.0), 0).unwrap();
        assert_eq!(p.cubes.len(), 8);
        assert!(p.cubes.iter().all(|c| c.level == 0));
        assert_eq!(p.leftover_measure, 0.0);
    }

    #[test]
    fn two_lines_partition_avoids_zero() {
        let t = curves::two_lines::<1>();
        let p = build_partition(&t, &Aabb::symmetric(4.0), 6).unwrap();
        for c in &p.cubes {
            assert!(!c.bounds().contains(&[0.0]));
        }
        assert_eq!(p.leftover.len(), 2);
        assert_eq!(p.leftover_measure, 2.0 * exp2i(-6));
        let j = p.cubes.iter().position(|c| *c == DyadicCube::new(0, [1])).unwrap();
        let jm = p.cubes.iter().position(|c| *c == DyadicCube::new(0, [-2])).unwrap();
        assert_eq!(p.lookup_all(&t, &[1.5]), vec![(jm, 1), (j, 0)]);
        assert_eq!(induced_map_lookup(&p, &t, &[1.5]).unwrap(), Some((jm, 1)));
        assert_eq!(p.lookup_branch(&t, 0, &[1.5]).unwrap(), Some(j));
        assert_eq!(p.lookup_branch(&t, 1, &[-1.5]).unwrap(), Some(j));
        assert_eq!(p.lookup_branch(&t, 0, &[9.0]).unwrap(), None);
    }

    #[test]
    fn cubes_are_sorted_and_disjoint() {
        let d = curves::diamond();
        let p = build_partition(&d, &Aabb::symmetric(2.0), 8).unwrap();
        assert!(p.cubes.windows(2).all(|w| w[0] < w[1]));
        for (a, ca) in p.cubes.iter().enumerate() {
            for cb in &p.cubes[a + 1..] {
                assert!(!ca.interiors_intersect(cb));
            }
        }
        assert!(p.leftover_measure <= 6.0 * exp2i(-8));
        assert!(p.leftover_measure > 0.0);
    }

    #[test]
    fn lookup_outside_region_is_none() {
        let c = curves::diagonal::<1>();
        let p = build_partition(&c, &Aabb::symmetric(4.0), 0).unwrap();
        assert_eq!(induced_map_lookup(&p, &c, &[10.0]).unwrap(), None);
        // the face point 1 belongs to [0,1] and [1,2]; the lower index wins
        let j = p.cube_of(&[1.0]).unwrap();
        assert_eq!(p.cubes[j], DyadicCube::new(0, [0]));
    }
}
