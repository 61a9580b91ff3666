//! Standard hyper curves and the cubes they are measured against.
//!
//! A curve is a list of branches `γ_i : D_i → R^n`. Domains are finite unions
//! of closed axis-aligned boxes whose bounds may be infinite, so the nearest
//! domain point ξ_{i,x} is an exact clamp. The nearest range point η_{i,y} has
//! no closed form in general and is found by a sampled search.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{dist, dist_sq, exp2i, floor, is_finite_point, lex_cmp, powf};
use crate::search::{minimize_in_box, Candidate};

pub use crate::math::Point;
pub use crate::search::SearchSettings;

/// Closed axis-aligned box. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<const D: usize> {
    pub lo: Point<D>,
    pub hi: Point<D>,
}

impl<const D: usize> Aabb<D> {
    pub fn new(lo: Point<D>, hi: Point<D>) -> Self {
        Aabb { lo, hi }
    }

    pub fn whole() -> Self {
        Aabb {
            lo: [f64::NEG_INFINITY; D],
            hi: [f64::INFINITY; D],
        }
    }

    /// `[-half, half]^D`.
    pub fn symmetric(half: f64) -> Self {
        Aabb {
            lo: [-half; D],
            hi: [half; D],
        }
    }

    pub fn around(center: &Point<D>, half: f64) -> Self {
        let mut b = Aabb {
            lo: *center,
            hi: *center,
        };
        for k in 0..D {
            b.lo[k] -= half;
            b.hi[k] += half;
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        (0..D).any(|k| !(self.lo[k] <= self.hi[k]))
    }

    pub fn is_bounded(&self) -> bool {
        (0..D).all(|k| self.lo[k].is_finite() && self.hi[k].is_finite())
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|k| self.lo[k] <= p[k] && p[k] <= self.hi[k])
    }

    pub fn interior_contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|k| self.lo[k] < p[k] && p[k] < self.hi[k])
    }

    pub fn clamp(&self, p: &Point<D>) -> Point<D> {
        let mut q = *p;
        for k in 0..D {
            q[k] = q[k].max(self.lo[k]).min(self.hi[k]);
        }
        q
    }

    pub fn distance(&self, p: &Point<D>) -> f64 {
        dist(p, &self.clamp(p))
    }

    pub fn intersect(&self, other: &Aabb<D>) -> Option<Aabb<D>> {
        let mut b = *self;
        for k in 0..D {
            b.lo[k] = b.lo[k].max(other.lo[k]);
            b.hi[k] = b.hi[k].min(other.hi[k]);
        }
        (!b.is_empty()).then_some(b)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Aabb<D>) -> Aabb<D> {
        let mut b = *self;
        for k in 0..D {
            b.lo[k] = b.lo[k].min(other.lo[k]);
            b.hi[k] = b.hi[k].max(other.hi[k]);
        }
        b
    }

    pub fn dilate(&self, by: f64) -> Aabb<D> {
        let mut b = *self;
        for k in 0..D {
            b.lo[k] -= by;
            b.hi[k] += by;
        }
        b
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..D).map(|k| self.hi[k] - self.lo[k]).product()
    }

    pub fn center(&self) -> Point<D> {
        let mut c = [0.0; D];
        for k in 0..D {
            c[k] = 0.5 * (self.lo[k] + self.hi[k]);
        }
        c
    }

    /// Uniform sample; the box must be bounded.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point<D> {
        let mut p = [0.0; D];
        for k in 0..D {
            let u: f64 = rng.random();
            p[k] = self.lo[k] + u * (self.hi[k] - self.lo[k]);
        }
        p
    }
}

/// A finite union of closed boxes: the shape of every branch domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<const D: usize> {
    boxes: Vec<Aabb<D>>,
}

impl<const D: usize> Region<D> {
    pub fn new(boxes: Vec<Aabb<D>>) -> Result<Self> {
        if boxes.is_empty() || boxes.iter().any(Aabb::is_empty) {
            return Err(Error::invalid("a region needs at least one nonempty box"));
        }
        Ok(Region { boxes })
    }

    pub fn single(b: Aabb<D>) -> Self {
        Region { boxes: vec![b] }
    }

    pub fn whole() -> Self {
        Region::single(Aabb::whole())
    }

    pub fn boxes(&self) -> &[Aabb<D>] {
        &self.boxes
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    pub fn interior_contains(&self, p: &Point<D>) -> bool {
        self.boxes.iter().any(|b| b.interior_contains(p))
    }

    /// argmin over the region of `|p - q|`; ties go to the lexicographically
    /// smaller point.
    pub fn nearest_point(&self, p: &Point<D>) -> Point<D> {
        let mut best = self.boxes[0].clamp(p);
        let mut best_d = dist_sq(p, &best);
        for b in &self.boxes[1..] {
            let q = b.clamp(p);
            let d = dist_sq(p, &q);
            if d < best_d || (d == best_d && lex_cmp(&q, &best) == Ordering::Less) {
                best = q;
                best_d = d;
            }
        }
        best
    }

    pub fn distance(&self, p: &Point<D>) -> f64 {
        dist(p, &self.nearest_point(p))
    }

    /// The parts of the region inside `window`.
    pub fn clip(&self, window: &Aabb<D>) -> Vec<Aabb<D>> {
        self.boxes.iter().filter_map(|b| b.intersect(window)).collect()
    }

    /// Uniform sample from the region restricted to the bounded `window`.
    pub fn sample_within<R: Rng + ?Sized>(&self, window: &Aabb<D>, rng: &mut R) -> Option<Point<D>> {
        let parts = self.clip(window);
        if parts.is_empty() {
            return None;
        }
        let total: f64 = parts.iter().map(Aabb::volume).sum();
        let chosen = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = parts.len() - 1;
            for (j, b) in parts.iter().enumerate() {
                let v = b.volume();
                if t < v {
                    pick = j;
                    break;
                }
                t -= v;
            }
            pick
        } else {
            rng.random_range(0..parts.len())
        };
        Some(parts[chosen].sample(rng))
    }
}

/// An evaluable branch map `γ_i`. Implementations are compiled in; the curve
/// audits the declared constants with [`HyperCurve::validate`].
pub trait BranchMap<const D: usize>: Send + Sync {
    fn forward(&self, x: &Point<D>) -> Point<D>;

    /// Inverse formula. The caller rejects results outside the domain, so the
    /// formula need not check the range itself. `None` for flat maps.
    fn inverse(&self, y: &Point<D>) -> Option<Point<D>>;

    /// Determinant of the Jacobian at an interior point.
    fn jacobian(&self, x: &Point<D>) -> f64;

    /// `Some(value)` for a constant map. Such a branch has a single range
    /// point whose preimage is its whole domain.
    fn constant_value(&self) -> Option<Point<D>> {
        None
    }
}

/// One branch `γ_i : D_i → R^n` with its declared Lipschitz bound.
#[derive(Clone)]
pub struct CurveBranch<const D: usize> {
    pub map: Arc<dyn BranchMap<D>>,
    pub domain: Region<D>,
    pub lipschitz: f64,
}

impl<const D: usize> fmt::Debug for CurveBranch<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveBranch")
            .field("domain", &self.domain)
            .field("lipschitz", &self.lipschitz)
            .field("flat", &self.is_flat())
            .finish()
    }
}

impl<const D: usize> CurveBranch<D> {
    pub fn new(map: Arc<dyn BranchMap<D>>, domain: Region<D>, lipschitz: f64) -> Self {
        CurveBranch {
            map,
            domain,
            lipschitz,
        }
    }

    #[inline]
    pub fn forward(&self, x: &Point<D>) -> Point<D> {
        self.map.forward(x)
    }

    pub fn is_flat(&self) -> bool {
        self.map.constant_value().is_some()
    }

    /// `γ_i^{-1}(y)` when `y` lies in the range, otherwise `None`.
    pub fn inverse(&self, y: &Point<D>) -> Option<Point<D>> {
        let x = self.map.inverse(y)?;
        if !is_finite_point(&x) {
            return None;
        }
        let q = self.domain.nearest_point(&x);
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (dist(&x, &q) <= 1e-12 * scale).then_some(q)
    }
}

/// The outcome of [`HyperCurve::range_projection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeProjection<const D: usize> {
    /// A domain point with `γ_i(param) = point`.
    pub param: Point<D>,
    /// η_{i,y}, the nearest point of `γ_i(D_i)`.
    pub point: Point<D>,
}

/// A standard hyper curve: branches, the shared constant c_γ and the finite
/// set Y where two branches agree.
#[derive(Debug, Clone)]
pub struct HyperCurve<const D: usize> {
    pub name: String,
    pub branches: Vec<CurveBranch<D>>,
    pub c_gamma: f64,
    pub intersection_points: Vec<Point<D>>,
    /// Where unbounded domains are sampled by audits.
    pub sampling_box: Aabb<D>,
    pub rho_search: SearchSettings,
    pub range_search: SearchSettings,
}

/// c_γ must exceed 1; curves with isometric branches store this.
pub const MIN_C_GAMMA: f64 = 1.0 + 1e-9;

impl<const D: usize> HyperCurve<D> {
    pub fn new(
        name: impl Into<String>,
        branches: Vec<CurveBranch<D>>,
        intersection_points: Vec<Point<D>>,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::invalid("a curve needs at least one branch"));
        }
        if let Some(b) = branches
            .iter()
            .find(|b| !(b.lipschitz > 0.0 && b.lipschitz.is_finite()))
        {
            return Err(Error::invalid(alloc::format!(
                "declared Lipschitz bound {} is not a positive number",
                b.lipschitz
            )));
        }
        if intersection_points.iter().any(|p| !is_finite_point(p)) {
            return Err(Error::invalid("intersection points must be finite"));
        }
        let c_gamma = branches
            .iter()
            .fold(MIN_C_GAMMA, |m, b| m.max(b.lipschitz));
        Ok(HyperCurve {
            name: name.into(),
            branches,
            c_gamma,
            intersection_points,
            sampling_box: Aabb::symmetric(32.0),
            rho_search: SearchSettings::for_dimension(D, 60),
            range_search: SearchSettings::for_dimension(D, 60),
        })
    }

    pub fn with_sampling_box(mut self, b: Aabb<D>) -> Self {
        self.sampling_box = b;
        self
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn branch(&self, i: usize) -> Result<&CurveBranch<D>> {
        self.branches.get(i).ok_or(Error::NoSuchBranch {
            branch: i,
            count: self.branches.len(),
        })
    }

    pub fn has_flat_branch(&self) -> bool {
        self.branches.iter().any(CurveBranch::is_flat)
    }

    /// `γ_i(x)` for `x ∈ D_i`.
    pub fn branch_eval(&self, i: usize, x: &Point<D>) -> Result<Point<D>> {
        let b = self.branch(i)?;
        check_finite(x)?;
        if !b.domain.contains(x) {
            return Err(Error::OutsideDomain { branch: i });
        }
        Ok(b.forward(x))
    }

    /// `γ_i^{-1}(y)` for `y ∈ γ_i(D_i)`.
    pub fn branch_inverse(&self, i: usize, y: &Point<D>) -> Result<Point<D>> {
        let b = self.branch(i)?;
        check_finite(y)?;
        if b.is_flat() {
            return Err(Error::NotInvertible { branch: i });
        }
        b.inverse(y).ok_or(Error::OutsideRange { branch: i })
    }

    /// ξ_{i,x}: the point of `D_i` closest to `x`.
    pub fn nearest_domain_point(&self, i: usize, x: &Point<D>) -> Result<Point<D>> {
        Ok(self.branch(i)?.domain.nearest_point(x))
    }

    /// η_{i,y}: the point of `γ_i(D_i)` closest to `y`.
    pub fn nearest_range_point(&self, i: usize, y: &Point<D>) -> Result<Point<D>> {
        Ok(self.range_projection(i, y)?.point)
    }

    /// η_{i,y} together with a parameter mapping onto it.
    ///
    /// The search starts from `x0 = ξ_{i,y}` with `U = |y - γ_i(x0)|`. Any
    /// better parameter `x'` has `|γ_i(x') - γ_i(x0)| ≤ 2U`, hence
    /// `|x' - x0| ≤ 2·lip·U` by the inverse Lipschitz bound, and only that
    /// window is sampled.
    pub fn range_projection(&self, i: usize, y: &Point<D>) -> Result<RangeProjection<D>> {
        let b = self.branch(i)?;
        Ok(self.range_projection_of(b, y))
    }

    pub(crate) fn range_projection_of(&self, b: &CurveBranch<D>, y: &Point<D>) -> RangeProjection<D> {
        if let Some(v) = b.map.constant_value() {
            return RangeProjection {
                param: b.domain.nearest_point(y),
                point: v,
            };
        }
        let x0 = b.domain.nearest_point(y);
        let start = dist_sq(y, &b.forward(&x0));
        let mut best = Candidate::at(x0, start);
        if start > 0.0 {
            let radius = 2.0 * b.lipschitz * crate::math::sqrt(start);
            let window = Aabb::around(&x0, radius);
            let objective = |p: &Point<D>| dist_sq(y, &b.forward(p));
            for part in b.domain.clip(&window) {
                minimize_in_box(&part, &self.range_search, &objective, &mut best);
            }
        }
        RangeProjection {
            param: best.param,
            point: b.forward(&best.param),
        }
    }

    /// det J_{γ_i}(x) at an interior point of `D_i`.
    pub fn branch_jacobian(&self, i: usize, x: &Point<D>) -> Result<f64> {
        let b = self.branch(i)?;
        check_finite(x)?;
        if !b.domain.interior_contains(x) {
            return Err(Error::OutsideDomain { branch: i });
        }
        let j = b.map.jacobian(x);
        if j == 0.0 || !j.is_finite() {
            return Err(Error::ZeroJacobian { branch: i });
        }
        Ok(j)
    }

    /// Audits the declared constants on `sample_count` random pairs per
    /// branch drawn from `D_i ∩ sampling_box`.
    ///
    /// Flat branches have neither an inverse nor a nonzero Jacobian; they are
    /// reported as degenerate and only their forward Lipschitz bound is
    /// audited.
    pub fn validate(&self, sample_count: usize, seed: u64) -> Result<ValidationReport<D>> {
        if sample_count < 2 {
            return Err(Error::invalid("validation needs at least 2 samples"));
        }
        let limit = self.c_gamma * (1.0 + 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut branches = Vec::with_capacity(self.branches.len());
        let mut failure = None;

        for (i, b) in self.branches.iter().enumerate() {
            let flat = b.is_flat();
            let mut v = BranchValidation {
                branch: i,
                degenerate: flat,
                max_forward_ratio: 0.0,
                max_inverse_ratio: if flat { None } else { Some(0.0) },
                min_abs_jacobian: if flat { None } else { Some(f64::INFINITY) },
                max_round_trip_error: if flat { None } else { Some(0.0) },
                forward_witness: None,
                inverse_witness: None,
            };
            let mut first_bad: Option<ValidationFailure<D>> = None;
            for _ in 0..sample_count {
                let Some(x) = b.domain.sample_within(&self.sampling_box, &mut rng) else {
                    break;
                };
                let x2 = if rng.random::<bool>() {
                    b.domain.sample_within(&self.sampling_box, &mut rng).unwrap_or(x)
                } else {
                    let scale = powf(10.0, -3.0 * rng.random::<f64>());
                    let mut q = x;
                    for c in q.iter_mut() {
                        *c += scale * (2.0 * rng.random::<f64>() - 1.0);
                    }
                    b.domain.nearest_point(&q)
                };
                let dx = dist(&x, &x2);
                if dx == 0.0 {
                    continue;
                }
                let y = b.forward(&x);
                let y2 = b.forward(&x2);
                let dy = dist(&y, &y2);
                let fr = dy / dx;
                if fr > v.max_forward_ratio {
                    v.max_forward_ratio = fr;
                    v.forward_witness = Some((x, x2));
                }
                if fr > limit && first_bad.is_none() {
                    first_bad = Some(ValidationFailure {
                        branch: i,
                        condition: Condition::ForwardLipschitz,
                        witness: (x, x2),
                        value: fr,
                    });
                }
                if flat {
                    continue;
                }
                if dy > 0.0 {
                    let ir = dx / dy;
                    if ir > v.max_inverse_ratio.unwrap_or(0.0) {
                        v.max_inverse_ratio = Some(ir);
                        v.inverse_witness = Some((x, x2));
                    }
                    if ir > limit && first_bad.is_none() {
                        first_bad = Some(ValidationFailure {
                            branch: i,
                            condition: Condition::InverseLipschitz,
                            witness: (x, x2),
                            value: ir,
                        });
                    }
                }
                let rt = match b.inverse(&y) {
                    Some(back) => dist(&back, &x),
                    None => f64::INFINITY,
                };
                if rt > v.max_round_trip_error.unwrap_or(0.0) {
                    v.max_round_trip_error = Some(rt);
                }
                if rt > 1e-9 && first_bad.is_none() {
                    first_bad = Some(ValidationFailure {
                        branch: i,
                        condition: Condition::RoundTrip,
                        witness: (x, x),
                        value: rt,
                    });
                }
                if b.domain.interior_contains(&x) {
                    let j = b.map.jacobian(&x).abs();
                    if j < v.min_abs_jacobian.unwrap_or(f64::INFINITY) {
                        v.min_abs_jacobian = Some(j);
                    }
                    if !(j > 0.0) && first_bad.is_none() {
                        first_bad = Some(ValidationFailure {
                            branch: i,
                            condition: Condition::Jacobian,
                            witness: (x, x),
                            value: j,
                        });
                    }
                }
            }
            if failure.is_none() {
                failure = first_bad;
            }
            branches.push(v);
        }

        Ok(ValidationReport {
            c_gamma: self.c_gamma,
            branches,
            failure,
        })
    }
}

fn check_finite<const D: usize>(p: &Point<D>) -> Result<()> {
    if is_finite_point(p) {
        Ok(())
    } else {
        Err(Error::invalid("coordinates must be finite"))
    }
}

/// Which curve condition a validation witness violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    ForwardLipschitz,
    InverseLipschitz,
    RoundTrip,
    Jacobian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFailure<const D: usize> {
    pub branch: usize,
    pub condition: Condition,
    pub witness: (Point<D>, Point<D>),
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchValidation<const D: usize> {
    pub branch: usize,
    /// Flat branch: inverse and Jacobian checks do not apply.
    pub degenerate: bool,
    pub max_forward_ratio: f64,
    pub max_inverse_ratio: Option<f64>,
    pub min_abs_jacobian: Option<f64>,
    pub max_round_trip_error: Option<f64>,
    pub forward_witness: Option<(Point<D>, Point<D>)>,
    pub inverse_witness: Option<(Point<D>, Point<D>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<const D: usize> {
    pub c_gamma: f64,
    pub branches: Vec<BranchValidation<D>>,
    /// First violated condition, if any.
    pub failure: Option<ValidationFailure<D>>,
}

impl<const D: usize> ValidationReport<D> {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// `2^{-m} ∏ [l_k, l_k + 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube<const D: usize> {
    pub level: i32,
    pub corner: [i64; D],
}

impl<const D: usize> DyadicCube<D> {
    pub fn new(level: i32, corner: [i64; D]) -> Self {
        DyadicCube { level, corner }
    }

    pub fn side(&self) -> f64 {
        exp2i(-self.level)
    }

    pub fn bounds(&self) -> Aabb<D> {
        let s = self.side();
        let mut b = Aabb {
            lo: [0.0; D],
            hi: [0.0; D],
        };
        for k in 0..D {
            b.lo[k] = self.corner[k] as f64 * s;
            b.hi[k] = (self.corner[k] + 1) as f64 * s;
        }
        b
    }

    pub fn volume(&self) -> f64 {
        exp2i(-self.level * D as i32)
    }

    /// The level-`level` cube whose half-open cell `[l, l+1)` holds `p`.
    pub fn containing(level: i32, p: &Point<D>) -> Self {
        let scale = exp2i(level);
        let mut corner = [0i64; D];
        for k in 0..D {
            corner[k] = floor(p[k] * scale) as i64;
        }
        DyadicCube { level, corner }
    }

    pub fn children(&self) -> Vec<DyadicCube<D>> {
        (0..1usize << D)
            .map(|mask| {
                let mut corner = [0i64; D];
                for k in 0..D {
                    corner[k] = 2 * self.corner[k] + ((mask >> (D - 1 - k)) & 1) as i64;
                }
                DyadicCube {
                    level: self.level + 1,
                    corner,
                }
            })
            .collect()
    }

    pub fn contains_point(&self, p: &Point<D>) -> bool {
        self.bounds().contains(p)
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn contains_cube(&self, other: &DyadicCube<D>) -> bool {
        if other.level < self.level {
            return false;
        }
        let shift = (other.level - self.level) as u32;
        (0..D).all(|k| (other.corner[k] >> shift) == self.corner[k])
    }

    /// Whether the open interiors meet.
    pub fn interiors_intersect(&self, other: &DyadicCube<D>) -> bool {
        self.contains_cube(other) || other.contains_cube(self)
    }
}

/// A general cube `corner + [0, side]^D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube<const D: usize> {
    pub corner: Point<D>,
    pub side: f64,
}

impl<const D: usize> Cube<D> {
    pub fn new(corner: Point<D>, side: f64) -> Self {
        Cube { corner, side }
    }

    pub fn center(&self) -> Point<D> {
        let mut c = self.corner;
        for v in c.iter_mut() {
            *v += 0.5 * self.side;
        }
        c
    }

    pub fn bounds(&self) -> Aabb<D> {
        let mut hi = self.corner;
        for v in hi.iter_mut() {
            *v += self.side;
        }
        Aabb::new(self.corner, hi)
    }

    pub fn volume(&self) -> f64 {
        powf(self.side, D as f64)
    }
}

impl<const D: usize> From<DyadicCube<D>> for Cube<D> {
    fn from(c: DyadicCube<D>) -> Self {
        Cube::new(c.bounds().lo, c.side())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;

    #[test]
    fn two_lines_evaluates_and_inverts() {
        let c = curves::two_lines::<1>();
        assert_eq!(c.branch_eval(1, &[3.0]).unwrap(), [-3.0]);
        assert_eq!(c.branch_inverse(1, &[-3.0]).unwrap(), [3.0]);
        assert_eq!(c.branch_jacobian(0, &[0.7]).unwrap(), 1.0);
        assert_eq!(c.branch_jacobian(1, &[0.7]).unwrap(), -1.0);
    }

    #[test]
    fn diamond_branch_values() {
        let c = curves::diamond();
        assert_eq!(c.branch_eval(0, &[0.5]).unwrap(), [0.5]);
        assert_eq!(c.branch_inverse(0, &[0.25]).unwrap(), [0.75]);
        assert_eq!(c.branch_jacobian(0, &[0.5]).unwrap(), -1.0);
        assert_eq!(c.branch_eval(0, &[1.5]), Err(Error::OutsideDomain { branch: 0 }));
        assert_eq!(c.branch_inverse(0, &[2.0]), Err(Error::OutsideRange { branch: 0 }));
        assert_eq!(c.branch_inverse(4, &[0.0]), Err(Error::NotInvertible { branch: 4 }));
        // boundary point is not interior
        assert_eq!(c.branch_jacobian(0, &[1.0]), Err(Error::OutsideDomain { branch: 0 }));
        assert_eq!(c.branch_jacobian(4, &[3.0]), Err(Error::ZeroJacobian { branch: 4 }));
    }

    #[test]
    fn diagonal_is_identity() {
        let c = curves::diagonal::<2>();
        let x = [0.3, -7.5];
        assert_eq!(c.branch_eval(0, &x).unwrap(), x);
        assert_eq!(c.branch_inverse(0, &x).unwrap(), x);
        assert_eq!(c.nearest_domain_point(0, &x).unwrap(), x);
        assert_eq!(c.nearest_range_point(0, &x).unwrap(), x);
    }

    #[test]
    fn rejects_non_finite_and_bad_index() {
        let c = curves::diagonal::<1>();
        assert!(matches!(c.branch_eval(0, &[f64::NAN]), Err(Error::InvalidInput(_))));
        assert_eq!(
            c.branch_eval(3, &[0.0]),
            Err(Error::NoSuchBranch { branch: 3, count: 1 })
        );
    }

    #[test]
    fn nearest_domain_point_clamps() {
        let c = curves::diamond();
        assert_eq!(c.nearest_domain_point(0, &[3.0]).unwrap(), [1.0]);
        let unit_square = Region::single(Aabb::new([0.0, 0.0], [1.0, 1.0]));
        assert_eq!(unit_square.nearest_point(&[2.0, -1.0]), [1.0, 0.0]);
        // outer diamond branch: two half-lines, 0 is equidistant, smaller wins
        assert_eq!(c.nearest_domain_point(4, &[0.0]).unwrap(), [-1.0]);
    }

    #[test]
    fn nearest_range_point_matches_closed_forms() {
        let d = curves::diamond();
        assert_eq!(d.nearest_range_point(0, &[2.0]).unwrap(), [1.0]);
        assert!((d.nearest_range_point(0, &[0.3]).unwrap()[0] - 0.3).abs() < 1e-12);
        assert_eq!(d.nearest_range_point(0, &[-4.0]).unwrap(), [0.0]);
        assert_eq!(d.nearest_range_point(4, &[7.0]).unwrap(), [0.0]);
        let t = curves::two_lines::<1>();
        assert_eq!(t.nearest_range_point(1, &[-5.0]).unwrap(), [-5.0]);
    }

    #[test]
    fn validation_of_builtins_passes() {
        for c in [curves::two_lines::<1>(), curves::diamond(), curves::diagonal::<1>()] {
            let r = c.validate(1000, 11).unwrap();
            assert!(r.passed(), "{} failed: {:?}", c.name, r.failure);
            for b in &r.branches {
                assert!(b.max_forward_ratio <= 1.0 + 1e-9, "{}", b.max_forward_ratio);
                if let Some(ir) = b.max_inverse_ratio {
                    assert!((ir - 1.0).abs() < 1e-9, "{}", ir);
                }
            }
        }
        let r = curves::diamond().validate(100, 1).unwrap();
        assert!(r.branches[4].degenerate);
        assert_eq!(r.branches[4].max_forward_ratio, 0.0);
    }

    struct Square;
    impl BranchMap<1> for Square {
        fn forward(&self, x: &Point<1>) -> Point<1> {
            [x[0] * x[0]]
        }
        fn inverse(&self, y: &Point<1>) -> Option<Point<1>> {
            (y[0] >= 0.0).then(|| [y[0].sqrt()])
        }
        fn jacobian(&self, x: &Point<1>) -> f64 {
            2.0 * x[0]
        }
    }

    #[test]
    fn validation_catches_false_lipschitz_claim() {
        let b = CurveBranch::new(
            Arc::new(Square),
            Region::single(Aabb::new([0.0], [10.0])),
            1.0,
        );
        let c = HyperCurve::new("square", vec![b], vec![]).unwrap();
        let r = c.validate(1000, 3).unwrap();
        assert!(!r.passed());
        let f = r.failure.unwrap();
        let (a, b) = f.witness;
        assert!(f.value > c.c_gamma);
        assert!((a[0] * a[0] - b[0] * b[0]).abs() > c.c_gamma * (a[0] - b[0]).abs());
        assert!(r.branches[0].max_forward_ratio > 15.0);
    }

    #[test]
    fn dyadic_cube_geometry() {
        let q = DyadicCube::new(2, [1i64, -3]);
        assert_eq!(q.side(), 0.25);
        assert_eq!(q.bounds(), Aabb::new([0.25, -0.75], [0.5, -0.5]));
        let kids = q.children();
        assert_eq!(kids.len(), 4);
        assert!(kids.iter().all(|k| q.contains_cube(k)));
        assert_eq!(DyadicCube::containing(2, &[0.3, -0.6]), q);
        assert!(!kids[0].interiors_intersect(&kids[1]));
        assert_eq!(DyadicCube::<1>::new(-2, [-1]).bounds(), Aabb::new([-4.0], [0.0]));
    }

    #[test]
    fn curve_needs_a_branch() {
        assert!(HyperCurve::<1>::new("empty", vec![], vec![]).is_err());
    }
}
