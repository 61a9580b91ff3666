//! Distances to the singular set and the curve-adapted cube enlargements.
//!
//! `ρ_i(x, y)` is the Euclidean distance from `(x, y)` to the graph of `γ_i`.
//! It has no closed form for a general branch, so it is computed by a sampled
//! search. The projection surrogates
//!
//! ```text
//! ρ̃_i(x, y)  = |x - ξ_{i,x}| + |y - γ_i(ξ_{i,x})|
//! ρ̃*_i(x, y) = |y - η_{i,y}| + |x - γ_i^{-1}(η_{i,y})|
//! ```
//!
//! are both within a factor `2(c_γ + 1)` of `ρ_i`, which
//! [`check_equivalence`] audits.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Cube, CurveBranch, HyperCurve, Point, Region};
use crate::math::{dist, dist_sq, sqrt, unit_ball_volume};
use crate::search::{minimize_in_box, refine, Candidate};

/// A curve distance together with the branch attaining the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub branch: usize,
}

/// `ρ_i(x, y) = inf_{x' ∈ D_i} |(x, y) - (x', γ_i(x'))|`.
pub fn rho_branch<const D: usize>(
    curve: &HyperCurve<D>,
    i: usize,
    x: &Point<D>,
    y: &Point<D>,
) -> Result<f64> {
    Ok(rho_of(curve, curve.branch(i)?, x, y))
}

/// Starts from `x0 = ξ_{i,x}`, whose graph point lies at distance `U`. A
/// better parameter must satisfy `|x' - x| ≤ U`, so only that window of the
/// domain is sampled.
pub(crate) fn rho_of<const D: usize>(
    curve: &HyperCurve<D>,
    b: &CurveBranch<D>,
    x: &Point<D>,
    y: &Point<D>,
) -> f64 {
    let x0 = b.domain.nearest_point(x);
    let start = dist_sq(x, &x0) + dist_sq(y, &b.forward(&x0));
    if b.is_flat() || start == 0.0 {
        return sqrt(start);
    }
    let mut best = Candidate::at(x0, start);
    let window = Aabb::around(x, sqrt(start));
    let objective = |p: &Point<D>| dist_sq(x, p) + dist_sq(y, &b.forward(p));
    for part in b.domain.clip(&window) {
        minimize_in_box(&part, &curve.rho_search, &objective, &mut best);
    }
    sqrt(best.value)
}

/// `ρ(x, y) = min_i ρ_i(x, y)`; ties go to the smallest branch index.
pub fn rho<const D: usize>(curve: &HyperCurve<D>, x: &Point<D>, y: &Point<D>) -> MetricValue {
    min_over_branches(curve, |b| rho_of(curve, b, x, y))
}

/// Whether `ρ(x, y) ≥ threshold`, skipping the search for branches where the
/// answer is already decided: `ρ_i ≤ |(x, y) - (ξ, γ_i(ξ))|` from above, and
/// `ρ_i ≥ ρ̃_i / (2(c_γ + 1))` from below.
pub fn rho_at_least<const D: usize>(
    curve: &HyperCurve<D>,
    x: &Point<D>,
    y: &Point<D>,
    threshold: f64,
) -> bool {
    let factor = 2.0 * (curve.c_gamma + 1.0);
    for b in &curve.branches {
        let xi = b.domain.nearest_point(x);
        let gx = b.forward(&xi);
        let upper = sqrt(dist_sq(x, &xi) + dist_sq(y, &gx));
        if upper < threshold {
            return false;
        }
        let tilde = dist(x, &xi) + dist(y, &gx);
        if tilde / factor >= threshold {
            continue;
        }
        if rho_of(curve, b, x, y) < threshold {
            return false;
        }
    }
    true
}

pub fn rho_tilde_branch<const D: usize>(
    curve: &HyperCurve<D>,
    i: usize,
    x: &Point<D>,
    y: &Point<D>,
) -> Result<f64> {
    Ok(tilde_of(curve.branch(i)?, x, y))
}

fn tilde_of<const D: usize>(b: &CurveBranch<D>, x: &Point<D>, y: &Point<D>) -> f64 {
    let xi = b.domain.nearest_point(x);
    dist(x, &xi) + dist(y, &b.forward(&xi))
}

/// `ρ̃(x, y) = min_i ρ̃_i(x, y)`.
pub fn rho_tilde<const D: usize>(curve: &HyperCurve<D>, x: &Point<D>, y: &Point<D>) -> MetricValue {
    min_over_branches(curve, |b| tilde_of(b, x, y))
}

pub fn rho_tilde_star_branch<const D: usize>(
    curve: &HyperCurve<D>,
    i: usize,
    x: &Point<D>,
    y: &Point<D>,
) -> Result<f64> {
    Ok(tilde_star_of(curve, curve.branch(i)?, x, y))
}

/// For a flat branch the preimage of η is the whole domain, and the point of
/// it nearest `x` is used.
fn tilde_star_of<const D: usize>(
    curve: &HyperCurve<D>,
    b: &CurveBranch<D>,
    x: &Point<D>,
    y: &Point<D>,
) -> f64 {
    let proj = curve.range_projection_of(b, y);
    let pre = if b.is_flat() {
        b.domain.nearest_point(x)
    } else {
        proj.param
    };
    dist(y, &proj.point) + dist(x, &pre)
}

/// `ρ̃*(x, y) = min_i ρ̃*_i(x, y)`.
pub fn rho_tilde_star<const D: usize>(
    curve: &HyperCurve<D>,
    x: &Point<D>,
    y: &Point<D>,
) -> MetricValue {
    min_over_branches(curve, |b| tilde_star_of(curve, b, x, y))
}

fn min_over_branches<const D: usize, F>(curve: &HyperCurve<D>, f: F) -> MetricValue
where
    F: Fn(&CurveBranch<D>) -> f64,
{
    let mut best = MetricValue {
        value: f64::INFINITY,
        branch: 0,
    };
    for (i, b) in curve.branches.iter().enumerate() {
        let v = f(b);
        if v < best.value {
            best = MetricValue { value: v, branch: i };
        }
    }
    best
}

/// Multiplicative slack for solver error in the equivalence audit.
pub const EQUIVALENCE_SLACK: f64 = 1.0 + 1e-5;
const ABSOLUTE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surrogate {
    Tilde,
    TildeStar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceViolation<const D: usize> {
    pub x: Point<D>,
    pub y: Point<D>,
    /// `None` for the global (minimum over branches) inequality.
    pub branch: Option<usize>,
    pub surrogate: Surrogate,
    pub rho: f64,
    pub surrogate_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<const D: usize> {
    pub pairs: usize,
    /// `2(c_γ + 1)`.
    pub bound: f64,
    /// Largest `ρ̃ / ρ` over off-curve pairs.
    pub max_tilde_ratio: f64,
    pub max_tilde_star_ratio: f64,
    /// Per branch `(max ρ̃_i/ρ_i, max ρ̃*_i/ρ_i)`.
    pub branch_ratios: Vec<(f64, f64)>,
    pub violation: Option<EquivalenceViolation<D>>,
}

impl<const D: usize> EquivalenceReport<D> {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

fn within<const D: usize>(rho: f64, s: f64, bound: f64) -> bool {
    rho <= s * EQUIVALENCE_SLACK + ABSOLUTE_SLACK
        && s <= bound * rho * EQUIVALENCE_SLACK + ABSOLUTE_SLACK
}

/// Samples `pair_count` uniform pairs `(x, y)` from `region × region` and
/// checks `ρ_i ≤ ρ̃_i ≤ 2(c_γ+1)ρ_i`, `ρ_i ≤ ρ̃*_i ≤ 2(c_γ+1)ρ_i` for every
/// branch and the same chain for the minima.
pub fn check_equivalence<const D: usize>(
    curve: &HyperCurve<D>,
    region: &Aabb<D>,
    pair_count: usize,
    seed: u64,
) -> Result<EquivalenceReport<D>> {
    if pair_count == 0 {
        return Err(Error::invalid("pair_count must be at least 1"));
    }
    if !region.is_bounded() {
        return Err(Error::invalid("sampling region must be bounded"));
    }
    let bound = 2.0 * (curve.c_gamma + 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Point<D>, Point<D>)> = (0..pair_count)
        .map(|_| (region.sample(&mut rng), region.sample(&mut rng)))
        .collect();

    // (per-branch (rho, tilde, star))
    let rows = crate::par::map_indices(pairs.len(), |k| {
        let (x, y) = &pairs[k];
        curve
            .branches
            .iter()
            .map(|b| {
                (
                    rho_of(curve, b, x, y),
                    tilde_of(b, x, y),
                    tilde_star_of(curve, b, x, y),
                )
            })
            .collect::<Vec<_>>()
    });

    let mut report = EquivalenceReport {
        pairs: pair_count,
        bound,
        max_tilde_ratio: 0.0,
        max_tilde_star_ratio: 0.0,
        branch_ratios: vec![(0.0, 0.0); curve.branch_count()],
        violation: None,
    };
    for ((x, y), row) in pairs.iter().zip(&rows) {
        let mut g = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for (i, &(r, t, s)) in row.iter().enumerate() {
            g = (g.0.min(r), g.1.min(t), g.2.min(s));
            if r > 0.0 {
                let e = &mut report.branch_ratios[i];
                e.0 = e.0.max(t / r);
                e.1 = e.1.max(s / r);
            }
            for (surrogate, v) in [(Surrogate::Tilde, t), (Surrogate::TildeStar, s)] {
                if report.violation.is_none() && !within::<D>(r, v, bound) {
                    report.violation = Some(EquivalenceViolation {
                        x: *x,
                        y: *y,
                        branch: Some(i),
                        surrogate,
                        rho: r,
                        surrogate_value: v,
                    });
                }
            }
        }
        if g.0 > 0.0 {
            report.max_tilde_ratio = report.max_tilde_ratio.max(g.1 / g.0);
            report.max_tilde_star_ratio = report.max_tilde_star_ratio.max(g.2 / g.0);
        }
        for (surrogate, v) in [(Surrogate::Tilde, g.1), (Surrogate::TildeStar, g.2)] {
            if report.violation.is_none() && !within::<D>(g.0, v, bound) {
                report.violation = Some(EquivalenceViolation {
                    x: *x,
                    y: *y,
                    branch: None,
                    surrogate,
                    rho: g.0,
                    surrogate_value: v,
                });
            }
        }
    }
    Ok(report)
}

/// Relative tolerance on the boundary of `Q_{i,θ}`: points within
/// `1e-7·ℓ(Q)` of it count as inside.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
struct NetPoint<const D: usize> {
    y: Point<D>,
    preimage: Point<D>,
}

/// The shape of one nonempty `Q_{i,θ}`.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceShape<const D: usize> {
    /// `γ_i^{-1}(η_{i,Q})` sampled at a lattice of `y ∈ Q`, sorted by the
    /// first coordinate of the preimage.
    Net {
        points: Vec<(Point<D>, Point<D>)>,
        /// Lattice spacing per axis inside `Q`.
        spacing: Point<D>,
        /// Bound on the distance from any point of `γ_i^{-1}(η_{i,Q})` to the
        /// nearest net point (exact for convex ranges).
        net_error: f64,
    },
    /// A flat branch: the preimage of its single range point is the whole
    /// domain, so the piece is a neighborhood of the domain.
    Flat { domain: Region<D> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnlargedPiece<const D: usize> {
    pub branch: usize,
    pub shape: PieceShape<D>,
    /// `d(Q, γ_i(D_i))`.
    pub distance_to_range: f64,
    /// `γ_i^{-1}(η_{i,y_i})` with `y_i ∈ Q` attaining `d(Q, γ_i(D_i))`.
    pub covering_center: Option<Point<D>>,
    /// `(θ + 6√n·c_γ)·ℓ(Q)`.
    pub covering_radius: f64,
}

/// `Q_θ = ⋃_i Q_{i,θ}` with
/// `Q_{i,θ} = {x : d(x, γ_i^{-1}(η_{i,Q})) ≤ θ·ℓ(Q)}` when
/// `d(Q, γ_i(D_i)) < 2√n·ℓ(Q)` and empty otherwise.
#[derive(Debug, Clone)]
pub struct EnlargedCube<'c, const D: usize> {
    curve: &'c HyperCurve<D>,
    pub base: Cube<D>,
    pub theta: f64,
    /// One entry per branch; `None` is an empty piece.
    pub pieces: Vec<Option<EnlargedPiece<D>>>,
    /// Sum of covering-ball volumes of the nonempty pieces; infinite when a
    /// flat branch contributes.
    pub measure_upper_bound: f64,
}

fn lattice_per_axis(dim: usize) -> usize {
    match dim {
        0 | 1 => 1 << 8,
        d => {
            let mut k = 2usize;
            while (k + 1).pow(d as u32) <= 1 << 12 {
                k += 1;
            }
            k
        }
    }
}

fn lattice<const D: usize>(cube: &Cube<D>, per_axis: usize) -> (Vec<Point<D>>, Point<D>) {
    let step = cube.side / (per_axis - 1) as f64;
    let total = per_axis.pow(D as u32);
    let mut out = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut p = [0.0; D];
        for k in (0..D).rev() {
            let i = flat % per_axis;
            flat /= per_axis;
            p[k] = if i + 1 == per_axis {
                cube.corner[k] + cube.side
            } else {
                cube.corner[k] + i as f64 * step
            };
        }
        out.push(p);
    }
    (out, [step; D])
}

/// Builds `Q_θ` for the cube `q`.
pub fn enlarged_cube<'c, const D: usize>(
    curve: &'c HyperCurve<D>,
    q: &Cube<D>,
    theta: f64,
) -> Result<EnlargedCube<'c, D>> {
    if !(theta > 1.0) {
        return Err(Error::invalid(alloc::format!("theta must exceed 1, got {theta}")));
    }
    if !(q.side > 0.0) || !crate::math::is_finite_point(&q.corner) {
        return Err(Error::invalid("cube needs a finite corner and positive side"));
    }
    let sqrt_n = sqrt(D as f64);
    let ell = q.side;
    let cutoff = 2.0 * sqrt_n * ell;
    let radius = (theta + 6.0 * sqrt_n * curve.c_gamma) * ell;
    let per_axis = lattice_per_axis(D);
    let (ys, spacing) = lattice(q, per_axis);
    let qbox = q.bounds();

    let mut pieces = Vec::with_capacity(curve.branch_count());
    let mut measure = 0.0;
    for (i, b) in curve.branches.iter().enumerate() {
        if let Some(v) = b.map.constant_value() {
            let d = qbox.distance(&v);
            if d >= cutoff {
                pieces.push(None);
                continue;
            }
            measure = f64::INFINITY;
            pieces.push(Some(EnlargedPiece {
                branch: i,
                shape: PieceShape::Flat {
                    domain: b.domain.clone(),
                },
                distance_to_range: d,
                covering_center: None,
                covering_radius: radius,
            }));
            continue;
        }

        let net: Vec<NetPoint<D>> = crate::par::map_indices(ys.len(), |k| {
            let p = curve.range_projection_of(b, &ys[k]);
            NetPoint {
                y: ys[k],
                preimage: p.param,
            }
        });
        // d(Q, range) by the lattice, then refined around the best sample
        let gap = |y: &Point<D>| {
            let p = curve.range_projection_of(b, y);
            dist_sq(y, &p.point)
        };
        let mut best = Candidate::none();
        for n in &net {
            best.offer(&n.y, dist_sq(&n.y, &b.forward(&n.preimage)));
        }
        refine(&qbox, &spacing, 40, &gap, &mut best);
        let d = sqrt(best.value);
        if d >= cutoff {
            pieces.push(None);
            continue;
        }
        let center = curve.range_projection_of(b, &best.param).param;
        measure += unit_ball_volume(D) * crate::math::powf(radius, D as f64);

        let mut points: Vec<(Point<D>, Point<D>)> =
            net.iter().map(|n| (n.y, n.preimage)).collect();
        points.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
        let half_diag = 0.5 * spacing[0] * sqrt_n;
        pieces.push(Some(EnlargedPiece {
            branch: i,
            shape: PieceShape::Net {
                points,
                spacing,
                net_error: b.lipschitz * half_diag,
            },
            distance_to_range: d,
            covering_center: Some(center),
            covering_radius: radius,
        }));
    }

    Ok(EnlargedCube {
        curve,
        base: *q,
        theta,
        pieces,
        measure_upper_bound: measure,
    })
}

impl<'c, const D: usize> EnlargedCube<'c, D> {
    /// Whether `x ∈ Q_θ`.
    pub fn contains(&self, x: &Point<D>) -> bool {
        self.pieces
            .iter()
            .flatten()
            .any(|piece| self.piece_contains(piece, x))
    }

    pub fn piece_contains(&self, piece: &EnlargedPiece<D>, x: &Point<D>) -> bool {
        let ell = self.base.side;
        let limit = self.theta * ell + MEMBERSHIP_TOLERANCE * ell;
        match &piece.shape {
            PieceShape::Flat { domain } => domain.distance(x) <= limit,
            PieceShape::Net {
                points,
                spacing,
                net_error,
            } => {
                let (d, k) = nearest_in_net(points, x);
                if d <= limit {
                    return true;
                }
                if d - net_error > limit {
                    return false;
                }
                // near the boundary: minimize |x - γ^{-1}(η_y)| over y close
                // to the nearest lattice sample
                let b = &self.curve.branches[piece.branch];
                let objective = |y: &Point<D>| {
                    let p = self.curve.range_projection_of(b, y);
                    dist_sq(x, &p.param)
                };
                let mut best = Candidate::at(points[k].0, d * d);
                refine(&self.base.bounds(), spacing, 40, &objective, &mut best);
                sqrt(best.value) <= limit
            }
        }
    }

    /// Bounding box of the covering balls; `None` if a flat piece makes
    /// `Q_θ` unbounded or every piece is empty.
    pub fn covering_box(&self) -> Option<Aabb<D>> {
        let mut hull: Option<Aabb<D>> = None;
        for piece in self.pieces.iter().flatten() {
            let c = piece.covering_center?;
            let b = Aabb::around(&c, piece.covering_radius);
            hull = Some(match hull {
                Some(h) => h.hull(&b),
                None => b,
            });
        }
        hull
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(Option::is_none)
    }
}

/// Distance to the nearest preimage in the sorted net, with its index.
fn nearest_in_net<const D: usize>(points: &[(Point<D>, Point<D>)], x: &Point<D>) -> (f64, usize) {
    let start = points.partition_point(|p| p.1[0] < x[0]);
    let mut best = (f64::INFINITY, 0usize);
    let consider = |k: usize, best: &mut (f64, usize)| -> bool {
        let gap = (points[k].1[0] - x[0]).abs();
        if gap > best.0 {
            return false;
        }
        let d = dist(x, &points[k].1);
        if d < best.0 {
            *best = (d, k);
        }
        true
    };
    for k in start..points.len() {
        if !consider(k, &mut best) {
            break;
        }
    }
    for k in (0..start).rev() {
        if !consider(k, &mut best) {
            break;
        }
    }
    best
}

/// Smallest θ for which the separation property holds:
/// `2√n + 5√n·c_γ`.
pub fn qtheta_threshold<const D: usize>(curve: &HyperCurve<D>) -> f64 {
    let s = sqrt(D as f64);
    2.0 * s + 5.0 * s * curve.c_gamma
}

/// Constant `C` of `|Q_θ| ≤ C θ^n |Q|` read off the covering balls:
/// `|B_1| · r · (1 + 6√n c_γ / θ)^n`.
pub fn covering_constant<const D: usize>(curve: &HyperCurve<D>, theta: f64) -> f64 {
    let s = sqrt(D as f64);
    unit_ball_volume(D)
        * curve.branch_count() as f64
        * crate::math::powf(1.0 + 6.0 * s * curve.c_gamma / theta, D as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QThetaReport<const D: usize> {
    pub theta: f64,
    pub covering_constant: f64,
    /// `C θ^n |Q|`.
    pub measure_bound: f64,
    /// Monte-Carlo estimate of `|Q_θ|` (infinite with a flat piece).
    pub measure_estimate: f64,
    /// 99% confidence half-width of the estimate.
    pub measure_half_width: f64,
    pub measure_ok: bool,
    pub probes: usize,
    /// Smallest `ρ(x, y) / (2√n ℓ(Q))` seen over the probes.
    pub min_separation_ratio: f64,
    pub separation_ok: bool,
    pub separation_witness: Option<(Point<D>, Point<D>)>,
}

impl<const D: usize> QThetaReport<D> {
    pub fn passed(&self) -> bool {
        self.measure_ok && self.separation_ok
    }
}

/// Monte-Carlo samples for the `|Q_θ|` estimate.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// Audits `|Q_θ| ≤ C θ^n |Q|` and `ρ(x, y) ≥ 2√n ℓ(Q)` for `x ∉ Q_θ`, `y ∈ Q`.
pub fn check_qtheta<const D: usize>(
    curve: &HyperCurve<D>,
    q: &Cube<D>,
    theta: f64,
    probe_count: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<QThetaReport<D>> {
    let threshold = qtheta_threshold(curve);
    if !(theta > threshold) {
        return Err(Error::invalid(alloc::format!(
            "theta = {theta} does not exceed 2√n + 5√n·c_γ = {threshold}"
        )));
    }
    let enlarged = enlarged_cube(curve, q, theta)?;
    let constant = covering_constant(curve, theta);
    let measure_bound = constant * crate::math::powf(theta, D as f64) * q.volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let flat = enlarged
        .pieces
        .iter()
        .flatten()
        .any(|p| p.covering_center.is_none());
    let (estimate, half_width) = if flat {
        (f64::INFINITY, 0.0)
    } else if let Some(region) = enlarged.covering_box() {
        let samples: Vec<Point<D>> = (0..mc_samples.max(1)).map(|_| region.sample(&mut rng)).collect();
        let hits = crate::par::map_indices(samples.len(), |k| enlarged.contains(&samples[k]))
            .into_iter()
            .filter(|h| *h)
            .count();
        let m = samples.len() as f64;
        let p = hits as f64 / m;
        let vol = region.volume();
        (p * vol, 2.576 * sqrt(p * (1.0 - p) / m) * vol)
    } else {
        (0.0, 0.0)
    };
    let measure_ok = estimate + half_width <= measure_bound;

    let sqrt_n = sqrt(D as f64);
    let target = 2.0 * sqrt_n * q.side;
    let probe_region = match enlarged.covering_box() {
        Some(b) => b.hull(&q.bounds()).dilate(theta * q.side),
        None => Aabb::around(&q.center(), 2.0 * (theta + 6.0 * sqrt_n * curve.c_gamma) * q.side),
    };
    let mut probes = Vec::with_capacity(probe_count);
    let mut attempts = 0usize;
    while probes.len() < probe_count && attempts < 50 * probe_count.max(1) {
        attempts += 1;
        let x = probe_region.sample(&mut rng);
        if enlarged.contains(&x) {
            continue;
        }
        let y = q.bounds().sample(&mut rng);
        probes.push((x, y));
    }
    let values = crate::par::map_indices(probes.len(), |k| rho(curve, &probes[k].0, &probes[k].1).value);
    let mut min_ratio = f64::INFINITY;
    let mut witness = None;
    for (pair, v) in probes.iter().zip(&values) {
        let r = v / target;
        if r < min_ratio {
            min_ratio = r;
        }
        if *v < target * (1.0 - 1e-5) && witness.is_none() {
            witness = Some(*pair);
        }
    }

    Ok(QThetaReport {
        theta,
        covering_constant: constant,
        measure_bound,
        measure_estimate: estimate,
        measure_half_width: half_width,
        measure_ok,
        probes: probes.len(),
        min_separation_ratio: min_ratio,
        separation_ok: witness.is_none() && !probes.is_empty(),
        separation_witness: witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;
    use core::f64::consts::FRAC_1_SQRT_2;
    use rand::Rng;

    #[test]
    fn rho_examples() {
        let diag = curves::diagonal::<1>();
        assert!((rho(&diag, &[1.0], &[0.0]).value - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(rho(&diag, &[2.5], &[2.5]).value, 0.0);

        let d = curves::diamond();
        let r = rho(&d, &[0.0], &[0.0]);
        assert!((r.value - FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(r.branch, 0);
        assert!((rho_branch(&d, 4, &[0.0], &[0.0]).unwrap() - 1.0).abs() < 1e-15);

        let t = curves::two_lines::<1>();
        let r = rho(&t, &[1.0], &[0.0]);
        assert!((r.value - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(r.branch, 0);
        assert!((rho_branch(&t, 1, &[1.0], &[0.0]).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn tilde_examples() {
        let diag = curves::diagonal::<1>();
        assert_eq!(rho_tilde(&diag, &[1.0], &[0.0]).value, 1.0);
        assert_eq!(rho_tilde_star(&diag, &[1.0], &[0.0]).value, 1.0);

        let t = curves::two_lines::<1>();
        assert_eq!(rho_tilde(&t, &[1.0], &[0.0]).value, 1.0);
        assert_eq!(rho_tilde_star(&t, &[1.0], &[0.0]).value, 1.0);

        let d = curves::diamond();
        let v = rho_tilde(&d, &[3.0], &[0.0]);
        assert_eq!(v.value, 0.0);
        assert_eq!(v.branch, 4);
        assert!((rho_tilde_star(&d, &[0.0], &[2.0]).value - 1.0).abs() < 1e-12);
        // flat branch: |y - 0| + d(x, |x| ≥ 1)
        assert_eq!(rho_tilde_star_branch(&d, 4, &[0.0], &[2.0]).unwrap(), 3.0);
    }

    #[test]
    fn threshold_test_agrees_with_rho() {
        let t = curves::two_lines::<1>();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let x = [rng.random_range(-8.0..8.0)];
            let y = [rng.random_range(-8.0..8.0)];
            let th = rng.random_range(0.0..4.0);
            assert_eq!(rho_at_least(&t, &x, &y, th), rho(&t, &x, &y).value >= th);
        }
    }

    #[test]
    fn on_curve_points_have_zero_metrics() {
        let t = curves::two_lines::<1>();
        for x in [-2.0, 0.5, 3.0] {
            let y = [-x];
            assert_eq!(rho(&t, &[x], &y).value, 0.0);
            assert_eq!(rho_tilde(&t, &[x], &y).value, 0.0);
            assert_eq!(rho_tilde_star(&t, &[x], &y).value, 0.0);
        }
    }

    #[test]
    fn diagonal_equivalence_ratio_is_sqrt_two() {
        let diag = curves::diagonal::<1>();
        let r = check_equivalence(&diag, &Aabb::symmetric(8.0), 500, 1).unwrap();
        assert!(r.passed());
        assert!((r.max_tilde_ratio - core::f64::consts::SQRT_2).abs() < 1e-9);
        assert!(r.max_tilde_ratio <= r.bound);
    }

    #[test]
    fn enlarged_cube_rejects_small_theta() {
        let diag = curves::diagonal::<1>();
        let q = Cube::new([0.0], 1.0);
        assert!(enlarged_cube(&diag, &q, 1.0).is_err());
        assert!(matches!(
            check_qtheta(&diag, &q, 1.5, 10, 10, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn diagonal_enlargement_is_an_interval_dilation() {
        let diag = curves::diagonal::<1>();
        let q = Cube::new([0.0], 1.0);
        let e = enlarged_cube(&diag, &q, 10.0).unwrap();
        assert!(e.contains(&[-10.0]));
        assert!(e.contains(&[11.0]));
        assert!(e.contains(&[0.5]));
        assert!(!e.contains(&[-10.001]));
        assert!(!e.contains(&[11.001]));
    }

    #[test]
    fn far_branch_gives_empty_piece() {
        let d = curves::diamond();
        // range of branch 0 is [0, 1]; the cube [5, 5.5] is 4 away, more than 2·0.5
        let e = enlarged_cube(&d, &Cube::new([5.0], 0.5), 10.0).unwrap();
        assert!(e.pieces[0].is_none());
        assert!(e.pieces[2].is_none());
    }
}
