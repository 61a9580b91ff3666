//! Kernels singular on a hyper curve and numerical audits of their
//! conditions:
//!
//! ```text
//! |K(x,y)|            ≤ A / ρ(x,y)^n
//! |K(x,y) - K(x,y')|  ≤ A |y-y'|^δ / ρ(x,y)^{n+δ}     when |y-y'| ≤ ρ(x,y)/2
//! |K(x,y) - K(x',y)|  ≤ A |x-x'|^δ / ρ(x,y)^{n+δ}     when |x-x'| ≤ ρ(x,y)/2
//! ```
//!
//! and of the Hörmander integral `∫_{ρ(x,y) ≥ 2|y-z|} |K(x,y) - K(x,z)| dx`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, HyperCurve, Point};
use crate::math::{dist, pairwise_sum, powf, sqrt, unit_sphere_area};
use crate::metric::{rho, rho_at_least};

/// An evaluable kernel. Implementations may assume `ρ(x, y) > 0`.
pub trait Kernel<const D: usize>: Send + Sync {
    fn eval(&self, x: &Point<D>, y: &Point<D>) -> f64;
}

impl<const D: usize, F> Kernel<D> for F
where
    F: Fn(&Point<D>, &Point<D>) -> f64 + Send + Sync,
{
    fn eval(&self, x: &Point<D>, y: &Point<D>) -> f64 {
        self(x, y)
    }
}

/// Below this value of ρ a pair counts as on the singular set.
pub const SINGULAR_RHO: f64 = 1e-12;

/// A kernel with its curve and claimed constants. The size and regularity
/// constants are kept apart because one number cannot be sharp for both.
#[derive(Clone)]
pub struct KernelSpec<const D: usize> {
    pub name: String,
    pub kernel: Arc<dyn Kernel<D>>,
    pub curve: Arc<HyperCurve<D>>,
    pub size_bound: f64,
    /// `None` when the regularity conditions are not claimed.
    pub regularity_bound: Option<f64>,
    pub delta: f64,
}

impl<const D: usize> core::fmt::Debug for KernelSpec<D> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("curve", &self.curve.name)
            .field("size_bound", &self.size_bound)
            .field("regularity_bound", &self.regularity_bound)
            .field("delta", &self.delta)
            .finish()
    }
}

impl<const D: usize> KernelSpec<D> {
    pub fn new(
        name: impl Into<String>,
        kernel: Arc<dyn Kernel<D>>,
        curve: Arc<HyperCurve<D>>,
        size_bound: f64,
        regularity_bound: Option<f64>,
        delta: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        if !(size_bound >= 0.0) || regularity_bound.is_some_and(|a| !(a >= 0.0)) {
            return Err(Error::invalid("kernel constants must be nonnegative"));
        }
        Ok(KernelSpec {
            name: name.into(),
            kernel,
            curve,
            size_bound,
            regularity_bound,
            delta,
        })
    }

    /// `K ≡ 0` on `curve`.
    pub fn zero(curve: Arc<HyperCurve<D>>) -> Self {
        KernelSpec {
            name: "zero".into(),
            kernel: Arc::new(|_: &Point<D>, _: &Point<D>| 0.0),
            curve,
            size_bound: 0.0,
            regularity_bound: Some(0.0),
            delta: 1.0,
        }
    }

    /// Raw evaluation without the singularity check.
    #[inline]
    pub fn eval_unchecked(&self, x: &Point<D>, y: &Point<D>) -> f64 {
        self.kernel.eval(x, y)
    }
}

/// `K(x, y)`, refused on the singular set.
pub fn kernel_eval<const D: usize>(spec: &KernelSpec<D>, x: &Point<D>, y: &Point<D>) -> Result<f64> {
    let r = rho(&spec.curve, x, y).value;
    if r < SINGULAR_RHO {
        return Err(Error::Singular { rho: r });
    }
    Ok(spec.kernel.eval(x, y))
}

/// `1/(x - y)`, singular on the diagonal.
pub fn hilbert() -> KernelSpec<1> {
    KernelSpec {
        name: "hilbert".into(),
        kernel: Arc::new(|x: &Point<1>, y: &Point<1>| 1.0 / (x[0] - y[0])),
        curve: Arc::new(crate::curves::diagonal()),
        size_bound: core::f64::consts::FRAC_1_SQRT_2 + 1e-3,
        regularity_bound: Some(0.78),
        delta: 1.0,
    }
}

/// `1/(x - y) + 1/(x + y)`, singular on `y = ±x`.
pub fn two_line_hilbert() -> KernelSpec<1> {
    KernelSpec {
        name: "two-line-hilbert".into(),
        kernel: Arc::new(|x: &Point<1>, y: &Point<1>| 1.0 / (x[0] - y[0]) + 1.0 / (x[0] + y[0])),
        curve: Arc::new(crate::curves::two_lines()),
        size_bound: core::f64::consts::SQRT_2 + 1e-3,
        regularity_bound: Some(1.55),
        delta: 1.0,
    }
}

/// `s(x, y)/ρ(x, y)` with `s = sign(|y| - (1 - |x|)_+)`: +1 outside the
/// diamond, -1 inside. Only the size condition is claimed.
pub fn diamond_model() -> KernelSpec<1> {
    let curve = Arc::new(crate::curves::diamond());
    let c = Arc::clone(&curve);
    let kernel = move |x: &Point<1>, y: &Point<1>| {
        let s = if y[0].abs() >= (1.0 - x[0].abs()).max(0.0) {
            1.0
        } else {
            -1.0
        };
        s / rho(&c, x, y).value
    };
    KernelSpec {
        name: "diamond-model".into(),
        kernel: Arc::new(kernel),
        curve,
        size_bound: 1.0 + 1e-6,
        regularity_bound: None,
        delta: 1.0,
    }
}

/// Half-width of the cube `[-8, 8]^n` the audits sample from.
pub const AUDIT_HALF_WIDTH: f64 = 8.0;
/// Relative slack of the size audit.
pub const SIZE_SLACK: f64 = 1e-4;
/// Relative slack of the regularity audit.
pub const REGULARITY_SLACK: f64 = 1e-3;

const CLIMB_STARTS: usize = 16;
const CLIMB_STEPS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct SizeAudit<const D: usize> {
    /// `sup |K(x,y)| ρ(x,y)^n` over the samples: the smallest admissible A.
    pub empirical: f64,
    pub declared: f64,
    pub passed: bool,
    pub witness: Option<(Point<D>, Point<D>)>,
    pub samples: usize,
}

/// Uniform pairs from `[-8, 8]^n × [-8, 8]^n`, then a random-step hill climb
/// from the best few.
pub fn audit_size<const D: usize>(spec: &KernelSpec<D>, sample_count: usize, seed: u64) -> Result<SizeAudit<D>> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be at least 1"));
    }
    let region = Aabb::symmetric(AUDIT_HALF_WIDTH);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Point<D>, Point<D>)> = (0..sample_count)
        .map(|_| (region.sample(&mut rng), region.sample(&mut rng)))
        .collect();
    let ratio = |x: &Point<D>, y: &Point<D>| -> f64 {
        let r = rho(&spec.curve, x, y).value;
        if r < SINGULAR_RHO {
            return 0.0;
        }
        spec.kernel.eval(x, y).abs() * powf(r, D as f64)
    };
    let values = crate::par::map_indices(samples.len(), |k| ratio(&samples[k].0, &samples[k].1));
    let starts = top_indices(&values, CLIMB_STARTS);
    let seeds: Vec<u64> = starts.iter().map(|_| rng.random()).collect();
    let climbed = crate::par::map_indices(starts.len(), |s| {
        let (x, y) = samples[starts[s]];
        climb(&region, x, y, values[starts[s]], seeds[s], &|x, y| ratio(x, y))
    });

    let mut best = (0.0f64, None);
    for (k, v) in values.iter().enumerate() {
        if *v > best.0 {
            best = (*v, Some(samples[k]));
        }
    }
    for (v, x, y) in climbed {
        if v > best.0 {
            best = (v, Some((x, y)));
        }
    }
    Ok(SizeAudit {
        empirical: best.0,
        declared: spec.size_bound,
        passed: best.0 <= spec.size_bound * (1.0 + SIZE_SLACK),
        witness: best.1,
        samples: sample_count,
    })
}

fn top_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Random perturbations of `(x, y)` with a step that shrinks on failure.
fn climb<const D: usize, F>(
    region: &Aabb<D>,
    mut x: Point<D>,
    mut y: Point<D>,
    mut value: f64,
    seed: u64,
    objective: &F,
) -> (f64, Point<D>, Point<D>)
where
    F: Fn(&Point<D>, &Point<D>) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut step = 0.5;
    for _ in 0..CLIMB_STEPS {
        let mut nx = x;
        let mut ny = y;
        for k in 0..D {
            nx[k] = (nx[k] + step * rng.random_range(-1.0..1.0)).clamp(region.lo[k], region.hi[k]);
            ny[k] = (ny[k] + step * rng.random_range(-1.0..1.0)).clamp(region.lo[k], region.hi[k]);
        }
        let v = objective(&nx, &ny);
        if v > value {
            value = v;
            x = nx;
            y = ny;
        } else {
            step *= 0.97;
        }
    }
    (value, x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityAudit {
    /// Empirical supremum for the second variable.
    pub a_y: f64,
    /// Empirical supremum for the first variable.
    pub a_x: f64,
    pub declared: Option<f64>,
    /// `None` when no regularity constant is claimed.
    pub passed: Option<bool>,
    pub triples: usize,
}

/// Samples `(x, y, y')` with `|y - y'| ≤ ρ(x,y)/2` (half of them on the
/// boundary sphere) and the analogue in `x`; returns the suprema of
/// `|ΔK| ρ^{n+δ} / |Δ|^δ`.
pub fn audit_regularity<const D: usize>(
    spec: &KernelSpec<D>,
    triple_count: usize,
    seed: u64,
) -> Result<RegularityAudit> {
    if triple_count == 0 {
        return Err(Error::invalid("triple_count must be at least 1"));
    }
    let region = Aabb::symmetric(AUDIT_HALF_WIDTH);
    let n = D as f64;
    let delta = spec.delta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (x, y, unit direction, fraction of ρ/2)
    let triples: Vec<(Point<D>, Point<D>, Point<D>, f64)> = (0..triple_count)
        .map(|_| {
            let x = region.sample(&mut rng);
            let y = region.sample(&mut rng);
            let dir = random_direction::<D, _>(&mut rng);
            let t = if rng.random_bool(0.5) {
                1.0
            } else {
                rng.random_range(f64::EPSILON..1.0)
            };
            (x, y, dir, t)
        })
        .collect();

    let ratio = |x: &Point<D>, y: &Point<D>, dir: &Point<D>, t: f64, in_y: bool| -> f64 {
        let r = rho(&spec.curve, x, y).value;
        if r < SINGULAR_RHO {
            return 0.0;
        }
        let len = 0.5 * r * t.clamp(0.0, 1.0);
        if len == 0.0 {
            return 0.0;
        }
        let moved = |p: &Point<D>| {
            let mut q = *p;
            for k in 0..D {
                q[k] += len * dir[k];
            }
            q
        };
        let (a, b) = if in_y {
            (spec.kernel.eval(x, y), spec.kernel.eval(x, &moved(y)))
        } else {
            (spec.kernel.eval(x, y), spec.kernel.eval(&moved(x), y))
        };
        (a - b).abs() * powf(r, n + delta) / powf(len, delta)
    };

    let mut sup = [0.0f64; 2];
    for (slot, in_y) in [(0usize, true), (1usize, false)] {
        let values = crate::par::map_indices(triples.len(), |k| {
            let (x, y, d, t) = &triples[k];
            ratio(x, y, d, *t, in_y)
        });
        let starts = top_indices(&values, CLIMB_STARTS);
        let seeds: Vec<u64> = starts.iter().map(|_| rng.random()).collect();
        let climbed = crate::par::map_indices(starts.len(), |s| {
            let (x, y, d, t) = triples[starts[s]];
            // the direction and fraction stay fixed; the climb moves (x, y)
            climb(&region, x, y, values[starts[s]], seeds[s], &|x, y| ratio(x, y, &d, t, in_y)).0
        });
        sup[slot] = values.iter().chain(&climbed).fold(0.0f64, |m, v| m.max(*v));
    }

    let passed = spec
        .regularity_bound
        .map(|a| sup[0] <= a * (1.0 + REGULARITY_SLACK) && sup[1] <= a * (1.0 + REGULARITY_SLACK));
    Ok(RegularityAudit {
        a_y: sup[0],
        a_x: sup[1],
        declared: spec.regularity_bound,
        passed,
        triples: triple_count,
    })
}

fn random_direction<const D: usize, R: Rng>(rng: &mut R) -> Point<D> {
    loop {
        let mut v = [0.0; D];
        for c in v.iter_mut() {
            *c = rng.random_range(-1.0..1.0);
        }
        let n = sqrt(v.iter().map(|c| c * c).sum());
        if n > 1e-3 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HormanderReport {
    /// One integral per pair.
    pub values: Vec<f64>,
    pub max: f64,
    /// Analytic bound on the part of each integral outside the box (infinite
    /// when no regularity constant is claimed or a preimage leaves the box).
    pub tail_bounds: Vec<f64>,
    pub adjoint: bool,
}

/// Midpoint-rule values of `∫_{ρ(x,y) ≥ 2|y-z|} |K(x,y) - K(x,z)| dx` over
/// `integration_box`, one per pair. With `adjoint` the arguments are
/// transposed: `∫_{ρ(y,x) ≥ 2|y-z|} |K(y,x) - K(z,x)| dx`.
pub fn hormander_constant<const D: usize>(
    spec: &KernelSpec<D>,
    pairs: &[(Point<D>, Point<D>)],
    integration_box: &Aabb<D>,
    grid_n: usize,
    adjoint: bool,
) -> Result<HormanderReport> {
    if grid_n < 2 {
        return Err(Error::invalid("grid_n must be at least 2"));
    }
    let geometry = crate::grid::GridGeometry::new(*integration_box, grid_n)?;
    for (y, z) in pairs {
        if y == z {
            return Err(Error::invalid("Hörmander pair with y = z"));
        }
    }
    let cell = geometry.cell_volume();
    let curve = &spec.curve;
    let mut values = Vec::with_capacity(pairs.len());
    let mut tails = Vec::with_capacity(pairs.len());
    for (y, z) in pairs {
        let threshold = 2.0 * dist(y, z);
        let terms = crate::par::map_indices(geometry.len(), |k| {
            let x = geometry.midpoint(k);
            if adjoint {
                if !rho_at_least(curve, y, &x, threshold) {
                    return 0.0;
                }
                (spec.kernel.eval(y, &x) - spec.kernel.eval(z, &x)).abs()
            } else {
                if !rho_at_least(curve, &x, y, threshold) {
                    return 0.0;
                }
                (spec.kernel.eval(&x, y) - spec.kernel.eval(&x, z)).abs()
            }
        });
        values.push(pairwise_sum(&terms) * cell);
        tails.push(tail_bound(spec, y, z, integration_box, adjoint));
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(HormanderReport {
        values,
        max,
        tail_bounds: tails,
        adjoint,
    })
}

/// Outside the box, `ρ(x,y) ≥ |x - p_i| / (2c_γ + 2)` for some anchor `p_i`
/// per branch, so the integrand is at most
/// `A |y-z|^δ (2c_γ+2)^{n+δ} Σ_i |x - p_i|^{-n-δ}` and each term integrates
/// over `|x - p_i| ≥ R_i` to `|S^{n-1}| R_i^{-δ} / δ`.
fn tail_bound<const D: usize>(
    spec: &KernelSpec<D>,
    y: &Point<D>,
    z: &Point<D>,
    integration_box: &Aabb<D>,
    adjoint: bool,
) -> f64 {
    let Some(a) = spec.regularity_bound else {
        return f64::INFINITY;
    };
    let curve = &spec.curve;
    let n = D as f64;
    let delta = spec.delta;
    let mut sum = 0.0;
    for b in &curve.branches {
        let anchor = if adjoint {
            b.forward(&b.domain.nearest_point(y))
        } else if b.is_flat() {
            return f64::INFINITY;
        } else {
            curve.range_projection_of(b, y).param
        };
        // distance from the anchor to the complement of the box
        let mut r = f64::INFINITY;
        for k in 0..D {
            r = r.min(anchor[k] - integration_box.lo[k]).min(integration_box.hi[k] - anchor[k]);
        }
        if !(r > 0.0) {
            return f64::INFINITY;
        }
        sum += powf(r, -delta);
    }
    a * powf(dist(y, z), delta) * powf(2.0 * curve.c_gamma + 2.0, n + delta) * unit_sphere_area(D) * sum / delta
}

/// `ln(2√2/(2√2 - 1)) + ln((2√2 + 1)/(2√2))`: the Hörmander integral of the
/// Hilbert kernel over all of R, for any pair.
pub fn hilbert_hormander_exact() -> f64 {
    let s = 2.0 * core::f64::consts::SQRT_2;
    crate::math::ln(s / (s - 1.0)) + crate::math::ln((s + 1.0) / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let t = two_line_hilbert();
        assert!((kernel_eval(&t, &[2.0], &[1.0]).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(matches!(kernel_eval(&t, &[1.0], &[1.0]), Err(Error::Singular { .. })));
        let h = hilbert();
        assert_eq!(kernel_eval(&h, &[2.0], &[1.0]).unwrap(), 1.0);
        let d = diamond_model();
        // inside the diamond, ρ(0, 0) = 1/√2
        assert!((kernel_eval(&d, &[0.0], &[0.0]).unwrap() + core::f64::consts::SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_constants() {
        let c = Arc::new(crate::curves::diagonal::<1>());
        let k: Arc<dyn Kernel<1>> = Arc::new(|_: &Point<1>, _: &Point<1>| 1.0);
        assert!(KernelSpec::new("k", k.clone(), c.clone(), 1.0, None, 0.0).is_err());
        assert!(KernelSpec::new("k", k.clone(), c.clone(), -1.0, None, 1.0).is_err());
        assert!(KernelSpec::new("k", k, c, 1.0, Some(1.0), 0.5).is_ok());
    }

    #[test]
    fn zero_kernel_audits_vanish() {
        let z = KernelSpec::zero(Arc::new(crate::curves::two_lines::<1>()));
        assert_eq!(audit_size(&z, 100, 1).unwrap().empirical, 0.0);
        let r = audit_regularity(&z, 100, 1).unwrap();
        assert_eq!((r.a_y, r.a_x), (0.0, 0.0));
        let h = hormander_constant(&z, &[([0.0], [1.0])], &Aabb::symmetric(16.0), 64, false).unwrap();
        assert_eq!(h.max, 0.0);
    }

    #[test]
    fn hilbert_size_is_one_over_root_two() {
        let a = audit_size(&hilbert(), 2000, 3).unwrap();
        assert!((a.empirical - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(a.passed);
    }

    #[test]
    fn hormander_rejects_degenerate_pairs() {
        let h = hilbert();
        assert!(hormander_constant(&h, &[([1.0], [1.0])], &Aabb::symmetric(4.0), 16, false).is_err());
        assert!(hormander_constant(&h, &[([0.0], [1.0])], &Aabb::symmetric(4.0), 1, false).is_err());
    }

    #[test]
    fn hormander_exact_value() {
        assert!((hilbert_hormander_exact() - 0.738_997_943_851_739).abs() < 1e-12);
    }
}
