//! Sampled minimization over axis-aligned windows: a coarse lattice followed
//! by golden-section refinement along each axis around the best sample.

use crate::geometry::Aabb;
use crate::math::{ceil, lex_cmp, Point};
use core::cmp::Ordering;

/// Resolution of the sampled searches behind ρ and the range projection η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    /// Largest number of coarse samples along one axis of a search window.
    pub coarse_per_axis: usize,
    /// Preferred coarse spacing; small windows use fewer samples.
    pub spacing: f64,
    /// Golden-section iterations per axis during refinement.
    pub refine_steps: usize,
}

impl SearchSettings {
    /// 2^12 samples per axis in one dimension at spacing 1/64 (2^12 samples
    /// across [-32, 32]). Higher dimensions keep the total lattice near 2^16.
    pub fn for_dimension(dim: usize, refine_steps: usize) -> Self {
        let coarse_per_axis = match dim {
            0 | 1 => 1 << 12,
            d => {
                let mut k = 2usize;
                while (k + 1).pow(d as u32) <= 1 << 16 {
                    k += 1;
                }
                k
            }
        };
        SearchSettings {
            coarse_per_axis,
            spacing: 64.0 / 4096.0,
            refine_steps,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate<const D: usize> {
    pub param: Point<D>,
    pub value: f64,
}

impl<const D: usize> Candidate<D> {
    pub fn none() -> Self {
        Candidate {
            param: [0.0; D],
            value: f64::INFINITY,
        }
    }

    pub fn at(param: Point<D>, value: f64) -> Self {
        Candidate { param, value }
    }

    /// Strictly smaller value wins; equal values go to the lexicographically
    /// smaller parameter.
    pub fn offer(&mut self, param: &Point<D>, value: f64) {
        if value < self.value
            || (value == self.value && lex_cmp(param, &self.param) == Ordering::Less)
        {
            self.value = value;
            self.param = *param;
        }
    }

    pub fn merge(&mut self, other: &Candidate<D>) {
        if other.value.is_finite() {
            self.offer(&other.param, other.value);
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes `objective` over the bounded `window`, merging the result into
/// `best`.
pub(crate) fn minimize_in_box<const D: usize, F>(
    window: &Aabb<D>,
    settings: &SearchSettings,
    objective: &F,
    best: &mut Candidate<D>,
) where
    F: Fn(&Point<D>) -> f64,
{
    let mut counts = [1usize; D];
    let mut step = [0.0; D];
    for k in 0..D {
        let width = window.hi[k] - window.lo[k];
        debug_assert!(width.is_finite(), "search window must be bounded");
        if width > 0.0 {
            let wanted = ceil(width / settings.spacing) as usize + 1;
            counts[k] = wanted.clamp(2, settings.coarse_per_axis.max(2));
            step[k] = width / (counts[k] - 1) as f64;
        }
    }

    let coord = |k: usize, i: usize| -> f64 {
        if counts[k] == 1 {
            window.lo[k]
        } else if i + 1 == counts[k] {
            window.hi[k]
        } else {
            window.lo[k] + i as f64 * step[k]
        }
    };

    let mut local = Candidate::none();
    let mut idx = [0usize; D];
    let mut p = [0.0; D];
    'lattice: loop {
        for k in 0..D {
            p[k] = coord(k, idx[k]);
        }
        local.offer(&p, objective(&p));
        // odometer over the lattice, last axis fastest
        let mut k = D;
        loop {
            if k == 0 {
                break 'lattice;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }

    refine(window, &step, settings.refine_steps, objective, &mut local);
    best.merge(&local);
}

/// Golden-section refinement along each axis inside `[p_k - s_k, p_k + s_k]`.
pub(crate) fn refine<const D: usize, F>(
    window: &Aabb<D>,
    half_widths: &Point<D>,
    steps: usize,
    objective: &F,
    best: &mut Candidate<D>,
) where
    F: Fn(&Point<D>) -> f64,
{
    let sweeps = if D <= 1 { 1 } else { 3 };
    let mut s = *half_widths;
    for _ in 0..sweeps {
        for k in 0..D {
            if s[k] <= 0.0 {
                continue;
            }
            let a = (best.param[k] - s[k]).max(window.lo[k]);
            let b = (best.param[k] + s[k]).min(window.hi[k]);
            golden_axis(k, a, b, steps, objective, best);
        }
        for v in s.iter_mut() {
            *v *= 0.5;
        }
    }
}

fn golden_axis<const D: usize, F>(
    axis: usize,
    mut a: f64,
    mut b: f64,
    steps: usize,
    objective: &F,
    best: &mut Candidate<D>,
) where
    F: Fn(&Point<D>) -> f64,
{
    if !(b > a) {
        return;
    }
    let base = best.param;
    let eval = |t: f64, best: &mut Candidate<D>| -> f64 {
        let mut q = base;
        q[axis] = t;
        let v = objective(&q);
        best.offer(&q, v);
        v
    };
    // endpoints first: minima on the window boundary are common
    eval(a, best);
    eval(b, best);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, best);
    let mut fd = eval(d, best);
    for _ in 0..steps {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum_of_a_parabola() {
        let window = Aabb::new([-3.0], [5.0]);
        let s = SearchSettings::for_dimension(1, 60);
        let mut best = Candidate::none();
        minimize_in_box(&window, &s, &|p: &[f64; 1]| (p[0] - 1.234_567_89).powi(2), &mut best);
        assert!((best.param[0] - 1.234_567_89).abs() < 1e-7);
    }

    #[test]
    fn boundary_minimum_is_exact() {
        let window = Aabb::new([0.0], [1.0]);
        let s = SearchSettings::for_dimension(1, 40);
        let mut best = Candidate::none();
        minimize_in_box(&window, &s, &|p: &[f64; 1]| 3.0 - p[0], &mut best);
        assert_eq!(best.param[0], 1.0);
        assert_eq!(best.value, 2.0);
    }

    #[test]
    fn ties_prefer_lexicographically_smaller_parameter() {
        let window = Aabb::new([-1.0], [1.0]);
        let s = SearchSettings::for_dimension(1, 10);
        let mut best = Candidate::none();
        minimize_in_box(&window, &s, &|p: &[f64; 1]| p[0] * p[0] - 1.0 + (p[0] * p[0] - 1.0).abs(), &mut best);
        // every point of [-1, 1] attains 0
        assert_eq!(best.value, 0.0);
        assert_eq!(best.param[0], -1.0);
    }

    #[test]
    fn two_dimensional_lattice_and_refinement() {
        let window = Aabb::new([-2.0, -2.0], [2.0, 2.0]);
        let s = SearchSettings::for_dimension(2, 60);
        assert_eq!(s.coarse_per_axis, 256);
        let mut best = Candidate::none();
        let target = [0.3141, -1.2718];
        minimize_in_box(
            &window,
            &s,
            &|p: &[f64; 2]| crate::math::dist_sq(p, &target),
            &mut best,
        );
        assert!(crate::math::dist(&best.param, &target) < 1e-8);
    }
}
