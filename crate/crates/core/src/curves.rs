//! Built-in curves.
//!
//! - `diagonal`: γ(x) = x on R^n, the classical singular set.
//! - `two-lines`: γ(x) = ±x on R^n; the branches meet only at 0.
//! - `diamond`: the square |y| = 1 - |x| on [-1, 1] plus the flat rays y = 0
//!   on |x| ≥ 1. The folded maps ±(1 - |x|) are not injective, so each
//!   slanted side is its own branch:
//!
//!   | index | map      | domain   |
//!   |-------|----------|----------|
//!   | 0     | 1 - x    | [0, 1]   |
//!   | 1     | 1 + x    | [-1, 0]  |
//!   | 2     | x - 1    | [0, 1]   |
//!   | 3     | -1 - x   | [-1, 0]  |
//!   | 4     | 0        | \|x\| ≥ 1 |

use alloc::sync::Arc;
use alloc::vec;

use crate::geometry::{Aabb, BranchMap, CurveBranch, HyperCurve, Point, Region};

/// γ(x) = x.
#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl<const D: usize> BranchMap<D> for Identity {
    fn forward(&self, x: &Point<D>) -> Point<D> {
        *x
    }
    fn inverse(&self, y: &Point<D>) -> Option<Point<D>> {
        Some(*y)
    }
    fn jacobian(&self, _x: &Point<D>) -> f64 {
        1.0
    }
}

/// γ(x) = -x.
#[derive(Debug, Clone, Copy)]
pub struct Negation;

impl<const D: usize> BranchMap<D> for Negation {
    fn forward(&self, x: &Point<D>) -> Point<D> {
        x.map(|v| -v)
    }
    fn inverse(&self, y: &Point<D>) -> Option<Point<D>> {
        Some(y.map(|v| -v))
    }
    fn jacobian(&self, _x: &Point<D>) -> f64 {
        if D % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// γ(x) = slope·x + offset on the line.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub slope: f64,
    pub offset: f64,
}

impl BranchMap<1> for Affine {
    fn forward(&self, x: &Point<1>) -> Point<1> {
        [self.slope * x[0] + self.offset]
    }
    fn inverse(&self, y: &Point<1>) -> Option<Point<1>> {
        (self.slope != 0.0).then(|| [(y[0] - self.offset) / self.slope])
    }
    fn jacobian(&self, _x: &Point<1>) -> f64 {
        self.slope
    }
}

/// A constant map. Not an SHC branch in the strict sense.
#[derive(Debug, Clone, Copy)]
pub struct Constant<const D: usize>(pub Point<D>);

impl<const D: usize> BranchMap<D> for Constant<D> {
    fn forward(&self, _x: &Point<D>) -> Point<D> {
        self.0
    }
    fn inverse(&self, _y: &Point<D>) -> Option<Point<D>> {
        None
    }
    fn jacobian(&self, _x: &Point<D>) -> f64 {
        0.0
    }
    fn constant_value(&self) -> Option<Point<D>> {
        Some(self.0)
    }
}

pub fn diagonal<const D: usize>() -> HyperCurve<D> {
    HyperCurve::new(
        "diagonal",
        vec![CurveBranch::new(Arc::new(Identity), Region::whole(), 1.0)],
        vec![],
    )
    .expect("diagonal curve is well formed")
}

pub fn two_lines<const D: usize>() -> HyperCurve<D> {
    HyperCurve::new(
        "two-lines",
        vec![
            CurveBranch::new(Arc::new(Identity), Region::whole(), 1.0),
            CurveBranch::new(Arc::new(Negation), Region::whole(), 1.0),
        ],
        vec![[0.0; D]],
    )
    .expect("two-lines curve is well formed")
}

pub fn diamond() -> HyperCurve<1> {
    let right = Region::single(Aabb::new([0.0], [1.0]));
    let left = Region::single(Aabb::new([-1.0], [0.0]));
    let side = |slope: f64, offset: f64, domain: &Region<1>| {
        CurveBranch::new(Arc::new(Affine { slope, offset }), domain.clone(), 1.0)
    };
    let outside = Region::new(vec![
        Aabb::new([f64::NEG_INFINITY], [-1.0]),
        Aabb::new([1.0], [f64::INFINITY]),
    ])
    .expect("two nonempty boxes");
    HyperCurve::new(
        "diamond",
        vec![
            side(-1.0, 1.0, &right),
            side(1.0, 1.0, &left),
            side(1.0, -1.0, &right),
            side(-1.0, -1.0, &left),
            CurveBranch::new(Arc::new(Constant([0.0])), outside, 1.0),
        ],
        vec![[-1.0], [0.0], [1.0]],
    )
    .expect("diamond curve is well formed")
}
