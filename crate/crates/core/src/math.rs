//! Scalar and small-vector helpers shared across the crate.
//!
//! All transcendental functions go through `libm` so that `no_std` builds and
//! `std` builds produce the same bits.

use core::cmp::Ordering;

pub type Point<const D: usize> = [f64; D];

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn powf(x: f64, p: f64) -> f64 {
    libm::pow(x, p)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `2^e` as an exact power of two.
#[inline]
pub fn exp2i(e: i32) -> f64 {
    libm::ldexp(1.0, e)
}

#[inline]
pub fn dist_sq<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

#[inline]
pub fn dist<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    sqrt(dist_sq(a, b))
}

#[inline]
pub fn norm<const D: usize>(a: &Point<D>) -> f64 {
    sqrt(a.iter().map(|v| v * v).sum())
}

pub fn is_finite_point<const D: usize>(p: &Point<D>) -> bool {
    p.iter().all(|v| v.is_finite())
}

/// Lexicographic order on points; NaN never appears in validated points.
pub fn lex_cmp<const D: usize>(a: &Point<D>, b: &Point<D>) -> Ordering {
    for k in 0..D {
        match a[k].partial_cmp(&b[k]) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Pairwise (tree) summation. The split points depend only on the length,
/// so the rounding sequence is fixed for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * core::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - core::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * core::f64::consts::PI).abs() < 1e-14);
        assert_eq!(unit_sphere_area(1), 2.0);
    }

    #[test]
    fn pairwise_matches_exact_integers() {
        let v: alloc::vec::Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn lexicographic_order() {
        assert_eq!(lex_cmp(&[1.0, 2.0], &[1.0, 3.0]), Ordering::Less);
        assert_eq!(lex_cmp(&[2.0, 0.0], &[1.0, 3.0]), Ordering::Greater);
        assert_eq!(lex_cmp(&[1.0], &[1.0]), Ordering::Equal);
    }
}
