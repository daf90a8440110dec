//! Scalar abstraction and fixed-order summation.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar for all value-carrying data (f32 or f64).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + FromStr
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` into the scalar type.
#[inline]
pub fn cast<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("f64 -> scalar conversion")
}

/// Convert an `i64` into the scalar type.
#[inline]
pub fn cast_i64<S: Scalar>(x: i64) -> S {
    S::from_i64(x).expect("i64 -> scalar conversion")
}

/// Report a scalar as f64 (for CSV/JSON output).
#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().expect("scalar -> f64 conversion")
}

const PAIRWISE_BASE: usize = 8;

/// Sum `f(i)` for `i` in `0..n` in a fixed balanced-tree order.
///
/// The tree shape depends only on `n`, so repeated runs (and any caller that
/// evaluates the terms in parallel) reduce in the identical order.
pub fn pairwise_map_sum<S: Scalar, F: Fn(usize) -> S>(n: usize, f: F) -> S {
    fn go<S: Scalar, F: Fn(usize) -> S>(lo: usize, hi: usize, f: &F) -> S {
        let len = hi - lo;
        if len <= PAIRWISE_BASE {
            let mut acc = S::zero();
            for i in lo..hi {
                acc = acc + f(i);
            }
            acc
        } else {
            let mid = lo + len / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    go(0, n, &f)
}

/// Pairwise sum of a slice (same tree as [`pairwise_map_sum`]).
pub fn pairwise_sum<S: Scalar>(v: &[S]) -> S {
    pairwise_map_sum(v.len(), |i| v[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_sequential_on_exact_data() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }

    #[test]
    fn pairwise_is_deterministic() {
        let v: Vec<f64> =
            (0..1000u64).map(|i| ((i * 2654435761) % 1000) as f64 * 1e-3 + 0.1).collect();
        let a = pairwise_sum(&v);
        let b = pairwise_sum(&v);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn pairwise_generic_f32() {
        let v: Vec<f32> = vec![0.5, 0.25, 0.125, 0.125];
        assert_eq!(pairwise_sum(&v), 1.0f32);
    }
}
