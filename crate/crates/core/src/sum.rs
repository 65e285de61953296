//! Fixed-order pairwise summation.
//!
//! The reduction tree depends only on the slice length, so results are
//! bit-identical no matter how the terms were produced.

use core::ops::Add;

use num_complex::Complex64;

const BLOCK: usize = 8;

fn pairwise<T: Copy + Add<Output = T>>(xs: &[T], zero: T) -> T {
    if xs.len() <= BLOCK {
        return xs.iter().fold(zero, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid], zero) + pairwise(&xs[mid..], zero)
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise(xs, 0.0)
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    pairwise(xs, Complex64::new(0.0, 0.0))
}

/// Forward error bound factor for pairwise summation of `len` terms:
/// `|computed - exact| <= factor * sum |x_i|`.
pub fn pairwise_error_factor(len: usize) -> f64 {
    if len <= 1 {
        return 0.0;
    }
    let depth = (usize::BITS - (len - 1).leading_zeros()) as f64 + BLOCK as f64;
    depth * f64::EPSILON
}
