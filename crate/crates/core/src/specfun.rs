//! Bessel functions of order 0 and 1 and the scaled modified Bessel function.
//!
//! Evaluation is split by argument:
//!
//! * `t <= 4`: power series (no cancellation trouble at this size),
//! * `4 < t < 25`: Miller backward recurrence normalised by
//!   `J0 + 2 (J2 + J4 + ...) = 1`,
//! * `t >= 25`: Hankel asymptotic expansion truncated at its smallest term,
//!   which is below `e^-50` here.
//!
//! `e^-t I0(t)` uses the power series up to `t = 20` and the asymptotic
//! expansion beyond, so it never overflows. All routines were certified to
//! 1e-10 absolute against [`crate::quad::oracle_defining_integral`].

use libm::{exp, sincos, sqrt};

use crate::{Error, Result};

const SERIES_MAX: f64 = 4.0;
const ASYMPTOTIC_MIN: f64 = 25.0;
const I0_ASYMPTOTIC_MIN: f64 = 20.0;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
const TAU: f64 = core::f64::consts::TAU;

/// Accuracy contract for the special functions in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalAccuracy {
    /// Target absolute error per evaluation.
    pub abs_tol: f64,
    /// Largest argument with certified accuracy for `J0` and `J1`.
    pub domain_max: f64,
}

impl EvalAccuracy {
    /// Certified default: 1e-10 absolute on `[0, 1e6]`.
    pub const CERTIFIED: EvalAccuracy = EvalAccuracy { abs_tol: 1e-10, domain_max: 1e6 };
}

impl Default for EvalAccuracy {
    fn default() -> Self {
        Self::CERTIFIED
    }
}

fn check_bessel_arg(function: &'static str, t: f64) -> Result<()> {
    if !(0.0..=EvalAccuracy::CERTIFIED.domain_max).contains(&t) {
        return Err(Error::Domain { function, argument: t });
    }
    Ok(())
}

fn check_nonnegative(function: &'static str, t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain { function, argument: t });
    }
    Ok(())
}

/// `J0(t)` for `0 <= t <= 1e6`.
pub fn bessel_j0(t: f64) -> Result<f64> {
    check_bessel_arg("bessel_j0", t)?;
    Ok(j0(t))
}

/// `J1(t)` for `0 <= t <= 1e6`.
pub fn bessel_j1(t: f64) -> Result<f64> {
    check_bessel_arg("bessel_j1", t)?;
    Ok(j1(t))
}

/// `e^-t I0(t)` for any `t >= 0`.
pub fn bessel_i0_scaled(t: f64) -> Result<f64> {
    check_nonnegative("bessel_i0_scaled", t)?;
    Ok(i0_scaled(t))
}

/// `u(t) = sqrt(2 pi t) e^-t I0(t)`; `u(0) = 0` and `u(t) -> 1`.
pub fn u_ratio(t: f64) -> Result<f64> {
    check_nonnegative("u_ratio", t)?;
    Ok(u(t))
}

/// Unchecked `J0`. Even in `t`; accuracy degrades slowly beyond `1e6`.
pub fn j0(t: f64) -> f64 {
    let t = t.abs();
    if t <= SERIES_MAX {
        series_j0(t)
    } else if t < ASYMPTOTIC_MIN {
        miller(t).0
    } else {
        hankel(0, t)
    }
}

/// Unchecked `J1`. Odd in `t`.
pub fn j1(t: f64) -> f64 {
    let a = t.abs();
    let v = if a <= SERIES_MAX {
        series_j1(a)
    } else if a < ASYMPTOTIC_MIN {
        miller(a).1
    } else {
        hankel(1, a)
    };
    if t < 0.0 {
        -v
    } else {
        v
    }
}

/// Unchecked `e^-|t| I0(|t|)`.
pub fn i0_scaled(t: f64) -> f64 {
    let t = t.abs();
    if t < I0_ASYMPTOTIC_MIN {
        series_i0(t) * exp(-t)
    } else {
        i0_asymptotic_sum(t) / sqrt(TAU * t)
    }
}

/// Unchecked `u(t)`.
pub fn u(t: f64) -> f64 {
    let t = t.abs();
    if t < I0_ASYMPTOTIC_MIN {
        sqrt(TAU * t) * series_i0(t) * exp(-t)
    } else {
        i0_asymptotic_sum(t)
    }
}

fn series_j0(t: f64) -> f64 {
    let q = -0.25 * t * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let k = k as f64;
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn series_j1(t: f64) -> f64 {
    let q = -0.25 * t * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let k = k as f64;
        term *= q / (k * (k + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    0.5 * t * sum
}

fn series_i0(t: f64) -> f64 {
    let q = 0.25 * t * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * k);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence; returns `(J0(t), J1(t))`.
fn miller(t: f64) -> (f64, f64) {
    let start = {
        let n = (t + 40.0) as u32;
        n + (n & 1)
    };
    let mut next = 0.0; // b_{k+1}
    let mut cur = 1e-30; // b_k
    let mut even_sum = cur; // start is even
    let mut b1 = 0.0;
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / t) * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx == 1 {
            b1 = cur;
        } else if idx >= 2 && idx % 2 == 0 {
            even_sum += cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            next *= 1e-200;
            even_sum *= 1e-200;
            b1 *= 1e-200;
        }
    }
    let norm = cur + 2.0 * even_sum;
    (cur / norm, b1 / norm)
}

/// Hankel expansion `J_nu(t) = sqrt(2/(pi t)) (P cos chi - Q sin chi)` with
/// `chi = t - (nu/2 + 1/4) pi`.
fn hankel(nu: u32, t: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut c = 1.0f64;
    let mut prev_abs = f64::INFINITY;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        let next = c * (mu - odd * odd) / (8.0 * k as f64 * t);
        if next.abs() >= prev_abs {
            break;
        }
        prev_abs = next.abs();
        c = next;
        // c_k enters with sign (-1)^(k/2) in P (k even) or (-1)^((k-1)/2) in Q.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * c;
        } else {
            q += sign * c;
        }
        if c.abs() < 1e-17 {
            break;
        }
    }
    let (s, co) = sincos(t);
    let (cos_chi, sin_chi) = if nu == 0 {
        ((co + s) * FRAC_1_SQRT_2, (s - co) * FRAC_1_SQRT_2)
    } else {
        ((s - co) * FRAC_1_SQRT_2, (-s - co) * FRAC_1_SQRT_2)
    };
    sqrt(2.0 / (core::f64::consts::PI * t)) * (p * cos_chi - q * sin_chi)
}

/// `sum_k prod_{j<=k} (2j-1)^2 / (k! (8t)^k)`, which equals `u(t)` up to an
/// exponentially small remainder for large `t`.
fn i0_asymptotic_sum(t: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd / (8.0 * k as f64 * t);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert_eq!(bessel_i0_scaled(0.0).unwrap(), 1.0);
        assert_eq!(u_ratio(0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_j0(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_j1(2e6), Err(Error::Domain { .. })));
        assert!(matches!(bessel_i0_scaled(-1e-3), Err(Error::Domain { .. })));
        assert!(matches!(u_ratio(f64::NAN), Err(Error::Domain { .. })));
        assert!(bessel_i0_scaled(1e300).is_ok());
    }

    #[test]
    fn j1_small_argument() {
        let v = bessel_j1(1e-6).unwrap();
        assert!((v - 5e-7).abs() < 1e-13);
    }

    #[test]
    fn regimes_join_continuously() {
        // Both functions have slope at most 1, so a step of edge * 1e-12
        // moves them by no more than that.
        for &edge in &[SERIES_MAX, ASYMPTOTIC_MIN] {
            let below = edge * (1.0 - 1e-12);
            let slack = edge * 1e-12 + 1e-14;
            assert!((j0(below) - j0(edge)).abs() < slack);
            assert!((j1(below) - j1(edge)).abs() < slack);
        }
        let below = I0_ASYMPTOTIC_MIN * (1.0 - 1e-12);
        assert!((u(below) - u(I0_ASYMPTOTIC_MIN)).abs() < 1e-13);
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(j0(2.404825557695773).abs() < 1e-10);
    }

    #[test]
    fn wronskian_like_identity_at_large_argument() {
        // J0^2 + J1^2 ~ 2/(pi t) to leading order.
        let t = 1e5;
        let s = j0(t) * j0(t) + j1(t) * j1(t);
        let lead = 2.0 / (core::f64::consts::PI * t);
        assert!((s / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn u_ratio_large_t() {
        let v = u(1e4);
        assert!((v - 1.0).abs() <= 2e-5);
        let w = u(100.0) - 1.0;
        assert!(w > 0.0 && w < 1.5e-3);
        assert!(u(1e300).is_finite());
    }
}
