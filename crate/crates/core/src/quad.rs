//! One-dimensional quadrature for radial integrands.
//!
//! [`integrate_adaptive`] is a globally adaptive Gauss-Kronrod (10/21 point)
//! scheme. The panel error is the raw Kronrod-Gauss difference `|K21 - G10|`
//! with a round-off floor, which overestimates the true error of the K21
//! value for smooth integrands. When the caller declares a dominant angular
//! frequency the interval is pre-split into panels no longer than one period,
//! so every period gets at least 21 nodes.
//!
//! [`integrate_gaussian_tail`] handles `[0, inf)` for integrands bounded by
//! `C (1 + s)^p e^{-alpha s^2}`: the cutoff comes from a closed-form bound on
//! the discarded tail.
//!
//! [`oracle_defining_integral`] evaluates the integral definitions of `J0`
//! and `e^-t I0(t)` with composite Gauss-Legendre rules whose nodes are
//! computed from scratch. It shares no code with [`crate::specfun`].

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{PI, TAU};

use libm::{cos, erfc, exp, log, sin, sqrt};
use num_complex::Complex64;

use crate::sum::{pairwise_error_factor, pairwise_sum, pairwise_sum_complex};
use crate::{Error, Result};

/// Value of a quadrature together with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    /// Estimated error of the finite-interval rule.
    pub discretization_error: f64,
    /// Bound on the discarded tail (zero for finite intervals).
    pub truncation_error: f64,
    pub evaluations: usize,
    /// Upper integration limit actually used (`b` for finite intervals).
    pub cutoff: f64,
}

impl QuadratureResult {
    pub fn total_error(&self) -> f64 {
        self.discretization_error + self.truncation_error
    }
}

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Absolute error target.
    pub tol: f64,
    /// Dominant angular frequency of the integrand, if known.
    pub frequency: Option<f64>,
    /// Maximum number of panels before giving up.
    pub max_panels: usize,
}

impl QuadConfig {
    pub fn new(tol: f64) -> Self {
        QuadConfig { tol, frequency: None, max_panels: 20_000 }
    }

    pub fn with_frequency(mut self, omega: f64) -> Self {
        self.frequency = Some(omega);
        self
    }
}

// Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077547765452640,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    /// The Gauss-Kronrod difference is below the round-off floor.
    at_floor: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by position so the order is total.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_sum = fc.norm() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let pair = f1 + f2;
        kronrod += pair * WGK[j];
        abs_sum += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let diff = ((kronrod - gauss) * half).norm();
    let floor = 50.0 * f64::EPSILON * abs_sum * half.abs();
    Panel { a, b, value, error: diff.max(floor), at_floor: diff <= floor }
}

fn finish(panels: &[Panel], evaluations: usize, b: f64) -> QuadratureResult {
    let mut sorted: Vec<Panel> = panels.to_vec();
    sorted.sort_by(|p, q| p.a.total_cmp(&q.a));
    let values: Vec<Complex64> = sorted.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = sorted.iter().map(|p| p.error).collect();
    QuadratureResult {
        value: pairwise_sum_complex(&values),
        discretization_error: pairwise_sum(&errors),
        truncation_error: 0.0,
        evaluations,
        cutoff: b,
    }
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `cfg.tol`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::contract("integrate_adaptive needs finite a < b"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::contract("integrate_adaptive needs tol > 0"));
    }
    let initial = match cfg.frequency {
        Some(omega) if omega > 0.0 => {
            let periods = (b - a) * omega / TAU;
            (libm::ceil(periods) as usize).max(1)
        }
        _ => 1,
    };
    if initial > cfg.max_panels {
        return Err(Error::contract("declared frequency needs more panels than the budget"));
    }
    let width = (b - a) / initial as f64;
    let mut heap = BinaryHeap::with_capacity(initial * 2);
    let mut evaluations = 0;
    for i in 0..initial {
        let lo = a + width * i as f64;
        let hi = if i + 1 == initial { b } else { a + width * (i + 1) as f64 };
        heap.push(gk21(&f, lo, hi));
        evaluations += 21;
    }
    let min_width = (b - a) * 1e-13;
    let mut total: f64 = heap.iter().map(|p| p.error).sum();
    let mut frozen: Vec<Panel> = Vec::new();
    while total > cfg.tol && heap.len() + frozen.len() < cfg.max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        if worst.at_floor {
            // Every remaining panel is at or below this one; splitting only
            // reshuffles round-off.
            heap.push(worst);
            break;
        }
        if worst.b - worst.a < min_width {
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;
        total += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if total <= cfg.tol {
            // Guard against drift in the running total.
            total = heap.iter().chain(frozen.iter()).map(|p| p.error).sum();
        }
    }
    let mut all = heap.into_vec();
    all.extend(frozen);
    let result = finish(&all, evaluations, b);
    if result.discretization_error > cfg.tol {
        return Err(Error::NotConverged {
            operation: "integrate_adaptive",
            best: alloc::boxed::Box::new(result),
            tolerance: cfg.tol,
        });
    }
    Ok(result)
}

/// Envelope `|f(s)| <= scale (1 + s)^power e^{-alpha s^2}` on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEnvelope {
    pub scale: f64,
    pub power: f64,
    pub alpha: f64,
}

impl GaussianEnvelope {
    pub fn new(scale: f64, power: f64, alpha: f64) -> Self {
        GaussianEnvelope { scale, power, alpha }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.scale * libm::pow(1.0 + s, self.power) * exp(-self.alpha * s * s)
    }

    /// Upper bound on `int_t^inf scale (1+s)^p e^{-alpha s^2} ds`.
    ///
    /// Uses `(1+s)^p <= (1+t)^p e^{beta (s-t)}` with `beta = p/(1+t)` and
    /// completes the square.
    pub fn tail_bound(&self, t: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let alpha = self.alpha;
        let beta = self.power / (1.0 + t);
        let shift = beta / (2.0 * alpha);
        let log_pre = self.power * log(1.0 + t) - beta * t + beta * beta / (4.0 * alpha);
        let gauss = 0.5 * sqrt(PI / alpha) * erfc(sqrt(alpha) * (t - shift));
        self.scale * exp(log_pre) * gauss
    }

    /// Smallest (to within 1e-6 relative) `t` with `tail_bound(t) <= target`.
    pub fn cutoff_for(&self, target: f64) -> f64 {
        if self.scale == 0.0 || self.tail_bound(0.0) <= target {
            return 0.0;
        }
        let mut hi = 1.0 / sqrt(self.alpha);
        while self.tail_bound(hi) > target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if self.tail_bound(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Integral over `[0, inf)` of `f`, which the caller bounds by `envelope`.
///
/// Half of `tol` goes to the truncated tail, half to the finite part.
pub fn integrate_gaussian_tail<F>(
    f: F,
    envelope: GaussianEnvelope,
    tol: f64,
    frequency: Option<f64>,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    if !(envelope.alpha > 0.0) {
        return Err(Error::contract("Gaussian envelope needs alpha > 0"));
    }
    if !(envelope.scale >= 0.0) || !(envelope.power >= 0.0) {
        return Err(Error::contract("Gaussian envelope needs scale >= 0 and power >= 0"));
    }
    if !(tol > 0.0) {
        return Err(Error::contract("integrate_gaussian_tail needs tol > 0"));
    }
    let cutoff = envelope.cutoff_for(0.5 * tol);
    if cutoff == 0.0 {
        return Ok(QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            discretization_error: 0.0,
            truncation_error: envelope.tail_bound(0.0),
            evaluations: 0,
            cutoff: 0.0,
        });
    }
    let mut cfg = QuadConfig::new(0.5 * tol);
    cfg.frequency = frequency;
    cfg.max_panels = cfg.max_panels.max(4 * ((cutoff * frequency.unwrap_or(0.0) / TAU) as usize));
    let mut result = match integrate_adaptive(f, 0.0, cutoff, &cfg) {
        Ok(r) => r,
        Err(Error::NotConverged { operation, mut best, tolerance }) => {
            best.truncation_error = envelope.tail_bound(cutoff);
            return Err(Error::NotConverged { operation, best, tolerance });
        }
        Err(e) => return Err(e),
    };
    result.truncation_error = envelope.tail_bound(cutoff);
    Ok(result)
}

/// Defining integral selected by [`oracle_defining_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// `(1/pi) int_0^pi cos(t cos theta) d theta`.
    J0,
    /// `(1/pi) int_0^pi exp(-2 t sin^2(theta/2)) d theta`, the smooth form of
    /// `(1/pi) int_0^2 e^{-t xi} / sqrt(xi (2 - xi)) d xi`.
    I0Scaled,
}

const ORACLE_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = cos(PI * (i as f64 + 0.75) / (order as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        dp = if d != 0.0 { d } else { dp };
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn composite_gl(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    nodes: &[f64],
    weights: &[f64],
) -> (f64, f64) {
    let h = (b - a) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    let mut abs_parts = Vec::with_capacity(panels);
    for i in 0..panels {
        let lo = a + h * i as f64;
        let center = lo + 0.5 * h;
        let mut s = 0.0;
        let mut sa = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let v = f(center + 0.5 * h * x);
            s += w * v;
            sa += w * v.abs();
        }
        parts.push(0.5 * h * s);
        abs_parts.push(0.5 * h * sa);
    }
    (pairwise_sum(&parts), pairwise_sum(&abs_parts))
}

/// High-precision evaluation of the defining integral of `J0(t)` or
/// `e^-t I0(t)` with `panels` composite 16-point Gauss-Legendre panels on
/// `[0, pi]`.
///
/// The reported discretization error is the change against `panels / 2`
/// panels, floored at the round-off level of the rule.
pub fn oracle_defining_integral(kind: OracleKind, t: f64, panels: usize) -> Result<QuadratureResult> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain { function: "oracle_defining_integral", argument: t });
    }
    if panels < 64 {
        return Err(Error::contract("oracle_defining_integral needs at least 64 panels"));
    }
    let (nodes, weights) = gauss_legendre(ORACLE_ORDER);
    let integrand = |theta: f64| -> f64 {
        match kind {
            OracleKind::J0 => cos(t * cos(theta)),
            OracleKind::I0Scaled => {
                let h = sin(0.5 * theta);
                exp(-2.0 * t * h * h)
            }
        }
    };
    let (fine, fine_abs) = composite_gl(&integrand, 0.0, PI, panels, &nodes, &weights);
    let (coarse, _) = composite_gl(&integrand, 0.0, PI, panels / 2, &nodes, &weights);
    let value = fine / PI;
    let roundoff = (64.0 * f64::EPSILON + pairwise_error_factor(panels)) * fine_abs / PI;
    Ok(QuadratureResult {
        value: Complex64::new(value, 0.0),
        discretization_error: ((fine - coarse) / PI).abs().max(roundoff),
        truncation_error: 0.0,
        evaluations: (panels + panels / 2) * ORACLE_ORDER,
        cutoff: PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn constant_integrand() {
        let r = integrate_adaptive(|_| re(1.0), 0.0, 1.0, &QuadConfig::new(1e-12)).unwrap();
        assert!((r.value.re - 1.0).abs() < 1e-15);
        assert!(r.evaluations >= 1);
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_adaptive(|s| re(s.powi(7)), 0.0, 2.0, &QuadConfig::new(1e-11)).unwrap();
        assert!((r.value.re - 32.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_normalisation() {
        let f = |s: f64| re(TAU * s * exp(-PI * PI * s * s));
        let r = integrate_adaptive(f, 0.0, 8.0, &QuadConfig::new(1e-12)).unwrap();
        // Closed form: (1/pi) (1 - e^{-64 pi^2}).
        assert!((r.value.re - 1.0 / PI).abs() < 1e-10, "{}", r.value.re);
    }

    #[test]
    fn frequency_sets_panel_density() {
        let cfg = QuadConfig::new(1e-10).with_frequency(100.0);
        let r = integrate_adaptive(|s| re(cos(100.0 * s)), 0.0, 10.0, &cfg).unwrap();
        // 10 * 100 / 2 pi = 159.2 periods -> at least 160 panels of 21 nodes.
        assert!(r.evaluations >= 160 * 21);
        assert!((r.value.re - sin(1000.0) / 100.0).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_reports_best() {
        let mut cfg = QuadConfig::new(1e-15);
        cfg.max_panels = 3;
        let err = integrate_adaptive(|s| re(sqrt(s)), 0.0, 1.0, &cfg).unwrap_err();
        match err {
            Error::NotConverged { best, .. } => {
                assert!((best.value.re - 2.0 / 3.0).abs() < 1e-3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_interval_is_contract_error() {
        assert!(matches!(
            integrate_adaptive(|_| re(1.0), 1.0, 1.0, &QuadConfig::new(1e-6)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn gaussian_tail_closed_form() {
        let n: f64 = 4.0;
        let alpha = PI * PI / (n * n);
        let env = GaussianEnvelope::new(TAU, 1.0, alpha);
        let r = integrate_gaussian_tail(|s| re(TAU * s * exp(-alpha * s * s)), env, 1e-10, None)
            .unwrap();
        assert!((r.value.re - n * n / PI).abs() < 1e-9);
        assert!(r.truncation_error <= 0.5e-10);
    }

    #[test]
    fn zero_envelope() {
        let env = GaussianEnvelope::new(0.0, 0.0, 1.0);
        let r = integrate_gaussian_tail(|_| re(0.0), env, 1e-10, None).unwrap();
        assert_eq!(r.value, re(0.0));
        assert_eq!(r.cutoff, 0.0);
    }

    #[test]
    fn nonpositive_alpha_is_rejected() {
        let env = GaussianEnvelope::new(1.0, 0.0, 0.0);
        assert!(matches!(
            integrate_gaussian_tail(|_| re(0.0), env, 1e-10, None),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn tail_bound_dominates_numeric_tail() {
        let env = GaussianEnvelope::new(3.0, 2.0, 0.7);
        for &t in &[0.0, 0.5, 2.0, 5.0] {
            let numeric = integrate_adaptive(
                |s| re(env.eval(s)),
                t,
                t + 20.0,
                &QuadConfig::new(1e-12),
            )
            .unwrap();
            assert!(env.tail_bound(t) >= numeric.value.re * (1.0 - 1e-12));
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(ORACLE_ORDER);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let m30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_trivial_values() {
        let j = oracle_defining_integral(OracleKind::J0, 0.0, 64).unwrap();
        let i = oracle_defining_integral(OracleKind::I0Scaled, 0.0, 64).unwrap();
        assert!((j.value.re - 1.0).abs() < 1e-15);
        assert!((i.value.re - 1.0).abs() < 1e-15);
        assert!(oracle_defining_integral(OracleKind::J0, 1.0, 32).is_err());
    }

    #[test]
    fn oracle_self_converges() {
        let a = oracle_defining_integral(OracleKind::J0, 5.0, 2048).unwrap();
        let b = oracle_defining_integral(OracleKind::J0, 5.0, 4096).unwrap();
        assert!((a.value.re - b.value.re).abs() < 1e-12);
    }
}
