//! Approximate circle families.
//!
//! Two families converge pointwise to the indicator of the circle `C_r`
//! under a common dominating envelope:
//!
//! * [`FamilyKind::GaussianTheta`]: `f_n = 2 n r sqrt(pi) G_n * theta_r`
//!   with `G_n(x) = exp(-n^2 |x|^2)` and `theta_r` the uniform probability
//!   measure on `C_r`. Spatially
//!   `f_n(x) = u(2 n^2 r |x|) sqrt(r/|x|) exp(-n^2 (|x| - r)^2)`, and
//!   `f_n^(s) = (2 r pi sqrt(pi) / n) exp(-pi^2 s^2 / n^2) J0(2 pi r s)`.
//! * [`FamilyKind::AnnulusGaussian`]: `f_n = g_n * 1_{A_n}` with
//!   `g_n(x) = (n^4/pi) exp(-n^4 |x|^2)` and `A_n` the open annulus
//!   `r - 1/n < |x| < r + 1/n` (requires `n > 1/r`). Its transform is
//!   `exp(-pi^2 s^2 / n^4)` times the annulus transform.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use libm::{acos, exp, hypot, sqrt};

use crate::quad::{integrate_adaptive, GaussianEnvelope, QuadConfig};
use crate::specfun::{j0, j1, u};
use crate::{Complex64, Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Absolute tolerance for the annulus spatial quadrature.
pub const ANNULUS_SPATIAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    GaussianTheta,
    AnnulusGaussian,
}

/// Member `n` of an approximate `r`-circle family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFamily {
    kind: FamilyKind,
    r: f64,
    n: u32,
}

impl CircleFamily {
    pub fn new(kind: FamilyKind, r: f64, n: u32) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::contract("circle radius r must be positive"));
        }
        if n == 0 {
            return Err(Error::contract("family index n must be >= 1"));
        }
        if kind == FamilyKind::AnnulusGaussian && !(n as f64 * r > 1.0) {
            return Err(Error::contract("annulus family needs n > 1/r"));
        }
        Ok(CircleFamily { kind, r, n })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `f_n(x)`.
    pub fn f_spatial(&self, x: [f64; 2]) -> Result<f64> {
        self.f_spatial_radial(hypot(x[0], x[1]))
    }

    /// `f_n` at any point with `|x| = s` (both families are radial).
    pub fn f_spatial_radial(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::contract("radius must be nonnegative"));
        }
        match self.kind {
            FamilyKind::GaussianTheta => Ok(self.gaussian_spatial(s)),
            FamilyKind::AnnulusGaussian => self.annulus_spatial(s),
        }
    }

    fn gaussian_spatial(&self, s: f64) -> f64 {
        let n = self.nf();
        let r = self.r;
        if s == 0.0 {
            return 2.0 * n * r * SQRT_PI * exp(-n * n * r * r);
        }
        let d = s - r;
        u(2.0 * n * n * r * s) * sqrt(r / s) * exp(-n * n * d * d)
    }

    /// `(g_n * 1_A)(x)` in polar coordinates centred at `x`.
    ///
    /// With `v = n^2 rho`, the value is `(1/pi) int_0^inf e^{-v^2} Theta(v) v dv`
    /// where `Theta` is the angle of the circle of radius `rho` about `x`
    /// that lies inside the annulus.
    fn annulus_spatial(&self, a: f64) -> Result<f64> {
        let n2 = self.nf() * self.nf();
        let outer = self.r + 1.0 / self.nf();
        let inner = self.r - 1.0 / self.nf();
        let v_max = 6.5; // e^{-v^2} < 5e-19 beyond
        let mut breaks: Vec<f64> = Vec::with_capacity(6);
        breaks.push(0.0);
        for big_r in [inner, outer] {
            for b in [(a - big_r).abs() * n2, (a + big_r) * n2] {
                if b > 0.0 && b < v_max {
                    breaks.push(b);
                }
            }
        }
        breaks.push(v_max);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let integrand = |v: f64| {
            let rho = v / n2;
            let theta = inside_angle(a, rho, outer) - inside_angle(a, rho, inner);
            Complex64::new(exp(-v * v) * theta * v / PI, 0.0)
        };
        let pieces = (breaks.len() - 1) as f64;
        let cfg = QuadConfig::new(ANNULUS_SPATIAL_TOL / pieces);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                total += integrate_adaptive(integrand, w[0], w[1], &cfg)?.value.re;
            }
        }
        Ok(total.max(0.0))
    }

    /// `f_n^(y)` for any `|y| = s`.
    pub fn f_spectral(&self, s: f64) -> f64 {
        let n = self.nf();
        let r = self.r;
        match self.kind {
            FamilyKind::GaussianTheta => {
                (2.0 * r * PI * SQRT_PI / n) * exp(-PI * PI * s * s / (n * n)) * j0(TAU * r * s)
            }
            FamilyKind::AnnulusGaussian => {
                let n4 = n * n * n * n;
                exp(-PI * PI * s * s / n4) * annulus_ft_unchecked(r, n, s)
            }
        }
    }

    /// Bound `|f_n^(s)| <= C e^{-alpha s^2}`.
    pub fn spectral_envelope(&self) -> GaussianEnvelope {
        let n = self.nf();
        let r = self.r;
        match self.kind {
            FamilyKind::GaussianTheta => {
                GaussianEnvelope::new(2.0 * r * PI * SQRT_PI / n, 0.0, PI * PI / (n * n))
            }
            FamilyKind::AnnulusGaussian => {
                GaussianEnvelope::new(4.0 * PI * r / n, 0.0, PI * PI / (n * n * n * n))
            }
        }
    }

    /// Dominant angular frequency of `f_n^` in `s`.
    pub fn spectral_frequency(&self) -> f64 {
        match self.kind {
            FamilyKind::GaussianTheta => TAU * self.r,
            FamilyKind::AnnulusGaussian => TAU * (self.r + 1.0 / self.nf()),
        }
    }

    /// Bound on `f_n(x)` for `|x| = s >= spatial_decay_start()`, of the form
    /// `C e^{-beta s^2}`. Returns `(C, beta)`.
    pub fn spatial_decay(&self, sup_u: f64) -> (f64, f64) {
        let n = self.nf();
        match self.kind {
            // s >= 2r gives (s - r)^2 >= s^2/4 and sqrt(r/s) <= 1.
            FamilyKind::GaussianTheta => (sup_u, n * n / 4.0),
            // s >= 2(r + 1/n): the Gaussian mass beyond distance s/2 is e^{-n^4 s^2/4}.
            FamilyKind::AnnulusGaussian => (1.0, n * n * n * n / 4.0),
        }
    }

    pub fn spatial_decay_start(&self) -> f64 {
        match self.kind {
            FamilyKind::GaussianTheta => 2.0 * self.r,
            FamilyKind::AnnulusGaussian => 2.0 * (self.r + 1.0 / self.nf()),
        }
    }
}

/// Angle of `{theta : |x + rho e^{i theta}| < big_r}` for `|x| = a`.
fn inside_angle(a: f64, rho: f64, big_r: f64) -> f64 {
    if big_r <= 0.0 {
        return 0.0;
    }
    if a == 0.0 || rho == 0.0 {
        return if a + rho < big_r { TAU } else { 0.0 };
    }
    let c = (big_r * big_r - a * a - rho * rho) / (2.0 * a * rho);
    if c >= 1.0 {
        TAU
    } else if c <= -1.0 {
        0.0
    } else {
        2.0 * (PI - acos(c))
    }
}

/// Fourier transform of the indicator of the disk of radius `big_r`.
pub fn disk_ft(big_r: f64, s: f64) -> Result<f64> {
    if !(big_r > 0.0) || !(s >= 0.0) {
        return Err(Error::contract("disk_ft needs R > 0 and s >= 0"));
    }
    Ok(disk_ft_unchecked(big_r, s))
}

fn disk_ft_unchecked(big_r: f64, s: f64) -> f64 {
    if s == 0.0 {
        PI * big_r * big_r
    } else {
        big_r / s * j1(TAU * big_r * s)
    }
}

/// Fourier transform of the indicator of `r - 1/n < |x| < r + 1/n`.
pub fn annulus_ft(r: f64, n: u32, s: f64) -> Result<f64> {
    if !(r > 0.0) || !(n as f64 * r > 1.0) {
        return Err(Error::contract("annulus_ft needs n > 1/r"));
    }
    if !(s >= 0.0) {
        return Err(Error::contract("annulus_ft needs s >= 0"));
    }
    Ok(annulus_ft_unchecked(r, n as f64, s))
}

fn annulus_ft_unchecked(r: f64, n: f64, s: f64) -> f64 {
    if s == 0.0 {
        // pi (r + 1/n)^2 - pi (r - 1/n)^2
        return 4.0 * PI * r / n;
    }
    disk_ft_unchecked(r + 1.0 / n, s) - disk_ft_unchecked(r - 1.0 / n, s)
}

/// Per-point result of [`validate_family`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub x: [f64; 2],
    pub target: f64,
    /// `|f_n(x) - 1_{C_r}(x)|` for each `n` of the schedule.
    pub errors: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub kind: FamilyKind,
    pub r: f64,
    /// Measured supremum of `u` used in the Gaussian envelope.
    pub sup_u: f64,
    pub points: Vec<PointCheck>,
    /// Largest `f_n(x) / F(x)` over all samples (C2 holds when <= 1).
    pub max_envelope_ratio: f64,
    pub c1_tol: f64,
}

impl FamilyReport {
    pub fn c1_passed(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    pub fn passed(&self) -> bool {
        self.c1_passed() && self.max_envelope_ratio <= 1.0
    }
}

/// Supremum of `u` on `[0, inf)`, measured on a grid over `[0, 1e4]` and
/// refined by golden-section search. `u` decreases towards 1 beyond the grid.
pub fn measured_sup_u() -> f64 {
    let mut best_t = 0.0;
    let mut best = 0.0;
    let steps = 20_000;
    for i in 1..=steps {
        // Dense near the maximum, geometric further out.
        let t = if i <= 10_000 { i as f64 * 5e-4 } else { 5.0 * libm::pow(2000.0, (i - 10_000) as f64 / 10_000.0) };
        let v = u(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = ((best_t - 1e-3).max(0.0), best_t + 1e-3);
    let g = 0.618_033_988_749_895;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if u(m1) < u(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(u(0.5 * (lo + hi))) * (1.0 + 1e-12)
}

/// Concrete dominating envelope `F(x)` for the whole family (all `n >= 1`).
///
/// Gaussian family: `A sqrt(r/|x|) e^{-(|x|-r)^2}` for `|x| >= r/2` plus the
/// cap `2 r sqrt(pi) sup_n n e^{-n^2 r^2/4}` on `|x| <= r/2`.
/// Annulus family: `1` on `|x| <= r + 2` plus
/// `4 e (r+1)^2 exp(-max(|x| - r - 1, 0)^2)`, which bounds the part of
/// `g_n` outside `B_{1/n}` convolved with the annulus.
pub fn family_envelope(kind: FamilyKind, r: f64, sup_u: f64, s: f64) -> f64 {
    match kind {
        FamilyKind::GaussianTheta => {
            let mut f = 0.0;
            if s >= 0.5 * r {
                f += sup_u * sqrt(r / s) * exp(-(s - r) * (s - r));
            }
            if s <= 0.5 * r {
                f += 2.0 * r * SQRT_PI * sup_n_gauss(r);
            }
            f
        }
        FamilyKind::AnnulusGaussian => {
            let core = if s <= r + 2.0 { 1.0 } else { 0.0 };
            let d = (s - r - 1.0).max(0.0);
            core + 4.0 * core::f64::consts::E * (r + 1.0) * (r + 1.0) * exp(-d * d)
        }
    }
}

/// `sup_{n >= 1} n e^{-n^2 r^2 / 4}`.
fn sup_n_gauss(r: f64) -> f64 {
    let peak = libm::floor(core::f64::consts::SQRT_2 / r).max(1.0);
    [peak, peak + 1.0]
        .iter()
        .map(|&n| n * exp(-n * n * r * r / 4.0))
        .fold(0.0, f64::max)
}

/// Checks the approximate-circle conditions on a sample grid.
///
/// (C1): for every sample, `|f_N(x) - 1_{C_r}(x)| <= c1_tol` at the last
/// schedule index and the error there does not exceed the error at the
/// middle of the schedule. (C2): `f_n(x) <= F(x)` for every sampled pair,
/// with `F` from [`family_envelope`]; a violation is an error naming the
/// witness.
pub fn validate_family(
    kind: FamilyKind,
    r: f64,
    sample_points: &[[f64; 2]],
    n_schedule: &[u32],
    c1_tol: f64,
) -> Result<FamilyReport> {
    if n_schedule.is_empty() || sample_points.is_empty() {
        return Err(Error::contract("validate_family needs samples and a schedule"));
    }
    let sup_u = measured_sup_u();
    let mut points = Vec::with_capacity(sample_points.len());
    let mut max_ratio: f64 = 0.0;
    let circle_tol = 1e-12 * r;
    for &x in sample_points {
        let s = hypot(x[0], x[1]);
        let target = if (s - r).abs() <= circle_tol { 1.0 } else { 0.0 };
        let bound = family_envelope(kind, r, sup_u, s);
        let mut errors = Vec::with_capacity(n_schedule.len());
        for &n in n_schedule {
            let fam = CircleFamily::new(kind, r, n)?;
            let v = fam.f_spatial_radial(s)?;
            if v > bound {
                return Err(Error::EnvelopeViolation { n, x, value: v, bound });
            }
            if bound > 0.0 {
                max_ratio = max_ratio.max(v / bound);
            }
            errors.push((v - target).abs());
        }
        let last = *errors.last().expect("nonempty");
        let mid = errors[errors.len() / 2];
        let converged = last <= c1_tol && last <= mid + 1e-12;
        points.push(PointCheck { x, target, errors, converged });
    }
    Ok(FamilyReport { kind, r, sup_u, points, max_envelope_ratio: max_ratio, c1_tol })
}
