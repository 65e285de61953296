//! Representable strongly tempered measures on the plane and the radial
//! pairing `<mu, g(|.|)>` that every intensity formula reduces to.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use libm::hypot;
use num_complex::Complex64;

use crate::quad::{integrate_gaussian_tail, GaussianEnvelope};
use crate::specfun::j0;
use crate::sum::{pairwise_error_factor, pairwise_sum, pairwise_sum_complex};
use crate::{Error, Result};

/// Relative radius tolerance used when grouping atoms into shells.
pub const SHELL_RADIUS_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub at: [f64; 2],
    pub weight: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub radius: f64,
    pub weight: Complex64,
}

/// Polynomial growth bound `|rho(s)| <= scale (1 + s)^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyEnvelope {
    pub scale: f64,
    pub power: f64,
}

/// Radial density profiles the library knows how to evaluate.
#[derive(Clone)]
pub enum RadialProfile {
    /// `rho(s) = value`; `value = 1` is Lebesgue measure.
    Constant(Complex64),
    /// `rho(s) = weight * J0(2 pi radius s)`, the transform of a circle measure.
    BesselJ0 { radius: f64, weight: Complex64 },
    /// Arbitrary profile; `frequency` is its dominant angular frequency.
    Custom {
        f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
        frequency: f64,
    },
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            RadialProfile::BesselJ0 { radius, weight } => f
                .debug_struct("BesselJ0")
                .field("radius", radius)
                .field("weight", weight)
                .finish(),
            RadialProfile::Custom { frequency, .. } => {
                f.debug_struct("Custom").field("frequency", frequency).finish_non_exhaustive()
            }
        }
    }
}

impl RadialProfile {
    pub fn eval(&self, s: f64) -> Complex64 {
        match self {
            RadialProfile::Constant(c) => *c,
            RadialProfile::BesselJ0 { radius, weight } => weight * j0(TAU * radius * s),
            RadialProfile::Custom { f, .. } => f(s),
        }
    }

    fn frequency(&self) -> f64 {
        match self {
            RadialProfile::Constant(_) => 0.0,
            RadialProfile::BesselJ0 { radius, .. } => TAU * radius,
            RadialProfile::Custom { frequency, .. } => *frequency,
        }
    }

    /// Envelope implied by the profile itself, when it has one.
    pub fn natural_envelope(&self) -> Option<PolyEnvelope> {
        match self {
            RadialProfile::Constant(c) => Some(PolyEnvelope { scale: c.norm(), power: 0.0 }),
            RadialProfile::BesselJ0 { weight, .. } => {
                Some(PolyEnvelope { scale: weight.norm(), power: 0.0 })
            }
            RadialProfile::Custom { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialDensity {
    pub profile: RadialProfile,
    pub envelope: Option<PolyEnvelope>,
}

impl RadialDensity {
    pub fn new(profile: RadialProfile) -> Self {
        let envelope = profile.natural_envelope();
        RadialDensity { profile, envelope }
    }

    pub fn with_envelope(profile: RadialProfile, envelope: PolyEnvelope) -> Self {
        RadialDensity { profile, envelope: Some(envelope) }
    }
}

/// A measure on the plane in one of the representable forms.
#[derive(Debug, Clone)]
pub enum MeasureSpec {
    /// Finite weighted sum of Dirac masses.
    PointSet(Vec<Atom>),
    /// Radially grouped atoms: each shell's weight sits on the circle of that
    /// radius (only its total matters for radial pairings).
    ShellWeights(Vec<Shell>),
    /// Uniform probability measure on the circle of the given radius.
    CircleUniform { radius: f64 },
    RadialDensity(RadialDensity),
    /// Density `y -> exp(-2 pi i x.y)`.
    PlaneCharacter { x: [f64; 2] },
}

impl MeasureSpec {
    pub fn lebesgue() -> Self {
        MeasureSpec::RadialDensity(RadialDensity::new(RadialProfile::Constant(Complex64::new(
            1.0, 0.0,
        ))))
    }

    pub fn dirac(at: [f64; 2]) -> Self {
        MeasureSpec::PointSet(alloc::vec![Atom { at, weight: Complex64::new(1.0, 0.0) }])
    }

    /// Checks the structural invariants of the representation.
    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::PointSet(atoms) => {
                for a in atoms {
                    if !(a.at[0].is_finite() && a.at[1].is_finite()) || !finite_c(a.weight) {
                        return Err(Error::contract("point set atoms must be finite"));
                    }
                }
            }
            MeasureSpec::ShellWeights(shells) => {
                let mut last = -1.0;
                for s in shells {
                    if !(s.radius.is_finite() && s.radius >= 0.0) || !finite_c(s.weight) {
                        return Err(Error::contract("shell radii must be finite and >= 0"));
                    }
                    if s.radius <= last {
                        return Err(Error::contract("shell radii must be strictly increasing"));
                    }
                    last = s.radius;
                }
            }
            MeasureSpec::CircleUniform { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::contract("circle radius must be positive"));
                }
            }
            MeasureSpec::RadialDensity(d) => {
                let env = d.envelope.ok_or_else(|| {
                    Error::contract("radial density needs a declared growth envelope")
                })?;
                if !(env.scale >= 0.0 && env.power >= 0.0) {
                    return Err(Error::contract("density envelope needs scale >= 0, power >= 0"));
                }
                if let RadialProfile::BesselJ0 { radius, .. } = d.profile {
                    if !(radius > 0.0) {
                        return Err(Error::contract("Bessel density radius must be positive"));
                    }
                }
            }
            MeasureSpec::PlaneCharacter { x } => {
                if !(x[0].is_finite() && x[1].is_finite()) {
                    return Err(Error::contract("character frequency must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Groups a point set into shells by norm. Other variants are returned
    /// unchanged.
    pub fn to_shells(&self) -> MeasureSpec {
        match self {
            MeasureSpec::PointSet(atoms) => MeasureSpec::ShellWeights(group_by_norm(atoms)),
            other => other.clone(),
        }
    }
}

fn finite_c(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn norm2(p: [f64; 2]) -> f64 {
    hypot(p[0], p[1])
}

/// Groups atoms by `|p|`. Integer-coordinate atoms with equal squared norm
/// always share a shell; other radii merge when within
/// [`SHELL_RADIUS_RTOL`] relative of the shell's first radius.
pub fn group_by_norm(atoms: &[Atom]) -> Vec<Shell> {
    let mut keyed: Vec<(f64, Complex64)> = atoms
        .iter()
        .map(|a| {
            let integral = a.at.iter().all(|c| libm::trunc(*c) == *c && c.abs() < 9.4e7);
            let r = if integral {
                libm::sqrt(a.at[0] * a.at[0] + a.at[1] * a.at[1])
            } else {
                norm2(a.at)
            };
            (r, a.weight)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut shells: Vec<Shell> = Vec::new();
    let mut anchor = f64::NAN;
    for (r, w) in keyed {
        match shells.last_mut() {
            Some(last) if r == anchor || (r - anchor) <= SHELL_RADIUS_RTOL * anchor => {
                last.weight += w;
            }
            _ => {
                anchor = r;
                shells.push(Shell { radius: r, weight: w });
            }
        }
    }
    shells
}

/// A radial test function together with the bounds the integrator needs.
pub struct RadialFn<'a> {
    pub eval: &'a dyn Fn(f64) -> Complex64,
    /// Bound `|g(s)| <= C (1+s)^p e^{-alpha s^2}`.
    pub envelope: GaussianEnvelope,
    /// Dominant angular frequency of `g` (0 if not oscillatory).
    pub frequency: f64,
}

/// Value of a pairing together with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub value: Complex64,
    pub error: f64,
}

/// `int_{R^2} g(|y|) d mu(y)`.
pub fn pair_radial(mu: &MeasureSpec, g: &RadialFn<'_>, tol: f64) -> Result<Pairing> {
    mu.validate()?;
    match mu {
        MeasureSpec::PointSet(atoms) => {
            Ok(atomic_sum(atoms.iter().map(|a| a.weight * (g.eval)(norm2(a.at)))))
        }
        MeasureSpec::ShellWeights(shells) => {
            Ok(atomic_sum(shells.iter().map(|s| s.weight * (g.eval)(s.radius))))
        }
        MeasureSpec::CircleUniform { radius } => {
            Ok(Pairing { value: (g.eval)(*radius), error: 0.0 })
        }
        MeasureSpec::RadialDensity(d) => {
            let env = d.envelope.expect("validated");
            let envelope = GaussianEnvelope::new(
                TAU * env.scale * g.envelope.scale,
                env.power + g.envelope.power + 1.0,
                g.envelope.alpha,
            );
            let freq = g.frequency + d.profile.frequency();
            let integrand = |s: f64| d.profile.eval(s) * (g.eval)(s) * (TAU * s);
            radial_integral(integrand, envelope, tol, freq)
        }
        MeasureSpec::PlaneCharacter { x } => {
            let k = TAU * norm2(*x);
            let envelope =
                GaussianEnvelope::new(TAU * g.envelope.scale, g.envelope.power + 1.0, g.envelope.alpha);
            let integrand = |s: f64| (g.eval)(s) * (TAU * s * j0(k * s));
            radial_integral(integrand, envelope, tol, g.frequency + k)
        }
    }
}

fn radial_integral<F: Fn(f64) -> Complex64>(
    f: F,
    envelope: GaussianEnvelope,
    tol: f64,
    frequency: f64,
) -> Result<Pairing> {
    let freq = if frequency > 0.0 { Some(frequency) } else { None };
    let r = integrate_gaussian_tail(f, envelope, tol, freq)?;
    Ok(Pairing { value: r.value, error: r.total_error() })
}

pub(crate) fn atomic_sum(terms: impl Iterator<Item = Complex64>) -> Pairing {
    let terms: Vec<Complex64> = terms.collect();
    let abs: Vec<f64> = terms.iter().map(|t| t.norm()).collect();
    let value = pairwise_sum_complex(&terms);
    let error = pairwise_error_factor(terms.len()) * pairwise_sum(&abs);
    Pairing { value, error }
}
