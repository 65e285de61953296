//! Run configuration: the JSON file format, its measure descriptions, and the
//! merge with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use circle_lab_core::circles::FamilyKind;
use circle_lab_core::lattice::{
    gaussian_lattice_cutoff, integer_shell_measure, shelling_measure, Lattice, DEFAULT_GROUP_TOL,
};
use circle_lab_core::measures::{Atom, MeasureSpec, RadialDensity, RadialProfile, Shell};
use circle_lab_core::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Spectral tail left out when a lattice cutoff is chosen automatically.
pub const AUTO_CUTOFF_TAIL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bessel,
    Intensity,
    Shelling,
    Sum2sq,
    PoissonCheck,
    Ortho,
    Detect,
    ValidateFamily,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bessel => "bessel",
            Command::Intensity => "intensity",
            Command::Shelling => "shelling",
            Command::Sum2sq => "sum2sq",
            Command::PoissonCheck => "poisson-check",
            Command::Ortho => "ortho",
            Command::Detect => "detect",
            Command::ValidateFamily => "validate-family",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Annulus,
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Gaussian => FamilyKind::GaussianTheta,
            Family::Annulus => FamilyKind::AnnulusGaussian,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Annulus => "annulus",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Records,
    /// Whitespace-separated columns with a `#` header line.
    Gnuplot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BesselFn {
    J0,
    J1,
    I0s,
    U,
}

/// A complex weight written either as a number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Real(f64),
    Complex([f64; 2]),
}

impl Weight {
    pub fn value(self) -> Complex64 {
        match self {
            Weight::Real(re) => Complex64::new(re, 0.0),
            Weight::Complex([re, im]) => Complex64::new(re, im),
        }
    }

    pub fn from_value(z: Complex64) -> Self {
        if z.im == 0.0 {
            Weight::Real(z.re)
        } else {
            Weight::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub at: [f64; 2],
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub radius: f64,
    pub weight: Weight,
}

/// Measure description as it appears in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    PointSet {
        atoms: Vec<AtomConfig>,
    },
    ShellWeights {
        shells: Vec<ShellConfig>,
    },
    CircleUniform {
        radius: f64,
    },
    Lebesgue {},
    /// Density `value` everywhere.
    ConstantDensity {
        value: Weight,
    },
    /// Density `weight * J0(2 pi radius |y|)`.
    BesselDensity {
        radius: f64,
        weight: Weight,
    },
    PlaneCharacter {
        x: [f64; 2],
    },
    /// `delta_L` for the lattice with the given generators (columns).
    LatticeShells {
        basis: [[f64; 2]; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_sq_norm: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group_tol: Option<f64>,
    },
    /// `delta_{Z^2}`, grouped by the sum-of-two-squares sieve.
    IntegerLattice {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_sq_norm: Option<u64>,
    },
}

/// What an automatic lattice cutoff has to cover.
#[derive(Debug, Clone, Copy)]
pub struct CutoffHint {
    pub r: f64,
    pub family: Family,
    pub n_max: u32,
}

impl CutoffHint {
    /// Envelope `scale * e^{-alpha s^2}` of the spectral profile at `n_max`.
    fn envelope(&self) -> (f64, f64) {
        let n = self.n_max as f64;
        let pi = std::f64::consts::PI;
        match self.family {
            Family::Gaussian => (2.0 * self.r * pi * pi.sqrt() / n, pi * pi / (n * n)),
            Family::Annulus => (4.0 * pi * self.r / n, pi * pi / (n * n * n * n)),
        }
    }

    pub fn sq_norm_for(&self, lattice: &Lattice) -> f64 {
        let (scale, alpha) = self.envelope();
        gaussian_lattice_cutoff(lattice, scale, alpha, AUTO_CUTOFF_TAIL)
    }
}

impl MeasureConfig {
    /// Builds the measure. Lattice variants without an explicit cutoff need
    /// `hint` to pick one.
    pub fn to_spec(&self, hint: Option<CutoffHint>) -> Result<MeasureSpec, String> {
        Ok(match self {
            MeasureConfig::PointSet { atoms } => MeasureSpec::PointSet(
                atoms.iter().map(|a| Atom { at: a.at, weight: a.weight.value() }).collect(),
            ),
            MeasureConfig::ShellWeights { shells } => MeasureSpec::ShellWeights(
                shells
                    .iter()
                    .map(|s| Shell { radius: s.radius, weight: s.weight.value() })
                    .collect(),
            ),
            MeasureConfig::CircleUniform { radius } => MeasureSpec::CircleUniform { radius: *radius },
            MeasureConfig::Lebesgue {} => MeasureSpec::lebesgue(),
            MeasureConfig::ConstantDensity { value } => MeasureSpec::RadialDensity(RadialDensity::new(
                RadialProfile::Constant(value.value()),
            )),
            MeasureConfig::BesselDensity { radius, weight } => {
                MeasureSpec::RadialDensity(RadialDensity::new(RadialProfile::BesselJ0 {
                    radius: *radius,
                    weight: weight.value(),
                }))
            }
            MeasureConfig::PlaneCharacter { x } => MeasureSpec::PlaneCharacter { x: *x },
            MeasureConfig::LatticeShells { basis, max_sq_norm, group_tol } => {
                let lattice = Lattice::new(basis[0], basis[1]).map_err(|e| e.to_string())?;
                let max = match (max_sq_norm, hint) {
                    (Some(m), _) => *m,
                    (None, Some(h)) => h.sq_norm_for(&lattice),
                    (None, None) => return Err("lattice_shells needs max_sq_norm here".into()),
                };
                shelling_measure(&lattice, max, group_tol.unwrap_or(DEFAULT_GROUP_TOL))
                    .map_err(|e| e.to_string())?
            }
            MeasureConfig::IntegerLattice { max_sq_norm } => {
                let max = match (max_sq_norm, hint) {
                    (Some(m), _) => *m,
                    (None, Some(h)) => h.sq_norm_for(&Lattice::integer()).ceil() as u64,
                    (None, None) => return Err("integer_lattice needs max_sq_norm here".into()),
                };
                integer_shell_measure(max)
            }
        })
    }

    /// Re-emits a measure; `None` for opaque custom densities.
    pub fn from_spec(mu: &MeasureSpec) -> Option<MeasureConfig> {
        Some(match mu {
            MeasureSpec::PointSet(atoms) => MeasureConfig::PointSet {
                atoms: atoms
                    .iter()
                    .map(|a| AtomConfig { at: a.at, weight: Weight::from_value(a.weight) })
                    .collect(),
            },
            MeasureSpec::ShellWeights(shells) => MeasureConfig::ShellWeights {
                shells: shells
                    .iter()
                    .map(|s| ShellConfig { radius: s.radius, weight: Weight::from_value(s.weight) })
                    .collect(),
            },
            MeasureSpec::CircleUniform { radius } => MeasureConfig::CircleUniform { radius: *radius },
            MeasureSpec::RadialDensity(d) => match (&d.profile, d.envelope) {
                (RadialProfile::Constant(c), Some(env)) if env.power == 0.0 && env.scale == c.norm() => {
                    if *c == Complex64::new(1.0, 0.0) {
                        MeasureConfig::Lebesgue {}
                    } else {
                        MeasureConfig::ConstantDensity { value: Weight::from_value(*c) }
                    }
                }
                (RadialProfile::BesselJ0 { radius, weight }, Some(env))
                    if env.power == 0.0 && env.scale == weight.norm() =>
                {
                    MeasureConfig::BesselDensity { radius: *radius, weight: Weight::from_value(*weight) }
                }
                _ => return None,
            },
            MeasureSpec::PlaneCharacter { x } => MeasureConfig::PlaneCharacter { x: *x },
        })
    }
}

/// Everything a run needs. Every field is optional so that a config file and
/// command-line flags can each supply part of it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<BesselFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sq_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_cutoff: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    /// Reads and checks a config file. Errors carry the line and column.
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: cannot read config: {e}", path.display()))?;
        // serde_json's message already carries the line and column.
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        match cfg.schema_version {
            Some(SCHEMA_VERSION) => Ok(cfg),
            Some(v) => Err(format!(
                "{}: unsupported schema_version {v} (expected {SCHEMA_VERSION})",
                path.display()
            )),
            None => Err(format!("{}: missing field `schema_version`", path.display())),
        }
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay_fields!(
            self, top, schema_version, command, measure, r, r_prime, family, schedule, n, tol,
            threshold, function, at, basis, max_sq_norm, group_tol, k, max, shell_cutoff, c1_tol,
            samples, output_path, output_format, threads
        );
        self
    }
}
