//! Planar lattices, their shells, and the sum-of-two-squares function.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{erfc, exp, floor, ceil, hypot, sqrt};

use crate::circles::FamilyKind;
use crate::estimator::{circle_intensity, IntensityEstimate, Schedule};
use crate::measures::{MeasureSpec, Shell};
use crate::{Complex64, Error, Result};

/// Default absolute tolerance for grouping squared norms.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

/// Gram entries within this distance of integers are treated as integers.
pub const INTEGRAL_GRAM_TOL: f64 = 1e-12;

/// Target for the discarded Gaussian tail in [`verify_lattice_shelling`].
pub const SHELLING_TAIL_TOL: f64 = 1e-14;

/// A lattice `B Z^2` in the plane; the columns of `B` are the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    basis: [[f64; 2]; 2],
    det: f64,
}

impl Lattice {
    /// Lattice generated by `b1` and `b2`.
    pub fn new(b1: [f64; 2], b2: [f64; 2]) -> Result<Self> {
        let det = b1[0] * b2[1] - b2[0] * b1[1];
        let scale = hypot(b1[0], b1[1]) * hypot(b2[0], b2[1]);
        if !det.is_finite() || !(det.abs() > 1e-14 * scale) {
            return Err(Error::contract("lattice basis is singular"));
        }
        Ok(Lattice { basis: [b1, b2], det })
    }

    pub fn integer() -> Self {
        Lattice { basis: [[1.0, 0.0], [0.0, 1.0]], det: 1.0 }
    }

    pub fn diagonal(a: f64, b: f64) -> Result<Self> {
        Lattice::new([a, 0.0], [0.0, b])
    }

    /// Generators `[b1, b2]`.
    pub fn basis(&self) -> [[f64; 2]; 2] {
        self.basis
    }

    /// Signed determinant of the basis matrix.
    pub fn det(&self) -> f64 {
        self.det
    }

    /// Point with integer coordinates `c` in the basis.
    pub fn point(&self, c: [i64; 2]) -> [f64; 2] {
        let [b1, b2] = self.basis;
        let (c1, c2) = (c[0] as f64, c[1] as f64);
        [c1 * b1[0] + c2 * b2[0], c1 * b1[1] + c2 * b2[1]]
    }

    /// Dual lattice `{y : y . x in Z for all x in L}`, with basis the
    /// inverse transpose of this one.
    pub fn dual(&self) -> Lattice {
        let [b1, b2] = self.basis;
        let d = self.det;
        // Rows of B^{-1} are the columns of B^{-T}.
        let d1 = [b2[1] / d, -b2[0] / d];
        let d2 = [-b1[1] / d, b1[0] / d];
        Lattice { basis: [d1, d2], det: d1[0] * d2[1] - d2[0] * d1[1] }
    }

    /// `[[g11, g12], [g12, g22]]` with `gij = bi . bj`.
    pub fn gram(&self) -> [[f64; 2]; 2] {
        let [b1, b2] = self.basis;
        let g11 = b1[0] * b1[0] + b1[1] * b1[1];
        let g12 = b1[0] * b2[0] + b1[1] * b2[1];
        let g22 = b2[0] * b2[0] + b2[1] * b2[1];
        [[g11, g12], [g12, g22]]
    }

    /// Gram matrix of the Lagrange-Gauss reduced basis, normalised so that
    /// `0 <= g12 <= g11 / 2` and `g11 <= g22`. Two bases of one lattice give
    /// the same reduced Gram matrix (up to rounding, and up to ties between
    /// equally short vectors).
    pub fn reduced_gram(&self) -> [[f64; 2]; 2] {
        let [mut u, mut v] = self.basis;
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        if dot(u, u) > dot(v, v) {
            core::mem::swap(&mut u, &mut v);
        }
        for _ in 0..200 {
            let q = libm::round(dot(u, v) / dot(u, u));
            v = [v[0] - q * u[0], v[1] - q * u[1]];
            if dot(v, v) >= dot(u, u) {
                break;
            }
            core::mem::swap(&mut u, &mut v);
        }
        let g12 = dot(u, v).abs();
        [[dot(u, u), g12], [g12, dot(v, v)]]
    }

    fn integral_gram(&self) -> Option<[i64; 3]> {
        let g = self.gram();
        let mut out = [0i64; 3];
        for (slot, &x) in out.iter_mut().zip(&[g[0][0], g[0][1], g[1][1]]) {
            let k = libm::round(x);
            if (x - k).abs() > INTEGRAL_GRAM_TOL || k.abs() > 1e15 {
                return None;
            }
            *slot = k as i64;
        }
        Some(out)
    }

    /// Diameter bound `|b1| + |b2|` of a fundamental parallelogram.
    fn cell_diameter(&self) -> f64 {
        let [b1, b2] = self.basis;
        hypot(b1[0], b1[1]) + hypot(b2[0], b2[1])
    }

    /// Calls `visit(c1, c2)` for a superset of the coefficient pairs with
    /// squared norm at most `max_sq_norm`, row by row in `c2`.
    fn for_each_candidate(&self, max_sq_norm: f64, mut visit: impl FnMut(i64, i64)) {
        let [[g11, g12], [_, g22]] = self.gram();
        let det_g = g11 * g22 - g12 * g12;
        // min over c1 of Q(c1, c2) is c2^2 det_g / g11.
        let c2_max = floor(sqrt(max_sq_norm * g11 / det_g) * (1.0 + 1e-12)) as i64 + 1;
        for c2 in -c2_max..=c2_max {
            let c2f = c2 as f64;
            let disc = g12 * g12 * c2f * c2f - g11 * (g22 * c2f * c2f - max_sq_norm);
            if disc < 0.0 {
                continue;
            }
            let centre = -g12 * c2f / g11;
            let half = sqrt(disc) / g11;
            let lo = ceil(centre - half - 1e-9 * (1.0 + half)) as i64 - 1;
            let hi = floor(centre + half + 1e-9 * (1.0 + half)) as i64 + 1;
            for c1 in lo..=hi {
                visit(c1, c2);
            }
        }
    }
}

/// Lattice points grouped by squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellTable {
    /// `(sq_norm, multiplicity)` with strictly increasing squared norms.
    pub entries: Vec<(f64, u64)>,
    pub group_tol: f64,
    /// True when squared norms were computed in exact integer arithmetic.
    pub exact: bool,
}

impl ShellTable {
    /// Multiplicity of the shell at squared norm `k`, or 0.
    pub fn multiplicity_of(&self, k: f64) -> u64 {
        let tol = if self.exact { INTEGRAL_GRAM_TOL * k.abs().max(1.0) } else { self.group_tol };
        self.entries
            .iter()
            .find(|(sq, _)| (sq - k).abs() <= tol)
            .map_or(0, |&(_, m)| m)
    }

    pub fn total_points(&self) -> u64 {
        self.entries.iter().map(|&(_, m)| m).sum()
    }
}

/// All points of `lattice` with squared norm at most `max_sq_norm`, grouped by
/// squared norm.
///
/// Lattices with an integral Gram matrix use exact integer norms. Otherwise
/// norms within `group_tol` of their neighbour merge, and two distinct norms
/// closer than `10 * group_tol` are reported as [`Error::AmbiguousShells`].
pub fn shells(lattice: &Lattice, max_sq_norm: f64, group_tol: f64) -> Result<ShellTable> {
    if !(max_sq_norm >= 0.0) || !max_sq_norm.is_finite() {
        return Err(Error::contract("max_sq_norm must be finite and nonnegative"));
    }
    if !(group_tol > 0.0) {
        return Err(Error::contract("group_tol must be positive"));
    }
    if let Some([g11, g12, g22]) = lattice.integral_gram() {
        let bound = floor(max_sq_norm * (1.0 + 1e-15)) as i128;
        let mut norms: Vec<i128> = Vec::new();
        lattice.for_each_candidate(max_sq_norm, |c1, c2| {
            let (a, b) = (c1 as i128, c2 as i128);
            let q = g11 as i128 * a * a + 2 * g12 as i128 * a * b + g22 as i128 * b * b;
            if q <= bound {
                norms.push(q);
            }
        });
        norms.sort_unstable();
        let mut entries: Vec<(f64, u64)> = Vec::new();
        let mut last: Option<i128> = None;
        for q in norms {
            if last == Some(q) {
                entries.last_mut().expect("nonempty").1 += 1;
            } else {
                entries.push((q as f64, 1));
                last = Some(q);
            }
        }
        return Ok(ShellTable { entries, group_tol, exact: true });
    }

    let [[g11, g12], [_, g22]] = lattice.gram();
    let mut norms: Vec<f64> = Vec::new();
    lattice.for_each_candidate(max_sq_norm, |c1, c2| {
        let p = lattice.point([c1, c2]);
        let q = if c1 == 0 && c2 == 0 {
            0.0
        } else {
            let (a, b) = (c1 as f64, c2 as f64);
            let direct = p[0] * p[0] + p[1] * p[1];
            // The Gram form avoids cancellation for long, nearly parallel bases.
            let gram = g11 * a * a + 2.0 * g12 * a * b + g22 * b * b;
            if (direct - gram).abs() < 1e-9 * direct { direct } else { gram.max(0.0) }
        };
        if q <= max_sq_norm + group_tol {
            norms.push(q);
        }
    });
    norms.sort_unstable_by(f64::total_cmp);

    let mut groups: Vec<(Vec<f64>, u64)> = Vec::new();
    for q in norms {
        match groups.last_mut() {
            Some((members, count)) if q - *members.last().expect("nonempty") <= group_tol => {
                members.push(q);
                *count += 1;
            }
            _ => {
                if let Some((members, _)) = groups.last() {
                    let prev = *members.last().expect("nonempty");
                    if q - prev < 10.0 * group_tol {
                        return Err(Error::AmbiguousShells { lower: prev, upper: q, group_tol });
                    }
                }
                groups.push((vec![q], 1));
            }
        }
    }
    let entries = groups
        .into_iter()
        .map(|(members, count)| {
            let mean = crate::sum::pairwise_sum(&members) / members.len() as f64;
            (if members[0] == 0.0 { 0.0 } else { mean }, count)
        })
        .collect();
    Ok(ShellTable { entries, group_tol, exact: false })
}

fn isqrt(m: u64) -> u64 {
    let mut k = sqrt(m as f64) as u64;
    while k * k > m {
        k -= 1;
    }
    while (k + 1) * (k + 1) <= m {
        k += 1;
    }
    k
}

/// Number of `(k, l)` in `Z^2` with `k^2 + l^2 = m`, by direct enumeration.
pub fn r2(m: u64) -> u64 {
    if m == 0 {
        return 1;
    }
    let top = isqrt(m);
    let mut count = 0;
    for k in 0..=top {
        let rest = m - k * k;
        let l = isqrt(rest);
        if l * l == rest {
            let signs_l = if l == 0 { 1 } else { 2 };
            let signs_k = if k == 0 { 1 } else { 2 };
            count += signs_k * signs_l;
        }
    }
    count
}

/// `4 (d1(m) - d3(m))`, where `dj` counts divisors congruent to `j` mod 4.
pub fn r2_divisor(m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::Domain { function: "r2_divisor", argument: 0.0 });
    }
    let mut d1: i64 = 0;
    let mut d3: i64 = 0;
    let mut tally = |d: u64| match d % 4 {
        1 => d1 += 1,
        3 => d3 += 1,
        _ => {}
    };
    let mut d = 1;
    while d * d <= m {
        if m.is_multiple_of(d) {
            tally(d);
            if d * d != m {
                tally(m / d);
            }
        }
        d += 1;
    }
    Ok((4 * (d1 - d3)) as u64)
}

/// `r2(m)` for all `0 <= m <= max`, sieved over the divisor formula.
pub fn r2_sieve(max: u64) -> Vec<u64> {
    let len = max as usize + 1;
    let mut acc = vec![0i64; len];
    for d in (1..len).step_by(2) {
        let sign = if d % 4 == 1 { 4 } else { -4 };
        for slot in acc.iter_mut().skip(d).step_by(d) {
            *slot += sign;
        }
    }
    let mut out: Vec<u64> = acc.into_iter().map(|v| v as u64).collect();
    out[0] = 1;
    out
}

/// `delta_L` restricted to squared norms up to `max_sq_norm`, as radial shells
/// with weight equal to the multiplicity.
pub fn shelling_measure(lattice: &Lattice, max_sq_norm: f64, group_tol: f64) -> Result<MeasureSpec> {
    let table = shells(lattice, max_sq_norm, group_tol)?;
    Ok(shell_table_measure(&table))
}

pub fn shell_table_measure(table: &ShellTable) -> MeasureSpec {
    MeasureSpec::ShellWeights(
        table
            .entries
            .iter()
            .map(|&(sq, m)| Shell { radius: sqrt(sq), weight: Complex64::new(m as f64, 0.0) })
            .collect(),
    )
}

/// Shells of `Z^2` up to `max_sq_norm` from the sieve, skipping empty ones.
pub fn integer_shell_measure(max_sq_norm: u64) -> MeasureSpec {
    let counts = r2_sieve(max_sq_norm);
    MeasureSpec::ShellWeights(
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(m, &c)| Shell { radius: sqrt(m as f64), weight: Complex64::new(c as f64, 0.0) })
            .collect(),
    )
}

/// Upper bound on `sum over y in L with |y|^2 > sq_radius of e^{-alpha |y|^2}`.
///
/// Counts points with `N(rho) <= pi (rho + D)^2 / |det|`, where `D` bounds the
/// diameter of a fundamental cell, and integrates by parts.
pub fn gaussian_lattice_tail(lattice: &Lattice, alpha: f64, sq_radius: f64) -> f64 {
    let r = sqrt(sq_radius.max(0.0));
    let d = lattice.cell_diameter();
    let g = exp(-alpha * r * r);
    let i0 = g;
    let i1 = r * g + 0.5 * sqrt(PI / alpha) * erfc(sqrt(alpha) * r);
    let i2 = (r * r + 1.0 / alpha) * g;
    PI / lattice.det().abs() * (i2 + 2.0 * d * i1 + d * d * i0)
}

/// Smallest squared radius (to a factor of 1.1) at which
/// `scale * gaussian_lattice_tail` drops below `target`.
pub fn gaussian_lattice_cutoff(lattice: &Lattice, scale: f64, alpha: f64, target: f64) -> f64 {
    let mut sq = 1.0;
    while scale * gaussian_lattice_tail(lattice, alpha, sq) > target {
        sq *= 1.1;
    }
    sq
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellingReport {
    /// Multiplicity of squared norm `k` in `L`.
    pub lhs: u64,
    /// `(1/det L) * lim <delta_{L0}, f_n^>` at radius `sqrt k`.
    pub rhs: f64,
    pub difference: f64,
    pub uncertainty: f64,
    /// Largest squared norm of the dual shells used.
    pub shell_cutoff: f64,
    pub estimate: IntensityEstimate,
}

/// Compares the shell count `r_L(k)` with the circle intensity of the dual
/// lattice's transform at radius `sqrt k`.
pub fn verify_lattice_shelling(lattice: &Lattice, k: f64, schedule: &Schedule) -> Result<ShellingReport> {
    if !(k > 0.0) {
        return Err(Error::contract("shelling radius k must be positive"));
    }
    let det = lattice.det().abs();
    let table = shells(lattice, k * (1.0 + 1e-9) + DEFAULT_GROUP_TOL, DEFAULT_GROUP_TOL)?;
    let lhs = table.multiplicity_of(k);

    let dual = lattice.dual();
    let n = schedule.n_max() as f64;
    let r = sqrt(k);
    let scale = 2.0 * r * PI * sqrt(PI) / n;
    let alpha = PI * PI / (n * n);
    let cutoff = gaussian_lattice_cutoff(&dual, scale, alpha, SHELLING_TAIL_TOL);
    let tail = scale * gaussian_lattice_tail(&dual, alpha, cutoff);
    let mu = shelling_measure(&dual, cutoff, DEFAULT_GROUP_TOL)?;
    let estimate = circle_intensity(&mu, r, FamilyKind::GaussianTheta, schedule)?;
    let rhs = estimate.limit.re / det;
    let uncertainty = (estimate.uncertainty + tail) / det;
    Ok(ShellingReport {
        lhs,
        rhs,
        difference: rhs - lhs as f64,
        uncertainty,
        shell_cutoff: cutoff,
        estimate,
    })
}
