//! Circle intensities as limits of smoothed pairings.
//!
//! For a measure `mu` whose Fourier transform is again a measure, the mass
//! that transform puts on the circle `C_r` is `lim_n <mu, f_n^>` for any
//! approximate `r`-circle `f_n`. This module computes the pre-limit values
//! `I_n`, extrapolates them with the model `L + a/n + b/n^2`, and packages
//! the derived checks (Bessel orthogonality, circle detection, Poisson
//! summation on `Z^2`).

use alloc::string::String;
use alloc::vec::Vec;

use core::fmt::Write as _;

use libm::{exp, hypot, sqrt};
use num_complex::Complex64;

use crate::circles::{measured_sup_u, CircleFamily, FamilyKind};
use crate::lattice::{gaussian_lattice_tail, r2_sieve, Lattice};
use crate::measures::{atomic_sum, pair_radial, MeasureSpec, Pairing, RadialFn};
use crate::quad::{integrate_gaussian_tail, GaussianEnvelope, QuadratureResult};
use crate::specfun::{i0_scaled, j0};
use crate::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Atoms whose spectral Gaussian factor falls below this fraction of the
/// largest weight are skipped and accounted in the error.
pub const ATOM_SKIP_RATIO: f64 = 1e-16;

/// Default number of trailing entries used by the extrapolation fit.
pub const DEFAULT_TAIL_LEN: usize = 3;

/// Increasing list of family indices with a per-entry quadrature tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    n_values: Vec<u32>,
    per_n_tol: f64,
}

impl Schedule {
    pub fn new(n_values: Vec<u32>, per_n_tol: f64) -> Result<Self> {
        if n_values.is_empty() {
            return Err(Error::contract("schedule must be nonempty"));
        }
        if n_values[0] == 0 || n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::contract("schedule must be strictly increasing positive integers"));
        }
        if !(per_n_tol > 0.0) {
            return Err(Error::contract("per-n tolerance must be positive"));
        }
        Ok(Schedule { n_values, per_n_tol })
    }

    /// `{4, 6, 8, 12, 16, 24, 32}` for the Gaussian family, `{4, 6, 8, 10}`
    /// for the annulus family.
    pub fn default_for(kind: FamilyKind) -> Self {
        let n_values = match kind {
            FamilyKind::GaussianTheta => alloc::vec![4, 6, 8, 12, 16, 24, 32],
            FamilyKind::AnnulusGaussian => alloc::vec![4, 6, 8, 10],
        };
        Schedule { n_values, per_n_tol: 1e-10 }
    }

    pub fn n_values(&self) -> &[u32] {
        &self.n_values
    }

    pub fn per_n_tol(&self) -> f64 {
        self.per_n_tol
    }

    pub fn n_max(&self) -> u32 {
        *self.n_values.last().expect("nonempty")
    }

    /// Checks `n > 1/r` for the annulus family.
    pub fn check_for(&self, kind: FamilyKind, r: f64) -> Result<()> {
        if kind == FamilyKind::AnnulusGaussian && !(self.n_values[0] as f64 * r > 1.0) {
            return Err(Error::contract("annulus schedule needs every n > 1/r"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEntry {
    pub n: u32,
    pub value: Complex64,
    pub quad_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntensitySeries {
    pub entries: Vec<SeriesEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityEstimate {
    pub limit: Complex64,
    pub uncertainty: f64,
    /// Human-readable description of the fit.
    pub model: String,
    pub series: IntensitySeries,
}

/// `I_n = <mu, f_n^>` for one family member.
pub fn intensity_at(mu: &MeasureSpec, fam: &CircleFamily, tol: f64) -> Result<Pairing> {
    mu.validate()?;
    let envelope = fam.spectral_envelope();
    match mu {
        MeasureSpec::PointSet(atoms) => {
            let items: Vec<(f64, Complex64)> =
                atoms.iter().map(|a| (hypot(a.at[0], a.at[1]), a.weight)).collect();
            Ok(atomic_intensity(&items, fam, &envelope))
        }
        MeasureSpec::ShellWeights(shells) => {
            let items: Vec<(f64, Complex64)> = shells.iter().map(|s| (s.radius, s.weight)).collect();
            Ok(atomic_intensity(&items, fam, &envelope))
        }
        MeasureSpec::CircleUniform { radius } => {
            Ok(Pairing { value: Complex64::new(fam.f_spectral(*radius), 0.0), error: 0.0 })
        }
        _ => {
            let g = |s: f64| Complex64::new(fam.f_spectral(s), 0.0);
            let rf = RadialFn { eval: &g, envelope, frequency: fam.spectral_frequency() };
            pair_radial(mu, &rf, tol)
        }
    }
}

fn atomic_intensity(items: &[(f64, Complex64)], fam: &CircleFamily, env: &GaussianEnvelope) -> Pairing {
    let max_w = items.iter().map(|(_, w)| w.norm()).fold(0.0, f64::max);
    let mut skipped = 0.0;
    let kept = items.iter().filter_map(|&(s, w)| {
        let gauss = exp(-env.alpha * s * s);
        if w.norm() * gauss < ATOM_SKIP_RATIO * max_w {
            skipped += w.norm() * env.scale * gauss;
            None
        } else {
            Some(w * fam.f_spectral(s))
        }
    });
    let kept: Vec<Complex64> = kept.collect();
    let mut p = atomic_sum(kept.into_iter());
    p.error += skipped;
    p
}

/// Intensity series over a schedule (sequential; see the `circle-lab` crate
/// for the parallel driver, which produces identical entries).
pub fn intensity_series(
    mu: &MeasureSpec,
    r: f64,
    kind: FamilyKind,
    schedule: &Schedule,
) -> Result<IntensitySeries> {
    schedule.check_for(kind, r)?;
    let entries = schedule
        .n_values()
        .iter()
        .map(|&n| series_entry(mu, r, kind, n, schedule.per_n_tol()))
        .collect::<Result<Vec<_>>>()?;
    Ok(IntensitySeries { entries })
}

/// One entry of [`intensity_series`].
pub fn series_entry(mu: &MeasureSpec, r: f64, kind: FamilyKind, n: u32, tol: f64) -> Result<SeriesEntry> {
    let fam = CircleFamily::new(kind, r, n)?;
    let p = intensity_at(mu, &fam, tol)?;
    Ok(SeriesEntry { n, value: p.value, quad_error: p.error })
}

/// Intensity series plus extrapolated limit.
pub fn circle_intensity(
    mu: &MeasureSpec,
    r: f64,
    kind: FamilyKind,
    schedule: &Schedule,
) -> Result<IntensityEstimate> {
    let series = intensity_series(mu, r, kind, schedule)?;
    estimate_from_series(series, DEFAULT_TAIL_LEN)
}

/// Extrapolates a computed series. With fewer than three entries the last
/// value is reported and the uncertainty is the last difference.
pub fn estimate_from_series(series: IntensitySeries, tail_len: usize) -> Result<IntensityEstimate> {
    let entries = &series.entries;
    if entries.is_empty() {
        return Err(Error::contract("empty intensity series"));
    }
    let tail_len = tail_len.max(3);
    if entries.len() < 3 {
        let last = entries[entries.len() - 1];
        let diff = if entries.len() == 2 {
            (last.value - entries[0].value).norm()
        } else {
            last.value.norm()
        };
        let qerr = entries.iter().map(|e| e.quad_error).fold(0.0, f64::max);
        return Ok(IntensityEstimate {
            limit: last.value,
            uncertainty: diff + qerr,
            model: alloc::format!("raw last value at n = {} (too few entries to fit)", last.n),
            series,
        });
    }
    let used = tail_len.min(entries.len());
    let (limit, uncertainty) = extrapolate(&series, used)?;
    let tail = &entries[entries.len() - used..];
    let mut model = String::new();
    let _ = write!(model, "least squares L + a/n + b/n^2 over n =");
    for e in tail {
        let _ = write!(model, " {}", e.n);
    }
    Ok(IntensityEstimate { limit, uncertainty, model, series })
}

/// Least-squares fit of `I_n = L + a/n + b/n^2` over the last `tail_len`
/// entries. Returns `(L, uncertainty)` with uncertainty
/// `max(residual norm, |I_last - L| + |I_last - I_prev|)` plus the largest
/// tail quadrature error.
pub fn extrapolate(series: &IntensitySeries, tail_len: usize) -> Result<(Complex64, f64)> {
    let entries = &series.entries;
    if tail_len < 3 || entries.len() < tail_len {
        return Err(Error::contract("extrapolation needs at least 3 tail entries"));
    }
    let tail = &entries[entries.len() - tail_len..];
    let n_ref = tail.iter().map(|e| e.n).max().expect("nonempty") as f64;
    let mut sorted_n: Vec<u32> = tail.iter().map(|e| e.n).collect();
    sorted_n.sort_unstable();
    if sorted_n.windows(2).filter(|w| w[0] != w[1]).count() < 2 {
        return Err(Error::contract("extrapolation design matrix is degenerate (repeated n)"));
    }
    // Columns 1, x, x^2 with x = n_ref / n in [1, n_ref / n_min].
    let rows: Vec<[f64; 3]> = tail
        .iter()
        .map(|e| {
            let x = n_ref / e.n as f64;
            [1.0, x, x * x]
        })
        .collect();
    let re: Vec<f64> = tail.iter().map(|e| e.value.re).collect();
    let im: Vec<f64> = tail.iter().map(|e| e.value.im).collect();
    let (coef_re, res_re) = least_squares3(&rows, &re)?;
    let (coef_im, res_im) = least_squares3(&rows, &im)?;
    let limit = Complex64::new(coef_re[0], coef_im[0]);
    let residual = sqrt(res_re * res_re + res_im * res_im);
    let last = tail[tail.len() - 1].value;
    let prev = tail[tail.len() - 2].value;
    let qerr = tail.iter().map(|e| e.quad_error).fold(0.0, f64::max);
    // |L - truth| <= |L - I_last| + |I_last - truth|; the last difference
    // stands in for the second term.
    let uncertainty = residual.max((last - limit).norm() + (last - prev).norm()) + qerr;
    Ok((limit, uncertainty))
}

/// Householder least squares for an `m x 3` system; returns the coefficients
/// and the residual 2-norm.
#[allow(clippy::needless_range_loop)]
fn least_squares3(rows: &[[f64; 3]], rhs: &[f64]) -> Result<([f64; 3], f64)> {
    let m = rows.len();
    let mut a: Vec<[f64; 3]> = rows.to_vec();
    let mut b: Vec<f64> = rhs.to_vec();
    for k in 0..3 {
        let norm = sqrt((k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::contract("extrapolation design matrix is rank deficient"));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..3 {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let mut s = b[k];
        for j in k + 1..3 {
            s -= a[k][j] * x[j];
        }
        if a[k][k].abs() < 1e-14 * a[0][0].abs() {
            return Err(Error::contract("extrapolation design matrix is rank deficient"));
        }
        x[k] = s / a[k][k];
    }
    let residual = sqrt(b[3..].iter().map(|v| v * v).sum::<f64>());
    Ok((x, residual))
}

/// `(r sqrt(pi) / n) int_0^inf e^{-z^2/4n^2} J0(r z) J0(r' z) z dz`.
pub fn j0_orthogonality(r: f64, r_prime: f64, n: u32, tol: f64) -> Result<QuadratureResult> {
    if !(r > 0.0 && r_prime > 0.0) || n == 0 {
        return Err(Error::contract("orthogonality needs r, r' > 0 and n >= 1"));
    }
    let nf = n as f64;
    let pre = r * SQRT_PI / nf;
    let alpha = 1.0 / (4.0 * nf * nf);
    let env = GaussianEnvelope::new(pre, 1.0, alpha);
    let f = |z: f64| Complex64::new(pre * exp(-alpha * z * z) * j0(r * z) * j0(r_prime * z) * z, 0.0);
    integrate_gaussian_tail(f, env, tol, Some(r + r_prime))
}

/// Closed form of [`j0_orthogonality`]:
/// `2 r n sqrt(pi) e^{-n^2 (r - r')^2} e^{-2n^2 r r'} I0(2 n^2 r r')`.
pub fn j0_orthogonality_closed_form(r: f64, r_prime: f64, n: u32) -> f64 {
    let nf = n as f64;
    let d = r - r_prime;
    2.0 * r * nf * SQRT_PI * i0_scaled(2.0 * nf * nf * r * r_prime) * exp(-nf * nf * d * d)
}

/// Decides whether the transform of `mu` charges the circle `C_r`.
///
/// Present iff `|limit| > max(threshold, 3 * uncertainty)`.
pub fn detect_circle(
    mu: &MeasureSpec,
    r: f64,
    kind: FamilyKind,
    schedule: &Schedule,
    threshold: f64,
) -> Result<(bool, IntensityEstimate)> {
    if !(threshold > 0.0) {
        return Err(Error::contract("detection threshold must be positive"));
    }
    let est = circle_intensity(mu, r, kind, schedule)?;
    Ok((decide_presence(&est, threshold), est))
}

pub fn decide_presence(est: &IntensityEstimate, threshold: f64) -> bool {
    est.limit.norm() > threshold.max(3.0 * est.uncertainty)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonCheck {
    pub spectral_sum: f64,
    pub spatial_sum: f64,
    pub rel_diff: f64,
    /// Bounds on the two discarded tails.
    pub spectral_tail: f64,
    pub spatial_tail: f64,
}

/// Relative size of the discarded tails accepted by [`poisson_selfcheck`].
pub const POISSON_TAIL_RATIO: f64 = 1e-14;

/// `sum_m r2(m) f_n^(sqrt m)` against `sum_m r2(m) f_n(sqrt m)` for squared
/// norms up to `shell_cutoff`. The two agree by Poisson summation on `Z^2`.
pub fn poisson_selfcheck(fam: &CircleFamily, shell_cutoff: u64) -> Result<PoissonCheck> {
    let z2 = Lattice::integer();
    let env = fam.spectral_envelope();
    let spectral_tail = env.scale * gaussian_lattice_tail(&z2, env.alpha, shell_cutoff as f64);
    let sup_u = measured_sup_u();
    let (c_sp, beta) = fam.spatial_decay(sup_u);
    let start = fam.spatial_decay_start();
    if (shell_cutoff as f64) < start * start {
        return Err(Error::contract("shell cutoff is inside the spatial support of f_n"));
    }
    let spatial_tail = c_sp * gaussian_lattice_tail(&z2, beta, shell_cutoff as f64);
    let r2 = r2_sieve(shell_cutoff);

    let mut spectral_terms = Vec::new();
    for (m, &count) in r2.iter().enumerate() {
        if count > 0 {
            spectral_terms.push(count as f64 * fam.f_spectral(sqrt(m as f64)));
        }
    }
    let spectral_sum = crate::sum::pairwise_sum(&spectral_terms);

    // Spatial terms vanish quickly; stop once the remaining tail is
    // negligible against the running sum.
    let mut spatial_terms = Vec::new();
    let mut running = 0.0;
    for (m, &count) in r2.iter().enumerate() {
        let mf = m as f64;
        if mf >= start * start && running > 0.0 {
            let rest = c_sp * gaussian_lattice_tail(&z2, beta, mf);
            if rest <= 1e-17 * running {
                break;
            }
        }
        if count > 0 {
            let v = count as f64 * fam.f_spatial_radial(sqrt(mf))?;
            running += v.abs();
            spatial_terms.push(v);
        }
    }
    let spatial_sum = crate::sum::pairwise_sum(&spatial_terms);

    if spectral_tail > POISSON_TAIL_RATIO * spectral_sum.abs()
        || spatial_tail > POISSON_TAIL_RATIO * spatial_sum.abs()
    {
        return Err(Error::contract(alloc::format!(
            "shell cutoff {shell_cutoff} too small: tail bounds {spectral_tail:e} / {spatial_tail:e}"
        )));
    }
    let rel_diff = (spectral_sum - spatial_sum).abs() / spatial_sum.abs().max(1e-300);
    Ok(PoissonCheck { spectral_sum, spatial_sum, rel_diff, spectral_tail, spatial_tail })
}

/// Smallest power-of-two multiple of 16 that satisfies the tail condition of
/// [`poisson_selfcheck`], judged against `expected_sum`.
pub fn poisson_cutoff(fam: &CircleFamily, expected_sum: f64) -> u64 {
    let z2 = Lattice::integer();
    let env = fam.spectral_envelope();
    let (c_sp, beta) = fam.spatial_decay(1.2);
    let start = fam.spatial_decay_start();
    let mut m: u64 = 16;
    loop {
        let mf = m as f64;
        let ok = mf >= start * start
            && env.scale * gaussian_lattice_tail(&z2, env.alpha, mf)
                <= 0.1 * POISSON_TAIL_RATIO * expected_sum
            && c_sp * gaussian_lattice_tail(&z2, beta, mf) <= 0.1 * POISSON_TAIL_RATIO * expected_sum;
        if ok || m > 1 << 40 {
            return m;
        }
        m *= 2;
    }
}
