//! Front end for the `circle-lab-core` numerics: configuration, command
//! dispatch and deterministic table output.

pub mod config;
pub mod output;

use std::f64::consts::TAU;
use std::fmt;

use circle_lab_core::circles::{validate_family, CircleFamily, FamilyKind};
use circle_lab_core::estimator::{
    decide_presence, estimate_from_series, j0_orthogonality, j0_orthogonality_closed_form,
    poisson_cutoff, poisson_selfcheck, series_entry, IntensityEstimate, IntensitySeries, Schedule,
    DEFAULT_TAIL_LEN,
};
use circle_lab_core::lattice::{
    r2, r2_divisor, shells, verify_lattice_shelling, Lattice, DEFAULT_GROUP_TOL,
};
use circle_lab_core::measures::MeasureSpec;
use circle_lab_core::specfun::{bessel_i0_scaled, bessel_j0, bessel_j1, u_ratio};
use circle_lab_core::Error;
use rayon::prelude::*;

use config::{BesselFn, Command, CutoffHint, Family, RunConfig};
use output::Table;

pub const THREADS_ENV: &str = "CIRCLE_LAB_THREADS";

/// Default threshold for `detect`.
pub const DEFAULT_DETECT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_C1_TOL: f64 = 1e-3;
pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration or input; exit status 2.
    Invalid(String),
    /// Numerical accuracy failure; exit status 3.
    Accuracy { operation: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Accuracy { .. } => 3,
        }
    }

    fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    fn from_core(operation: &str, e: Error) -> Self {
        if e.is_accuracy_failure() {
            CliError::Accuracy { operation: operation.to_string(), message: e.to_string() }
        } else {
            CliError::Invalid(format!("{operation}: {e}"))
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) => write!(f, "error: {msg}"),
            CliError::Accuracy { operation, message } => {
                write!(f, "accuracy failure in {operation}: {message}")
            }
        }
    }
}

impl std::error::Error for CliError {}

/// Result of a command: the table to write and the line for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: String,
}

/// Runs `cfg`: writes the table to `output_path` (or stdout when unset) and
/// prints the summary. Returns the process exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = execute(cfg).and_then(|outcome| {
        let text = outcome.table.render(cfg.output_format.unwrap_or_default());
        match &cfg.output_path {
            Some(path) => output::write_atomic(path, &text)
                .map_err(|e| CliError::invalid(format!("{}: cannot write output: {e}", path.display())))?,
            None => print!("{text}"),
        }
        println!("{}", outcome.summary);
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Thread count: explicit setting, then `CIRCLE_LAB_THREADS`, then rayon's default.
pub fn resolve_threads(cfg: &RunConfig) -> Result<Option<usize>, CliError> {
    if let Some(t) = cfg.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::invalid(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Computes the outcome of `cfg` without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if let Some(v) = cfg.schema_version {
        if v != config::SCHEMA_VERSION {
            return Err(CliError::invalid(format!("unsupported schema_version {v}")));
        }
    }
    let command = cfg
        .command
        .ok_or_else(|| CliError::invalid("no command given (on the command line or in the config)"))?;
    if let Some(t) = cfg.tol {
        positive("tol", t)?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = resolve_threads(cfg)? {
        if t == 0 {
            return Err(CliError::invalid("threads must be at least 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Bessel => bessel(cfg),
        Command::Intensity => intensity(cfg),
        Command::Detect => detect(cfg),
        Command::Shelling => shelling(cfg),
        Command::Sum2sq => sum2sq(cfg),
        Command::PoissonCheck => poisson(cfg),
        Command::Ortho => ortho(cfg),
        Command::ValidateFamily => family(cfg),
    })
}

fn require<T: Copy>(v: Option<T>, name: &str, command: Command) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::invalid(format!("{} needs `{name}`", command.name())))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn family_of(cfg: &RunConfig) -> Family {
    cfg.family.unwrap_or(Family::Gaussian)
}

fn schedule_of(cfg: &RunConfig, kind: FamilyKind) -> Result<Schedule, CliError> {
    let default = Schedule::default_for(kind);
    let tol = cfg.tol.unwrap_or(default.per_n_tol());
    let values = cfg.schedule.clone().unwrap_or_else(|| default.n_values().to_vec());
    Schedule::new(values, tol).map_err(|e| CliError::invalid(format!("schedule: {e}")))
}

fn fmt_complex(z: circle_lab_core::Complex64) -> String {
    format!("{}{:+}i", output::format_float(z.re), z.im)
}

fn bessel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = require(cfg.function, "function", Command::Bessel)?;
    let at = cfg.at.as_ref().ok_or_else(|| CliError::invalid("bessel needs `at`"))?;
    let (name, eval): (&str, fn(f64) -> circle_lab_core::Result<f64>) = match f {
        BesselFn::J0 => ("j0", bessel_j0),
        BesselFn::J1 => ("j1", bessel_j1),
        BesselFn::I0s => ("i0s", bessel_i0_scaled),
        BesselFn::U => ("u", u_ratio),
    };
    let mut table = Table::new(&["t", "value"]);
    for &t in at {
        let v = eval(t).map_err(|e| CliError::from_core("bessel", e))?;
        table.push(vec![t.into(), v.into()]);
    }
    let summary = match at.as_slice() {
        [t] => format!("{name}({}) = {}", output::format_float(*t), output::format_float(eval(*t).unwrap())),
        _ => format!("{name} evaluated at {} points", at.len()),
    };
    Ok(Outcome { table, summary })
}

struct IntensityRun {
    r: f64,
    family: Family,
    estimate: IntensityEstimate,
}

/// Builds the measure and evaluates the series on the current rayon pool.
/// Entries are collected in schedule order, so the result does not depend
/// on the thread count.
fn intensity_run(cfg: &RunConfig, command: Command) -> Result<IntensityRun, CliError> {
    let r = positive("r", require(cfg.r, "r", command)?)?;
    let family = family_of(cfg);
    let kind = FamilyKind::from(family);
    let schedule = schedule_of(cfg, kind)?;
    schedule.check_for(kind, r).map_err(|e| CliError::invalid(format!("schedule: {e}")))?;
    let measure = cfg
        .measure
        .as_ref()
        .ok_or_else(|| CliError::invalid(format!("{} needs `measure`", command.name())))?;
    let hint = CutoffHint { r, family, n_max: schedule.n_max() };
    let mu = measure.to_spec(Some(hint)).map_err(|e| CliError::invalid(format!("measure: {e}")))?;
    mu.validate().map_err(|e| CliError::invalid(format!("measure: {e}")))?;
    let estimate = parallel_estimate(&mu, r, kind, &schedule).map_err(|e| CliError::from_core("intensity", e))?;
    Ok(IntensityRun { r, family, estimate })
}

/// Same result as `circle_intensity`, computed across the rayon pool.
pub fn parallel_estimate(
    mu: &MeasureSpec,
    r: f64,
    kind: FamilyKind,
    schedule: &Schedule,
) -> circle_lab_core::Result<IntensityEstimate> {
    let entries = schedule
        .n_values()
        .par_iter()
        .map(|&n| series_entry(mu, r, kind, n, schedule.per_n_tol()))
        .collect::<circle_lab_core::Result<Vec<_>>>()?;
    estimate_from_series(IntensitySeries { entries }, DEFAULT_TAIL_LEN)
}

fn intensity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let run = intensity_run(cfg, Command::Intensity)?;
    let est = &run.estimate;
    let mut table = Table::new(&["n", "re", "im", "quad_error"]);
    for e in &est.series.entries {
        table.push(vec![e.n.into(), e.value.re.into(), e.value.im.into(), e.quad_error.into()]);
    }
    table.push(vec!["limit".into(), est.limit.re.into(), est.limit.im.into(), est.uncertainty.into()]);
    let summary = format!(
        "intensity r={} {}: {} ± {:e}",
        output::format_float(run.r),
        run.family,
        fmt_complex(est.limit),
        est.uncertainty
    );
    Ok(Outcome { table, summary })
}

fn detect(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let threshold = positive("threshold", cfg.threshold.unwrap_or(DEFAULT_DETECT_THRESHOLD))?;
    let run = intensity_run(cfg, Command::Detect)?;
    let est = &run.estimate;
    let present = decide_presence(est, threshold);
    let mut table = Table::new(&["r", "limit_re", "limit_im", "uncertainty", "threshold", "present"]);
    table.push(vec![
        run.r.into(),
        est.limit.re.into(),
        est.limit.im.into(),
        est.uncertainty.into(),
        threshold.into(),
        present.into(),
    ]);
    let summary = format!(
        "circle r={} {}: {} ± {:e} ({})",
        output::format_float(run.r),
        if present { "present" } else { "absent" },
        fmt_complex(est.limit),
        est.uncertainty,
        run.family
    );
    Ok(Outcome { table, summary })
}

fn lattice_of(cfg: &RunConfig) -> Result<Lattice, CliError> {
    let b = require(cfg.basis, "basis", Command::Shelling)?;
    Lattice::new(b[0], b[1]).map_err(|e| CliError::invalid(format!("basis: {e}")))
}

fn shelling(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = lattice_of(cfg)?;
    if let Some(k) = cfg.k {
        let schedule = schedule_of(cfg, FamilyKind::GaussianTheta)?;
        let rep = verify_lattice_shelling(&lattice, k, &schedule)
            .map_err(|e| CliError::from_core("shelling", e))?;
        let mut table =
            Table::new(&["k", "lhs", "rhs", "difference", "uncertainty", "shell_cutoff"]);
        table.push(vec![
            k.into(),
            rep.lhs.into(),
            rep.rhs.into(),
            rep.difference.into(),
            rep.uncertainty.into(),
            rep.shell_cutoff.into(),
        ]);
        let summary = format!(
            "shell k={}: count {} vs intensity {} ± {:e}",
            output::format_float(k),
            rep.lhs,
            output::format_float(rep.rhs),
            rep.uncertainty
        );
        return Ok(Outcome { table, summary });
    }
    let max = require(cfg.max_sq_norm, "max_sq_norm", Command::Shelling)?;
    if !(max.is_finite() && max >= 0.0) {
        return Err(CliError::invalid("max_sq_norm must be a finite non-negative number"));
    }
    let tol = positive("group_tol", cfg.group_tol.unwrap_or(DEFAULT_GROUP_TOL))?;
    let table_data = shells(&lattice, max, tol).map_err(|e| CliError::from_core("shelling", e))?;
    let mut table = Table::new(&["sq_norm", "multiplicity"]);
    for &(k, m) in &table_data.entries {
        table.push(vec![k.into(), m.into()]);
    }
    let summary = format!(
        "{} shells, {} points with squared norm <= {}{}",
        table_data.entries.len(),
        table_data.total_points(),
        output::format_float(max),
        if table_data.exact { " (exact)" } else { "" }
    );
    Ok(Outcome { table, summary })
}

fn sum2sq(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let max = require(cfg.max, "max", Command::Sum2sq)?;
    if max == 0 {
        return Err(CliError::invalid("max must be at least 1"));
    }
    let rows: Vec<(u64, u64, u64)> = (1..=max)
        .into_par_iter()
        .map(|m| (m, r2(m), r2_divisor(m).expect("m >= 1")))
        .collect();
    let mismatches = rows.iter().filter(|(_, a, b)| a != b).count();
    let mut table = Table::new(&["m", "r2", "r2_divisor"]);
    for (m, a, b) in rows {
        table.push(vec![m.into(), a.into(), b.into()]);
    }
    let summary = format!("r2 for 1..={max}: {mismatches} mismatches");
    Ok(Outcome { table, summary })
}

fn poisson(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = positive("r", require(cfg.r, "r", Command::PoissonCheck)?)?;
    let n = require(cfg.n, "n", Command::PoissonCheck)?;
    let family = family_of(cfg);
    let fam = CircleFamily::new(family.into(), r, n).map_err(|e| CliError::from_core("poisson-check", e))?;
    let cutoff = cfg.shell_cutoff.unwrap_or_else(|| poisson_cutoff(&fam, fam.f_spectral(0.0)));
    let chk = poisson_selfcheck(&fam, cutoff).map_err(|e| CliError::from_core("poisson-check", e))?;
    let mut table = Table::new(&[
        "shell_cutoff",
        "spectral_sum",
        "spatial_sum",
        "rel_diff",
        "spectral_tail",
        "spatial_tail",
    ]);
    table.push(vec![
        cutoff.into(),
        chk.spectral_sum.into(),
        chk.spatial_sum.into(),
        chk.rel_diff.into(),
        chk.spectral_tail.into(),
        chk.spatial_tail.into(),
    ]);
    let summary = format!(
        "poisson {family} r={} n={n}: {} vs {} (rel diff {:e})",
        output::format_float(r),
        output::format_float(chk.spectral_sum),
        output::format_float(chk.spatial_sum),
        chk.rel_diff
    );
    Ok(Outcome { table, summary })
}

fn ortho(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = positive("r", require(cfg.r, "r", Command::Ortho)?)?;
    let rp = positive("r_prime", require(cfg.r_prime, "r_prime", Command::Ortho)?)?;
    let n = require(cfg.n, "n", Command::Ortho)?;
    let tol = cfg.tol.unwrap_or(1e-12);
    let closed = j0_orthogonality_closed_form(r, rp, n);
    let q = j0_orthogonality(r, rp, n, tol).map_err(|e| CliError::from_core("ortho", e))?;
    let value = q.value.re;
    let rel = (value - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
    let mut table = Table::new(&["r", "r_prime", "n", "value", "error", "closed_form", "rel_diff"]);
    table.push(vec![
        r.into(),
        rp.into(),
        n.into(),
        value.into(),
        q.total_error().into(),
        closed.into(),
        rel.into(),
    ]);
    let summary = format!(
        "ortho r={} r'={} n={n}: {} ± {:e} (closed form {})",
        output::format_float(r),
        output::format_float(rp),
        output::format_float(value),
        q.total_error(),
        output::format_float(closed)
    );
    Ok(Outcome { table, summary })
}

/// `count` sample points for checking a family at radius `r`: the origin,
/// points on the circle, and points in `[0, r + 4]` at least 0.1 away from
/// it, spread over several directions.
pub fn sample_grid(r: f64, count: usize) -> Vec<[f64; 2]> {
    let count = count.max(2);
    let on_circle = (count / 5).max(1);
    let off = count - 1 - on_circle;
    let mut pts = vec![[0.0, 0.0]];
    for i in 0..on_circle {
        let a = TAU * i as f64 / on_circle as f64 + 0.1;
        pts.push([r * a.cos(), r * a.sin()]);
    }
    // Radii evenly over [0, r + 4] with the band |s - r| < 0.1 removed.
    let hi = r + 4.0;
    let lo_band = (r - 0.1).max(0.0);
    let hi_band = r + 0.1;
    let usable = lo_band + (hi - hi_band);
    for i in 0..off {
        let t = usable * (i as f64 + 0.5) / off as f64;
        let s = if t < lo_band { t } else { hi_band + (t - lo_band) };
        let a = 0.7 + 2.3 * i as f64;
        pts.push([s * a.cos(), s * a.sin()]);
    }
    pts
}

fn family(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = positive("r", require(cfg.r, "r", Command::ValidateFamily)?)?;
    let family = family_of(cfg);
    let kind = FamilyKind::from(family);
    let schedule = schedule_of(cfg, kind)?;
    let c1_tol = positive("c1_tol", cfg.c1_tol.unwrap_or(DEFAULT_C1_TOL))?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let pts = sample_grid(r, samples);
    let rep = validate_family(kind, r, &pts, schedule.n_values(), c1_tol)
        .map_err(|e| CliError::from_core("validate-family", e))?;
    let mut table = Table::new(&["x", "y", "target", "final_error", "converged"]);
    for p in &rep.points {
        let last = p.errors.last().copied().unwrap_or(f64::NAN);
        table.push(vec![p.x[0].into(), p.x[1].into(), p.target.into(), last.into(), p.converged.into()]);
    }
    let failed = rep.points.iter().filter(|p| !p.converged).count();
    let summary = format!(
        "{family} r={}: {} of {} points converged, max envelope ratio {}",
        output::format_float(r),
        rep.points.len() - failed,
        rep.points.len(),
        output::format_float(rep.max_envelope_ratio)
    );
    if !rep.passed() {
        return Err(CliError::Accuracy {
            operation: "validate-family".into(),
            message: summary,
        });
    }
    Ok(Outcome { table, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use config::OutputFormat;

    #[test]
    fn grid_shape() {
        let pts = sample_grid(1.0, 60);
        assert_eq!(pts.len(), 60);
        assert!(pts.contains(&[0.0, 0.0]));
        let on = pts.iter().filter(|p| (p[0].hypot(p[1]) - 1.0).abs() < 1e-12).count();
        assert!(on >= 1);
        for p in &pts {
            let s = p[0].hypot(p[1]);
            assert!(s <= 5.0 + 1e-12);
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-12 || (s - 1.0).abs() >= 0.1 - 1e-12);
        }
    }

    #[test]
    fn sum2sq_columns_agree() {
        let cfg = RunConfig { command: Some(Command::Sum2sq), max: Some(20), ..Default::default() };
        let out = execute(&cfg).unwrap();
        assert_eq!(out.table.rows.len(), 20);
        assert!(out.summary.contains("0 mismatches"));
    }

    #[test]
    fn bessel_at_zero() {
        let cfg = RunConfig {
            command: Some(Command::Bessel),
            function: Some(BesselFn::J0),
            at: Some(vec![0.0]),
            ..Default::default()
        };
        let out = execute(&cfg).unwrap();
        assert_eq!(out.table.to_csv(), "t,value\n0.0,1.0\n");
    }

    #[test]
    fn missing_fields_are_validation_errors() {
        let cfg = RunConfig { command: Some(Command::Intensity), r: Some(1.0), ..Default::default() };
        assert_eq!(execute(&cfg).unwrap_err().exit_code(), 2);
        let cfg = RunConfig { command: Some(Command::Bessel), ..Default::default() };
        assert_eq!(execute(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn output_format_default_is_csv() {
        assert_eq!(OutputFormat::default(), OutputFormat::Csv);
    }
}
