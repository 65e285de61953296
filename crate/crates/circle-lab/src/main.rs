use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use circle_lab::config::{BesselFn, Command, Family, MeasureConfig, OutputFormat, RunConfig};

/// Circle intensities of Fourier transforms of planar measures, with
/// lattice, Bessel and sum-of-two-squares checks.
#[derive(Debug, Parser)]
#[command(name = "circle-lab", version, allow_negative_numbers = true)]
struct Cli {
    /// Command to run; may instead come from the config file.
    #[arg(value_enum)]
    command: Option<Command>,

    /// JSON run configuration; flags below override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Circle radius.
    #[arg(long)]
    r: Option<f64>,

    /// Second radius for `ortho`.
    #[arg(long)]
    r_prime: Option<f64>,

    #[arg(long, value_enum)]
    family: Option<Family>,

    /// Family indices, e.g. `4,8,16`.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<u32>>,

    /// Per-evaluation quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Measure as a JSON object, e.g. `{"type":"integer_lattice"}`.
    #[arg(long, value_name = "JSON")]
    measure: Option<String>,

    /// Presence threshold for `detect`.
    #[arg(long)]
    threshold: Option<f64>,

    /// Function for `bessel`.
    #[arg(long = "fn", value_enum)]
    function: Option<BesselFn>,

    /// Arguments for `bessel`, comma separated.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,

    /// Lattice generators `b1x,b1y,b2x,b2y`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    basis: Option<Vec<f64>>,

    #[arg(long)]
    max_sq_norm: Option<f64>,

    #[arg(long)]
    group_tol: Option<f64>,

    /// Squared norm to verify with `shelling`.
    #[arg(long)]
    k: Option<f64>,

    /// Upper end for `sum2sq`.
    #[arg(long)]
    max: Option<u64>,

    /// Family index for `poisson-check` and `ortho`.
    #[arg(long)]
    n: Option<u32>,

    /// Largest squared norm summed by `poisson-check`.
    #[arg(long)]
    shell_cutoff: Option<u64>,

    /// Convergence tolerance for `validate-family`.
    #[arg(long)]
    c1_tol: Option<f64>,

    /// Number of sample points for `validate-family`.
    #[arg(long)]
    samples: Option<usize>,

    /// Output file; the table goes to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Worker threads (default: $CIRCLE_LAB_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Cli {
    fn into_config(self) -> Result<(Option<PathBuf>, RunConfig), String> {
        let measure = match self.measure {
            Some(text) => Some(
                serde_json::from_str::<MeasureConfig>(&text)
                    .map_err(|e| format!("--measure: {e}"))?,
            ),
            None => None,
        };
        let basis = match self.basis.as_deref() {
            None => None,
            Some(&[a, b, c, d]) => Some([[a, b], [c, d]]),
            Some(v) => return Err(format!("--basis needs 4 numbers, got {}", v.len())),
        };
        let overrides = RunConfig {
            schema_version: None,
            command: self.command,
            measure,
            r: self.r,
            r_prime: self.r_prime,
            family: self.family,
            schedule: self.schedule,
            n: self.n,
            tol: self.tol,
            threshold: self.threshold,
            function: self.function,
            at: self.at,
            basis,
            max_sq_norm: self.max_sq_norm,
            group_tol: self.group_tol,
            k: self.k,
            max: self.max,
            shell_cutoff: self.shell_cutoff,
            c1_tol: self.c1_tol,
            samples: self.samples,
            output_path: self.out,
            output_format: self.format,
            threads: self.threads,
        };
        Ok((self.config, overrides))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, overrides) = match cli.into_config() {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cfg = match path {
        Some(p) => match RunConfig::load(&p) {
            Ok(base) => base.overlay(overrides),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        },
        None => overrides,
    };
    ExitCode::from(circle_lab::run(&cfg) as u8)
}
