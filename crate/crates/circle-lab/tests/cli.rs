use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

use circle_lab::config::{AtomConfig, MeasureConfig, ShellConfig, Weight};
use circle_lab_core::measures::{pair_radial, RadialFn};
use circle_lab_core::quad::GaussianEnvelope;
use circle_lab_core::Complex64;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circle-lab"))
        .args(args)
        .env_remove("CIRCLE_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn run_to(args: &[&str], out: &Path, extra: &[&str]) -> Vec<u8> {
    let mut all: Vec<&str> = args.to_vec();
    all.extend_from_slice(extra);
    all.push("--out");
    all.push(out.to_str().unwrap());
    let o = cli(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "intensity",
        "--r",
        "2.23606797749979",
        "--measure",
        r#"{"type":"lattice_shells","basis":[[1,0],[0.5,1]]}"#,
    ];
    for format in ["csv", "records"] {
        let a = run_to(&args, &dir.path().join("a"), &["--threads", "1", "--format", format]);
        let b = run_to(&args, &dir.path().join("b"), &["--threads", "8", "--format", format]);
        assert_eq!(a, b);
        assert!(!a.contains(&b'\r'));
    }
}

#[test]
fn thread_count_can_come_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_circle-lab"))
        .args(["sum2sq", "--max", "4"])
        .env("CIRCLE_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn summary_goes_to_stdout_and_table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = cli(&["sum2sq", "--max", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "r2 for 1..=20: 0 mismatches\n");
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("m,r2,r2_divisor\n1,4,4\n2,4,4\n3,0,0\n"));
    assert_eq!(table.lines().count(), 21);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "command": "bessel", "function": "j0", "at": [0, 1]}"#,
    )
    .unwrap();
    let o = cli(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,value\n0.0,1.0\n1.0,0.7651976865579666\n"), "{text}");
    let o = cli(&["--config", cfg.to_str().unwrap(), "--at", "0"]);
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("j0(0.0) = 1.0\n"));
}

#[test]
fn bad_config_reports_location_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"schema_version\": 1,\n \"r\": \"one\"}").unwrap();
    let o = cli(&["intensity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2 column"));

    std::fs::write(&cfg, r#"{"schema_version": 7}"#).unwrap();
    assert_eq!(cli(&["sum2sq", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cli(&["intensity", "--r", "1"]).status.code(), Some(2));
    assert_eq!(cli(&["intensity", "--r", "1", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(cli(&["bessel", "--fn", "j0", "--at", "-1"]).status.code(), Some(2));
}

#[test]
fn accuracy_failure_exits_3_and_names_operation() {
    let o = cli(&["ortho", "--r", "1", "--r-prime", "1.3", "--n", "16", "--tol", "1e-22"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ortho"));
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = cli(&["intensity", "--r", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

fn weight() -> impl Strategy<Value = Weight> {
    prop_oneof![
        (-3.0f64..3.0).prop_map(Weight::Real),
        ((-3.0f64..3.0), (-3.0f64..3.0)).prop_map(|(a, b)| Weight::Complex([a, b])),
    ]
}

fn measure() -> impl Strategy<Value = MeasureConfig> {
    prop_oneof![
        prop::collection::vec((((-6.0f64..6.0), (-6.0f64..6.0)), weight()), 1..12).prop_map(|v| {
            MeasureConfig::PointSet {
                atoms: v.into_iter().map(|((x, y), weight)| AtomConfig { at: [x, y], weight }).collect(),
            }
        }),
        // Radii as running sums of positive gaps, so they strictly increase.
        prop::collection::vec(((0.05f64..1.0), weight()), 1..12).prop_map(|v| {
            let mut radius = -0.05;
            let shells = v
                .into_iter()
                .map(|(gap, weight)| {
                    radius += gap;
                    ShellConfig { radius, weight }
                })
                .collect();
            MeasureConfig::ShellWeights { shells }
        }),
        (0.1f64..4.0).prop_map(|radius| MeasureConfig::CircleUniform { radius }),
        Just(MeasureConfig::Lebesgue {}),
        weight().prop_map(|value| MeasureConfig::ConstantDensity { value }),
        ((0.1f64..3.0), weight()).prop_map(|(radius, weight)| MeasureConfig::BesselDensity { radius, weight }),
        ((-2.0f64..2.0), (-2.0f64..2.0)).prop_map(|(a, b)| MeasureConfig::PlaneCharacter { x: [a, b] }),
        ((0.6f64..1.6), (-0.5f64..0.5), (0.6f64..1.6)).prop_map(|(a, b, d)| MeasureConfig::LatticeShells {
            basis: [[a, 0.0], [b, d]],
            max_sq_norm: Some(20.0),
            group_tol: None,
        }),
        (1u64..200).prop_map(|m| MeasureConfig::IntegerLattice { max_sq_norm: Some(m) }),
    ]
}

fn probe(s: f64) -> Complex64 {
    Complex64::new((-0.5 * s * s).exp() * (2.0 * s).cos(), 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn measures_survive_a_round_trip(cfg in measure()) {
        let text = serde_json::to_string(&cfg).unwrap();
        let parsed: MeasureConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);

        let mu = cfg.to_spec(None).unwrap();
        let emitted = MeasureConfig::from_spec(&mu).expect("representable");
        let again: MeasureConfig = serde_json::from_str(&serde_json::to_string(&emitted).unwrap()).unwrap();
        let mu2 = again.to_spec(None).unwrap();

        let g = RadialFn { eval: &probe, envelope: GaussianEnvelope::new(1.0, 0.0, 0.5), frequency: 2.0 };
        let a = pair_radial(&mu, &g, 1e-12).unwrap();
        let b = pair_radial(&mu2, &g, 1e-12).unwrap();
        prop_assert!((a.value - b.value).norm() <= 1e-14 * a.value.norm().max(1.0));
    }
}
