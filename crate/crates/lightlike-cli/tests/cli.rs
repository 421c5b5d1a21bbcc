//! Black-box tests for the `ljet` binary: exit-code contract, report
//! content, determinism, and the model fixture emitter.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lightlike::flat::{generate_jet, GeneratorPoint, ModelSpec};
use lightlike::jet::{jet_to_string, load_jet, HypersurfaceJet};
use lightlike::tensor::{ScreenMetric, SymMatrix};
use lightlike::Tolerances;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ljet"))
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ljet-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_diag_fixture(dir: &Path) -> PathBuf {
    let jet = HypersurfaceJet::from_second_order(
        5,
        ScreenMetric::identity(3),
        SymMatrix::from_diagonal(&[1.0, 2.0, 4.0]),
    )
    .unwrap();
    let path = dir.join("diag.json");
    std::fs::write(&path, jet_to_string(&jet)).unwrap();
    path
}

fn write_cone_fixture(dir: &Path) -> PathBuf {
    let spec = ModelSpec::null_cone(5, vec![0.0; 5]);
    let point = GeneratorPoint {
        s: 1.0,
        u: vec![0.2, -0.1, 0.3],
    };
    let generated = generate_jet(&spec, &point).unwrap();
    let path = dir.join("cone.json");
    std::fs::write(&path, jet_to_string(&generated.jet)).unwrap();
    path
}

fn stdout_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).unwrap()
}

#[test]
fn analyze_reports_foci_and_mu_of_the_diagonal_fixture() {
    let dir = scratch_dir("diag");
    let input = write_diag_fixture(&dir);
    let output = bin().args(["analyze", "--input"]).arg(&input).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    assert_eq!(report["classification"], "regular");
    let foci: Vec<f64> = report["foci"]["cluster_values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(foci.len(), 3);
    for (got, want) in foci.iter().zip([1.0, 2.0, 4.0]) {
        assert!((got - want).abs() < 1e-9, "focus {got} vs {want}");
    }
    let mu = report["normalization"]["mu"].as_f64().unwrap();
    assert!((mu - 14.0 / 9.0).abs() < 1e-12, "mu = {mu}");
}

#[test]
fn analyze_classifies_the_cone_fixture_umbilical_with_exit_3() {
    let dir = scratch_dir("cone");
    let input = write_cone_fixture(&dir);
    let output = bin().args(["analyze", "--input"]).arg(&input).output().unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");

    let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    assert_eq!(report["classification"], "umbilical");
    assert_eq!(report["foci"]["multiplicities"].as_array().unwrap().len(), 1);
    assert_eq!(report["foci"]["multiplicities"][0], 3);
}

#[test]
fn analyze_rejects_malformed_input_with_exit_2_and_stderr() {
    let dir = scratch_dir("malformed");
    let path = dir.join("broken.json");
    std::fs::write(&path, "{\"schema\": \"ljet-1\", \"n\": ").unwrap();
    let output = bin().args(["analyze", "--input"]).arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    assert!(output.stdout.is_empty());
    let stderr = std::str::from_utf8(&output.stderr).unwrap();
    assert!(stderr.contains("broken.json"), "stderr: {stderr}");
}

#[test]
fn analyze_output_is_byte_identical_across_runs_and_jobs() {
    let dir = scratch_dir("determinism");
    let diag = write_diag_fixture(&dir);
    let cone = write_cone_fixture(&dir);
    let run = |jobs: &str| {
        let output = bin()
            .args(["analyze", "--jobs", jobs, "--input"])
            .arg(&diag)
            .arg("--input")
            .arg(&cone)
            .output()
            .unwrap();
        // batch contains the umbilical cone
        assert_eq!(output.status.code(), Some(3), "{output:?}");
        output.stdout
    };
    let first = run("1");
    let second = run("1");
    let parallel = run("3");
    assert_eq!(first, second);
    assert_eq!(first, parallel);

    let reports: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let list = reports.as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list[0]["classification"], "regular");
    assert_eq!(list[1]["classification"], "umbilical");
}

#[test]
fn analyze_csv_has_one_row_per_input() {
    let dir = scratch_dir("csv");
    let input = write_diag_fixture(&dir);
    let output = bin()
        .args(["analyze", "--format", "csv", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let lines: Vec<&str> = stdout_of(&output).lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("input,n,classification"));
    assert!(lines[1].contains(",regular,"), "{}", lines[1]);
    assert!(lines[1].contains("1;2;4"), "{}", lines[1]);
}

#[test]
fn tolerance_overrides_and_profiles_are_enforced() {
    let dir = scratch_dir("tols");
    let input = write_diag_fixture(&dir);

    // unknown tolerance name
    let output = bin()
        .args(["analyze", "--tol", "no_such=1e-3", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");

    // an absurdly lax umbilical gate reclassifies the fixture
    let output = bin()
        .args(["analyze", "--tol", "umbilical=1e6", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    assert_eq!(report["classification"], "umbilical");

    // invalid profile
    let output = bin()
        .args(["analyze", "--input"])
        .arg(&input)
        .env("LJET_TOL_PROFILE", "bogus")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");

    // the strict profile is accepted
    let output = bin()
        .args(["analyze", "--input"])
        .arg(&input)
        .env("LJET_TOL_PROFILE", "strict")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
}

#[test]
fn gauge_check_passes_zero_params_and_measures_weights() {
    let dir = scratch_dir("gauge");
    let input = write_diag_fixture(&dir);
    let output = bin()
        .args(["gauge-check", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    assert!(report["max_residual"].as_f64().unwrap() < 1e-9);
    assert!(report["composition_residual"].as_f64().unwrap() < 1e-9);
    let mu_weight = report["weights"]["mu"]["measured"].as_f64().unwrap();
    assert!((mu_weight - 2.0).abs() < 1e-6, "mu weight {mu_weight}");
    assert_eq!(report["within_tolerance"], true);
}

#[test]
fn gauge_check_accepts_a_params_file() {
    let dir = scratch_dir("gauge-params");
    let input = write_diag_fixture(&dir);
    let params = dir.join("params.json");
    std::fs::write(
        &params,
        r#"{"pi00": 0.2, "pi11": -0.1, "pi01": 0.15, "pi_a0": [0.05, -0.04, 0.06], "pi_n0": 0.05}"#,
    )
    .unwrap();
    let output = bin()
        .args(["gauge-check", "--params"])
        .arg(&params)
        .arg("--input")
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    assert!(report["max_residual"].as_f64().unwrap() < 1e-9);

    // wrong dimension → exit 2
    std::fs::write(&params, r#"{"pi_a0": [0.05, -0.04]}"#).unwrap();
    let output = bin()
        .args(["gauge-check", "--params"])
        .arg(&params)
        .arg("--input")
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn cartan_reports_the_known_counts_and_rejects_small_n() {
    for (n, q) in [(4u32, 3u64), (5, 6)] {
        let output = bin()
            .args(["cartan", "--n", &n.to_string()])
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0), "{output:?}");
        let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
        assert_eq!(report["cartan_number"].as_u64().unwrap(), q);
        assert_eq!(report["element_dimension"].as_u64().unwrap(), q);
        assert_eq!(report["involutive"], true);
    }

    let output = bin().args(["cartan", "--n", "3"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");

    let output = bin()
        .args(["cartan", "--n", "6", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let lines: Vec<&str> = stdout_of(&output).lines().collect();
    assert_eq!(lines[1], "6,true,10,10,1;1;1;1");
}

#[test]
fn model_emits_fixtures_trajectories_and_foci_locus() {
    let dir = scratch_dir("model");
    let spec = dir.join("sphere.json");
    std::fs::write(
        &spec,
        serde_json::to_string(&ModelSpec::null_sphere(4, 1.5)).unwrap(),
    )
    .unwrap();
    let out = dir.join("sphere-out");
    let output = bin()
        .args(["model", "--generators", "4", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    // fixtures load back as admissible jets
    for k in 0..4 {
        let jet = load_jet(&out.join(format!("jet_{k:03}.json")), &Tolerances::default()).unwrap();
        assert_eq!(jet.n, 4);
    }

    // trajectory: header plus steps+1 rows, 1 + (n+2)^2 columns
    let trajectory = std::fs::read_to_string(out.join("trajectory_000.csv")).unwrap();
    let lines: Vec<&str> = trajectory.lines().collect();
    assert_eq!(lines.len(), 202);
    assert_eq!(lines[0].split(',').count(), 37);

    // sphere: both foci columns coincide on every generator
    let foci = std::fs::read_to_string(out.join("foci.csv")).unwrap();
    let rows: Vec<&str> = foci.lines().collect();
    assert_eq!(rows[0], "generator,s1,s2");
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        let a: f64 = cols[1].parse().unwrap();
        let b: f64 = cols[2].parse().unwrap();
        assert!((a - b).abs() < 1e-6, "{row}");
    }
}

#[test]
fn model_ellipsoid_emits_two_distinct_foci_columns() {
    let dir = scratch_dir("model-ellipsoid");
    let spec = dir.join("ellipsoid.json");
    std::fs::write(
        &spec,
        serde_json::to_string(&ModelSpec::null_ellipsoid(vec![1.1, 0.9, 1.4])).unwrap(),
    )
    .unwrap();
    let out = dir.join("out");
    let output = bin()
        .args(["model", "--generators", "3", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    let foci = std::fs::read_to_string(out.join("foci.csv")).unwrap();
    for row in foci.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let a: f64 = cols[1].parse().unwrap();
        let b: f64 = cols[2].parse().unwrap();
        assert!((a - b).abs() > 1e-3, "expected distinct foci: {row}");
    }

    // rerunning with the same seed reproduces every file byte for byte
    let out2 = dir.join("out2");
    let output = bin()
        .args(["model", "--generators", "3", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out2)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    for name in ["jet_000.json", "trajectory_002.csv", "foci.csv"] {
        assert_eq!(
            std::fs::read(out.join(name)).unwrap(),
            std::fs::read(out2.join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
}

#[test]
fn model_near_the_cone_vertex_exits_3() {
    let dir = scratch_dir("model-vertex");
    let spec = dir.join("cone.json");
    std::fs::write(
        &spec,
        serde_json::to_string(&ModelSpec::null_cone(4, vec![0.0; 4])).unwrap(),
    )
    .unwrap();
    let out = dir.join("out");
    let output = bin()
        .args(["model", "--jet-s", "1e-9", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let stderr = std::str::from_utf8(&output.stderr).unwrap();
    assert!(stderr.contains("chart"), "stderr: {stderr}");
}
