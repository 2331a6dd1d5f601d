//! End-to-end tests of the `ewalk` binary and its output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ewalk::config::parse_config;
use ewalk::experiments::{run_bloch, BlochParams};

fn ewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ewalk"))
        .args(args)
        .output()
        .unwrap()
}

fn run_config(dir: &Path, name: &str, text: &str) -> (Output, std::path::PathBuf) {
    let config = dir.join(format!("{name}.conf"));
    fs::write(&config, text).unwrap();
    let out = dir.join(name);
    let output = ewalk(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    (output, out)
}

fn manifest_value(dir: &Path, key: &str) -> Option<String> {
    fs::read_to_string(dir.join("manifest"))
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn bloch_run_writes_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, out) = run_config(
        tmp.path(),
        "bloch",
        "experiment = bloch\nm = 100\nsteps = 400\n",
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    for file in [
        "centroid.csv",
        "spectrum.csv",
        "config.resolved",
        "manifest",
    ] {
        assert!(out.join(file).is_file(), "missing {file}");
    }
    assert_eq!(manifest_value(&out, "status").as_deref(), Some("ok"));
    assert_eq!(manifest_value(&out, "experiment").as_deref(), Some("bloch"));
    let resolved = fs::read_to_string(out.join("config.resolved")).unwrap();
    let original = parse_config("experiment = bloch\nm = 100\nsteps = 400\n").unwrap();
    assert_eq!(parse_config(&resolved).unwrap(), original);
}

#[test]
fn centroid_csv_reparses_to_exact_values() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, out) = run_config(
        tmp.path(),
        "bloch",
        "experiment = bloch\nm = 37\nn_sites = 400\nsteps = 300\n",
    );
    assert!(output.status.success());
    let direct = run_bloch(&BlochParams {
        m: 37.0,
        n_sites: 400,
        steps: 300,
        ..BlochParams::default()
    })
    .unwrap();
    let text = fs::read_to_string(out.join("centroid.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,centroid"));
    let parsed: Vec<(usize, f64)> = lines
        .map(|l| {
            let (t, x) = l.split_once(',').unwrap();
            (t.parse().unwrap(), x.parse().unwrap())
        })
        .collect();
    assert_eq!(parsed.len(), direct.trace.len());
    for (t, x) in parsed {
        assert_eq!(x.to_bits(), direct.trace.samples[t].to_bits(), "t = {t}");
    }
}

#[test]
fn full_velocity_map_has_one_row_per_grid_point() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, out) = run_config(
        tmp.path(),
        "map",
        "experiment = velocity_map\nm = 4\nn_sites = 64\nwindow_start = 2\nwindow_end = 4\n",
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = fs::read_to_string(out.join("map.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,phi,velocity"));
    assert_eq!(lines.count(), 48 * 64);
    assert_eq!(
        manifest_value(&out, "result.points").as_deref(),
        Some("3072")
    );
}

#[test]
fn edge_leak_fails_and_names_the_step() {
    let tmp = tempfile::tempdir().unwrap();
    // origin 20: the light-cone front enters the two-site guard band at step 18
    let (output, out) = run_config(
        tmp.path(),
        "leak",
        "experiment = bloch\nm = 1000\nn_sites = 40\nsteps = 100\n",
    );
    assert!(!output.status.success());
    assert_eq!(manifest_value(&out, "status").as_deref(), Some("failed"));
    let error = manifest_value(&out, "error.0").unwrap();
    assert!(error.contains("before step 18"), "{error}");
}

#[test]
fn rerun_overwrites_with_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = density\nm = 30\nn_sites = 200\nsteps = 90\nstride = 4\n";
    let (first, out) = run_config(tmp.path(), "density", text);
    assert!(first.status.success());
    let snapshot = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "manifest")
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let before = snapshot(&out);
    assert_eq!(before.len(), 4);
    let (second, _) = run_config(tmp.path(), "density", text);
    assert!(second.status.success());
    assert_eq!(snapshot(&out), before);
}

#[test]
fn validate_and_list() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.conf");
    fs::write(&good, "experiment = sbo\nm = 100\n").unwrap();
    let out = ewalk(&["validate", good.to_str().unwrap()]);
    assert!(out.status.success());
    let shown = String::from_utf8(out.stdout).unwrap();
    assert!(
        shown.contains("detuning = 1.0000000000000000e-2"),
        "{shown}"
    );

    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "experiment = blch\nm = 100\n").unwrap();
    let out = ewalk(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blch"));

    let out = ewalk(&["list-experiments"]);
    let listing = String::from_utf8(out.stdout).unwrap();
    for name in [
        "bloch",
        "sbo",
        "resonant_drift",
        "velocity_curve",
        "velocity_map",
        "crossover_scan",
        "density",
    ] {
        assert!(listing.contains(name), "{name} missing from listing");
    }
}
