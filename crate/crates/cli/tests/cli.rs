//! End-to-end checks of the binary: artifact layout, exit codes, schema
//! errors, and bit-identical reruns under a fixed seed.

use std::fs;
use std::path::Path;
use std::process::Command;

fn conorbit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conorbit"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn minimize_scenario_produces_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "name = mini\npreset = torus_point_to_circle\ntask = minimize\nk = 0.75\n\
         winding.list = 0 0\nsolver.segments = 32\nsolver.multistart = 2\n\
         solver.max_iters = 20000\nseed = 3\n",
    );
    let out = tmp.path().join("out");
    let status = conorbit()
        .arg("--out-dir")
        .arg(&out)
        .arg("run")
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let dir = out.join("mini");
    for f in ["minimize_summary.csv", "path_w0.csv", "verdict.csv"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let verdict = fs::read_to_string(dir.join("verdict.csv")).unwrap();
    assert!(verdict.contains("PASS"));
}

#[test]
fn identical_seeds_give_bit_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "name = det\npreset = torus_point_to_circle\ntask = minimize\nk = 0.75\n\
         winding.list = 0 0 0 1\nsolver.segments = 32\nsolver.multistart = 4\n\
         solver.max_iters = 20000\nseed = 11\n",
    );
    let mut bytes = Vec::new();
    for out_name in ["out_a", "out_b"] {
        let out = tmp.path().join(out_name);
        let status = conorbit()
            .arg("--out-dir")
            .arg(&out)
            .arg("run")
            .arg(&cfg)
            .status()
            .unwrap();
        assert!(status.success());
        let dir = out.join("det");
        let mut names: Vec<_> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        let mut blob = Vec::new();
        for n in names {
            blob.extend_from_slice(n.to_string_lossy().as_bytes());
            blob.extend_from_slice(&fs::read(dir.join(&n)).unwrap());
        }
        bytes.push(blob);
    }
    assert_eq!(bytes[0], bytes[1], "outputs differ between identical runs");
}

#[test]
fn schema_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.conf",
        "preset = torus_point_to_circle\ntask = minimize\nk = 0.5\nwhoops.key = 1\n",
    );
    let output = conorbit()
        .arg("--out-dir")
        .arg(tmp.path().join("out"))
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("whoops.key"), "stderr: {err}");
}

#[test]
fn missing_task_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.conf",
        "preset = torus_point_to_circle\ntask = minimize\n",
    );
    let output = conorbit().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn subcritical_minimize_exits_with_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "name = sub\npreset = torus_point_to_circle\ntask = minimize\nk = 0.3\n\
         winding.list = 0 0\nsolver.segments = 32\nsolver.multistart = 2\n\
         solver.max_iters = 1500\nseed = 3\n",
    );
    let output = conorbit()
        .arg("--out-dir")
        .arg(tmp.path().join("out"))
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "expected assertion failure");
}

#[test]
fn no_connection_scenario_reports_disjoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "name = nc\npreset = torus_point_to_circle\ntask = no_connection\nk = 0.08\n\
         no_connection.p0 = 0.5 0.0\nno_connection.p1 = 0.5 0.5\n",
    );
    let out = tmp.path().join("out");
    let status = conorbit()
        .arg("--out-dir")
        .arg(&out)
        .arg("run")
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let table = fs::read_to_string(out.join("nc").join("no_connection.csv")).unwrap();
    assert!(table.contains("DISJOINT"));
}

#[test]
fn reproduce_single_target_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let status = conorbit()
        .arg("--out-dir")
        .arg(&out)
        .arg("reproduce")
        .arg("torus_loop_action")
        .status()
        .unwrap();
    assert!(status.success());
    let table = fs::read_to_string(
        out.join("reproduce_torus_loop_action").join("reproduce.csv"),
    )
    .unwrap();
    assert!(table.lines().count() >= 3);
    assert!(table.contains("published"));
}

#[test]
fn list_models_names_catalog() {
    let output = conorbit().arg("list-models").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    for id in [
        "torus_magnetic",
        "torus_mechanical",
        "half_plane_horocycle",
        "plane_patch_custom",
    ] {
        assert!(text.contains(id));
    }
}

#[test]
fn shipped_scenario_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            let text = fs::read_to_string(&path).unwrap();
            let raw = conorbit::config::RawConfig::parse(&text).unwrap();
            conorbit::scenario::scenario_from_config(&raw, None)
                .unwrap_or_else(|e| panic!("{} invalid: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 8, "expected the shipped scenario set, found {count}");
}
