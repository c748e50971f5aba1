use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use privcsb::harness::output::{read_csv, CSV_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_privcsb"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn exec(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const SMALL_RUN: &str = r#"
algorithm = "ldp1"
epsilon = 2.0
horizon = 600
seed = 4

[instance]
kind = "kpath"
m = 6
k = 2
delta = 0.2
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_csv_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SMALL_RUN);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = exec(
            bin()
                .args(["run", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(out),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(text.as_bytes()).unwrap();
    // Powers of two up to 512, then 600.
    assert_eq!(rows.len(), 11);
    assert_eq!(rows.last().unwrap().t, 600);
}

#[test]
fn seed_and_noiseless_flags_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SMALL_RUN);
    let plain = exec(bin().args(["run", "--config"]).arg(&cfg));
    let seeded = exec(bin().args(["run", "--seed", "99", "--config"]).arg(&cfg));
    let quiet = exec(bin().args(["run", "--noiseless", "--config"]).arg(&cfg));
    assert!(plain.status.success() && seeded.status.success() && quiet.status.success());
    assert_ne!(plain.stdout, seeded.stdout);
    assert_ne!(plain.stdout, quiet.stdout);
}

#[test]
fn run_json_summary_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SMALL_RUN);
    let o = exec(
        bin()
            .args(["run", "--format", "json", "--config"])
            .arg(&cfg),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(
        dir.path(),
        "typo.toml",
        &SMALL_RUN.replace("epsilon", "epsilom"),
    );
    let o = exec(bin().args(["run", "--config"]).arg(&typo));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilom"));

    let bad_eps = write(dir.path(), "eps.toml", &SMALL_RUN.replace("2.0", "-1.0"));
    assert_eq!(
        exec(bin().args(["run", "--config"]).arg(&bad_eps))
            .status
            .code(),
        Some(2)
    );

    let missing = exec(bin().args(["run", "--config", "/nonexistent/run.toml"]));
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/run.toml"));

    assert_eq!(exec(bin().arg("frobnicate")).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SMALL_RUN);
    let o = exec(
        bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--out", "/nonexistent/dir/x.csv"]),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/dir/x.csv"));
}

#[test]
fn sweep_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#"
[base]
algorithm = "ldp2"
epsilon = 1.0
horizon = 512

[base.instance]
kind = "kpath"
m = 8
k = 2
delta = 0.2

[grid]
algorithm = ["cucb", "ldp2"]
epsilon = [0.5, 1.0]
replicates = 3
master_seed = 1
"#;
    let cfg = write(dir.path(), "sweep.toml", sweep);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = exec(
            bin()
                .args(["sweep", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(out),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(out_a.join("results.csv")).unwrap();
    assert_eq!(csv_a, fs::read(out_b.join("results.csv")).unwrap());
    assert_eq!(
        fs::read(out_a.join("summary.json")).unwrap(),
        fs::read(out_b.join("summary.json")).unwrap()
    );
    // 3 cucb + 2 x 3 ldp2 runs, 10 checkpoints each.
    assert_eq!(read_csv(&csv_a[..]).unwrap().len(), 9 * 10);

    let analyzed = dir.path().join("analysis.json");
    let o = exec(bin().arg("analyze").arg(&out_a).arg("--out").arg(&analyzed));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(&analyzed).unwrap(),
        fs::read(out_a.join("summary.json")).unwrap()
    );
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&analyzed).unwrap()).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 3);
}

#[test]
fn shipped_configs_parse_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let o = if name.starts_with("sweep") {
            // Validate only; the full grids are slow in unoptimized builds.
            let text = fs::read_to_string(&path).unwrap();
            privcsb::harness::SweepConfig::from_toml_str(&text).unwrap();
            continue;
        } else {
            exec(
                bin()
                    .args(["run", "--config"])
                    .arg(&path)
                    .arg("--out")
                    .arg(dir.path().join(&name)),
            )
        };
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        seen += 1;
    }
    assert!(seen >= 3);
}
