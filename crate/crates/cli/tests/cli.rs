//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_CONFIG: &str = "\
nodes = 3
rounds = 4
seed = 5
synthetic.samples = 300
synthetic.features = 6
train.learning_rate = 0.5
train.epochs = 1
train.batch_size = 32
dp.noise_scale = 0.0
dp.clip_norm = 5.0
";

fn fedchain(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedchain"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should run")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn simulate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.cfg"), SMALL_CONFIG).unwrap();
    let out = fedchain(&["simulate", "--config", "sim.cfg", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));

    let run = dir.path().join("run");
    let metrics = fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 5, "header plus one row per round");
    assert!(metrics.starts_with("round,accuracy,precision"));

    let summary = fs::read_to_string(run.join("summary.txt")).unwrap();
    assert!(summary.contains("final model"));
    assert!(stdout(&out).contains("final model"));

    let export = fs::read_to_string(run.join("ledger.export")).unwrap();
    assert_eq!(export.lines().count(), 5, "genesis plus four blocks");

    for chart in ["accuracy.svg", "bytes.svg"] {
        let svg = fs::read_to_string(run.join(chart)).unwrap();
        assert!(svg.starts_with("<svg"), "{chart} should be an SVG document");
    }

    let archive_entries = fs::read_dir(run.join("archive")).unwrap().count();
    assert_eq!(archive_entries, 12, "three nodes times four rounds");
}

#[test]
fn identical_invocations_write_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.cfg"), SMALL_CONFIG).unwrap();
    for run in ["a", "b"] {
        let out = fedchain(&["simulate", "--config", "sim.cfg", "--out", run], dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["metrics.csv", "ledger.export", "summary.txt", "accuracy.svg"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} should be byte-identical across reruns");
    }
}

#[test]
fn seed_flag_overrides_the_configured_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.cfg"), SMALL_CONFIG).unwrap();
    let base = fedchain(&["simulate", "--config", "sim.cfg", "--out", "base"], dir.path());
    let reseeded = fedchain(
        &["simulate", "--config", "sim.cfg", "--seed", "99", "--out", "reseeded"],
        dir.path(),
    );
    assert!(base.status.success() && reseeded.status.success());
    let a = fs::read(dir.path().join("base/metrics.csv")).unwrap();
    let b = fs::read(dir.path().join("reseeded/metrics.csv")).unwrap();
    assert_ne!(a, b, "a different seed should change the run");
}

#[test]
fn verify_chain_accepts_fresh_exports_and_catches_tampering() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.cfg"), SMALL_CONFIG).unwrap();
    let out = fedchain(&["simulate", "--config", "sim.cfg", "--out", "run"], dir.path());
    assert!(out.status.success());

    let ok = fedchain(
        &["verify-chain", "run/ledger.export", "--archive", "run/archive"],
        dir.path(),
    );
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("chain valid"));

    // Flip one hex character of the aggregate digest on the height-2 line.
    let export_path = dir.path().join("run/ledger.export");
    let text = fs::read_to_string(&export_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[2].split(' ').map(String::from).collect();
    let digest = fields[3].clone();
    let flipped = if digest.starts_with('0') { '1' } else { '0' };
    fields[3] = format!("{flipped}{}", &digest[1..]);
    lines[2] = fields.join(" ");
    fs::write(dir.path().join("tampered.export"), lines.join("\n")).unwrap();

    let bad = fedchain(&["verify-chain", "tampered.export"], dir.path());
    assert!(!bad.status.success(), "tampered export must fail verification");
    assert!(stderr(&bad).contains("height 2"), "{}", stderr(&bad));
}

#[test]
fn verify_chain_with_archive_catches_record_digest_swaps() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.cfg"), SMALL_CONFIG).unwrap();
    let out = fedchain(&["simulate", "--config", "sim.cfg", "--out", "run"], dir.path());
    assert!(out.status.success());

    // Corrupt one archived update; the export alone stays consistent, so
    // only the archive cross-check can notice.
    let archive = dir.path().join("run/archive");
    let victim = fs::read_dir(&archive).unwrap().next().unwrap().unwrap().path();
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xFF;
    fs::write(&victim, bytes).unwrap();

    let no_archive = fedchain(&["verify-chain", "run/ledger.export"], dir.path());
    assert!(no_archive.status.success(), "the export alone is untouched");

    let with_archive = fedchain(
        &["verify-chain", "run/ledger.export", "--archive", "run/archive"],
        dir.path(),
    );
    assert!(!with_archive.status.success());
    assert!(stderr(&with_archive).contains("fails verification"), "{}", stderr(&with_archive));
}

#[test]
fn generated_data_feeds_a_csv_simulation() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("gen.cfg"),
        "seed = 9\nsynthetic.samples = 200\nsynthetic.features = 5\ndata.label_column = verdict\n",
    )
    .unwrap();
    let gen = fedchain(&["gen-data", "--config", "gen.cfg", "--out", "flows.csv"], dir.path());
    assert!(gen.status.success(), "{}", stderr(&gen));

    let csv = fs::read_to_string(dir.path().join("flows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201, "header plus one line per row");
    assert_eq!(csv.lines().next().unwrap(), "f0,f1,f2,f3,f4,verdict");
    assert!(csv.contains(",attack") && csv.contains(",benign"));

    fs::write(
        dir.path().join("sim.cfg"),
        "nodes = 3\nrounds = 3\nseed = 5\ndata.source = csv\ndata.csv_path = flows.csv\n\
         data.label_column = verdict\ntrain.learning_rate = 0.5\ntrain.epochs = 1\n\
         train.batch_size = 32\ndp.noise_scale = 0.0\ndp.clip_norm = 5.0\n",
    )
    .unwrap();
    let sim = fedchain(&["simulate", "--config", "sim.cfg", "--out", "run"], dir.path());
    assert!(sim.status.success(), "{}", stderr(&sim));
    assert!(stdout(&sim).contains("final model"));
}

#[test]
fn configuration_mistakes_fail_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "nodes = 3\nno.such.key = 1\n").unwrap();
    let out = fedchain(&["simulate", "--config", "bad.cfg"], dir.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("line 2") && err.contains("no.such.key"), "{err}");

    let missing = fedchain(&["simulate", "--config", "nope.cfg"], dir.path());
    assert!(!missing.status.success());
}
