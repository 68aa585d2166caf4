//! End-to-end tests of the `doppler-cloak` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use doppler_cloak::report::{MetricValue, RunReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_doppler-cloak"))
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const CLEAN: &str = "duration_s = 1.0\nseed = 3\n[walker]\nspeed = 0.8\n";
const SMEAR: &str = "duration_s = 1.0\nseed = 3\n[walker]\nspeed = 0.8\n[obfuscation]\nkind = \"smear\"\ndelta_f_hz = 200.0\nf_m_hz = 10.0\n";

fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_ok(scn: &Path, out: &Path, extra: &[&str]) -> RunReport {
    let mut args = vec!["run", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = exec(&args);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    RunReport::read(&out.join("report.txt")).unwrap()
}

fn metric(r: &RunReport, key: &str) -> f64 {
    match r.metrics.get(key) {
        Some(MetricValue::Value(v)) => *v,
        other => panic!("{key}: {other:?}"),
    }
}

#[test]
fn clean_run_has_zero_ber_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scn = scenario(dir.path(), "clean.toml", CLEAN);
    let out = dir.path().join("out");
    let r = run_ok(&scn, &out, &[]);
    assert_eq!(metric(&r, "ber"), 0.0);
    assert!(matches!(r.metrics.get("correlation_method1"), Some(MetricValue::Skipped(_))));
    for file in ["method1_spectrogram.csv", "method2_spectrogram.csv", "method1_spectrogram.pgm", "cfr.csv", "tracks.csv"] {
        assert!(std::fs::metadata(out.join(file)).unwrap().len() > 0, "{file}");
    }
    assert!(!out.join("method1_spectrogram.bin").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scn = scenario(dir.path(), "s.toml", &format!("snr_db = 15.0\n{SMEAR}"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&scn, &a, &["--format", "csv", "--format", "bin", "--dump-iq"]);
    run_ok(&scn, &b, &["--format", "csv", "--format", "bin", "--dump-iq", "--threads", "2"]);
    for file in ["method1_spectrogram.csv", "method2_spectrogram.csv", "cfr.csv", "tracks.csv", "cfr.bin", "rx.cf32"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn smearing_decorrelates_without_hurting_the_link() {
    let dir = tempfile::tempdir().unwrap();
    let clean = run_ok(&scenario(dir.path(), "c.toml", CLEAN), &dir.path().join("c"), &[]);
    let smear = run_ok(&scenario(dir.path(), "s.toml", SMEAR), &dir.path().join("s"), &[]);
    assert!(metric(&smear, "correlation_method1") < 0.2);
    assert_eq!(metric(&smear, "ber"), metric(&clean, "ber"));
    assert_eq!(metric(&smear, "ber_delta"), 0.0);

    // An external baseline gives the same correlation as the internal one.
    let baseline = dir.path().join("c").join("report.txt");
    let with = run_ok(
        &scenario(dir.path(), "s2.toml", SMEAR),
        &dir.path().join("s2"),
        &["--baseline", baseline.to_str().unwrap()],
    );
    let (x, y) = (metric(&with, "correlation_method1"), metric(&smear, "correlation_method1"));
    assert!((x - y).abs() < 1e-6, "{x} vs {y}");

    let a = baseline.to_str().unwrap().to_string();
    let b = dir.path().join("s").join("report.txt").to_str().unwrap().to_string();
    let o = exec(&["compare", &a, &b, "--max-delta", "ber=1e-3"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("correlation_method1"));
    assert!(table.lines().any(|l| l.starts_with("ber ") && l.trim_end().ends_with("0.000000e0")));

    let o = exec(&["compare", &a, &b, "--max-value", "correlation_method1=0.01"]);
    assert_eq!(code(&o), 5);
    let o = exec(&["compare", &a, &b, "--max-delta", "no_such_metric=1"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn compare_identical_and_mismatched_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    run_ok(&scenario(dir.path(), "c.toml", CLEAN), &out, &["--format", "csv"]);
    let a = out.join("report.txt");
    let o = exec(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    for line in table.lines().skip(1).filter(|l| !l.contains("skipped")) {
        assert!(line.trim_end().ends_with("0.000000e0"), "{line}");
    }

    let text = std::fs::read_to_string(&a).unwrap().replace("scenario.n_subcarriers = 64", "scenario.n_subcarriers = 128");
    let b = dir.path().join("other.txt");
    std::fs::write(&b, text).unwrap();
    let o = exec(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("warning:") && table.contains("n_subcarriers"));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&exec(&[])), 2);
    assert_eq!(code(&exec(&["run", "--out", "x"])), 2);
    assert_eq!(code(&exec(&["run", "--scenario", "s.toml", "--out", "x", "--format", "svg"])), 2);
    assert_eq!(code(&exec(&["--help"])), 0);

    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    let bad_key = scenario(dir.path(), "k.toml", "walker_speed = 1.0\n");
    assert_eq!(code(&exec(&["run", "--scenario", bad_key.to_str().unwrap(), "--out", o])), 3);
    let bad_value = scenario(dir.path(), "v.toml", "[walker]\nspeed = -1.0\n");
    assert_eq!(code(&exec(&["run", "--scenario", bad_value.to_str().unwrap(), "--out", o])), 3);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&exec(&["run", "--scenario", missing.to_str().unwrap(), "--out", o])), 4);

    // The output path is an existing regular file.
    let blocker = scenario(dir.path(), "blocker", "");
    let good = scenario(dir.path(), "g.toml", CLEAN);
    let out = exec(&["run", "--scenario", good.to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn sweep_writes_one_report_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let scn = scenario(dir.path(), "s.toml", "duration_s = 1.0\n[comms]\nframes = 1\n");
    let out = dir.path().join("sweep");
    let o = exec(&[
        "sweep",
        "--scenario",
        scn.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--delta-f",
        "100,200",
        "--v-sp",
        "16",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let index = std::fs::read_to_string(out.join("sweep.txt")).unwrap();
    for point in ["smear_df100_fm10", "smear_df200_fm10", "spoof_vsp16"] {
        assert!(index.contains(point));
        let r = RunReport::read(&out.join(point).join("report.txt")).unwrap();
        assert!(r.metrics.contains_key("correlation_method1"));
    }
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3);
    assert_eq!(code(&exec(&["sweep", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap()])), 3);
}
