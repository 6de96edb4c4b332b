use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn spokesense(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spokesense"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SPOKESENSE_SEED")
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) {
    let o = spokesense(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn fails(out: &Path, args: &[&str]) -> String {
    let o = spokesense(out, args);
    assert!(!o.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulated records for every builtin plus a feature file of the known ones.
fn workspace(duration: &str, extras: bool) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--profile", "all", "--duration", duration]);
    let mut args = vec!["extract".to_string()];
    if extras {
        args.push("--extras".into());
    }
    for n in ["flat", "fine_sand", "small_stone", "small_pebble", "large_stone"] {
        args.push(dir.path().join(format!("{n}.csv")).to_string_lossy().into_owned());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(dir.path(), &args);
    let features = dir.path().join("features.csv");
    (dir, features)
}

#[test]
fn simulate_writes_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--profile", "flat"]);
    let text = fs::read_to_string(dir.path().join("flat.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# sample_rate_hz=1.4400000000000000e3"));
    assert_eq!(lines.next(), Some("# label=flat"));
    assert_eq!(lines.next(), Some("t,ch1,ch2,ch3"));
    assert_eq!(lines.count(), 14_400);
}

#[test]
fn single_builtin_matches_its_slot_in_all() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["simulate", "--profile", "small_stone", "--duration", "2"]);
    ok(b.path(), &["simulate", "--profile", "all", "--duration", "2"]);
    assert_eq!(
        fs::read(a.path().join("small_stone.csv")).unwrap(),
        fs::read(b.path().join("small_stone.csv")).unwrap()
    );
}

#[test]
fn seed_comes_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_spokesense"));
        cmd.arg("--out").arg(&out).env_remove("SPOKESENSE_SEED");
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("SPOKESENSE_SEED", e);
        }
        assert!(cmd.args(["simulate", "--profile", "fine_sand", "--duration", "1"]).status().unwrap().success());
        fs::read(out.join("fine_sand.csv")).unwrap()
    };
    let default = run("a", None, None);
    assert_eq!(default, run("b", Some("42"), None));
    assert_eq!(run("c", Some("7"), None), run("d", None, Some("7")));
    assert_ne!(default, run("e", Some("7"), None));
}

#[test]
fn extract_window_count_and_columns() {
    let (dir, features) = workspace("10", false);
    let text = fs::read_to_string(&features).unwrap();
    let header: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(header.len(), 18 + 1);
    assert_eq!(*header.last().unwrap(), "label");
    // 10 s at 1.5 s windows with half overlap: 12 windows per record.
    assert_eq!(text.lines().skip(2).filter(|l| l.ends_with(",flat")).count(), 12);
    assert_eq!(text.lines().count(), 2 + 5 * 12);

    ok(dir.path(), &["extract", "--extras", s(&dir.path().join("flat.csv"))]);
    let text = fs::read_to_string(&features).unwrap();
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 22 + 1);
}

#[test]
fn extract_labels_unlabeled_records_by_file_stem() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--profile", "flat", "--duration", "3"]);
    let text = fs::read_to_string(dir.path().join("flat.csv")).unwrap();
    let stripped: String = text.lines().filter(|l| !l.starts_with("# label=")).map(|l| format!("{l}\n")).collect();
    let renamed = dir.path().join("gravel_path.csv");
    fs::write(&renamed, stripped).unwrap();
    ok(dir.path(), &["extract", s(&renamed)]);
    let out = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert!(out.lines().skip(2).all(|l| l.ends_with(",gravel_path")));
}

#[test]
fn every_command_is_deterministic() {
    let run = || {
        let (dir, features) = workspace("6", false);
        let p = |n: &str| dir.path().join(n);
        let f = s(&features);
        ok(dir.path(), &["train", f, "--kernel", "linear"]);
        ok(dir.path(), &["evaluate", f, "--trials", "4"]);
        ok(dir.path(), &["classify", "--model", s(&p("model.json")), s(&p("mixture.csv"))]);
        ok(dir.path(), &["identify", "--library", f, "--unknown", s(&p("mixture.csv"))]);
        ok(dir.path(), &["spectrum", "--channel", "3", s(&p("fine_sand.csv"))]);
        ok(dir.path(), &["eigen", s(&p("small_stone.csv"))]);
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let path = e.unwrap().path();
                (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = run();
    assert_eq!(a.len(), 13);
    assert_eq!(a, run());
}

#[test]
fn classify_accepts_feature_files_and_rejects_other_layouts() {
    let (dir, features) = workspace("4", false);
    ok(dir.path(), &["train", s(&features)]);
    let model = dir.path().join("model.json");
    ok(dir.path(), &["classify", "--model", s(&model), s(&features)]);
    let preds = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("window_index,start_sample,predicted,label"));

    let other = tempfile::tempdir().unwrap();
    ok(other.path(), &["extract", "--extras", s(&dir.path().join("flat.csv"))]);
    let err = fails(dir.path(), &["classify", "--model", s(&model), s(&other.path().join("features.csv"))]);
    assert!(err.starts_with("error:") && err.contains("layout mismatch"), "{err}");

    let err = fails(dir.path(), &["identify", "--library", s(&features), "--unknown", s(&other.path().join("features.csv"))]);
    assert!(err.contains("layout mismatch"), "{err}");
}

#[test]
fn identify_copy_of_known_class_wins_both_metrics() {
    let (dir, features) = workspace("6", false);
    ok(dir.path(), &["identify", "--library", s(&features), "--unknown", s(&dir.path().join("fine_sand.csv"))]);
    let report = fs::read_to_string(dir.path().join("distances.csv")).unwrap();
    assert!(report.contains("# nearest_euclidean=fine_sand\n"), "{report}");
    assert!(report.contains("# nearest_mahalanobis=fine_sand\n"), "{report}");
    assert!(report.contains("# metric_divergence=false\n"));
}

#[test]
fn evaluate_reports_accuracy() {
    let (dir, features) = workspace("10", false);
    let o = spokesense(dir.path(), &["evaluate", s(&features), "--trials", "3"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("mean accuracy over 3 trials"));
    let confusion = fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    assert_eq!(confusion.lines().next(), Some("class,flat,fine_sand,small_stone,small_pebble,large_stone"));
    assert!(confusion.lines().last().unwrap().starts_with("# accuracy="));
}

#[test]
fn unknown_profile_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(dir.path(), &["simulate", "--profile", "gravel"]);
    assert!(err.starts_with("error:"));
    for name in ["flat", "fine_sand", "small_stone", "small_pebble", "large_stone", "mixture"] {
        assert!(err.contains(name), "{err}");
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn profile_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("custom.json");
    fs::write(
        &profile,
        r#"{"version":1,"name":"custom","band_rms":[0.1,0.1,0.1],"tonal_components":[],"impulse_rate_hz":0.0,"impulse_amplitude":0.0,"noise_floor_rms":0.01,"channel_band_gains":[[1,0,0],[0,1,0],[0,0,1]]}"#,
    )
    .unwrap();
    ok(dir.path(), &["simulate", "--profile-file", s(&profile), "--duration", "1"]);
    assert!(dir.path().join("custom.csv").is_file());
}

#[test]
fn empty_and_missing_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let err = fails(dir.path(), &["extract", s(&empty)]);
    assert!(err.starts_with("error:") && err.contains("empty"), "{err}");

    let missing = dir.path().join("nope.csv");
    let err = fails(dir.path(), &["identify", "--library", s(&missing), "--unknown", s(&empty)]);
    assert!(err.contains("does not exist"), "{err}");
    assert!(!dir.path().join("features.csv").exists());
}

#[test]
fn class_with_one_window_is_named() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--profile", "flat", "--duration", "3"]);
    ok(dir.path(), &["simulate", "--profile", "fine_sand", "--duration", "1.5"]);
    ok(dir.path(), &["extract", s(&dir.path().join("flat.csv")), s(&dir.path().join("fine_sand.csv"))]);
    let err = fails(dir.path(), &["evaluate", s(&dir.path().join("features.csv")), "--trials", "2"]);
    assert!(err.contains("fine_sand") && err.contains("1 window"), "{err}");
    assert!(!dir.path().join("confusion.csv").exists());
}

#[test]
fn out_of_range_arguments_are_rejected_at_parse_time() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--channel", "4", "x.csv"],
        vec!["spectrum", "--channel", "0", "x.csv"],
        vec!["extract", "--overlap", "1", "x.csv"],
        vec!["extract", "--window-seconds", "-1", "x.csv"],
        vec!["extract", "--bands", "1:50,100:400", "x.csv"],
        vec!["evaluate", "--test-fraction", "0", "x.csv"],
        vec!["train", "--c", "nan", "x.csv"],
        vec!["simulate", "--profile", "flat", "--duration", "0"],
    ] {
        let o = spokesense(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn invalid_runs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    // 300 Hz puts the default bands above Nyquist, so every profile is rejected.
    let err = fails(dir.path(), &["simulate", "--profile", "all", "--duration", "1", "--rate", "300"]);
    assert!(err.starts_with("error:"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn help_documents_flags_and_defaults() {
    let o = Command::new(env!("CARGO_BIN_EXE_spokesense")).args(["extract", "--help"]).output().unwrap();
    let help = String::from_utf8_lossy(&o.stdout);
    for needle in ["--window-seconds", "[default: 1.5]", "--overlap", "[default: 0.5]", "--entropy-bins", "--extras", "--out", "--seed", "SPOKESENSE_SEED"] {
        assert!(help.contains(needle), "missing {needle}");
    }
}
