use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use genrekit::dataio::container::{bytes_tensor, tensor_bytes};
use genrekit::dataio::{read_container, write_container, DatasetManifest, Split};

const SMALL_ARCH: &str = r#"
[arch]
conv_channels = [8, 8]
kernel_width = 3
lstm_hidden = 8
dense_hidden = 16
dropout = 0.1

[train]
batch_size = 8
max_epochs = 25
patience = 25
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genrekit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}\nstdout: {}\nstderr: {}", stdout(&o), stderr(&o));
    stdout(&o)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Eight genres of four 95 s songs, segmented and split 9/3 per genre, with
/// mel spectrograms extracted and a small CRNN trained and evaluated.
struct Pipeline {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    prep_stdout: String,
    train_stdout: String,
}

fn pipeline() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let audio = root.join("audio");
        let runs = root.join("runs");
        ok(&["synth", "--out", s(&audio), "--songs", "4", "--seconds", "95", "--seed", "3"]);
        let prep_stdout = ok(&[
            "prep", "--in", s(&audio), "--out", s(&runs), "--run-id", "r1", "--seed", "1",
            "--train-per-genre", "9", "--test-per-genre", "3",
        ]);
        let manifest = runs.join("r1/r1_manifest.csv");
        ok(&["extract", "--manifest", s(&manifest), "--out", s(&runs), "--run-id", "r1", "--mode", "melspec"]);
        let cfg = root.join("small.toml");
        std::fs::write(&cfg, SMALL_ARCH).unwrap();
        let train_stdout = ok(&[
            "train", "--data", s(&runs.join("r1")), "--arch", "crnn", "--config", s(&cfg), "--out", s(&runs),
            "--run-id", "r1", "--seed", "2",
        ]);
        ok(&[
            "eval", "--checkpoint", s(&runs.join("r1/r1_checkpoint.mgt")), "--data", s(&runs.join("r1")), "--out",
            s(&runs), "--run-id", "r1",
        ]);
        Pipeline { _tmp: tmp, root, prep_stdout, train_stdout }
    })
}

/// Two genres-worth of short songs with 51-value features extracted.
struct FeatureData {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

fn feature_data() -> &'static FeatureData {
    static F: OnceLock<FeatureData> = OnceLock::new();
    F.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let audio = root.join("audio");
        let runs = root.join("runs");
        ok(&["synth", "--out", s(&audio), "--songs", "3", "--seconds", "61", "--seed", "5"]);
        ok(&["prep", "--in", s(&audio), "--out", s(&runs), "--run-id", "f", "--train-per-genre", "4", "--test-per-genre", "2"]);
        ok(&[
            "extract", "--manifest", s(&runs.join("f/f_manifest.csv")), "--out", s(&runs), "--run-id", "f",
            "--mode", "features51",
        ]);
        FeatureData { _tmp: tmp, root }
    })
}

#[test]
fn prep_segments_splits_and_prints_counts() {
    let p = pipeline();
    let manifest = DatasetManifest::read_csv(p.root.join("runs/r1/r1_manifest.csv")).unwrap();
    // 8 genres x 4 songs x floor(95 / 30) clips
    assert_eq!(manifest.entries.len(), 96);
    for c in manifest.counts() {
        assert_eq!((c.train, c.test), (9, 3), "{}", c.genre);
    }
    assert!(p.prep_stdout.starts_with("Genre"));
    assert!(p.prep_stdout.contains("Total               72     24     96"), "{}", p.prep_stdout);
    assert!(p.root.join("runs/r1/r1_prep_config.toml").is_file());
}

#[test]
fn prep_is_deterministic() {
    let p = pipeline();
    let runs = p.root.join("runs");
    ok(&[
        "prep", "--in", s(&p.root.join("audio")), "--out", s(&runs), "--run-id", "r1again", "--seed", "1",
        "--train-per-genre", "9", "--test-per-genre", "3",
    ]);
    let a = std::fs::read(runs.join("r1/r1_manifest.csv")).unwrap();
    let b = std::fs::read(runs.join("r1again/r1again_manifest.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn melspec_extraction_has_full_dimensions_and_is_reproducible() {
    let p = pipeline();
    let runs = p.root.join("runs");
    for (split, n) in [("train", 72), ("test", 24)] {
        let t = read_container(runs.join(format!("r1/{split}.mgt"))).unwrap();
        let x = &t.iter().find(|(name, _)| name == "x").unwrap().1;
        assert_eq!(x.shape(), &[n, 640, 128]);
    }
    ok(&[
        "extract", "--manifest", s(&runs.join("r1/r1_manifest.csv")), "--out", s(&runs), "--run-id", "again",
        "--mode", "melspec",
    ]);
    for split in ["train", "test"] {
        let a = std::fs::read(runs.join(format!("r1/{split}.mgt"))).unwrap();
        let b = std::fs::read(runs.join(format!("again/{split}.mgt"))).unwrap();
        assert!(a == b, "{split} container differs between runs");
    }
}

#[test]
fn train_writes_checkpoint_curves_and_resolved_config() {
    let p = pipeline();
    let dir = p.root.join("runs/r1");
    assert!(p.train_stdout.contains("val acc"), "{}", p.train_stdout);
    assert!(dir.join("r1_checkpoint.mgt").is_file());
    let curves = std::fs::read_to_string(dir.join("r1_curves.csv")).unwrap();
    assert!(curves.starts_with("epoch,train_loss,train_acc,val_loss,val_acc\n"));
    let resolved = std::fs::read_to_string(dir.join("r1_train_config.toml")).unwrap();
    // flags over file over defaults
    assert!(resolved.contains("seed = 2"), "{resolved}");
    assert!(resolved.contains("lstm_hidden = 8"));
    assert!(resolved.contains("kind = \"crnn\""));
    assert!(resolved.contains("input_frames = 640"));
    assert!(resolved.contains("n_fft = 2048"));
}

#[test]
fn eval_writes_all_artifacts() {
    let p = pipeline();
    let dir = p.root.join("runs/r1");
    for name in [
        "r1_report.txt", "r1_report.csv", "r1_confusion.csv", "r1_confusion.svg", "r1_roc.csv", "r1_roc.svg",
        "r1_training_curves.svg", "r1_eval_config.toml",
    ] {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    let report = std::fs::read_to_string(dir.join("r1_report.txt")).unwrap();
    assert!(report.contains("Overall Accuracy"));
    assert!(report.contains("ROC AUC (one-vs-rest)"));
}

#[test]
fn predict_recovers_the_label_of_a_training_clip() {
    let p = pipeline();
    let dir = p.root.join("runs/r1");
    let manifest = DatasetManifest::read_csv(dir.join("r1_manifest.csv")).unwrap();
    let e = manifest.entries_in(Split::Train).next().unwrap();
    let out = ok(&["predict", "--checkpoint", s(&dir.join("r1_checkpoint.mgt")), "--wav", s(&dir.join(&e.clip_path))]);
    assert!(out.starts_with("segments: 1\n"), "{out}");
    assert!(out.trim_end().ends_with(&format!("predicted: {}", e.genre)), "{out}");
    let probs: f64 = out
        .lines()
        .filter(|l| !l.starts_with("segments") && !l.starts_with("predicted"))
        .map(|l| l.split_whitespace().last().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((probs - 1.0).abs() < 1e-3);
}

#[test]
fn predict_averages_segments_of_a_long_file() {
    let p = pipeline();
    let song = p.root.join("audio/low_drone/song00.wav");
    let out = ok(&["predict", "--checkpoint", s(&p.root.join("runs/r1/r1_checkpoint.mgt")), "--wav", s(&song)]);
    assert!(out.starts_with("segments: 3\n"), "{out}");
}

#[test]
fn predict_rejects_short_audio() {
    let p = pipeline();
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", s(tmp.path()), "--classes", "1", "--songs", "1", "--seconds", "5"]);
    let o = run(&[
        "predict", "--checkpoint", s(&p.root.join("runs/r1/r1_checkpoint.mgt")), "--wav",
        s(&tmp.path().join("low_drone/song00.wav")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn report_references_every_artifact() {
    let p = pipeline();
    let dir = p.root.join("runs/r1");
    let out = ok(&["report", "--run-dir", s(&dir)]);
    for entry in std::fs::read_dir(&dir).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        if name != "clips" && name != "r1_summary.txt" {
            assert!(out.contains(&format!("  {name}\n")), "{name} not listed");
        }
    }
    assert!(out.contains("family: crnn"));
    assert_eq!(std::fs::read_to_string(dir.join("r1_summary.txt")).unwrap(), out);
}

#[test]
fn report_matches_golden_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("demo");
    std::fs::create_dir(&dir).unwrap();
    std::fs::write(
        dir.join("demo_curves.csv"),
        "epoch,train_loss,train_acc,val_loss,val_acc\n1,2.0,0.25,2.1,0.2\n2,1.0,0.5,1.25,0.45\n",
    )
    .unwrap();
    std::fs::write(dir.join("demo_report.txt"), "Genre  Prec.\n(report body)\n").unwrap();
    std::fs::write(dir.join("demo_roc.csv"), "class,threshold,fpr,tpr\n").unwrap();
    let out = ok(&["report", "--run-dir", s(&dir)]);
    assert_eq!(out, include_str!("golden/summary.txt"));
}

#[test]
fn report_on_missing_run_dir_is_an_io_error() {
    let o = run(&["report", "--run-dir", "/nonexistent/run"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn features51_extraction_writes_51_columns() {
    let f = feature_data();
    let csv = std::fs::read_to_string(f.root.join("runs/f/features_train.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + 51);
    assert_eq!(&header[..3], ["clip_path", "genre", "mfcc_0"]);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8 * 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 53));
    let t = read_container(f.root.join("runs/f/test.mgt")).unwrap();
    assert_eq!(t.iter().find(|(n, _)| n == "x").unwrap().1.shape(), &[16, 51]);
}

#[test]
fn deep_arch_on_feature_data_is_a_usage_error() {
    let f = feature_data();
    let o = run(&["train", "--data", s(&f.root.join("runs/f")), "--arch", "crnn", "--out", s(&f.root.join("runs"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("needs melspec data"), "{}", stderr(&o));
}

#[test]
fn knn_checkpoint_keeps_statistics_and_training_rows() {
    let f = feature_data();
    let runs = f.root.join("runs");
    ok(&["train", "--data", s(&runs.join("f")), "--arch", "knn", "--k", "3", "--out", s(&runs), "--run-id", "knn"]);
    let t = read_container(runs.join("knn/knn_checkpoint.mgt")).unwrap();
    let names: Vec<&str> = t.iter().map(|(n, _)| n.as_str()).collect();
    for want in ["feature_mean", "feature_std", "train_x", "train_y"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    let x = &t.iter().find(|(n, _)| n == "train_x").unwrap().1;
    assert_eq!(x.shape()[1], 51);
}

#[test]
fn perfect_classifier_gives_diagonal_confusion() {
    let f = feature_data();
    let runs = f.root.join("runs");
    ok(&["train", "--data", s(&runs.join("f")), "--arch", "logreg", "--out", s(&runs), "--run-id", "lr"]);
    let out = ok(&[
        "eval", "--checkpoint", s(&runs.join("lr/lr_checkpoint.mgt")), "--data", s(&runs.join("f")), "--out",
        s(&runs), "--run-id", "lr",
    ]);
    assert!(out.contains("Overall Accuracy  100%"), "{out}");
    let cm = genrekit::eval::parse_confusion_csv(&std::fs::read_to_string(runs.join("lr/lr_confusion.csv")).unwrap())
        .unwrap();
    for (i, row) in cm.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            assert_eq!(c, if i == j { 2 } else { 0 });
        }
    }
}

#[test]
fn eval_rejects_data_extracted_with_other_settings() {
    let f = feature_data();
    let runs = f.root.join("runs");
    ok(&["train", "--data", s(&runs.join("f")), "--arch", "knn", "--out", s(&runs), "--run-id", "hash"]);
    let other = runs.join("other");
    std::fs::create_dir_all(&other).unwrap();
    let mut t = read_container(runs.join("f/test.mgt")).unwrap();
    let meta = &mut t.iter_mut().find(|(n, _)| n == "__data__").unwrap().1;
    let text = String::from_utf8(tensor_bytes(meta).unwrap()).unwrap();
    let changed = text.replace("\"rolloff_fraction\":0.85", "\"rolloff_fraction\":0.9");
    assert_ne!(text, changed);
    *meta = bytes_tensor(changed.as_bytes());
    write_container(other.join("test.mgt"), &t).unwrap();
    let o = run(&[
        "eval", "--checkpoint", s(&runs.join("hash/hash_checkpoint.mgt")), "--data", s(&other), "--out", s(&runs),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hash mismatch"), "{}", stderr(&o));
}

#[test]
fn numeric_fault_exits_with_code_3() {
    let p = pipeline();
    let runs = p.root.join("runs");
    let cfg = p.root.join("small.toml");
    let o = run(&[
        "train", "--data", s(&runs.join("r1")), "--arch", "cnn", "--config", s(&cfg), "--epochs", "2", "--lr",
        "1e30", "--out", s(&runs), "--run-id", "nan",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("numeric fault"));
}

#[test]
fn empty_input_dir_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["prep", "--in", s(tmp.path()), "--out", s(&tmp.path().join("runs"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no genres found"));
}

#[test]
fn quota_errors_exit_with_code_2() {
    let p = pipeline();
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["prep", "--in", s(&p.root.join("audio")), "--out", s(tmp.path()), "--train-per-genre", "900"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_files_exit_with_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--checkpoint", "/nonexistent.mgt", "--data", "/nonexistent", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["prep", "--in", "/nonexistent", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[train]\nbatchsize = 8\n").unwrap();
    let o = run(&["prep", "--in", s(tmp.path()), "--out", s(tmp.path()), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("batchsize"), "{}", stderr(&o));
    let o = run(&["train", "--data", s(tmp.path()), "--arch", "transformer", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["extract", "--manifest", "m.csv", "--mode", "wavelets"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["prep", "--in", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
}
