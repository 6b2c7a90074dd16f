use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"{
  "model": {"p": 13, "d_model": 16, "d_mlp": 32, "d_head": 4, "n_heads": 4, "epochs": 30, "batch_size": 0},
  "seeds": [3, 4]
}"#;

fn pizzaquad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pizzaquad"))
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), TINY).unwrap();
    dir
}

#[test]
fn all_writes_every_artifact_and_reruns_identically() {
    let dir = setup();
    let out = pizzaquad(dir.path(), &["all", "--config", "config.json", "--out", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");
    for seed in [3, 4] {
        let s = root.join(format!("seed-{seed}"));
        for f in ["weights.json", "history.tsv", "report.json", "bounds.tsv", "spectrum.tsv"] {
            assert!(s.join(f).exists(), "missing {f} for seed {seed}");
        }
        assert!(s.join("plots/variance-histogram.tsv").exists());
        assert!(s.join("plots/frequency-count.tsv").exists());
    }
    assert!(root.join("summary.json").exists() && root.join("summary.tsv").exists());

    let first = fs::read(root.join("seed-3/report.json")).unwrap();
    let again = pizzaquad(dir.path(), &["all", "--config", "config.json", "--out", "out"]);
    assert!(again.status.success());
    assert_eq!(first, fs::read(root.join("seed-3/report.json")).unwrap());
}

#[test]
fn variance_histogram_counts_every_neuron() {
    let dir = setup();
    let out = pizzaquad(dir.path(), &["report", "--config", "config.json", "--seed", "3", "--figure", "variance-histogram"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/seed-3/plots/variance-histogram.tsv")).unwrap();
    let total: usize = text.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 32);
}

#[test]
fn zero_seeds_fail_before_any_work() {
    let dir = setup();
    fs::write(dir.path().join("empty.json"), r#"{"seeds": []}"#).unwrap();
    let out = pizzaquad(dir.path(), &["all", "--config", "empty.json", "--out", "out"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_figure_is_rejected() {
    let dir = setup();
    let out = pizzaquad(dir.path(), &["report", "--config", "config.json", "--figure", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown figure"));
}

#[test]
fn load_weights_skips_training() {
    let dir = setup();
    assert!(pizzaquad(dir.path(), &["train", "--config", "config.json", "--seed", "4", "--out", "a"]).status.success());
    let out = pizzaquad(
        dir.path(),
        &["bound", "--load-weights", "a/seed-4/weights.json", "--out", "b", "--variant", "abs", "--period", "full"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("b/seed-4/bounds.tsv")).unwrap();
    assert!(table.lines().skip(1).all(|l| l.contains("\tabs\tfull\t")));
    assert!(!dir.path().join("b/cache").exists());
}
