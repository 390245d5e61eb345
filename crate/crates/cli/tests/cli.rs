use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
format = 1
seeds = [0, 1]
[task]
kind = "gaussians"
per_class = 60
[pretrain]
epochs = 5
[adapt]
iterations = 5
schedule_base = 80.0
schedule_step = 4.0
source_mix = { fixed = 20 }
[diagnostics]
epochs = 3
injection_epochs = [1, 3]
"#;

fn pppl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pppl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn adapt_reports_are_deterministic_and_self_describing() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "small.toml", SMALL);
    let files = ["experiment.jsonl", "experiment.csv", "adapted_seed0.ckpt", "adapted_seed1.ckpt"];
    let mut first = Vec::new();
    for _ in 0..2 {
        let o = pppl(d, &["--config", "small.toml", "--out", "a", "--quiet", "adapt"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(d.join("a").join(f)).unwrap()).collect();
        if first.is_empty() {
            first = bytes;
        } else {
            assert!(first == bytes, "reports differ between identical runs");
        }
    }
    let log = fs::read_to_string(d.join("a/experiment.jsonl")).unwrap();
    let records: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records[0]["record"], "config");
    assert_eq!(records[0]["config"]["task"]["per_class"], 60);
    assert_eq!(records[0]["config"]["pretrain"]["learning_rate"], 0.01);
    assert_eq!(records[0]["seeds"].as_array().unwrap().len(), 2);
    assert_eq!(records.iter().filter(|r| r["record"] == "iteration").count(), 10);
    assert_eq!(records.last().unwrap()["record"], "summary");
    assert_eq!(records.last().unwrap()["completed"], 2);
    let csv = fs::read_to_string(d.join("a/experiment.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 2);
}

#[test]
fn seed_flag_overrides_the_list() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "small.toml", SMALL);
    let o = pppl(d, &["--config", "small.toml", "--seed", "7", "--out", "o", "adapt"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("7,"));
}

#[test]
fn synth_then_csv_task_then_checkpoint_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "small.toml", SMALL);
    assert_eq!(code(&pppl(d, &["--config", "small.toml", "--seed", "3", "--out", "data", "synth"])), 0);
    let header = fs::read_to_string(d.join("data/target_seed3.csv")).unwrap();
    assert!(header.starts_with("x0,x1,label\n"));

    let csv_cfg = SMALL.replace(
        "[task]\nkind = \"gaussians\"\nper_class = 60",
        "[task]\nkind = \"csv\"\nsource = \"data/source_seed3.csv\"\ntarget = \"data/target_seed3.csv\"\ntarget_label_column = \"label\"\nclasses = 3",
    );
    write(d, "csv.toml", &csv_cfg);
    let o = pppl(d, &["--config", "csv.toml", "--seed", "3", "--out", "run", "pretrain"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read(d.join("run/pretrained_seed3.ckpt")).unwrap().starts_with(b"pppl-checkpoint 1\ndims 2 32 3\n"));

    let o = pppl(
        d,
        &["--config", "csv.toml", "--out", "run", "evaluate", "--model", "run/pretrained_seed3.ckpt", "--data", "data/target_seed3.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    let pre: Vec<Value> = fs::read_to_string(d.join("run/pretrain.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // the saved checkpoint scores exactly like the in-memory model did
    assert_eq!(m["accuracy"], pre[1]["source_only"]["accuracy"]);

    let o = pppl(d, &["--config", "csv.toml", "--seed", "3", "--out", "run2", "adapt", "--model", "run/pretrained_seed3.ckpt"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ablate_sweep_and_diagnostics_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "small.toml", SMALL);
    let run = |args: &[&str]| {
        let mut full = vec!["--config", "small.toml", "--seed", "0", "--out", "o"];
        full.extend_from_slice(args);
        let o = pppl(d, &full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    assert!(run(&["ablate"]).starts_with("seed,Only-Src,A1,A2,A3,A4,PPPL\n"));
    assert!(run(&["ablate", "--variants", "A2"]).starts_with("seed,Only-Src,A2,PPPL\n"));
    assert!(run(&["cp-sweep"]).starts_with("seed,10%,20%,30%,S.,T.,CP Diff.\n"));
    assert!(run(&["cp-sweep", "--errors", "0.05", "--no-source-cp"]).starts_with("seed,5%,T.,CP Diff.\n"));
    assert_eq!(run(&["diagnose", "oracle"]).lines().count(), 1 + 4);
    assert!(run(&["diagnose", "buckets"]).contains("spearman"));
    assert_eq!(run(&["diagnose", "timing"]).lines().count(), 1 + 2);
    let buckets = fs::read_to_string(d.join("o/buckets.jsonl")).unwrap();
    assert!(buckets.lines().last().unwrap().contains("\"clamp_to_top_bucket\":true"));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "small.toml", SMALL);
    // configuration problems
    assert_eq!(code(&pppl(d, &["--config", "missing.toml", "adapt"])), 1);
    write(d, "v2.toml", "format = 2");
    assert_eq!(code(&pppl(d, &["--config", "v2.toml", "adapt"])), 1);
    assert_eq!(code(&pppl(d, &["--config", "small.toml", "ablate", "--variants", "B7"])), 1);
    assert_eq!(code(&pppl(d, &["frobnicate"])), 1);
    assert_eq!(code(&pppl(d, &["--help"])), 0);

    // data problems
    write(d, "src.csv", "x0,x1,label\n0.1,0.2,0\n0.3,oops,1\n");
    write(d, "tgt.csv", "x0,x1\n0.1,0.2\n");
    write(d, "bad.toml", "[task]\nkind = \"csv\"\nsource = \"src.csv\"\ntarget = \"tgt.csv\"\nclasses = 2");
    let o = pppl(d, &["--config", "bad.toml", "adapt"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("src.csv:3"));
    write(d, "junk.ckpt", "pppl-checkpoint 1\ndims 2 3\nseed 0\nloss mse\ndata\n123");
    assert_eq!(code(&pppl(d, &["--config", "small.toml", "evaluate", "--model", "junk.ckpt"])), 2);

    // numerical blow-up during pretraining
    write(d, "hot.toml", &SMALL.replace("[pretrain]\nepochs = 5", "[pretrain]\nepochs = 5\nlearning_rate = 1e30"));
    let o = pppl(d, &["--config", "hot.toml", "--out", "o", "adapt"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    // the failed seeds are still reported
    assert!(fs::read_to_string(d.join("o/experiment.jsonl")).unwrap().contains("\"record\":\"failure\""));
}
