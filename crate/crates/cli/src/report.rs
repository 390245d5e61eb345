//! Report files: a JSONL log (config record first, then per-iteration and per-seed
//! records, then a summary) plus a CSV summary table.
//!
//! Nothing time-dependent is written, so identical configs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::{
    AblationReport, BucketsReport, ExperimentReport, OracleReport, Prepared, SeedFailure, SeedSet, Stat,
    SweepReport, TimingReport,
};

/// First record of every JSONL report: the resolved config and every derived seed.
pub fn config_record(cfg: &ExperimentConfig, command: &str) -> Value {
    let seeds: Vec<SeedSet> = cfg.seeds.iter().map(|&s| SeedSet::derive(s)).collect();
    json!({
        "record": "config",
        "command": command,
        "format": cfg.format,
        "config": cfg,
        "seeds": seeds,
    })
}

fn tagged<T: Serialize>(kind: &str, body: &T) -> Value {
    let mut v = serde_json::to_value(body).expect("report values serialize");
    if let Value::Object(map) = &mut v {
        map.insert("record".into(), Value::String(kind.into()));
    }
    v
}

fn failure_records(failures: &[SeedFailure]) -> impl Iterator<Item = Value> + '_ {
    failures.iter().map(|f| tagged("failure", f))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn jsonl(records: impl IntoIterator<Item = Value>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("json"));
        out.push('\n');
    }
    out
}

fn csv_text(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn stat_rows(stats: &[Stat], lead: &[Stat]) -> [Vec<String>; 2] {
    let all: Vec<&Stat> = lead.iter().chain(stats).collect();
    let mut mean = vec!["mean".to_string()];
    let mut std = vec!["std".to_string()];
    mean.extend(all.iter().map(|s| opt(s.mean)));
    std.extend(all.iter().map(|s| opt(s.std)));
    [mean, std]
}

/// Paths written and the CSV summary text.
pub struct Written {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn finish(dir: &Path, stem: &str, records: Vec<Value>, rows: Vec<Vec<String>>) -> Result<Written> {
    let summary = csv_text(&rows);
    let files = vec![
        write_file(dir, &format!("{stem}.jsonl"), &jsonl(records))?,
        write_file(dir, &format!("{stem}.csv"), &summary)?,
    ];
    Ok(Written { files, summary })
}

pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, r: &ExperimentReport) -> Result<Written> {
    let mut records = vec![config_record(cfg, "adapt")];
    for run in &r.runs {
        for it in &run.iterations {
            let mut v = tagged("iteration", it);
            v["seed"] = json!(run.seeds.run);
            records.push(v);
        }
        records.push(json!({
            "record": "seed",
            "seeds": run.seeds,
            "proportions": run.proportions,
            "pretrain_loss": run.pretrain_loss,
            "source_only": run.source_only,
            "pppl": run.pppl,
        }));
    }
    records.extend(failure_records(&r.failures));
    records.push(tagged("summary", &r.summary));

    let mut rows = vec![vec![
        "seed".to_string(),
        "source_only_accuracy".into(),
        "pppl_accuracy".into(),
        "source_only_headline".into(),
        "pppl_headline".into(),
    ]];
    for run in &r.runs {
        let acc = |m: &Option<crate::experiment::MetricSummary>| opt(m.as_ref().map(|m| m.accuracy));
        let head = |m: &Option<crate::experiment::MetricSummary>| opt(m.as_ref().map(|m| m.headline));
        rows.push(vec![
            run.seeds.run.to_string(),
            acc(&run.source_only),
            acc(&run.pppl),
            head(&run.source_only),
            head(&run.pppl),
        ]);
    }
    let s = &r.summary;
    rows.extend(stat_rows(&[s.source_only_accuracy, s.pppl_accuracy, s.source_only, s.pppl], &[]));
    finish(dir, "experiment", records, rows)
}

pub fn write_pretrain(dir: &Path, cfg: &ExperimentConfig, runs: &[Prepared], failures: &[SeedFailure]) -> Result<Written> {
    let mut records = vec![config_record(cfg, "pretrain")];
    let mut rows = vec![vec![
        "seed".to_string(),
        "final_loss".into(),
        "source_only_accuracy".into(),
        "source_only_headline".into(),
    ]];
    for p in runs {
        records.push(json!({
            "record": "seed",
            "seeds": p.seeds,
            "pretrain_loss": p.pretrain_loss,
            "source_only": p.source_only,
        }));
        rows.push(vec![
            p.seeds.run.to_string(),
            opt(p.pretrain_loss.last().copied()),
            opt(p.source_only.as_ref().map(|m| m.accuracy)),
            opt(p.source_only.as_ref().map(|m| m.headline)),
        ]);
    }
    records.extend(failure_records(failures));
    finish(dir, "pretrain", records, rows)
}

pub fn write_ablation(dir: &Path, cfg: &ExperimentConfig, r: &AblationReport) -> Result<Written> {
    let mut records = vec![config_record(cfg, "ablate")];
    for run in &r.runs {
        for (c, its) in r.columns.iter().zip(&run.iterations) {
            for it in its {
                let mut v = tagged("iteration", it);
                v["seed"] = json!(run.seeds.run);
                v["variant"] = json!(c);
                records.push(v);
            }
        }
        records.push(json!({
            "record": "seed",
            "seeds": run.seeds,
            "source_only": run.source_only,
            "columns": r.columns,
            "values": run.values,
        }));
    }
    records.extend(failure_records(&r.failures));
    records.push(json!({
        "record": "summary",
        "columns": r.columns,
        "source_only": r.source_only,
        "stats": r.stats,
    }));

    let mut header = vec!["seed".to_string(), "Only-Src".into()];
    header.extend(r.columns.iter().cloned());
    let mut rows = vec![header];
    for run in &r.runs {
        let mut row = vec![run.seeds.run.to_string(), num(run.source_only)];
        row.extend(run.values.iter().map(|&v| num(v)));
        rows.push(row);
    }
    rows.extend(stat_rows(&r.stats, &[r.source_only]));
    finish(dir, "ablation", records, rows)
}

pub fn write_sweep(dir: &Path, cfg: &ExperimentConfig, r: &SweepReport) -> Result<Written> {
    let mut records = vec![config_record(cfg, "cp-sweep")];
    for run in &r.runs {
        records.push(tagged("seed", run));
    }
    records.extend(failure_records(&r.failures));
    records.push(json!({
        "record": "summary",
        "columns": r.columns,
        "errors": r.errors,
        "mode": r.mode,
        "stats": r.stats,
        "cp_diff": r.cp_diff,
    }));

    let mut header = vec!["seed".to_string()];
    header.extend(r.columns.iter().cloned());
    header.push("CP Diff.".into());
    let mut rows = vec![header];
    for run in &r.runs {
        let mut row = vec![run.seeds.run.to_string()];
        row.extend(run.values.iter().map(|&v| num(v)));
        row.push(num(run.cp_diff));
        rows.push(row);
    }
    let [mut mean, mut std] = stat_rows(&r.stats, &[]);
    mean.push(opt(r.cp_diff.mean));
    std.push(opt(r.cp_diff.std));
    rows.extend([mean, std]);
    finish(dir, "cp_sweep", records, rows)
}

pub fn write_oracle(dir: &Path, cfg: &ExperimentConfig, r: &OracleReport) -> Result<Written> {
    let mut records = vec![config_record(cfg, "diagnose oracle")];
    records.extend(r.runs.iter().map(|s| tagged("seed", s)));
    records.extend(failure_records(&r.failures));
    records.push(json!({ "record": "summary", "gain": r.gain }));

    let mut header = vec!["epoch".to_string()];
    header.extend(r.runs.iter().map(|s| format!("seed_{}", s.seeds.run)));
    header.push("mean".into());
    let mut rows = vec![header];
    let epochs = r.runs.iter().map(|s| s.accuracy.len()).max().unwrap_or(0);
    for e in 0..epochs {
        let vals: Vec<f64> = r.runs.iter().filter_map(|s| s.accuracy.get(e).copied()).collect();
        let mut row = vec![e.to_string()];
        row.extend(vals.iter().map(|&v| num(v)));
        row.push(opt(Stat::of(vals).mean));
        rows.push(row);
    }
    finish(dir, "oracle", records, rows)
}

pub fn write_buckets(dir: &Path, cfg: &ExperimentConfig, r: &BucketsReport) -> Result<Written> {
    let mut records = vec![config_record(cfg, "diagnose buckets")];
    records.extend(r.runs.iter().map(|s| tagged("seed", s)));
    records.extend(failure_records(&r.failures));
    records.push(json!({
        "record": "summary",
        "buckets": r.buckets,
        "clamp_to_top_bucket": r.clamp_to_top_bucket,
        "negative_seeds": r.negative_seeds,
    }));

    let mut header = vec!["bucket".to_string()];
    header.extend(r.runs.iter().map(|s| format!("seed_{}", s.seeds.run)));
    let mut rows = vec![header];
    for b in 0..r.buckets {
        let mut row = vec![b.to_string()];
        row.extend(r.runs.iter().map(|s| opt(s.ratios[b])));
        rows.push(row);
    }
    let mut corr = vec!["spearman".to_string()];
    corr.extend(r.runs.iter().map(|s| opt(s.rank_correlation)));
    rows.push(corr);
    finish(dir, "buckets", records, rows)
}

pub fn write_timing(dir: &Path, cfg: &ExperimentConfig, r: &TimingReport) -> Result<Written> {
    let mut records = vec![config_record(cfg, "diagnose timing")];
    records.extend(r.runs.iter().map(|s| tagged("seed", s)));
    records.extend(failure_records(&r.failures));
    records.push(json!({
        "record": "summary",
        "injection_epochs": r.injection_epochs,
        "poison_fraction": r.poison_fraction,
        "stats": r.stats,
    }));

    let mut header = vec!["injection_epoch".to_string()];
    header.extend(r.runs.iter().map(|s| format!("seed_{}", s.seeds.run)));
    header.extend(["mean".to_string(), "std".into()]);
    let mut rows = vec![header];
    for (i, e) in r.injection_epochs.iter().enumerate() {
        let mut row = vec![e.to_string()];
        row.extend(r.runs.iter().map(|s| num(s.final_accuracy[i])));
        row.extend([opt(r.stats[i].mean), opt(r.stats[i].std)]);
        rows.push(row);
    }
    finish(dir, "timing", records, rows)
}
