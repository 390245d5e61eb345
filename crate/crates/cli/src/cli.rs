//! Command-line definition and dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pppl_core::metrics::evaluate;
use pppl_core::pppl::Ablation;
use pppl_core::LossKind;

use crate::checkpoint;
use crate::config::ExperimentConfig;
use crate::csv_io::{read_csv, write_csv};
use crate::error::{CliError, Result};
use crate::experiment::{self, MetricSummary, SeedFailure};
use crate::report::{self, Written};

#[derive(Debug, Parser)]
#[command(name = "pppl", version, about = "Proportional progressive pseudo-labeling experiments")]
pub struct Cli {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress summaries and progress on stdout/stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the generated source and target sets to CSV.
    Synth,
    /// Pretrain on the source set and save one checkpoint per seed.
    Pretrain,
    /// Pretrain, adapt and report source-only versus adapted metrics.
    Adapt {
        /// Start from this checkpoint instead of pretraining.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Score a checkpoint on a labeled CSV, or on the task's target set.
    Evaluate {
        /// Checkpoint to score
        #[arg(long)]
        model: PathBuf,
        /// Labeled CSV; the task's target set when omitted
        #[arg(long)]
        data: Option<PathBuf>,
        /// Label column of `--data`
        #[arg(long, default_value = "label")]
        label_column: String,
    },
    /// Compare alternative training strategies with full PPPL.
    Ablate {
        /// Comma-separated subset of A1, A2, A3, A4
        #[arg(long, value_delimiter = ',', default_values = ["A1", "A2", "A3", "A4"])]
        variants: Vec<String>,
    },
    /// Adapt under perturbed, source and true class proportions.
    CpSweep {
        /// Error levels (overrides `sweep.errors`).
        #[arg(long, value_delimiter = ',')]
        errors: Option<Vec<f64>>,
        /// Skip the source-proportion column.
        #[arg(long)]
        no_source_cp: bool,
    },
    /// Pseudo-label diagnostics.
    Diagnose {
        #[command(subcommand)]
        kind: Diagnostic,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Diagnostic {
    /// Accuracy curve when only correct pseudo-labels are trained on.
    Oracle,
    /// Wrong-prediction ratio per certainty bucket.
    Buckets,
    /// Effect of injecting wrong pseudo-labels at different epochs.
    Timing,
}

/// Resolves the config from `--config`, `--seed` and `--out`.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

struct Output {
    quiet: bool,
}

impl Output {
    fn files(&self, written: &Written) {
        if !self.quiet {
            print!("{}", written.summary);
            for f in &written.files {
                eprintln!("wrote {}", f.display());
            }
        }
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn check_failures(failures: &[SeedFailure], total: usize) -> Result<()> {
    match failures.first() {
        None => Ok(()),
        Some(f) => Err(CliError::Seeds {
            failed: failures.len(),
            total,
            first: format!("seed {}: {}", f.seed, f.error),
            code: f.exit_code,
        }),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let out = Output { quiet: cli.quiet };
    let dir = cfg.out_dir.clone();
    let total = cfg.seeds.len();
    match &cli.command {
        Command::Synth => synth(&cfg, &dir, &out),
        Command::Pretrain => {
            let (runs, failures) = experiment::run_pretrain(&cfg);
            for p in &runs {
                let path = dir.join(format!("pretrained_seed{}.ckpt", p.seeds.run));
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                checkpoint::save(&path, &p.model, LossKind::Mse)?;
                out.note(&format!("wrote {}", path.display()));
            }
            out.files(&report::write_pretrain(&dir, &cfg, &runs, &failures)?);
            check_failures(&failures, total)
        }
        Command::Adapt { model } => {
            let initial = model.as_deref().map(checkpoint::load).transpose()?.map(|(m, _)| m);
            let r = experiment::run_experiment(&cfg, initial.as_ref());
            out.files(&report::write_experiment(&dir, &cfg, &r)?);
            for run in &r.runs {
                let path = dir.join(format!("adapted_seed{}.ckpt", run.seeds.run));
                checkpoint::save(&path, &run.model, experiment::adapt_loss(&cfg))?;
                out.note(&format!("wrote {}", path.display()));
            }
            check_failures(&r.failures, total)
        }
        Command::Evaluate {
            model,
            data,
            label_column,
        } => {
            let metrics = evaluate_command(&cfg, model, data.as_deref(), label_column)?;
            let text = serde_json::to_string_pretty(&metrics).expect("json");
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            let path = dir.join("evaluate.json");
            std::fs::write(&path, format!("{text}\n")).map_err(|e| CliError::io(&path, e))?;
            if !out.quiet {
                println!("{text}");
            }
            Ok(())
        }
        Command::Ablate { variants } => {
            let parsed = variants
                .iter()
                .map(|v| Ablation::parse(v).ok_or_else(|| CliError::Config(format!("unknown variant `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            let r = experiment::run_ablation(&cfg, &parsed)?;
            out.files(&report::write_ablation(&dir, &cfg, &r)?);
            check_failures(&r.failures, total)
        }
        Command::CpSweep { errors, no_source_cp } => {
            let errors = errors.clone().unwrap_or_else(|| cfg.sweep.errors.clone());
            let include = cfg.sweep.include_source_cp && !no_source_cp;
            let r = experiment::run_cp_sweep(&cfg, &errors, include)?;
            out.files(&report::write_sweep(&dir, &cfg, &r)?);
            check_failures(&r.failures, total)
        }
        Command::Diagnose { kind } => match kind {
            Diagnostic::Oracle => {
                let r = experiment::run_diag_oracle(&cfg)?;
                out.files(&report::write_oracle(&dir, &cfg, &r)?);
                check_failures(&r.failures, total)
            }
            Diagnostic::Buckets => {
                let r = experiment::run_diag_buckets(&cfg)?;
                out.files(&report::write_buckets(&dir, &cfg, &r)?);
                check_failures(&r.failures, total)
            }
            Diagnostic::Timing => {
                let r = experiment::run_diag_timing(&cfg)?;
                out.files(&report::write_timing(&dir, &cfg, &r)?);
                check_failures(&r.failures, total)
            }
        },
    }
}

fn synth(cfg: &ExperimentConfig, dir: &Path, out: &Output) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for &seed in &cfg.seeds {
        let task = experiment::load_task(cfg, experiment::SeedSet::derive(seed).data)?;
        let src = dir.join(format!("source_seed{seed}.csv"));
        let tgt = dir.join(format!("target_seed{seed}.csv"));
        write_csv(&src, task.source.features(), Some(task.source.labels()))?;
        write_csv(&tgt, task.target.features(), task.target.hidden_labels())?;
        out.note(&format!("wrote {} and {}", src.display(), tgt.display()));
    }
    Ok(())
}

fn evaluate_command(cfg: &ExperimentConfig, model: &Path, data: Option<&Path>, label_column: &str) -> Result<MetricSummary> {
    let (model, _) = checkpoint::load(model)?;
    let (features, labels) = match data {
        Some(path) => {
            let t = read_csv(path, Some(label_column))?;
            (t.features, t.labels.expect("label column requested"))
        }
        None => {
            let task = experiment::load_task(cfg, experiment::SeedSet::derive(cfg.seeds[0]).data)?;
            let labels = task
                .target
                .hidden_labels()
                .ok_or_else(|| CliError::Config("the target set has no labels; pass --data".into()))?
                .to_vec();
            (task.target.features().clone(), labels)
        }
    };
    if features.cols() != model.input_dim() {
        return Err(CliError::Data(format!(
            "data has {} features, model expects {}",
            features.cols(),
            model.input_dim()
        )));
    }
    let m = evaluate(&model, &features, &labels, cfg.positive_class())?;
    Ok(MetricSummary::from(&m))
}
