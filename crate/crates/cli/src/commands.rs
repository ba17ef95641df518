use std::io;
use std::path::Path;

use anyhow::{Context, Result};
use devnet::data::{Dataset, Encoder, Table};
use devnet::eval::{
    dimension_sweep, scalability_sweep, size_sweep, wilcoxon_signed_rank, TimingRow, WilcoxonResult,
};
use devnet::interpret::score_to_probability;
use devnet::model::Preprocessing;
use devnet::protocol::{arms, prepare, run_arm, ArmResult, Protocol};
use devnet::trainer::train_variant;
use devnet::{RankingMetrics, TrainedModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, ConfigError};
use crate::output::{create_dir, write_csv, write_csv_to, write_json};

const THREADS_VAR: &str = "DEVNET_THREADS";

fn load_dataset(cfg: &Config) -> Result<(Encoder, Dataset)> {
    let path = cfg.data_path()?;
    let mut table = Table::open(path, Some(&cfg.data.label_column), &cfg.data.positive_token)
        .with_context(|| format!("loading {}", path.display()))?;
    for (column, kind) in &cfg.data.column_kinds {
        table.set_kind(column, *kind)?;
    }
    let encoder = Encoder::fit(&table)?;
    let ds = encoder.transform(&table)?;
    Ok((encoder, ds))
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    config: &'a Config,
    n_features: usize,
    n_unlabeled: usize,
    unlabeled_anomalies: usize,
    n_labeled_anomalies: usize,
    n_test: usize,
    test_metrics: RankingMetrics,
    files: Vec<String>,
}

pub fn train(cfg: &Config, out: &Path) -> Result<()> {
    let (encoder, ds) = load_dataset(cfg)?;
    let prepared = prepare(&ds, &cfg.experiment, cfg.train.seed)?;
    let model =
        train_variant(&prepared.training, &cfg.model())?.with_preprocessing(Preprocessing {
            encoder: Some(encoder),
            scaler: prepared.scaler.clone(),
        });
    let scores = model.predict_dataset(&prepared.test)?;
    let test_metrics = RankingMetrics::evaluate(&scores.to_vec(), &prepared.test.labels)?;

    create_dir(out)?;
    let model_path = out.join("model.json");
    let log_path = out.join("training_log.csv");
    let summary_path = out.join("summary.json");
    model.save(&model_path)?;
    write_csv(&log_path, &model.training_log)?;
    write_json(
        &summary_path,
        &TrainSummary {
            config: cfg,
            n_features: ds.n_features(),
            n_unlabeled: prepared.training.unlabeled().nrows(),
            unlabeled_anomalies: prepared.unlabeled_anomalies,
            n_labeled_anomalies: prepared.training.labeled_anomalies().nrows(),
            n_test: prepared.test.n_rows(),
            test_metrics,
            files: [&model_path, &log_path, &summary_path]
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        },
    )?;
    println!(
        "trained {} model: test AUC-ROC {:.4}, AUC-PR {:.4}; wrote {}",
        cfg.train.variant,
        test_metrics.auc_roc,
        test_metrics.auc_pr,
        model_path.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ScoreRow {
    row: usize,
    raw_score: f64,
    z: f64,
    upper_tail_p: f64,
}

pub fn score(model: &Path, input: &Path, out: Option<&Path>, sorted: Option<&Path>) -> Result<()> {
    let model = TrainedModel::load(model)?;
    let table =
        Table::open(input, None, "").with_context(|| format!("loading {}", input.display()))?;
    let scores = model.predict_table(&table)?;
    let rows = scores
        .iter()
        .enumerate()
        .map(|(row, &s)| {
            let i = score_to_probability(s, &model.config.prior)?;
            Ok(ScoreRow {
                row,
                raw_score: s,
                z: i.z,
                upper_tail_p: i.upper_tail_p,
            })
        })
        .collect::<devnet::Result<Vec<_>>>()?;
    match out {
        Some(path) => write_csv(path, &rows)?,
        None => write_csv_to(io::stdout().lock(), &rows)?,
    }
    if let Some(path) = sorted {
        let mut ranked = rows;
        ranked.sort_by(|a, b| b.raw_score.total_cmp(&a.raw_score));
        write_csv(path, &ranked)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Evaluation {
    n_rows: usize,
    n_anomalies: usize,
    #[serde(flatten)]
    metrics: RankingMetrics,
}

pub fn evaluate(model: &Path, input: &Path, label: &str, positive: &str) -> Result<()> {
    let model = TrainedModel::load(model)?;
    let table = Table::open(input, Some(label), positive)
        .with_context(|| format!("loading {}", input.display()))?;
    let scores = model.predict_table(&table)?;
    let labels = table.labels()?;
    let metrics = RankingMetrics::evaluate(&scores.to_vec(), &labels)?;
    let report = Evaluation {
        n_rows: labels.len(),
        n_anomalies: labels.iter().filter(|l| l.is_anomaly()).count(),
        metrics,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct RunRow<'a> {
    arm: &'a str,
    seed: u64,
    auc_roc: f64,
    auc_pr: f64,
}

#[derive(Serialize)]
struct Comparison {
    arm: String,
    baseline: String,
    metric: &'static str,
    test: Option<WilcoxonResult>,
    note: Option<String>,
}

#[derive(Serialize)]
struct ExperimentReport<'a> {
    protocol: Protocol,
    config: &'a Config,
    arms: &'a [ArmResult],
    /// Paired signed-rank tests of every arm against the first one.
    comparisons: Vec<Comparison>,
    files: Vec<String>,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_VAR) {
        let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            ConfigError(format!(
                "{THREADS_VAR} must be a positive integer, got '{value}'"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn compare(results: &[ArmResult]) -> Vec<Comparison> {
    let Some(base) = results.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for r in &results[1..] {
        for (metric, pick) in [
            (
                "auc_roc",
                (|m: &RankingMetrics| m.auc_roc) as fn(&RankingMetrics) -> f64,
            ),
            ("auc_pr", |m: &RankingMetrics| m.auc_pr),
        ] {
            let a: Vec<f64> = r.aggregate.runs.iter().map(pick).collect();
            let b: Vec<f64> = base.aggregate.runs.iter().map(pick).collect();
            let (test, note) = match wilcoxon_signed_rank(&a, &b) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(Comparison {
                arm: r.arm.name.clone(),
                baseline: base.arm.name.clone(),
                metric,
                test,
                note,
            });
        }
    }
    out
}

pub fn experiment(protocol: Protocol, cfg: &Config, out: &Path) -> Result<()> {
    if protocol == Protocol::Scalability {
        return scalability(cfg, out);
    }
    let (_, ds) = load_dataset(cfg)?;
    let arms = arms(
        protocol,
        &cfg.experiment,
        &cfg.model(),
        cfg.protocol.grid.as_deref(),
    )?;
    let runs = cfg.protocol.runs;
    let base_seed = cfg.train.seed;
    let results: Vec<Result<ArmResult>> = thread_pool()?.install(|| {
        arms.par_iter()
            .map(|arm| {
                run_arm(&ds, arm, runs, base_seed)
                    .with_context(|| format!("arm '{}' failed", arm.name))
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    create_dir(out)?;
    let runs_path = out.join("runs.csv");
    let summary_path = out.join("summary.json");
    let rows: Vec<RunRow> = results
        .iter()
        .flat_map(|r| {
            r.aggregate
                .seeds
                .iter()
                .zip(&r.aggregate.runs)
                .map(|(&seed, m)| RunRow {
                    arm: &r.arm.name,
                    seed,
                    auc_roc: m.auc_roc,
                    auc_pr: m.auc_pr,
                })
        })
        .collect();
    write_csv(&runs_path, &rows)?;
    write_json(
        &summary_path,
        &ExperimentReport {
            protocol,
            config: cfg,
            arms: &results,
            comparisons: compare(&results),
            files: vec![
                runs_path.display().to_string(),
                summary_path.display().to_string(),
            ],
        },
    )?;
    for r in &results {
        let (m, s) = (r.aggregate.mean, r.aggregate.std);
        println!(
            "{:<20} AUC-ROC {:.4} +- {:.4}  AUC-PR {:.4} +- {:.4}",
            r.arm.name, m.auc_roc, s.auc_roc, m.auc_pr, s.auc_pr
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ScalabilityReport<'a> {
    protocol: Protocol,
    config: &'a Config,
    size_sweep: &'a [TimingRow],
    dimension_sweep: &'a [TimingRow],
    files: Vec<String>,
}

fn scalability(cfg: &Config, out: &Path) -> Result<()> {
    let s = &cfg.scalability;
    let model = cfg.model();
    let sizes = scalability_sweep(&size_sweep(&s.sizes, s.size_dim), &model, cfg.train.seed)
        .context("size sweep failed")?;
    let dims = scalability_sweep(
        &dimension_sweep(&s.dims, s.dim_size),
        &model,
        cfg.train.seed,
    )
    .context("dimension sweep failed")?;

    create_dir(out)?;
    let size_path = out.join("timing_size.csv");
    let dim_path = out.join("timing_dimension.csv");
    let summary_path = out.join("summary.json");
    write_csv(&size_path, &sizes)?;
    write_csv(&dim_path, &dims)?;
    write_json(
        &summary_path,
        &ScalabilityReport {
            protocol: Protocol::Scalability,
            config: cfg,
            size_sweep: &sizes,
            dimension_sweep: &dims,
            files: [&size_path, &dim_path, &summary_path]
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        },
    )?;
    for r in sizes.iter().chain(&dims) {
        println!("n={:<7} d={:<6} {:.3}s", r.n, r.d, r.wall_seconds);
    }
    Ok(())
}
