//! Hyperparameter sweeps and the expansion ablation grid, built on the
//! shared training loop. Results carry per-seed metrics plus mean and
//! standard deviation, and serialize to JSON lines or CSV as flat
//! `(config, seed, epoch, split, metric, value)` records.

use std::io::Write;

use serde::Serialize;

use crate::data::{split_validation, Dataset, Labels};
use crate::error::{NrsError, Result};
use crate::net::{Arch, ExpansionMode, Network, NetworkSpec, Task};
use crate::train::{evaluate, metric_name, train, MetricRecord, Split, TrainOptions};

/// One fully specified run: architecture knobs plus training settings.
/// Datasets are taken as-is (standardize them first if desired).
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub arch: Arch,
    pub n_mul: usize,
    pub n_per: usize,
    pub n_h: usize,
    pub hidden: usize,
    pub expansion: ExpansionMode,
    pub val_fraction: f64,
    pub train: TrainOptions,
    pub seed_data: u64,
    pub seed_model: u64,
}

pub struct RunResult {
    pub net: Network,
    pub spec: NetworkSpec,
    /// Test metric when a test set was given, otherwise final validation
    /// metric.
    pub final_metric: f64,
    pub metric: &'static str,
    pub metrics: Vec<MetricRecord>,
}

fn task_of(ds: &Dataset) -> Task {
    match &ds.labels {
        Labels::Classes { k, .. } => Task::Classify { classes: *k },
        Labels::Reals(_) => Task::Regress,
    }
}

/// Trains one network on `train_ds` (after carving out the validation
/// fraction) and scores it on `test_ds` when given.
pub fn run_once(
    train_ds: &Dataset,
    test_ds: Option<&Dataset>,
    settings: &RunSettings,
) -> Result<RunResult> {
    let task = task_of(train_ds);
    let spec = NetworkSpec {
        arch: settings.arch,
        d: train_ds.num_features(),
        n_mul: settings.n_mul,
        n_per: settings.n_per,
        n_h: settings.n_h,
        plan_seed: settings.seed_model,
        hidden: settings.hidden,
        task,
        expansion: settings.expansion,
    };
    let mut net = spec.build(settings.seed_model)?;

    let (fit_ds, val_ds) = split_validation(train_ds, settings.val_fraction, settings.seed_data)?;
    let mut opts = settings.train.clone();
    opts.shuffle_seed = settings.train.shuffle_seed;
    let outcome = train(&mut net, &fit_ds, val_ds.as_ref(), &opts)?;

    let mut metrics = outcome.metrics;
    let name = metric_name(task);
    let final_metric = match test_ds {
        Some(test) => {
            let value = evaluate(&net, test)?;
            metrics.push(MetricRecord {
                epoch: opts.epochs,
                split: Split::Test,
                metric: name.into(),
                value,
            });
            value
        }
        None => match metrics.iter().rev().find(|m| m.split == Split::Validation) {
            Some(record) => record.value,
            None => {
                return Err(NrsError::Config(
                    "no test set and no validation split; nothing to score".into(),
                ))
            }
        },
    };

    Ok(RunResult {
        net,
        spec,
        final_metric,
        metric: name,
        metrics,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NMul,
    NPer,
    NH,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nmul" | "n_mul" => Ok(SweepAxis::NMul),
            "nper" | "n_per" => Ok(SweepAxis::NPer),
            "nh" | "n_h" => Ok(SweepAxis::NH),
            other => Err(NrsError::Config(format!(
                "unknown sweep axis '{other}' (expected nmul, nper or nh)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NMul => "nmul",
            SweepAxis::NPer => "nper",
            SweepAxis::NH => "nh",
        }
    }

    fn apply(self, settings: &mut RunSettings, value: usize) {
        match self {
            SweepAxis::NMul => settings.n_mul = value,
            SweepAxis::NPer => settings.n_per = value,
            SweepAxis::NH => settings.n_h = value,
        }
    }
}

/// Aggregate over the seeded repeats of one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub config: String,
    pub per_seed: Vec<(u64, f64)>,
    pub mean: f64,
    pub std: f64,
}

/// Flat record for the machine-readable outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub config: String,
    pub seed: u64,
    pub epoch: usize,
    pub split: Split,
    pub metric: String,
    pub value: f64,
}

/// Runs `repeats` seeded trials at every grid value of `axis`. Trial `r`
/// shifts all three seeds by `r`, mirroring independently repeated runs.
pub fn sweep(
    train_ds: &Dataset,
    test_ds: Option<&Dataset>,
    base: &RunSettings,
    axis: SweepAxis,
    values: &[usize],
    repeats: usize,
) -> Result<(Vec<CellSummary>, Vec<ResultRecord>)> {
    if values.is_empty() {
        return Err(NrsError::Config("sweep grid is empty".into()));
    }
    if repeats == 0 {
        return Err(NrsError::Config("sweep needs at least one repeat".into()));
    }
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for &value in values {
        let config = format!("{}={}", axis.name(), value);
        let mut per_seed = Vec::new();
        for r in 0..repeats as u64 {
            let mut settings = base.clone();
            axis.apply(&mut settings, value);
            settings.seed_model = base.seed_model + r;
            settings.seed_data = base.seed_data + r;
            settings.train.shuffle_seed = base.train.shuffle_seed + r;
            let result = run_once(train_ds, test_ds, &settings)?;
            for m in &result.metrics {
                records.push(ResultRecord {
                    config: config.clone(),
                    seed: settings.seed_model,
                    epoch: m.epoch,
                    split: m.split,
                    metric: m.metric.clone(),
                    value: m.value,
                });
            }
            per_seed.push((settings.seed_model, result.final_metric));
        }
        let metrics: Vec<f64> = per_seed.iter().map(|(_, v)| *v).collect();
        let (mean, std) = mean_std(&metrics);
        cells.push(CellSummary {
            config,
            per_seed,
            mean,
            std,
        });
    }
    Ok((cells, records))
}

/// The four-way expansion ablation: rows (a) dense+trainable, (b)
/// sparse+trainable, (c) dense+frozen, (d) sparse+frozen. Row (d) is the
/// standard network's expansion expressed as an FC layer.
pub const ABLATION_MODES: [ExpansionMode; 4] = [
    ExpansionMode::DenseTrainable,
    ExpansionMode::SparseTrainable,
    ExpansionMode::DenseFrozen,
    ExpansionMode::SparseFrozen,
];

pub fn ablate(
    train_ds: &Dataset,
    test_ds: Option<&Dataset>,
    base: &RunSettings,
    repeats: usize,
) -> Result<(Vec<CellSummary>, Vec<ResultRecord>)> {
    if repeats == 0 {
        return Err(NrsError::Config("ablation needs at least one repeat".into()));
    }
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for mode in ABLATION_MODES {
        let config = format!("expansion={}", mode.name());
        let mut per_seed = Vec::new();
        for r in 0..repeats as u64 {
            let mut settings = base.clone();
            settings.expansion = mode;
            settings.seed_model = base.seed_model + r;
            settings.seed_data = base.seed_data + r;
            settings.train.shuffle_seed = base.train.shuffle_seed + r;
            let result = run_once(train_ds, test_ds, &settings)?;
            for m in &result.metrics {
                records.push(ResultRecord {
                    config: config.clone(),
                    seed: settings.seed_model,
                    epoch: m.epoch,
                    split: m.split,
                    metric: m.metric.clone(),
                    value: m.value,
                });
            }
            per_seed.push((settings.seed_model, result.final_metric));
        }
        let metrics: Vec<f64> = per_seed.iter().map(|(_, v)| *v).collect();
        let (mean, std) = mean_std(&metrics);
        cells.push(CellSummary {
            config,
            per_seed,
            mean,
            std,
        });
    }
    Ok((cells, records))
}

pub fn write_records_jsonl(records: &[ResultRecord], mut out: impl Write) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| NrsError::Config(format!("cannot serialize record: {e}")))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_records_csv(records: &[ResultRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "config,seed,epoch,split,metric,value")?;
    for r in records {
        let split = match r.split {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.config, r.seed, r.epoch, split, r.metric, r.value
        )?;
    }
    Ok(())
}
