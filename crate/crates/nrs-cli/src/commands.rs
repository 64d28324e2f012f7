//! The six subcommands: train, eval, gradcheck, count, sweep, ablate.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nrs_core::analysis::{
    ablate, count_costs, grad_check, run_once, sweep, write_records_csv, write_records_jsonl,
    CellSummary, GradCheckConfig, ResultRecord, RunSettings, SweepAxis,
};
use nrs_core::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use nrs_core::data::{
    apply_norm_stats, csv_io::parse_csv, libsvm::parse_libsvm, split_validation, standardize,
    Dataset, LabelMap, Labels, NormStats, RawDataset,
};
use nrs_core::net::{ExpansionMode, NetworkSpec};
use nrs_core::rng::stream_rng;
use nrs_core::train::{evaluate, loss_and_grad, metric_name, train_with, MetricRecord, Split};
use nrs_core::{Arch, DenseTensor, Model, Task};
use rand::Rng;

use crate::config::Config;
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct LoadedData {
    train: Dataset,
    test: Option<Dataset>,
    label_map: Option<LabelMap>,
    norm: Option<NormStats>,
}

fn parse_raw(cfg: &Config, path: &str, dim: Option<usize>) -> Result<RawDataset, CliError> {
    let raw = match cfg.format.as_str() {
        "libsvm" => parse_libsvm(path, dim)?,
        "csv" => parse_csv(
            path,
            cfg.label_column,
            cfg.has_header,
            cfg.delimiter.as_bytes()[0],
        )?,
        other => return Err(usage(format!("unknown format '{other}'"))),
    };
    Ok(raw)
}

fn dataset_name(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

fn load_data(cfg: &Config) -> Result<LoadedData, CliError> {
    if cfg.train_path.is_empty() {
        return Err(usage("train_path is required"));
    }
    let dim = (cfg.dim > 0).then_some(cfg.dim);
    let raw_train = parse_raw(cfg, &cfg.train_path, dim)?;
    let d = raw_train.num_features();

    let raw_test = if cfg.test_path.is_empty() {
        None
    } else {
        Some(parse_raw(cfg, &cfg.test_path, Some(d))?)
    };

    let name = dataset_name(&cfg.train_path);
    let (mut train, mut test, label_map) = match cfg.task.as_str() {
        "classify" => {
            let map = LabelMap::fit(&raw_train);
            let train = Dataset::classification(&name, raw_train, &map)?;
            let test = raw_test
                .map(|raw| Dataset::classification(&format!("{name}-test"), raw, &map))
                .transpose()?;
            (train, test, Some(map))
        }
        "regress" => (
            Dataset::regression(&name, raw_train),
            raw_test.map(|raw| Dataset::regression(&format!("{name}-test"), raw)),
            None,
        ),
        other => return Err(usage(format!("unknown task '{other}'"))),
    };

    let norm = if cfg.standardize {
        match &mut test {
            Some(test_ds) => standardize(&mut train, &mut [test_ds]),
            None => standardize(&mut train, &mut []),
        }
        train.norm.clone()
    } else {
        None
    };

    Ok(LoadedData {
        train,
        test,
        label_map,
        norm,
    })
}

fn network_spec(cfg: &Config, d: usize, task: Task) -> NetworkSpec {
    NetworkSpec {
        arch: cfg.arch(),
        d,
        n_mul: cfg.n_mul,
        n_per: cfg.n_per,
        n_h: cfg.n_h,
        plan_seed: cfg.seed_model,
        hidden: cfg.hidden,
        task,
        expansion: cfg.expansion(),
    }
}

fn task_of(ds: &Dataset) -> Task {
    match &ds.labels {
        Labels::Classes { k, .. } => Task::Classify { classes: *k },
        Labels::Reals(_) => Task::Regress,
    }
}

fn out_dir(cfg: &Config) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn metric_line(record: &MetricRecord) -> String {
    serde_json::to_string(record).expect("metric records always serialize")
}

pub fn cmd_train(cfg: &Config) -> Result<(), CliError> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let task = task_of(&data.train);
    let spec = network_spec(cfg, data.train.num_features(), task);
    let mut net = spec.build(cfg.seed_model)?;

    let (fit_ds, val_ds) = split_validation(&data.train, cfg.val_fraction, cfg.seed_data)?;
    let dir = out_dir(cfg)?;
    fs::write(dir.join("config.resolved"), cfg.to_file_string())?;
    let mut log = fs::File::create(dir.join("metrics.jsonl"))?;

    let meta = CheckpointMeta {
        spec: spec.clone(),
        norm: data.norm.clone(),
        label_map: data.label_map.clone(),
    };

    let higher_is_better = matches!(task, Task::Classify { .. });
    let mut best: Option<f64> = None;
    let best_path = dir.join("best.ckpt");
    let opts = cfg.train_options();

    let outcome = train_with(&mut net, &fit_ds, val_ds.as_ref(), &opts, |net, summary| {
        if let Some(loss) = summary.train_loss {
            let record = MetricRecord {
                epoch: summary.epoch,
                split: Split::Train,
                metric: "loss".into(),
                value: loss,
            };
            writeln!(log, "{}", metric_line(&record))?;
        }
        if let Some((name, value)) = &summary.val_metric {
            let record = MetricRecord {
                epoch: summary.epoch,
                split: Split::Validation,
                metric: name.clone(),
                value: *value,
            };
            writeln!(log, "{}", metric_line(&record))?;
            let improved = match best {
                None => true,
                Some(incumbent) => {
                    if higher_is_better {
                        *value > incumbent
                    } else {
                        *value < incumbent
                    }
                }
            };
            if improved {
                best = Some(*value);
                save_checkpoint(&best_path, net, &meta)?;
            }
            println!(
                "epoch {:>3}  train_loss {}  val {} {:.6}",
                summary.epoch,
                summary
                    .train_loss
                    .map_or("-".to_string(), |l| format!("{l:.6}")),
                name,
                value
            );
        } else if let Some(loss) = summary.train_loss {
            println!("epoch {:>3}  train_loss {loss:.6}", summary.epoch);
        }
        Ok(())
    })?;

    if let Some(test_ds) = &data.test {
        let value = evaluate(&net, test_ds)?;
        let record = MetricRecord {
            epoch: cfg.epochs,
            split: Split::Test,
            metric: metric_name(task).into(),
            value,
        };
        writeln!(log, "{}", metric_line(&record))?;
        println!("test {} {:.6}", metric_name(task), value);
    }
    log.flush()?;

    save_checkpoint(dir.join("final.ckpt"), &net, &meta)?;
    if best.is_none() {
        // no validation split; the final model doubles as best
        save_checkpoint(&best_path, &net, &meta)?;
    }
    if let Some(best_epoch) = outcome.best_epoch {
        println!("best validation epoch: {best_epoch}");
    }
    println!("checkpoints written to {}", dir.display());
    Ok(())
}

pub fn cmd_eval(cfg: &Config) -> Result<(), CliError> {
    if cfg.checkpoint.is_empty() {
        return Err(usage("eval needs --checkpoint <path>"));
    }
    let eval_path = if !cfg.test_path.is_empty() {
        cfg.test_path.clone()
    } else if !cfg.train_path.is_empty() {
        cfg.train_path.clone()
    } else {
        return Err(usage("eval needs --test-path (or --train-path) pointing at a dataset"));
    };

    let (net, meta) = load_checkpoint(&cfg.checkpoint)?;
    let raw = parse_raw(cfg, &eval_path, Some(meta.spec.d))?;
    let name = dataset_name(&eval_path);
    let mut ds = match meta.spec.task {
        Task::Classify { .. } => {
            let map = meta
                .label_map
                .as_ref()
                .ok_or_else(|| usage("classification checkpoint lacks a label map"))?;
            Dataset::classification(&name, raw, map)?
        }
        Task::Regress => Dataset::regression(&name, raw),
    };
    if let Some(stats) = &meta.norm {
        apply_norm_stats(&mut ds, stats);
    }

    let value = evaluate(&net, &ds)?;
    let metric = metric_name(meta.spec.task);
    println!("{metric} = {value:.6}");
    println!(
        "{}",
        serde_json::json!({
            "metric": metric,
            "value": value,
            "samples": ds.num_samples(),
            "checkpoint": cfg.checkpoint,
            "data": eval_path,
        })
    );
    Ok(())
}

pub fn cmd_gradcheck(cfg: &Config) -> Result<(), CliError> {
    cfg.validate()?;
    let d = if cfg.dim > 0 { cfg.dim } else { 6 };
    let task = match cfg.task.as_str() {
        "classify" => Task::Classify {
            classes: cfg.classes.max(2),
        },
        _ => Task::Regress,
    };
    let spec = network_spec(cfg, d, task);
    let mut net = spec.build(cfg.seed_model)?;

    let n = 8;
    let mut rng = stream_rng(cfg.seed_data, 900);
    let x = DenseTensor::from_vec(
        &[n, d],
        (0..n * d).map(|_| rng.gen_range(-1.5..1.5)).collect(),
    );
    let labels = match task {
        Task::Classify { classes } => Labels::Classes {
            values: (0..n).map(|i| i % classes).collect(),
            k: classes,
        },
        Task::Regress => Labels::Reals((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()),
    };

    let report = grad_check(&mut net, &x, &labels, &GradCheckConfig::default())?;
    print!("{report}");
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Runtime(anyhow::anyhow!(
            "gradient check failed; see the report above"
        )))
    }
}

pub fn cmd_count(cfg: &Config) -> Result<(), CliError> {
    cfg.validate()?;
    if cfg.arch() != Arch::Nrs {
        return Err(usage("count reports the conv pipeline; set arch = nrs"));
    }
    let (d, task) = if cfg.dim > 0 {
        (
            cfg.dim,
            match cfg.task.as_str() {
                "classify" => Task::Classify {
                    classes: cfg.classes.max(2),
                },
                _ => Task::Regress,
            },
        )
    } else if !cfg.train_path.is_empty() {
        let data = load_data(cfg)?;
        (data.train.num_features(), task_of(&data.train))
    } else {
        return Err(usage("count needs --dim (with --classes) or --train-path"));
    };
    let spec = network_spec(cfg, d, task);
    let net = spec.build(cfg.seed_model)?;
    let report = count_costs(net.as_nrs().expect("arch checked above"));
    print!("{}", report.render());
    println!(
        "{}",
        serde_json::to_string(&report).expect("cost reports always serialize")
    );
    Ok(())
}

fn run_settings(cfg: &Config) -> RunSettings {
    RunSettings {
        arch: cfg.arch(),
        n_mul: cfg.n_mul,
        n_per: cfg.n_per,
        n_h: cfg.n_h,
        hidden: cfg.hidden,
        expansion: cfg.expansion(),
        val_fraction: cfg.val_fraction,
        train: cfg.train_options(),
        seed_data: cfg.seed_data,
        seed_model: cfg.seed_model,
    }
}

fn write_summaries(
    dir: &Path,
    stem: &str,
    cells: &[CellSummary],
    records: &[ResultRecord],
) -> Result<(), CliError> {
    let jsonl = fs::File::create(dir.join(format!("{stem}.jsonl")))?;
    write_records_jsonl(records, jsonl)?;
    let csv_file = fs::File::create(dir.join(format!("{stem}.csv")))?;
    write_records_csv(records, csv_file)?;
    let summary = serde_json::to_string_pretty(cells).expect("summaries always serialize");
    fs::write(dir.join(format!("{stem}.summary.json")), summary)?;
    Ok(())
}

fn print_cells(metric: &str, cells: &[CellSummary]) {
    for cell in cells {
        let seeds: Vec<String> = cell
            .per_seed
            .iter()
            .map(|(seed, v)| format!("{seed}:{v:.4}"))
            .collect();
        println!(
            "{:<28} {metric} {:.4} +- {:.4}   [{}]",
            cell.config,
            cell.mean,
            cell.std,
            seeds.join(" ")
        );
    }
}

pub fn cmd_sweep(cfg: &Config) -> Result<(), CliError> {
    cfg.validate()?;
    if cfg.sweep_param.is_empty() {
        return Err(usage("sweep needs --sweep-param nmul|nper|nh"));
    }
    let axis = SweepAxis::parse(&cfg.sweep_param).map_err(|e| usage(e.to_string()))?;
    let values: Vec<usize> = cfg
        .sweep_values
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad sweep value '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(usage("sweep needs --sweep-values v1,v2,..."));
    }
    if cfg.repeats == 0 {
        return Err(usage("repeats must be >= 1"));
    }

    let data = load_data(cfg)?;
    let settings = run_settings(cfg);
    let (cells, records) = sweep(
        &data.train,
        data.test.as_ref(),
        &settings,
        axis,
        &values,
        cfg.repeats,
    )?;
    let metric = metric_name(task_of(&data.train));
    print_cells(metric, &cells);
    let dir = out_dir(cfg)?;
    write_summaries(&dir, "sweep", &cells, &records)?;
    println!("results written to {}", dir.display());
    Ok(())
}

pub fn cmd_ablate(cfg: &Config) -> Result<(), CliError> {
    cfg.validate()?;
    if cfg.arch() != Arch::Nrs {
        return Err(usage("the expansion ablation applies to arch = nrs"));
    }
    if cfg.repeats == 0 {
        return Err(usage("repeats must be >= 1"));
    }
    let data = load_data(cfg)?;
    let settings = run_settings(cfg);
    let (cells, records) = ablate(&data.train, data.test.as_ref(), &settings, cfg.repeats)?;
    let metric = metric_name(task_of(&data.train));
    print_cells(metric, &cells);
    let dir = out_dir(cfg)?;
    write_summaries(&dir, "ablate", &cells, &records)?;
    println!("results written to {}", dir.display());
    Ok(())
}

// Re-exported for integration tests that drive runs in-process.
pub use nrs_core::analysis::RunResult;

/// In-process single run used by tests; mirrors what `cmd_train` does
/// without touching the filesystem.
pub fn run_from_config(cfg: &Config) -> Result<(RunResult, Option<Dataset>), CliError> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let settings = run_settings(cfg);
    let result = run_once(&data.train, data.test.as_ref(), &settings)?;
    Ok((result, data.test))
}

/// Exposed for the expansion-equivalence acceptance check.
pub fn expansion_modes() -> [ExpansionMode; 4] {
    nrs_core::analysis::ABLATION_MODES
}

/// Quick sanity loss used by tests.
pub fn batch_loss_of(net: &mut nrs_core::Network, x: &DenseTensor, y: &Labels) -> f64 {
    let out = net.forward_train(x).unwrap();
    loss_and_grad(&out, y).unwrap().0
}
