//! The training loop shared by the CLI, the sweep harness and the tests.
//!
//! Everything is a pure function of (datasets, settings, seeds): batch order
//! comes from the shuffle seed, initialisation from the model seed, and the
//! validation split from the data seed, so two runs with the same inputs
//! produce bit-identical parameters and metrics.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Labels};
use crate::error::{NrsError, Result};
use crate::net::loss::{mse_loss, softmax_cross_entropy};
use crate::net::{predict_classes, Model, Network, Task};
use crate::optim::{OptimKind, OptimizerState};
use crate::tensor::DenseTensor;

/// Forward chunk size used for metric evaluation.
const EVAL_BATCH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// One metrics-log entry; the JSON-lines log is a sequence of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub epoch: usize,
    pub split: Split,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub optim: OptimKind,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    /// Step decay: multiply the learning rate by `factor` every `every`
    /// epochs. `None` keeps it constant.
    pub lr_step: Option<(usize, f64)>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            optim: OptimKind::adam_default(),
            lr: 1e-4,
            weight_decay: 0.0,
            epochs: 30,
            batch_size: 128,
            shuffle_seed: 0,
            lr_step: None,
        }
    }
}

/// Summary handed to the per-epoch callback.
#[derive(Debug, Clone)]
pub struct EpochSummary {
    pub epoch: usize,
    pub train_loss: Option<f64>,
    pub val_metric: Option<(String, f64)>,
}

pub struct TrainOutcome {
    pub metrics: Vec<MetricRecord>,
    /// Epoch with the best validation metric (higher accuracy / lower mse).
    pub best_epoch: Option<usize>,
}

/// Metric name for a task: classification reports accuracy, regression mse.
pub fn metric_name(task: Task) -> &'static str {
    match task {
        Task::Classify { .. } => "accuracy",
        Task::Regress => "mse",
    }
}

fn better(task: Task, candidate: f64, incumbent: f64) -> bool {
    match task {
        Task::Classify { .. } => candidate > incumbent,
        Task::Regress => candidate < incumbent,
    }
}

/// Inference-mode metric of `net` on `ds` (accuracy or mse).
pub fn evaluate(net: &Network, ds: &Dataset) -> Result<f64> {
    let n = ds.num_samples();
    let d = ds.num_features();
    let mut correct = 0usize;
    let mut sq_err = 0.0;
    let mut count = 0usize;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_BATCH).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in &idx {
            data.extend_from_slice(ds.features.row(i));
        }
        let x = DenseTensor::from_vec(&[idx.len(), d], data);
        let out = net.forward_eval(&x)?;
        match &ds.labels {
            Labels::Classes { values, .. } => {
                for (pred, &i) in predict_classes(&out).iter().zip(&idx) {
                    if *pred == values[i] {
                        correct += 1;
                    }
                }
            }
            Labels::Reals(targets) => {
                for (row, &i) in out.data().chunks_exact(out.shape()[1]).zip(&idx) {
                    let diff = row[0] - targets[i];
                    sq_err += diff * diff;
                }
            }
        }
        count += idx.len();
        start = end;
    }
    Ok(match ds.labels {
        Labels::Classes { .. } => correct as f64 / count as f64,
        Labels::Reals(_) => sq_err / count as f64,
    })
}

/// Batch loss + gradient dispatch on the task.
pub fn loss_and_grad(net_out: &DenseTensor, labels: &Labels) -> Result<(f64, DenseTensor)> {
    match labels {
        Labels::Classes { values, .. } => softmax_cross_entropy(net_out, values),
        Labels::Reals(targets) => {
            let t = DenseTensor::from_vec(&[targets.len(), 1], targets.clone());
            mse_loss(net_out, &t)
        }
    }
}

/// Trains `net` in place, invoking `on_epoch` after the initial evaluation
/// (epoch 0) and after every training epoch. With `epochs == 0` this is a
/// validation-only evaluation of the freshly initialised model.
pub fn train_with(
    net: &mut Network,
    train: &Dataset,
    val: Option<&Dataset>,
    opts: &TrainOptions,
    mut on_epoch: impl FnMut(&Network, &EpochSummary) -> Result<()>,
) -> Result<TrainOutcome> {
    if train.num_features() != net.input_dim() {
        return Err(NrsError::dim(
            "train",
            &[train.num_samples(), train.num_features()],
            &[train.num_samples(), net.input_dim()],
        ));
    }
    let task = net.task();
    let mut optimizer = OptimizerState::new(opts.optim, opts.lr);
    optimizer.weight_decay = opts.weight_decay;

    let mut metrics = Vec::new();
    let mut best: Option<(usize, f64)> = None;

    let eval_epoch = |net: &Network,
                          epoch: usize,
                          train_loss: Option<f64>,
                          metrics: &mut Vec<MetricRecord>,
                          best: &mut Option<(usize, f64)>|
     -> Result<EpochSummary> {
        if let Some(loss) = train_loss {
            metrics.push(MetricRecord {
                epoch,
                split: Split::Train,
                metric: "loss".into(),
                value: loss,
            });
        }
        let mut val_metric = None;
        if let Some(val_ds) = val {
            let value = evaluate(net, val_ds)?;
            let name = metric_name(task);
            metrics.push(MetricRecord {
                epoch,
                split: Split::Validation,
                metric: name.into(),
                value,
            });
            match best {
                Some((_, incumbent)) if !better(task, value, *incumbent) => {}
                _ => *best = Some((epoch, value)),
            }
            val_metric = Some((name.to_string(), value));
        }
        Ok(EpochSummary {
            epoch,
            train_loss,
            val_metric,
        })
    };

    let summary = eval_epoch(net, 0, None, &mut metrics, &mut best)?;
    on_epoch(net, &summary)?;

    for epoch in 1..=opts.epochs {
        if let Some((every, factor)) = opts.lr_step {
            if every > 0 {
                optimizer.lr = opts.lr * factor.powi(((epoch - 1) / every) as i32);
            }
        }
        let mut loss_sum = 0.0;
        let mut sample_count = 0usize;
        for (x, y) in train.batches(opts.batch_size, opts.shuffle_seed, epoch as u64) {
            let out = net.forward_train(&x)?;
            let (loss, grad) = loss_and_grad(&out, &y)?;
            net.backward(&grad)?;
            optimizer.step(net.params())?;
            loss_sum += loss * x.shape()[0] as f64;
            sample_count += x.shape()[0];
        }
        let train_loss = loss_sum / sample_count as f64;
        let summary = eval_epoch(net, epoch, Some(train_loss), &mut metrics, &mut best)?;
        on_epoch(net, &summary)?;
    }

    Ok(TrainOutcome {
        metrics,
        best_epoch: best.map(|(e, _)| e),
    })
}

/// `train_with` without a callback.
pub fn train(
    net: &mut Network,
    train_ds: &Dataset,
    val: Option<&Dataset>,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    train_with(net, train_ds, val, opts, |_, _| Ok(()))
}
