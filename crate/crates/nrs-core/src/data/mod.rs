//! Dataset ingestion and preparation: LIBSVM and CSV parsing, label
//! remapping, feature standardization, train/validation splitting and
//! seeded mini-batch iteration.

pub mod csv_io;
pub mod libsvm;

use serde::{Deserialize, Serialize};

use crate::error::{NrsError, Result};
use crate::rng::{random_permutation, stream_rng};
use crate::tensor::DenseTensor;

/// Features and labels exactly as they appeared in the file, before any
/// label remapping. Parsers guarantee every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub features: DenseTensor,
    pub labels: Vec<f64>,
}

impl RawDataset {
    pub fn num_samples(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn num_features(&self) -> usize {
        self.features.shape()[1]
    }
}

/// Mapping from raw label values to contiguous class ids, fitted on the
/// training set and shared with every other split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    /// Sorted distinct raw label values; class id = position.
    pub values: Vec<f64>,
}

impl LabelMap {
    pub fn fit(raw: &RawDataset) -> Self {
        let mut values = raw.labels.clone();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        LabelMap { values }
    }

    pub fn classes(&self) -> usize {
        self.values.len()
    }

    pub fn class_of(&self, raw: f64) -> Result<usize> {
        self.values
            .iter()
            .position(|&v| v == raw)
            .ok_or_else(|| NrsError::Config(format!("label value {raw} not seen in training data")))
    }
}

/// Labels after task resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Classes { values: Vec<usize>, k: usize },
    Reals(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { values, .. } => values.len(),
            Labels::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::Classes { values, k } => Labels::Classes {
                values: idx.iter().map(|&i| values[i]).collect(),
                k: *k,
            },
            Labels::Reals(v) => Labels::Reals(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Per-feature statistics captured from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// A ready-to-train dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: DenseTensor,
    pub labels: Labels,
    pub norm: Option<NormStats>,
}

impl Dataset {
    /// Resolves raw labels into class ids using `map` (fitted on train).
    pub fn classification(name: &str, raw: RawDataset, map: &LabelMap) -> Result<Dataset> {
        let values = raw
            .labels
            .iter()
            .map(|&l| map.class_of(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            name: name.to_string(),
            features: raw.features,
            labels: Labels::Classes {
                values,
                k: map.classes(),
            },
            norm: None,
        })
    }

    pub fn regression(name: &str, raw: RawDataset) -> Dataset {
        Dataset {
            name: name.to_string(),
            features: raw.features,
            labels: Labels::Reals(raw.labels),
            norm: None,
        }
    }

    pub fn num_samples(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn num_features(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn classes(&self) -> Option<usize> {
        match &self.labels {
            Labels::Classes { k, .. } => Some(*k),
            Labels::Reals(_) => None,
        }
    }

    /// Copies the given rows into a new dataset (used by splitting).
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        assert!(!idx.is_empty(), "subset needs at least one row");
        let d = self.num_features();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.features.row(i));
        }
        Dataset {
            name: self.name.clone(),
            features: DenseTensor::from_vec(&[idx.len(), d], data),
            labels: self.labels.gather(idx),
            norm: self.norm.clone(),
        }
    }

    /// Seeded mini-batches for one epoch: a fresh shuffle per `(seed, epoch)`,
    /// every sample exactly once, last partial batch included.
    pub fn batches(
        &self,
        batch_size: usize,
        shuffle_seed: u64,
        epoch: u64,
    ) -> impl Iterator<Item = (DenseTensor, Labels)> + '_ {
        assert!(batch_size >= 1, "batch_size must be >= 1");
        let order = random_permutation(self.num_samples(), &mut stream_rng(shuffle_seed, epoch));
        let d = self.num_features();
        (0..order.len())
            .step_by(batch_size)
            .map(move |start| {
                let idx = &order[start..(start + batch_size).min(order.len())];
                let mut data = Vec::with_capacity(idx.len() * d);
                for &i in idx {
                    data.extend_from_slice(self.features.row(i));
                }
                (
                    DenseTensor::from_vec(&[idx.len(), d], data),
                    self.labels.gather(idx),
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
    }
}

/// Random (unstratified) split into `(rest, validation)`.
///
/// The validation part gets `round(fraction * N)` samples (`None` when that
/// is zero); both parts are disjoint, exhaustive, and reproducible from the
/// seed.
pub fn split_validation(
    ds: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, Option<Dataset>)> {
    if !(0.0..=0.5).contains(&fraction) {
        return Err(NrsError::Config(format!(
            "validation fraction must be in [0, 0.5], got {fraction}"
        )));
    }
    let n = ds.num_samples();
    let n_val = (fraction * n as f64).round() as usize;
    if n_val == 0 {
        return Ok((ds.clone(), None));
    }
    let order = random_permutation(n, &mut stream_rng(seed, 0));
    let val_idx = &order[..n_val];
    let train_idx = &order[n_val..];
    Ok((ds.subset(train_idx), Some(ds.subset(val_idx))))
}

/// Fits per-feature mean/std on `train` and applies `(x - mean) / max(std,
/// 1e-8)` to `train` and every dataset in `others`. Statistics come from the
/// training data only.
pub fn standardize(train: &mut Dataset, others: &mut [&mut Dataset]) {
    let (n, d) = (train.num_samples(), train.num_features());
    let inv_n = 1.0 / n as f64;
    let mut mean = vec![0.0; d];
    for row in train.features.data().chunks_exact(d) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m *= inv_n;
    }
    let mut var = vec![0.0; d];
    for row in train.features.data().chunks_exact(d) {
        for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
            let dev = x - m;
            *v += dev * dev;
        }
    }
    let std: Vec<f64> = var.iter().map(|&v| (v * inv_n).sqrt()).collect();

    let stats = NormStats { mean, std };
    apply_norm(train, &stats);
    for ds in others {
        apply_norm(ds, &stats);
    }
}

/// Applies previously fitted statistics (e.g. from a checkpoint) to `ds`.
pub fn apply_norm_stats(ds: &mut Dataset, stats: &NormStats) {
    apply_norm(ds, stats);
}

fn apply_norm(ds: &mut Dataset, stats: &NormStats) {
    let d = ds.num_features();
    assert_eq!(d, stats.mean.len(), "feature width mismatch in standardize");
    for row in ds.features.data_mut().chunks_exact_mut(d) {
        for ((x, &m), &s) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *x = (*x - m) / s.max(1e-8);
        }
    }
    ds.norm = Some(stats.clone());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, d: usize) -> Dataset {
        let data: Vec<f64> = (0..n * d).map(|v| (v % 17) as f64 - 3.0).collect();
        Dataset {
            name: "toy".into(),
            features: DenseTensor::from_vec(&[n, d], data),
            labels: Labels::Classes {
                values: (0..n).map(|i| i % 3).collect(),
                k: 3,
            },
            norm: None,
        }
    }

    #[test]
    fn batch_sizes_cover_the_dataset_with_a_partial_tail() {
        let ds = toy(10, 4);
        let sizes: Vec<usize> = ds.batches(4, 1, 0).map(|(x, _)| x.shape()[0]).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
    }

    #[test]
    fn same_seed_and_epoch_give_the_same_order() {
        let ds = toy(12, 2);
        let a: Vec<f64> = ds.batches(5, 9, 3).flat_map(|(x, _)| x.data().to_vec()).collect();
        let b: Vec<f64> = ds.batches(5, 9, 3).flat_map(|(x, _)| x.data().to_vec()).collect();
        let c: Vec<f64> = ds.batches(5, 9, 4).flat_map(|(x, _)| x.data().to_vec()).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn batches_emit_each_label_exactly_once() {
        let ds = toy(11, 3);
        let mut emitted: Vec<usize> = ds
            .batches(4, 2, 7)
            .flat_map(|(_, y)| match y {
                Labels::Classes { values, .. } => values,
                _ => unreachable!(),
            })
            .collect();
        emitted.sort_unstable();
        let mut expected: Vec<usize> = (0..11).map(|i| i % 3).collect();
        expected.sort_unstable();
        assert_eq!(emitted, expected);
    }

    #[test]
    fn split_is_disjoint_exhaustive_and_sized() {
        let ds = toy(103, 2);
        let (train, val) = split_validation(&ds, 0.10, 5).unwrap();
        let val = val.unwrap();
        assert_eq!(val.num_samples(), 10);
        assert_eq!(train.num_samples() + val.num_samples(), 103);
        // feature rows must union back to the original multiset
        let mut all: Vec<Vec<u64>> = Vec::new();
        for i in 0..train.num_samples() {
            all.push(train.features.row(i).iter().map(|v| v.to_bits()).collect());
        }
        for i in 0..val.num_samples() {
            all.push(val.features.row(i).iter().map(|v| v.to_bits()).collect());
        }
        all.sort();
        let mut orig: Vec<Vec<u64>> = (0..103)
            .map(|i| ds.features.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn split_rejects_out_of_range_fraction() {
        let ds = toy(10, 2);
        assert!(split_validation(&ds, 0.6, 0).is_err());
    }

    #[test]
    fn zero_fraction_split_keeps_everything_in_train() {
        let ds = toy(10, 2);
        let (train, val) = split_validation(&ds, 0.0, 0).unwrap();
        assert!(val.is_none());
        assert_eq!(train.num_samples(), 10);
    }

    #[test]
    fn standardize_centers_and_scales_train_features() {
        let mut train = toy(50, 3);
        let mut test = toy(20, 3);
        standardize(&mut train, &mut [&mut test]);
        let d = 3;
        for ch in 0..d {
            let vals: Vec<f64> = (0..50).map(|i| train.features.at(&[i, ch])).collect();
            let mean: f64 = vals.iter().sum::<f64>() / 50.0;
            let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_features_map_to_zero() {
        let mut train = Dataset {
            name: "const".into(),
            features: DenseTensor::from_vec(&[4, 2], vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0]),
            labels: Labels::Reals(vec![0.0; 4]),
            norm: None,
        };
        standardize(&mut train, &mut []);
        for i in 0..4 {
            assert_eq!(train.features.at(&[i, 0]), 0.0);
            assert!(train.features.at(&[i, 1]).is_finite());
        }
    }

    #[test]
    fn test_set_keeps_train_statistics() {
        let mut train = toy(40, 2);
        let mut test = Dataset {
            name: "shifted".into(),
            features: DenseTensor::from_vec(&[4, 2], vec![100.0; 8]),
            labels: Labels::Reals(vec![0.0; 4]),
            norm: None,
        };
        standardize(&mut train, &mut [&mut test]);
        // standardizing with train stats must not center the shifted test set
        let mean0: f64 = (0..4).map(|i| test.features.at(&[i, 0])).sum::<f64>() / 4.0;
        assert!(mean0.abs() > 1.0);
        assert_eq!(train.norm, test.norm);
    }

    #[test]
    fn label_map_remaps_sparse_label_values() {
        let raw = RawDataset {
            features: DenseTensor::zeros(&[4, 1]),
            labels: vec![7.0, 1.0, 3.0, 7.0],
        };
        let map = LabelMap::fit(&raw);
        assert_eq!(map.classes(), 3);
        let ds = Dataset::classification("x", raw, &map).unwrap();
        match ds.labels {
            Labels::Classes { values, k } => {
                assert_eq!(k, 3);
                assert_eq!(values, vec![2, 0, 1, 2]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn unseen_test_label_is_an_error() {
        let train = RawDataset {
            features: DenseTensor::zeros(&[2, 1]),
            labels: vec![1.0, 2.0],
        };
        let map = LabelMap::fit(&train);
        let test = RawDataset {
            features: DenseTensor::zeros(&[1, 1]),
            labels: vec![9.0],
        };
        assert!(Dataset::classification("x", test, &map).is_err());
    }
}
