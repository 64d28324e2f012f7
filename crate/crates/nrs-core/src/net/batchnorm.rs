//! Batch normalization over the channel axis of `[N, C]` activations.
//!
//! Training mode normalizes with the current batch's mean and (biased)
//! variance and folds those statistics into the running estimates with
//! `running = momentum * running + (1 - momentum) * batch`. Inference mode
//! reads only the running estimates, so its output is independent of batch
//! composition.

use rand_chacha::ChaCha8Rng;

use crate::error::{NrsError, Result};
use crate::tensor::DenseTensor;

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    pub channels: usize,
    pub gamma: DenseTensor,
    pub beta: DenseTensor,
    pub running_mean: DenseTensor,
    pub running_var: DenseTensor,
    pub momentum: f64,
    pub epsilon: f64,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    x_hat: DenseTensor,
    inv_std: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(channels: usize) -> Self {
        let mut gamma = DenseTensor::zeros(&[channels]);
        gamma.fill(1.0);
        let mut running_var = DenseTensor::zeros(&[channels]);
        running_var.fill(1.0);
        BatchNormLayer {
            channels,
            gamma,
            beta: DenseTensor::zeros(&[channels]),
            running_mean: DenseTensor::zeros(&[channels]),
            running_var,
            momentum: DEFAULT_MOMENTUM,
            epsilon: DEFAULT_EPSILON,
            cache: None,
        }
    }

    /// Gamma/beta start at 1/0; nothing is drawn, but taking the rng keeps
    /// layer initialisation uniform across the stack.
    pub fn init_weights(&mut self, _rng: &mut ChaCha8Rng) {}

    fn check_shape(&self, batch: &DenseTensor, op: &'static str) -> Result<usize> {
        if batch.rank() != 2 || batch.shape()[1] != self.channels {
            return Err(NrsError::dim(op, batch.shape(), &[batch.shape()[0], self.channels]));
        }
        Ok(batch.shape()[0])
    }

    /// Training-mode forward; requires N >= 2 so the variance is defined.
    pub fn forward_train(&mut self, batch: &DenseTensor) -> Result<DenseTensor> {
        let n = self.check_shape(batch, "batchnorm_forward")?;
        if n < 2 {
            return Err(NrsError::BatchSize(n));
        }
        let c = self.channels;
        let inv_n = 1.0 / n as f64;

        let mut mean = vec![0.0; c];
        for row in batch.data().chunks_exact(c) {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m *= inv_n;
        }

        let mut var = vec![0.0; c];
        for row in batch.data().chunks_exact(c) {
            for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
                let dev = x - m;
                *v += dev * dev;
            }
        }
        for v in &mut var {
            *v *= inv_n;
        }

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.epsilon).sqrt()).collect();

        let mut x_hat = vec![0.0; n * c];
        let mut out = vec![0.0; n * c];
        for (row_idx, row) in batch.data().chunks_exact(c).enumerate() {
            for (ch, &x) in row.iter().enumerate() {
                let xh = (x - mean[ch]) * inv_std[ch];
                x_hat[row_idx * c + ch] = xh;
                out[row_idx * c + ch] = self.gamma.data()[ch] * xh + self.beta.data()[ch];
            }
        }

        let momentum = self.momentum;
        for ch in 0..c {
            let rm = &mut self.running_mean.data_mut()[ch];
            *rm = momentum * *rm + (1.0 - momentum) * mean[ch];
            let rv = &mut self.running_var.data_mut()[ch];
            *rv = momentum * *rv + (1.0 - momentum) * var[ch];
        }

        self.cache = Some(Cache {
            x_hat: DenseTensor::from_vec(&[n, c], x_hat),
            inv_std,
        });
        Ok(DenseTensor::from_vec(&[n, c], out))
    }

    /// Inference-mode forward using only the running statistics.
    pub fn forward_eval(&self, batch: &DenseTensor) -> Result<DenseTensor> {
        let n = self.check_shape(batch, "batchnorm_forward")?;
        let c = self.channels;
        let inv_std: Vec<f64> = self
            .running_var
            .iter()
            .map(|&v| 1.0 / (v + self.epsilon).sqrt())
            .collect();
        let mut out = vec![0.0; n * c];
        for (out_row, row) in out.chunks_exact_mut(c).zip(batch.data().chunks_exact(c)) {
            for (ch, (o, &x)) in out_row.iter_mut().zip(row).enumerate() {
                *o = self.gamma.data()[ch] * (x - self.running_mean.data()[ch]) * inv_std[ch]
                    + self.beta.data()[ch];
            }
        }
        Ok(DenseTensor::from_vec(&[n, c], out))
    }

    /// Gradients w.r.t. the input, gamma and beta, from the cached
    /// training-mode forward.
    pub fn backward(
        &mut self,
        grad_out: &DenseTensor,
    ) -> Result<(DenseTensor, DenseTensor, DenseTensor)> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NrsError::State("batch norm backward called before forward".into()))?;
        let n = self.check_shape(grad_out, "batchnorm_backward")?;
        let c = self.channels;

        let mut grad_gamma = vec![0.0; c];
        let mut grad_beta = vec![0.0; c];
        for (gy_row, xh_row) in grad_out
            .data()
            .chunks_exact(c)
            .zip(cache.x_hat.data().chunks_exact(c))
        {
            for ch in 0..c {
                grad_gamma[ch] += gy_row[ch] * xh_row[ch];
                grad_beta[ch] += gy_row[ch];
            }
        }

        // dx = gamma * inv_std / N * (N * dy - sum(dy) - x_hat * sum(dy * x_hat))
        let inv_n = 1.0 / n as f64;
        let mut grad_in = vec![0.0; n * c];
        for (row_idx, (gy_row, xh_row)) in grad_out
            .data()
            .chunks_exact(c)
            .zip(cache.x_hat.data().chunks_exact(c))
            .enumerate()
        {
            for ch in 0..c {
                let coeff = self.gamma.data()[ch] * cache.inv_std[ch] * inv_n;
                grad_in[row_idx * c + ch] = coeff
                    * (n as f64 * gy_row[ch] - grad_beta[ch] - xh_row[ch] * grad_gamma[ch]);
            }
        }

        Ok((
            DenseTensor::from_vec(&[n, c], grad_in),
            DenseTensor::from_vec(&[c], grad_gamma),
            DenseTensor::from_vec(&[c], grad_beta),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_batch(n: usize, c: usize, seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_vec(&[n, c], (0..n * c).map(|_| rng.gen_range(-3.0..3.0)).collect())
    }

    #[test]
    fn training_output_is_normalized_per_channel() {
        let mut bn = BatchNormLayer::new(4);
        // spread the data enough that the epsilon in 1/sqrt(var + eps)
        // cannot push the output variance below the 1e-6 check
        let batch = random_batch(64, 4, 1).scale(10.0);
        let out = bn.forward_train(&batch).unwrap();
        for ch in 0..4 {
            let vals: Vec<f64> = (0..64).map(|n| out.at(&[n, ch])).collect();
            let mean: f64 = vals.iter().sum::<f64>() / 64.0;
            let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 64.0;
            assert!(mean.abs() < 1e-9, "channel {ch} mean {mean}");
            assert!((var - 1.0).abs() < 1e-6, "channel {ch} var {var}");
        }
    }

    #[test]
    fn inference_with_unit_stats_is_identity_up_to_epsilon() {
        let mut bn = BatchNormLayer::new(3);
        bn.epsilon = 0.0;
        let batch = random_batch(5, 3, 2);
        let out = bn.forward_eval(&batch).unwrap();
        for (a, b) in out.iter().zip(batch.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_training_batch_is_rejected() {
        let mut bn = BatchNormLayer::new(2);
        let one = random_batch(1, 2, 3);
        assert!(matches!(bn.forward_train(&one), Err(NrsError::BatchSize(1))));
    }

    #[test]
    fn inference_output_per_row_ignores_batch_composition() {
        let mut bn = BatchNormLayer::new(3);
        // push the running stats somewhere non-trivial first
        bn.forward_train(&random_batch(16, 3, 4)).unwrap();
        let row: Vec<f64> = vec![0.3, -1.2, 2.0];
        let mut alone = DenseTensor::zeros(&[1, 3]);
        alone.row_mut(0).copy_from_slice(&row);
        let mut crowd = random_batch(4, 3, 5);
        crowd.row_mut(2).copy_from_slice(&row);
        let a = bn.forward_eval(&alone).unwrap();
        let b = bn.forward_eval(&crowd).unwrap();
        assert_eq!(a.row(0), b.row(2));
    }

    #[test]
    fn running_stats_follow_the_momentum_rule() {
        let mut bn = BatchNormLayer::new(1);
        let batch = DenseTensor::from_vec(&[2, 1], vec![1.0, 3.0]);
        bn.forward_train(&batch).unwrap();
        // batch mean 2, biased var 1; running starts at (0, 1)
        assert!((bn.running_mean.data()[0] - 0.1 * 2.0).abs() < 1e-15);
        assert!((bn.running_var.data()[0] - (0.9 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (n, c) = (8, 3);
        let batch = random_batch(n, c, 6);
        let w = random_batch(n, c, 7); // projection weights for a scalar loss

        let loss = |bn: &mut BatchNormLayer, x: &DenseTensor| -> f64 {
            let out = bn.forward_train(x).unwrap();
            out.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
        };

        let mut bn = BatchNormLayer::new(c);
        loss(&mut bn, &batch);
        let (grad_in, grad_gamma, grad_beta) = bn.backward(&w).unwrap();

        let eps = 1e-5;
        let rel = |a: f64, n_: f64| (a - n_).abs() / a.abs().max(n_.abs()).max(1e-12);

        for idx in 0..n * c {
            let mut bp = BatchNormLayer::new(c);
            let mut bm = BatchNormLayer::new(c);
            let mut xp = batch.clone();
            let mut xm = batch.clone();
            xp.data_mut()[idx] += eps;
            xm.data_mut()[idx] -= eps;
            let numeric = (loss(&mut bp, &xp) - loss(&mut bm, &xm)) / (2.0 * eps);
            assert!(
                rel(grad_in.data()[idx], numeric) < 1e-6,
                "input grad {idx}: {} vs {}",
                grad_in.data()[idx],
                numeric
            );
        }
        for ch in 0..c {
            for (param, analytic) in [(0, &grad_gamma), (1, &grad_beta)] {
                let mut bp = BatchNormLayer::new(c);
                let mut bm = BatchNormLayer::new(c);
                if param == 0 {
                    bp.gamma.data_mut()[ch] += eps;
                    bm.gamma.data_mut()[ch] -= eps;
                } else {
                    bp.beta.data_mut()[ch] += eps;
                    bm.beta.data_mut()[ch] -= eps;
                }
                let numeric = (loss(&mut bp, &batch) - loss(&mut bm, &batch)) / (2.0 * eps);
                assert!(rel(analytic.data()[ch], numeric) < 1e-6);
            }
        }
    }
}
