//! Grouped convolution over the expanded tensor.
//!
//! The kernel spans the full `n_h x n_h` input with no padding, so each
//! output channel reduces to a single scalar: channel `k` is the sum of
//! `input(i, j, c) * kernel(i, j, p, k)` over the spatial slots and the
//! `n_per` channels `c` of its group. With `n_per = 1` this is a depthwise
//! convolution and each unit sees exactly `n_h^2` entries of one feature map.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{NrsError, Result};
use crate::tensor::DenseTensor;

/// Full-extent grouped convolution layer with `C_in == C_out == channels`.
#[derive(Debug, Clone)]
pub struct GroupConvLayer {
    pub n_h: usize,
    pub n_per: usize,
    pub channels: usize,
    /// Shape `[n_h, n_h, n_per, channels]`.
    pub kernel: DenseTensor,
    /// Per-output-channel offset; off by default since batch norm follows.
    pub bias: Option<DenseTensor>,
    cached_input: Option<DenseTensor>,
}

impl GroupConvLayer {
    /// Zero-initialised layer. `channels` must be divisible by `n_per`.
    pub fn new(n_h: usize, n_per: usize, channels: usize) -> Result<Self> {
        if n_h < 1 || n_per < 1 || channels < 1 {
            return Err(NrsError::Config(format!(
                "group conv needs n_h, n_per, channels >= 1, got {n_h}, {n_per}, {channels}"
            )));
        }
        if channels % n_per != 0 {
            return Err(NrsError::Config(format!(
                "channel count {channels} is not divisible by n_per {n_per}"
            )));
        }
        Ok(GroupConvLayer {
            n_h,
            n_per,
            channels,
            kernel: DenseTensor::zeros(&[n_h, n_h, n_per, channels]),
            bias: None,
            cached_input: None,
        })
    }

    pub fn groups(&self) -> usize {
        self.channels / self.n_per
    }

    /// Uniform init in +-sqrt(1 / fan_in) with fan_in = n_h^2 * n_per.
    pub fn init_weights(&mut self, rng: &mut ChaCha8Rng) {
        let bound = (1.0 / (self.n_h * self.n_h * self.n_per) as f64).sqrt();
        for w in self.kernel.data_mut() {
            *w = rng.gen_range(-bound..bound);
        }
    }

    fn input_width(&self) -> usize {
        self.n_h * self.n_h * self.channels
    }

    /// Forward over a batch of flattened expanded tensors, shape
    /// `[N, n_h * n_h * channels]`; produces `[N, channels]` and caches the
    /// input for the backward pass.
    pub fn forward(&mut self, input: &DenseTensor) -> Result<DenseTensor> {
        let out = self.forward_no_cache(input)?;
        self.cached_input = Some(input.clone());
        Ok(out)
    }

    /// Forward without caching (inference / oracle comparisons).
    pub fn forward_no_cache(&self, input: &DenseTensor) -> Result<DenseTensor> {
        if input.rank() != 2 || input.shape()[1] != self.input_width() {
            return Err(NrsError::dim(
                "group_conv_forward",
                input.shape(),
                &[input.shape()[0], self.input_width()],
            ));
        }
        let n = input.shape()[0];
        let (n_h, n_per, c) = (self.n_h, self.n_per, self.channels);
        let kernel = self.kernel.data();
        let bias = self.bias.as_ref().map(|b| b.data());
        let mut out = vec![0.0; n * c];
        out.par_chunks_exact_mut(c)
            .zip(input.data().par_chunks_exact(n_h * n_h * c))
            .for_each(|(out_row, in_row)| {
                for (k, o) in out_row.iter_mut().enumerate() {
                    let group_base = (k / n_per) * n_per;
                    let mut acc = 0.0;
                    for ij in 0..n_h * n_h {
                        for p in 0..n_per {
                            acc += in_row[ij * c + group_base + p] * kernel[(ij * n_per + p) * c + k];
                        }
                    }
                    if let Some(b) = bias {
                        acc += b[k];
                    }
                    *o = acc;
                }
            });
        Ok(DenseTensor::from_vec(&[n, c], out))
    }

    /// Gradients w.r.t. the cached input, the kernel, and (if present) the
    /// bias. Input channels outside an output channel's group receive no
    /// contribution from it.
    pub fn backward(
        &mut self,
        grad_out: &DenseTensor,
    ) -> Result<(DenseTensor, DenseTensor, Option<DenseTensor>)> {
        let input = self.cached_input.take().ok_or_else(|| {
            NrsError::State("group conv backward called before forward".into())
        })?;
        let n = input.shape()[0];
        if grad_out.shape() != [n, self.channels] {
            return Err(NrsError::dim("group_conv_backward", grad_out.shape(), &[n, self.channels]));
        }
        let (n_h, n_per, c) = (self.n_h, self.n_per, self.channels);
        let kernel = self.kernel.data();

        // kernel gradient: each entry sums over the batch in row order
        let mut grad_kernel = vec![0.0; n_h * n_h * n_per * c];
        for (in_row, gs_row) in input
            .data()
            .chunks_exact(n_h * n_h * c)
            .zip(grad_out.data().chunks_exact(c))
        {
            for ij in 0..n_h * n_h {
                for p in 0..n_per {
                    let gk_row = &mut grad_kernel[(ij * n_per + p) * c..(ij * n_per + p + 1) * c];
                    for (k, gk) in gk_row.iter_mut().enumerate() {
                        *gk += gs_row[k] * in_row[ij * c + (k / n_per) * n_per + p];
                    }
                }
            }
        }

        // input gradient: rows are independent
        let mut grad_input = vec![0.0; n * n_h * n_h * c];
        grad_input
            .par_chunks_exact_mut(n_h * n_h * c)
            .zip(grad_out.data().par_chunks_exact(c))
            .for_each(|(gi_row, gs_row)| {
                for (k, &gs) in gs_row.iter().enumerate() {
                    let group_base = (k / n_per) * n_per;
                    for ij in 0..n_h * n_h {
                        for p in 0..n_per {
                            gi_row[ij * c + group_base + p] += gs * kernel[(ij * n_per + p) * c + k];
                        }
                    }
                }
            });

        let grad_bias = self.bias.as_ref().map(|_| {
            let mut gb = vec![0.0; c];
            for gs_row in grad_out.data().chunks_exact(c) {
                for (g, &v) in gb.iter_mut().zip(gs_row) {
                    *g += v;
                }
            }
            DenseTensor::from_vec(&[c], gb)
        });

        Ok((
            DenseTensor::from_vec(&[n, n_h * n_h * c], grad_input),
            DenseTensor::from_vec(&[n_h, n_h, n_per, c], grad_kernel),
            grad_bias,
        ))
    }
}

/// Reference forward pass: plain nested loops over groups, written
/// independently of the layer internals. Summation order matches the
/// implementation's (spatial-major, then channel within group), so results
/// must agree bit for bit.
pub fn naive_group_conv(
    input: &DenseTensor,
    kernel: &DenseTensor,
    n_h: usize,
    n_per: usize,
    channels: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; channels];
    for k in 0..channels {
        let group = k / n_per;
        let mut acc = 0.0;
        for i in 0..n_h {
            for j in 0..n_h {
                for p in 0..n_per {
                    let c_in = group * n_per + p;
                    acc += input.at(&[i, j, c_in]) * kernel.at(&[i, j, p, k]);
                }
            }
        }
        out[k] = acc;
    }
    out
}
