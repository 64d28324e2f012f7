//! Fully connected layers, including the FC-based substitute for the
//! permutation expansion used by the ablation grid.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NrsError, Result};
use crate::net::expansion::expansion_map;
use crate::net::plan::PermutationPlan;
use crate::tensor::DenseTensor;

/// Dense affine layer `y = W x + b` with `weight` of shape `[out, in]`.
///
/// The bias is optional: a layer feeding straight into batch norm gets none,
/// since the normalization would cancel any constant shift (its true
/// gradient is identically zero).
#[derive(Debug, Clone)]
pub struct FcLayer {
    pub weight: DenseTensor,
    pub bias: Option<DenseTensor>,
    cached_input: Option<DenseTensor>,
}

impl FcLayer {
    pub fn new(out_dim: usize, in_dim: usize) -> Self {
        FcLayer {
            weight: DenseTensor::zeros(&[out_dim, in_dim]),
            bias: Some(DenseTensor::zeros(&[out_dim])),
            cached_input: None,
        }
    }

    pub fn new_no_bias(out_dim: usize, in_dim: usize) -> Self {
        FcLayer {
            weight: DenseTensor::zeros(&[out_dim, in_dim]),
            bias: None,
            cached_input: None,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Uniform init in +-sqrt(1 / fan_in); the bias starts at zero.
    pub fn init_weights(&mut self, rng: &mut ChaCha8Rng) {
        let bound = (1.0 / self.in_dim() as f64).sqrt();
        for w in self.weight.data_mut() {
            *w = rng.gen_range(-bound..bound);
        }
        if let Some(b) = &mut self.bias {
            b.fill(0.0);
        }
    }

    pub fn forward(&mut self, input: &DenseTensor) -> Result<DenseTensor> {
        let out = self.forward_no_cache(input)?;
        self.cached_input = Some(input.clone());
        Ok(out)
    }

    pub fn forward_no_cache(&self, input: &DenseTensor) -> Result<DenseTensor> {
        let mut out = input.matmul(&self.weight.transpose())?;
        if let Some(bias) = &self.bias {
            let o = self.out_dim();
            for row in out.data_mut().chunks_exact_mut(o) {
                for (v, &b) in row.iter_mut().zip(bias.iter()) {
                    *v += b;
                }
            }
        }
        Ok(out)
    }

    /// Gradients w.r.t. input, weight and bias (when present).
    pub fn backward(
        &mut self,
        grad_out: &DenseTensor,
    ) -> Result<(DenseTensor, DenseTensor, Option<DenseTensor>)> {
        let input = self
            .cached_input
            .take()
            .ok_or_else(|| NrsError::State("fc backward called before forward".into()))?;
        let grad_in = grad_out.matmul(&self.weight)?;
        let grad_w = grad_out.transpose().matmul(&input)?;
        let grad_b = self.bias.as_ref().map(|_| {
            let o = self.out_dim();
            let mut grad_b = vec![0.0; o];
            for row in grad_out.data().chunks_exact(o) {
                for (g, &v) in grad_b.iter_mut().zip(row) {
                    *g += v;
                }
            }
            DenseTensor::from_vec(&[o], grad_b)
        });
        Ok((grad_in, grad_w, grad_b))
    }
}

/// How the expansion stage is realised.
///
/// `Permute` is the parameter-free gather. The four FC variants replace it
/// with an explicit `[M*d, d]` matrix so that initialisation (sparse 0/1
/// pattern vs. dense random) and trainability (frozen vs. updated) can be
/// ablated independently. `SparseFrozen` reproduces `Permute` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    Permute,
    SparseFrozen,
    SparseTrainable,
    DenseFrozen,
    DenseTrainable,
}

use serde::{Deserialize, Serialize};

impl ExpansionMode {
    pub fn is_frozen(self) -> bool {
        matches!(self, ExpansionMode::SparseFrozen | ExpansionMode::DenseFrozen)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "permute" => Ok(ExpansionMode::Permute),
            "sparse_frozen" => Ok(ExpansionMode::SparseFrozen),
            "sparse_trainable" => Ok(ExpansionMode::SparseTrainable),
            "dense_frozen" => Ok(ExpansionMode::DenseFrozen),
            "dense_trainable" => Ok(ExpansionMode::DenseTrainable),
            other => Err(NrsError::Config(format!("unknown expansion mode '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpansionMode::Permute => "permute",
            ExpansionMode::SparseFrozen => "sparse_frozen",
            ExpansionMode::SparseTrainable => "sparse_trainable",
            ExpansionMode::DenseFrozen => "dense_frozen",
            ExpansionMode::DenseTrainable => "dense_trainable",
        }
    }
}

/// Bias-free FC stand-in for the expansion, shape `[M*d, d]`.
#[derive(Debug, Clone)]
pub struct ExpansionFc {
    pub weight: DenseTensor,
    pub frozen: bool,
    cached_input: Option<DenseTensor>,
}

/// Builds the expansion substitute for `plan` under the given mode.
///
/// Sparse modes set exactly one 1 per output unit, at the column the
/// expansion would gather from, so `M*d` ones in total; dense modes draw a
/// standard uniform fan-in init from `rng` instead.
pub fn sparse_fc_from_plan(
    plan: &PermutationPlan,
    mode: ExpansionMode,
    rng: &mut ChaCha8Rng,
) -> Result<ExpansionFc> {
    let out_dim = plan.n_h * plan.n_h * plan.channels();
    let mut weight = DenseTensor::zeros(&[out_dim, plan.d]);
    match mode {
        ExpansionMode::Permute => {
            return Err(NrsError::Config(
                "permute mode has no FC substitute; use the expansion directly".into(),
            ))
        }
        ExpansionMode::SparseFrozen | ExpansionMode::SparseTrainable => {
            for (cell, &src) in expansion_map(plan).iter().enumerate() {
                weight.set(&[cell, src], 1.0);
            }
        }
        ExpansionMode::DenseFrozen | ExpansionMode::DenseTrainable => {
            let bound = (1.0 / plan.d as f64).sqrt();
            for w in weight.data_mut() {
                *w = rng.gen_range(-bound..bound);
            }
        }
    }
    Ok(ExpansionFc {
        weight,
        frozen: mode.is_frozen(),
        cached_input: None,
    })
}

impl ExpansionFc {
    pub fn forward(&mut self, input: &DenseTensor) -> Result<DenseTensor> {
        let out = self.forward_no_cache(input)?;
        self.cached_input = Some(input.clone());
        Ok(out)
    }

    pub fn forward_no_cache(&self, input: &DenseTensor) -> Result<DenseTensor> {
        input.matmul(&self.weight.transpose())
    }

    pub fn backward(&mut self, grad_out: &DenseTensor) -> Result<(DenseTensor, DenseTensor)> {
        let input = self
            .cached_input
            .take()
            .ok_or_else(|| NrsError::State("expansion fc backward called before forward".into()))?;
        let grad_in = grad_out.matmul(&self.weight)?;
        let grad_w = grad_out.transpose().matmul(&input)?;
        Ok((grad_in, grad_w))
    }
}
