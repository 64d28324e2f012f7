//! The full network: expansion -> group conv -> BN -> ReLU -> FC -> BN ->
//! ReLU -> FC, plus the plain MLP baselines trained by the same loop.

use serde::{Deserialize, Serialize};

use crate::error::{NrsError, Result};
use crate::net::batchnorm::BatchNormLayer;
use crate::net::conv::GroupConvLayer;
use crate::net::expansion::{expand_batch, expand_batch_backward, expansion_map};
use crate::net::fc::{sparse_fc_from_plan, ExpansionFc, ExpansionMode, FcLayer};
use crate::net::plan::{build_permutation_plan, PermutationPlan};
use crate::rng::stream_rng;
use crate::tensor::DenseTensor;

/// Prediction target kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify { classes: usize },
    Regress,
}

impl Task {
    pub fn output_dim(self) -> usize {
        match self {
            Task::Classify { classes } => classes,
            Task::Regress => 1,
        }
    }
}

/// Which architecture a spec builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Nrs,
    Mlp2,
    Mlp3,
}

impl Arch {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nrs" => Ok(Arch::Nrs),
            "mlp2" => Ok(Arch::Mlp2),
            "mlp3" => Ok(Arch::Mlp3),
            other => Err(NrsError::Config(format!("unknown architecture '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arch::Nrs => "nrs",
            Arch::Mlp2 => "mlp2",
            Arch::Mlp3 => "mlp3",
        }
    }
}

/// Hidden width used when the config leaves it unset.
pub fn default_hidden(expanded_channels: usize) -> usize {
    (2 * expanded_channels).min(1024)
}

/// Everything needed to rebuild a network's shape (not its weights).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub arch: Arch,
    pub d: usize,
    pub n_mul: usize,
    pub n_per: usize,
    pub n_h: usize,
    pub plan_seed: u64,
    /// 0 means "use `default_hidden`".
    pub hidden: usize,
    pub task: Task,
    pub expansion: ExpansionMode,
}

impl NetworkSpec {
    pub fn hidden_width(&self) -> usize {
        if self.hidden != 0 {
            return self.hidden;
        }
        match self.arch {
            Arch::Nrs => default_hidden(self.n_mul * self.d),
            // MLP baselines get the same head width as the NRS they are
            // compared against.
            Arch::Mlp2 | Arch::Mlp3 => default_hidden(self.n_mul * self.d),
        }
    }

    /// Builds and initialises the network. All weight draws come from
    /// per-layer substreams of `seed_model`, so adding or removing one layer
    /// never shifts another's initialisation.
    pub fn build(&self, seed_model: u64) -> Result<Network> {
        match self.arch {
            Arch::Nrs => Ok(Network::Nrs(NrsNetwork::new(self, seed_model)?)),
            Arch::Mlp2 => Ok(Network::Mlp(MlpNetwork::new(self, 2, seed_model)?)),
            Arch::Mlp3 => Ok(Network::Mlp(MlpNetwork::new(self, 3, seed_model)?)),
        }
    }
}

/// Weight-init streams live far above the plan's permutation streams
/// (0..M of the same seed when `plan_seed == seed_model`), so the two can
/// never overlap.
const INIT_STREAM_BASE: u64 = 1 << 32;

/// A mutable view of one parameter block and its gradient.
pub struct ParamSlot<'a> {
    pub name: &'static str,
    pub value: &'a mut DenseTensor,
    pub grad: &'a mut DenseTensor,
    pub frozen: bool,
}

/// Common interface over the NRS network and the MLP baselines.
pub trait Model {
    fn forward_train(&mut self, batch: &DenseTensor) -> Result<DenseTensor>;
    fn forward_eval(&self, batch: &DenseTensor) -> Result<DenseTensor>;
    /// Consumes the caches of the last `forward_train` and fills every
    /// parameter block's gradient buffer.
    fn backward(&mut self, grad_out: &DenseTensor) -> Result<()>;
    fn params(&mut self) -> Vec<ParamSlot<'_>>;
    fn input_dim(&self) -> usize;
    fn task(&self) -> Task;
}

fn check_batch(op: &'static str, batch: &DenseTensor, d: usize) -> Result<()> {
    if batch.rank() != 2 || batch.shape()[1] != d {
        return Err(NrsError::dim(op, batch.shape(), &[batch.shape()[0], d]));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// NRS network
// ---------------------------------------------------------------------------

pub struct NrsNetwork {
    pub plan: PermutationPlan,
    pub expansion_mode: ExpansionMode,
    expansion_fc: Option<ExpansionFc>,
    gather: Vec<usize>,
    pub conv: GroupConvLayer,
    pub bn1: BatchNormLayer,
    pub fc1: FcLayer,
    pub bn2: BatchNormLayer,
    pub fc2: FcLayer,
    pub task: Task,
    relu1_mask: Option<DenseTensor>,
    relu2_mask: Option<DenseTensor>,
    grads: NrsGrads,
}

struct NrsGrads {
    expansion_weight: DenseTensor,
    conv_kernel: DenseTensor,
    bn1_gamma: DenseTensor,
    bn1_beta: DenseTensor,
    fc1_weight: DenseTensor,
    bn2_gamma: DenseTensor,
    bn2_beta: DenseTensor,
    fc2_weight: DenseTensor,
    fc2_bias: DenseTensor,
}

impl NrsNetwork {
    pub fn new(spec: &NetworkSpec, seed_model: u64) -> Result<Self> {
        if spec.arch != Arch::Nrs {
            return Err(NrsError::Config("spec does not describe an NRS network".into()));
        }
        let plan = build_permutation_plan(spec.d, spec.n_mul, spec.n_h, spec.plan_seed)?;
        let c = plan.channels();
        let hidden = spec.hidden_width();
        let out_dim = spec.task.output_dim();

        let mut conv = GroupConvLayer::new(spec.n_h, spec.n_per, c)?;
        conv.init_weights(&mut stream_rng(seed_model, INIT_STREAM_BASE + 1));
        // fc1 feeds straight into bn2, which would cancel any bias
        let mut fc1 = FcLayer::new_no_bias(hidden, c);
        fc1.init_weights(&mut stream_rng(seed_model, INIT_STREAM_BASE + 2));
        let mut fc2 = FcLayer::new(out_dim, hidden);
        fc2.init_weights(&mut stream_rng(seed_model, INIT_STREAM_BASE + 3));

        let expansion_fc = match spec.expansion {
            ExpansionMode::Permute => None,
            mode => Some(sparse_fc_from_plan(&plan, mode, &mut stream_rng(seed_model, INIT_STREAM_BASE + 4))?),
        };

        let grads = NrsGrads {
            expansion_weight: match &expansion_fc {
                Some(fc) => DenseTensor::zeros(fc.weight.shape()),
                None => DenseTensor::zeros(&[1]),
            },
            conv_kernel: DenseTensor::zeros(conv.kernel.shape()),
            bn1_gamma: DenseTensor::zeros(&[c]),
            bn1_beta: DenseTensor::zeros(&[c]),
            fc1_weight: DenseTensor::zeros(fc1.weight.shape()),
            bn2_gamma: DenseTensor::zeros(&[hidden]),
            bn2_beta: DenseTensor::zeros(&[hidden]),
            fc2_weight: DenseTensor::zeros(fc2.weight.shape()),
            fc2_bias: DenseTensor::zeros(&[out_dim]),
        };

        Ok(NrsNetwork {
            gather: expansion_map(&plan),
            plan,
            expansion_mode: spec.expansion,
            expansion_fc,
            conv,
            bn1: BatchNormLayer::new(c),
            fc1,
            bn2: BatchNormLayer::new(hidden),
            fc2,
            task: spec.task,
            relu1_mask: None,
            relu2_mask: None,
            grads,
        })
    }

    pub fn hidden_width(&self) -> usize {
        self.fc1.out_dim()
    }

    fn expand_forward_train(&mut self, batch: &DenseTensor) -> Result<DenseTensor> {
        match &mut self.expansion_fc {
            None => Ok(expand_batch(batch, &self.gather, self.plan.d)),
            Some(fc) => fc.forward(batch),
        }
    }

    fn expand_forward_eval(&self, batch: &DenseTensor) -> Result<DenseTensor> {
        match &self.expansion_fc {
            None => Ok(expand_batch(batch, &self.gather, self.plan.d)),
            Some(fc) => fc.forward_no_cache(batch),
        }
    }
}

impl Model for NrsNetwork {
    fn forward_train(&mut self, batch: &DenseTensor) -> Result<DenseTensor> {
        check_batch("network_forward", batch, self.plan.d)?;
        let expanded = self.expand_forward_train(batch)?;
        let s = self.conv.forward(&expanded)?;
        let b1 = self.bn1.forward_train(&s)?;
        self.relu1_mask = Some(b1.relu_grad_mask());
        let r1 = b1.relu();
        let h = self.fc1.forward(&r1)?;
        let b2 = self.bn2.forward_train(&h)?;
        self.relu2_mask = Some(b2.relu_grad_mask());
        let r2 = b2.relu();
        self.fc2.forward(&r2)
    }

    fn forward_eval(&self, batch: &DenseTensor) -> Result<DenseTensor> {
        check_batch("network_forward", batch, self.plan.d)?;
        let expanded = self.expand_forward_eval(batch)?;
        let s = self.conv.forward_no_cache(&expanded)?;
        let r1 = self.bn1.forward_eval(&s)?.relu();
        let h = self.fc1.forward_no_cache(&r1)?;
        let r2 = self.bn2.forward_eval(&h)?.relu();
        self.fc2.forward_no_cache(&r2)
    }

    fn backward(&mut self, grad_out: &DenseTensor) -> Result<()> {
        let (g_r2, gw2, gb2) = self.fc2.backward(grad_out)?;
        let gb2 = gb2.expect("fc2 always has a bias");
        let mask2 = self
            .relu2_mask
            .take()
            .ok_or_else(|| NrsError::State("network backward called before forward".into()))?;
        let g_b2 = g_r2.mul(&mask2)?;
        let (g_h, g_gamma2, g_beta2) = self.bn2.backward(&g_b2)?;
        let (g_r1, gw1, _) = self.fc1.backward(&g_h)?;
        let mask1 = self
            .relu1_mask
            .take()
            .ok_or_else(|| NrsError::State("network backward called before forward".into()))?;
        let g_b1 = g_r1.mul(&mask1)?;
        let (g_s, g_gamma1, g_beta1) = self.bn1.backward(&g_b1)?;
        let (g_expanded, g_kernel, _) = self.conv.backward(&g_s)?;

        match &mut self.expansion_fc {
            None => {
                // the permutation expansion has no parameters; its input
                // gradient is only needed when checking the adjoint
                let _ = expand_batch_backward(&g_expanded, &self.gather, self.plan.d);
            }
            Some(fc) => {
                let (_, g_w) = fc.backward(&g_expanded)?;
                self.grads.expansion_weight = g_w;
            }
        }
        self.grads.conv_kernel = g_kernel;
        self.grads.bn1_gamma = g_gamma1;
        self.grads.bn1_beta = g_beta1;
        self.grads.fc1_weight = gw1;
        self.grads.bn2_gamma = g_gamma2;
        self.grads.bn2_beta = g_beta2;
        self.grads.fc2_weight = gw2;
        self.grads.fc2_bias = gb2;
        Ok(())
    }

    fn params(&mut self) -> Vec<ParamSlot<'_>> {
        let mut slots = Vec::with_capacity(10);
        if let Some(fc) = &mut self.expansion_fc {
            slots.push(ParamSlot {
                name: "expansion.weight",
                value: &mut fc.weight,
                grad: &mut self.grads.expansion_weight,
                frozen: fc.frozen,
            });
        }
        slots.push(ParamSlot {
            name: "conv.kernel",
            value: &mut self.conv.kernel,
            grad: &mut self.grads.conv_kernel,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "bn1.gamma",
            value: &mut self.bn1.gamma,
            grad: &mut self.grads.bn1_gamma,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "bn1.beta",
            value: &mut self.bn1.beta,
            grad: &mut self.grads.bn1_beta,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "fc1.weight",
            value: &mut self.fc1.weight,
            grad: &mut self.grads.fc1_weight,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "bn2.gamma",
            value: &mut self.bn2.gamma,
            grad: &mut self.grads.bn2_gamma,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "bn2.beta",
            value: &mut self.bn2.beta,
            grad: &mut self.grads.bn2_beta,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "fc2.weight",
            value: &mut self.fc2.weight,
            grad: &mut self.grads.fc2_weight,
            frozen: false,
        });
        slots.push(ParamSlot {
            name: "fc2.bias",
            value: self.fc2.bias.as_mut().expect("fc2 always has a bias"),
            grad: &mut self.grads.fc2_bias,
            frozen: false,
        });
        slots
    }

    fn input_dim(&self) -> usize {
        self.plan.d
    }

    fn task(&self) -> Task {
        self.task
    }
}

// ---------------------------------------------------------------------------
// MLP baselines
// ---------------------------------------------------------------------------

/// `depth` FC layers with BN + ReLU between them (MLP-2 / MLP-3).
pub struct MlpNetwork {
    d: usize,
    pub task: Task,
    fcs: Vec<FcLayer>,
    bns: Vec<BatchNormLayer>,
    masks: Vec<DenseTensor>,
    fc_grads: Vec<(DenseTensor, Option<DenseTensor>)>,
    bn_grads: Vec<(DenseTensor, DenseTensor)>,
}

const MLP_FC_NAMES: [(&str, &str); 3] = [
    ("fc1.weight", "fc1.bias"),
    ("fc2.weight", "fc2.bias"),
    ("fc3.weight", "fc3.bias"),
];
const MLP_BN_NAMES: [(&str, &str); 2] = [("bn1.gamma", "bn1.beta"), ("bn2.gamma", "bn2.beta")];

impl MlpNetwork {
    pub fn new(spec: &NetworkSpec, depth: usize, seed_model: u64) -> Result<Self> {
        assert!(depth == 2 || depth == 3);
        let hidden = spec.hidden_width();
        let out_dim = spec.task.output_dim();
        let mut dims = vec![spec.d];
        dims.extend(std::iter::repeat(hidden).take(depth - 1));
        dims.push(out_dim);

        let mut fcs = Vec::new();
        let mut bns = Vec::new();
        for layer in 0..depth {
            // hidden layers feed into batch norm; only the head keeps a bias
            let mut fc = if layer + 1 < depth {
                FcLayer::new_no_bias(dims[layer + 1], dims[layer])
            } else {
                FcLayer::new(dims[layer + 1], dims[layer])
            };
            fc.init_weights(&mut stream_rng(seed_model, INIT_STREAM_BASE + 1 + layer as u64));
            fcs.push(fc);
            if layer + 1 < depth {
                bns.push(BatchNormLayer::new(dims[layer + 1]));
            }
        }
        let fc_grads = fcs
            .iter()
            .map(|fc| {
                (
                    DenseTensor::zeros(fc.weight.shape()),
                    fc.bias.as_ref().map(|b| DenseTensor::zeros(b.shape())),
                )
            })
            .collect();
        let bn_grads = bns
            .iter()
            .map(|bn| (DenseTensor::zeros(&[bn.channels]), DenseTensor::zeros(&[bn.channels])))
            .collect();
        Ok(MlpNetwork {
            d: spec.d,
            task: spec.task,
            fcs,
            bns,
            masks: Vec::new(),
            fc_grads,
            bn_grads,
        })
    }
}

impl Model for MlpNetwork {
    fn forward_train(&mut self, batch: &DenseTensor) -> Result<DenseTensor> {
        check_batch("network_forward", batch, self.d)?;
        self.masks.clear();
        let mut x = batch.clone();
        let depth = self.fcs.len();
        for layer in 0..depth {
            x = self.fcs[layer].forward(&x)?;
            if layer + 1 < depth {
                x = self.bns[layer].forward_train(&x)?;
                self.masks.push(x.relu_grad_mask());
                x = x.relu();
            }
        }
        Ok(x)
    }

    fn forward_eval(&self, batch: &DenseTensor) -> Result<DenseTensor> {
        check_batch("network_forward", batch, self.d)?;
        let mut x = batch.clone();
        let depth = self.fcs.len();
        for layer in 0..depth {
            x = self.fcs[layer].forward_no_cache(&x)?;
            if layer + 1 < depth {
                x = self.bns[layer].forward_eval(&x)?.relu();
            }
        }
        Ok(x)
    }

    fn backward(&mut self, grad_out: &DenseTensor) -> Result<()> {
        if self.masks.len() != self.bns.len() {
            return Err(NrsError::State("network backward called before forward".into()));
        }
        let mut g = grad_out.clone();
        for layer in (0..self.fcs.len()).rev() {
            let (g_in, gw, gb) = self.fcs[layer].backward(&g)?;
            self.fc_grads[layer] = (gw, gb);
            g = g_in;
            if layer > 0 {
                let masked = g.mul(&self.masks[layer - 1])?;
                let (g_bn, g_gamma, g_beta) = self.bns[layer - 1].backward(&masked)?;
                self.bn_grads[layer - 1] = (g_gamma, g_beta);
                g = g_bn;
            }
        }
        self.masks.clear();
        Ok(())
    }

    fn params(&mut self) -> Vec<ParamSlot<'_>> {
        let mut slots = Vec::new();
        for (layer, (fc, (gw, gb))) in self.fcs.iter_mut().zip(&mut self.fc_grads).enumerate() {
            slots.push(ParamSlot {
                name: MLP_FC_NAMES[layer].0,
                value: &mut fc.weight,
                grad: gw,
                frozen: false,
            });
            if let (Some(bias), Some(gb)) = (fc.bias.as_mut(), gb.as_mut()) {
                slots.push(ParamSlot {
                    name: MLP_FC_NAMES[layer].1,
                    value: bias,
                    grad: gb,
                    frozen: false,
                });
            }
        }
        for (layer, (bn, (gg, gbt))) in self.bns.iter_mut().zip(&mut self.bn_grads).enumerate() {
            slots.push(ParamSlot {
                name: MLP_BN_NAMES[layer].0,
                value: &mut bn.gamma,
                grad: gg,
                frozen: false,
            });
            slots.push(ParamSlot {
                name: MLP_BN_NAMES[layer].1,
                value: &mut bn.beta,
                grad: gbt,
                frozen: false,
            });
        }
        slots
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn task(&self) -> Task {
        self.task
    }
}

// ---------------------------------------------------------------------------
// Unified wrapper
// ---------------------------------------------------------------------------

pub enum Network {
    Nrs(NrsNetwork),
    Mlp(MlpNetwork),
}

impl Network {
    pub fn as_nrs(&self) -> Option<&NrsNetwork> {
        match self {
            Network::Nrs(n) => Some(n),
            Network::Mlp(_) => None,
        }
    }

    /// Every persistent tensor (parameters plus BN running statistics) in a
    /// stable order, as stored in checkpoints.
    pub fn state_tensors(&self) -> Vec<(&'static str, &DenseTensor)> {
        match self {
            Network::Nrs(n) => {
                let mut v: Vec<(&'static str, &DenseTensor)> = Vec::new();
                if let Some(fc) = &n.expansion_fc {
                    v.push(("expansion.weight", &fc.weight));
                }
                v.push(("conv.kernel", &n.conv.kernel));
                v.push(("bn1.gamma", &n.bn1.gamma));
                v.push(("bn1.beta", &n.bn1.beta));
                v.push(("bn1.running_mean", &n.bn1.running_mean));
                v.push(("bn1.running_var", &n.bn1.running_var));
                v.push(("fc1.weight", &n.fc1.weight));
                v.push(("bn2.gamma", &n.bn2.gamma));
                v.push(("bn2.beta", &n.bn2.beta));
                v.push(("bn2.running_mean", &n.bn2.running_mean));
                v.push(("bn2.running_var", &n.bn2.running_var));
                v.push(("fc2.weight", &n.fc2.weight));
                v.push(("fc2.bias", n.fc2.bias.as_ref().expect("fc2 always has a bias")));
                v
            }
            Network::Mlp(m) => {
                let mut v: Vec<(&'static str, &DenseTensor)> = Vec::new();
                for (layer, fc) in m.fcs.iter().enumerate() {
                    v.push((MLP_FC_NAMES[layer].0, &fc.weight));
                    if let Some(bias) = &fc.bias {
                        v.push((MLP_FC_NAMES[layer].1, bias));
                    }
                }
                for (layer, bn) in m.bns.iter().enumerate() {
                    v.push((MLP_BN_NAMES[layer].0, &bn.gamma));
                    v.push((MLP_BN_NAMES[layer].1, &bn.beta));
                    v.push((MLP_BN_STATS[layer].0, &bn.running_mean));
                    v.push((MLP_BN_STATS[layer].1, &bn.running_var));
                }
                v
            }
        }
    }

    /// Mutable variant of [`Network::state_tensors`], same order.
    pub fn state_tensors_mut(&mut self) -> Vec<(&'static str, &mut DenseTensor)> {
        match self {
            Network::Nrs(n) => {
                let mut v: Vec<(&'static str, &mut DenseTensor)> = Vec::new();
                if let Some(fc) = &mut n.expansion_fc {
                    v.push(("expansion.weight", &mut fc.weight));
                }
                v.push(("conv.kernel", &mut n.conv.kernel));
                v.push(("bn1.gamma", &mut n.bn1.gamma));
                v.push(("bn1.beta", &mut n.bn1.beta));
                v.push(("bn1.running_mean", &mut n.bn1.running_mean));
                v.push(("bn1.running_var", &mut n.bn1.running_var));
                v.push(("fc1.weight", &mut n.fc1.weight));
                v.push(("bn2.gamma", &mut n.bn2.gamma));
                v.push(("bn2.beta", &mut n.bn2.beta));
                v.push(("bn2.running_mean", &mut n.bn2.running_mean));
                v.push(("bn2.running_var", &mut n.bn2.running_var));
                v.push(("fc2.weight", &mut n.fc2.weight));
                v.push(("fc2.bias", n.fc2.bias.as_mut().expect("fc2 always has a bias")));
                v
            }
            Network::Mlp(m) => {
                let mut v: Vec<(&'static str, &mut DenseTensor)> = Vec::new();
                for (layer, fc) in m.fcs.iter_mut().enumerate() {
                    v.push((MLP_FC_NAMES[layer].0, &mut fc.weight));
                    if let Some(bias) = &mut fc.bias {
                        v.push((MLP_FC_NAMES[layer].1, bias));
                    }
                }
                for (layer, bn) in m.bns.iter_mut().enumerate() {
                    v.push((MLP_BN_NAMES[layer].0, &mut bn.gamma));
                    v.push((MLP_BN_NAMES[layer].1, &mut bn.beta));
                    v.push((MLP_BN_STATS[layer].0, &mut bn.running_mean));
                    v.push((MLP_BN_STATS[layer].1, &mut bn.running_var));
                }
                v
            }
        }
    }
}

const MLP_BN_STATS: [(&str, &str); 2] = [
    ("bn1.running_mean", "bn1.running_var"),
    ("bn2.running_mean", "bn2.running_var"),
];

impl Model for Network {
    fn forward_train(&mut self, batch: &DenseTensor) -> Result<DenseTensor> {
        match self {
            Network::Nrs(n) => n.forward_train(batch),
            Network::Mlp(n) => n.forward_train(batch),
        }
    }

    fn forward_eval(&self, batch: &DenseTensor) -> Result<DenseTensor> {
        match self {
            Network::Nrs(n) => n.forward_eval(batch),
            Network::Mlp(n) => n.forward_eval(batch),
        }
    }

    fn backward(&mut self, grad_out: &DenseTensor) -> Result<()> {
        match self {
            Network::Nrs(n) => n.backward(grad_out),
            Network::Mlp(n) => n.backward(grad_out),
        }
    }

    fn params(&mut self) -> Vec<ParamSlot<'_>> {
        match self {
            Network::Nrs(n) => n.params(),
            Network::Mlp(n) => n.params(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            Network::Nrs(n) => n.input_dim(),
            Network::Mlp(n) => n.input_dim(),
        }
    }

    fn task(&self) -> Task {
        match self {
            Network::Nrs(n) => n.task(),
            Network::Mlp(n) => n.task(),
        }
    }
}

/// Row-wise argmax; ties resolve to the lowest index.
pub fn predict_classes(outputs: &DenseTensor) -> Vec<usize> {
    let k = outputs.shape()[1];
    outputs
        .data()
        .chunks_exact(k)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
