//! Parameter update rules: Adam and SGD with momentum.
//!
//! State is keyed by parameter-block name, so update order never matters,
//! and frozen blocks are skipped entirely (their bytes stay untouched).

use std::collections::BTreeMap;

use crate::error::{NrsError, Result};
use crate::net::ParamSlot;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimKind {
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Sgd {
        momentum: f64,
    },
}

impl OptimKind {
    pub fn adam_default() -> Self {
        OptimKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd_default() -> Self {
        OptimKind::Sgd { momentum: 0.9 }
    }
}

/// Optimizer state over a model's parameter blocks.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimKind,
    pub lr: f64,
    /// Decoupled weight decay; 0 disables it.
    pub weight_decay: f64,
    step: u64,
    /// Adam: (first moment, second moment). SGD: (velocity, unused).
    buffers: BTreeMap<&'static str, (DenseTensor, DenseTensor)>,
}

impl OptimizerState {
    pub fn new(kind: OptimKind, lr: f64) -> Self {
        OptimizerState {
            kind,
            lr,
            weight_decay: 0.0,
            step: 0,
            buffers: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update to every non-frozen parameter block. Rejects
    /// non-finite gradients by block name before touching anything.
    pub fn step(&mut self, mut slots: Vec<ParamSlot<'_>>) -> Result<()> {
        for slot in &slots {
            if slot.frozen {
                continue;
            }
            if slot.grad.iter().any(|v| !v.is_finite()) {
                return Err(NrsError::Numeric(slot.name.to_string()));
            }
        }
        self.step += 1;
        let t = self.step;
        for slot in &mut slots {
            if slot.frozen {
                continue;
            }
            let (buf_a, buf_b) = self
                .buffers
                .entry(slot.name)
                .or_insert_with(|| {
                    (
                        DenseTensor::zeros(slot.value.shape()),
                        DenseTensor::zeros(slot.value.shape()),
                    )
                });
            match self.kind {
                OptimKind::Adam { beta1, beta2, epsilon } => {
                    let bc1 = 1.0 - beta1.powi(t as i32);
                    let bc2 = 1.0 - beta2.powi(t as i32);
                    for ((p, &g), (m, v)) in slot
                        .value
                        .data_mut()
                        .iter_mut()
                        .zip(slot.grad.data())
                        .zip(buf_a.data_mut().iter_mut().zip(buf_b.data_mut()))
                    {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        let m_hat = *m / bc1;
                        let v_hat = *v / bc2;
                        *p -= self.lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
                OptimKind::Sgd { momentum } => {
                    for ((p, &g), (vel, _)) in slot
                        .value
                        .data_mut()
                        .iter_mut()
                        .zip(slot.grad.data())
                        .zip(buf_a.data_mut().iter_mut().zip(buf_b.data_mut()))
                    {
                        *vel = momentum * *vel + g;
                        *p -= self.lr * *vel;
                    }
                }
            }
            if self.weight_decay != 0.0 {
                let decay = self.lr * self.weight_decay;
                for p in slot.value.data_mut() {
                    *p -= decay * *p;
                }
            }
        }
        Ok(())
    }
}
