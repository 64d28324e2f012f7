//! Central-difference verification of the hand-written backward passes.
//!
//! For every parameter element the checker compares the analytic gradient
//! against `(L(p + eps) - L(p - eps)) / 2 eps`, where `L` is the
//! training-mode batch loss, and reports the worst relative error per
//! parameter block. Batch-norm blocks get a looser tolerance: the batch
//! statistics couple every sample, which amplifies finite-difference noise.

use std::fmt;

use serde::Serialize;

use crate::data::Labels;
use crate::error::Result;
use crate::net::{Model, Network};
use crate::tensor::DenseTensor;
use crate::train::loss_and_grad;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    pub tolerance: f64,
    pub bn_tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            epsilon: 1e-5,
            tolerance: 1e-5,
            bn_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub pass: bool,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            writeln!(
                f,
                "{:<20} max rel err {:>12.3e}  (tol {:.0e})  {}",
                b.name,
                b.max_rel_err,
                b.tolerance,
                if b.pass { "ok" } else { "FAIL" }
            )?;
        }
        writeln!(f, "gradient check: {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// `|a - n| / max(|a|, |n|, 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

fn batch_loss(net: &mut Network, x: &DenseTensor, labels: &Labels) -> Result<f64> {
    let out = net.forward_train(x)?;
    Ok(loss_and_grad(&out, labels)?.0)
}

/// Checks every parameter block of `net` on one batch.
pub fn grad_check(
    net: &mut Network,
    x: &DenseTensor,
    labels: &Labels,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    grad_check_tampered(net, x, labels, cfg, None)
}

/// Like [`grad_check`], but optionally scales one analytic gradient block
/// before comparing. Scaling by anything other than 1 must make the check
/// fail; this is the detector-sanity canary used in tests.
pub fn grad_check_tampered(
    net: &mut Network,
    x: &DenseTensor,
    labels: &Labels,
    cfg: &GradCheckConfig,
    tamper: Option<(&str, f64)>,
) -> Result<GradCheckReport> {
    let out = net.forward_train(x)?;
    let (_, grad_out) = loss_and_grad(&out, labels)?;
    net.backward(&grad_out)?;

    let mut analytic: Vec<(String, Vec<f64>)> = net
        .params()
        .iter()
        .map(|slot| (slot.name.to_string(), slot.grad.data().to_vec()))
        .collect();
    if let Some((block, scale)) = tamper {
        for (name, grads) in &mut analytic {
            if name == block {
                for g in grads.iter_mut() {
                    *g *= scale;
                }
            }
        }
    }

    let mut blocks = Vec::new();
    for (block_idx, (name, grads)) in analytic.iter().enumerate() {
        let mut max_err = 0.0f64;
        for elem in 0..grads.len() {
            let numeric = {
                let original = {
                    let mut slots = net.params();
                    let v = slots[block_idx].value.data()[elem];
                    slots[block_idx].value.data_mut()[elem] = v + cfg.epsilon;
                    v
                };
                let plus = batch_loss(net, x, labels)?;
                {
                    let mut slots = net.params();
                    slots[block_idx].value.data_mut()[elem] = original - cfg.epsilon;
                }
                let minus = batch_loss(net, x, labels)?;
                {
                    let mut slots = net.params();
                    slots[block_idx].value.data_mut()[elem] = original;
                }
                (plus - minus) / (2.0 * cfg.epsilon)
            };
            max_err = max_err.max(relative_error(grads[elem], numeric));
        }
        let tolerance = if name.starts_with("bn") {
            cfg.bn_tolerance
        } else {
            cfg.tolerance
        };
        blocks.push(BlockCheck {
            name: name.clone(),
            max_rel_err: max_err,
            tolerance,
            pass: max_err < tolerance,
        });
    }
    let pass = blocks.iter().all(|b| b.pass);
    Ok(GradCheckReport { blocks, pass })
}
