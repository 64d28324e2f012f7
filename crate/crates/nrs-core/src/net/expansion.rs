//! Expansion of a feature vector into an `n_h x n_h x C` tensor by seeded
//! permutations, plus the adjoint used during backprop.
//!
//! Cell `(i, j, k)` holds element `k mod d` of the permuted copy
//! `t = (k / d) * n_h^2 + i * n_h + j`, so each of the `M` permuted copies
//! lands as one contiguous depth-slice per spatial slot and every input
//! feature appears exactly `M` times in the output.

use crate::error::{NrsError, Result};
use crate::net::plan::PermutationPlan;
use crate::tensor::DenseTensor;

/// Expanded view of one input vector with per-cell provenance.
#[derive(Debug, Clone)]
pub struct ExpandedTensor {
    /// Shape `[n_h, n_h, C]`.
    pub body: DenseTensor,
    /// Source feature index per cell, row-major over `(i, j, k)`.
    pub source_features: Vec<usize>,
    /// Permutation index per cell, row-major over `(i, j, k)`.
    pub perm_indices: Vec<usize>,
}

/// Source feature per flattened `(i, j, k)` cell.
///
/// The gather map fully describes the expansion: forward is `out[cell] =
/// x[map[cell]]` and the adjoint scatter-adds along the same map.
pub fn expansion_map(plan: &PermutationPlan) -> Vec<usize> {
    let (n_h, c) = (plan.n_h, plan.channels());
    let mut map = Vec::with_capacity(n_h * n_h * c);
    for i in 0..n_h {
        for j in 0..n_h {
            for k in 0..c {
                map.push(plan.source(i, j, k).0);
            }
        }
    }
    map
}

/// Expands `x` according to `plan`. Pure function of its arguments.
pub fn expand(x: &[f64], plan: &PermutationPlan) -> Result<ExpandedTensor> {
    if x.len() != plan.d {
        return Err(NrsError::dim("expand", &[x.len()], &[plan.d]));
    }
    let (n_h, c) = (plan.n_h, plan.channels());
    let mut data = Vec::with_capacity(n_h * n_h * c);
    let mut source_features = Vec::with_capacity(n_h * n_h * c);
    let mut perm_indices = Vec::with_capacity(n_h * n_h * c);
    for i in 0..n_h {
        for j in 0..n_h {
            for k in 0..c {
                let (src, t) = plan.source(i, j, k);
                data.push(x[src]);
                source_features.push(src);
                perm_indices.push(t);
            }
        }
    }
    Ok(ExpandedTensor {
        body: DenseTensor::from_vec(&[n_h, n_h, c], data),
        source_features,
        perm_indices,
    })
}

/// Adjoint of `expand`: accumulates the expanded-tensor gradient back onto
/// the `d` input features. Exactly `M` cells contribute to each feature.
pub fn expand_backward(grad_body: &DenseTensor, plan: &PermutationPlan) -> Result<Vec<f64>> {
    let (n_h, c) = (plan.n_h, plan.channels());
    if grad_body.shape() != [n_h, n_h, c] {
        return Err(NrsError::dim("expand_backward", grad_body.shape(), &[n_h, n_h, c]));
    }
    let map = expansion_map(plan);
    let mut grad_x = vec![0.0; plan.d];
    for (&src, &g) in map.iter().zip(grad_body.data()) {
        grad_x[src] += g;
    }
    Ok(grad_x)
}

/// Batch expansion: row `n` of the output is `expand(x_n)` flattened
/// row-major, shape `[N, n_h * n_h * C]`.
pub fn expand_batch(x: &DenseTensor, map: &[usize], d: usize) -> DenseTensor {
    assert_eq!(x.shape()[1], d, "batch width must equal plan.d");
    let n = x.shape()[0];
    let width = map.len();
    let mut out = vec![0.0; n * width];
    for (row_out, row_idx) in out.chunks_exact_mut(width).zip(0..n) {
        let row_in = x.row(row_idx);
        for (o, &src) in row_out.iter_mut().zip(map) {
            *o = row_in[src];
        }
    }
    DenseTensor::from_vec(&[n, width], out)
}

/// Batch adjoint of `expand_batch`.
pub fn expand_batch_backward(grad: &DenseTensor, map: &[usize], d: usize) -> DenseTensor {
    let n = grad.shape()[0];
    let width = map.len();
    assert_eq!(grad.shape()[1], width);
    let mut out = vec![0.0; n * d];
    for (row_grad, row_idx) in grad.data().chunks_exact(width).zip(0..n) {
        let row_out = &mut out[row_idx * d..(row_idx + 1) * d];
        for (&g, &src) in row_grad.iter().zip(map) {
            row_out[src] += g;
        }
    }
    DenseTensor::from_vec(&[n, d], out)
}
