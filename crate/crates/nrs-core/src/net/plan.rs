//! Seeded permutation plans: the only source of randomness in the expansion.

use serde::{Deserialize, Serialize};

use crate::error::{NrsError, Result};
use crate::rng::{random_permutation, stream_rng};

/// The `M = n_h * n_h * n_mul` feature orders that define an expansion.
///
/// Order `t` is an independent uniform permutation of `0..d`, drawn by
/// Fisher-Yates from substream `t` of the plan seed, so the whole plan is a
/// pure function of `(d, n_mul, n_h, seed)`. Permutations are sampled
/// independently; collisions between orders are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub d: usize,
    pub n_mul: usize,
    pub n_h: usize,
    pub seed: u64,
    orders: Vec<Vec<usize>>,
}

/// Builds the plan for `d` input features, depth expansion rate `n_mul` and
/// spatial side `n_h`.
pub fn build_permutation_plan(
    d: usize,
    n_mul: usize,
    n_h: usize,
    seed: u64,
) -> Result<PermutationPlan> {
    if d < 1 || n_mul < 1 || n_h < 1 {
        return Err(NrsError::Config(format!(
            "permutation plan needs d, n_mul, n_h >= 1, got d={d}, n_mul={n_mul}, n_h={n_h}"
        )));
    }
    let m = n_h * n_h * n_mul;
    let orders = (0..m)
        .map(|t| random_permutation(d, &mut stream_rng(seed, t as u64)))
        .collect();
    Ok(PermutationPlan {
        d,
        n_mul,
        n_h,
        seed,
        orders,
    })
}

impl PermutationPlan {
    /// Number of permutations.
    pub fn m(&self) -> usize {
        self.n_h * self.n_h * self.n_mul
    }

    /// Expanded channel count `C = n_mul * d`.
    pub fn channels(&self) -> usize {
        self.n_mul * self.d
    }

    /// Feature order of permutation `t` (0-based).
    pub fn order(&self, t: usize) -> &[usize] {
        &self.orders[t]
    }

    /// Source feature for cell `(i, j, k)` of the expanded tensor, together
    /// with the permutation index it came from.
    ///
    /// Channel `k` sits in depth block `k / d` and holds element `s = k mod d`
    /// of the permuted vector at spatial slot `(i, j)`; the permutation index
    /// is `t = (k / d) * n_h^2 + i * n_h + j`.
    pub fn source(&self, i: usize, j: usize, k: usize) -> (usize, usize) {
        let s = k % self.d;
        let t = (k / self.d) * self.n_h * self.n_h + i * self.n_h + j;
        (self.orders[t][s], t)
    }
}
