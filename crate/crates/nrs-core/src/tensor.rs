//! Minimal dense f64 tensors (rank 1..4), row-major, no autodiff.
//!
//! Everything downstream hand-writes its gradients, so this module only
//! provides the forward primitives: matrix multiply, elementwise maps,
//! transpose and reshape. Reductions keep a fixed left-to-right summation
//! order so that repeated runs are bit-identical; `matmul` in particular
//! accumulates over the inner dimension in index order no matter how the
//! output rows are parallelised.

use rayon::prelude::*;

use crate::error::{NrsError, Result};

/// Dense row-major tensor of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Below this many multiply-adds a serial matmul beats the rayon dispatch.
const PAR_MATMUL_THRESHOLD: usize = 32 * 1024;

impl DenseTensor {
    /// Tensor of zeros with the given shape. Every dimension must be >= 1.
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&d| d >= 1),
            "tensor dimensions must be >= 1, got {shape:?}"
        );
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Builds a tensor from a flat row-major buffer.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&d| d >= 1),
            "tensor dimensions must be >= 1, got {shape:?}"
        );
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {shape:?} does not match buffer length {}",
            data.len()
        );
        DenseTensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row-major offset of a multi-index. Panics on out-of-range indices;
    /// silent wraparound is never acceptable here.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(
            index.len(),
            self.shape.len(),
            "index rank {} does not match tensor rank {}",
            index.len(),
            self.shape.len()
        );
        let mut off = 0;
        for (axis, (&i, &d)) in index.iter().zip(&self.shape).enumerate() {
            assert!(i < d, "index {i} out of range for axis {axis} of size {d}");
            off = off * d + i;
        }
        off
    }

    pub fn at(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    /// Contiguous row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        assert_eq!(self.rank(), 2, "row() needs a rank-2 tensor");
        let cols = self.shape[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        assert_eq!(self.rank(), 2, "row_mut() needs a rank-2 tensor");
        let cols = self.shape[1];
        &mut self.data[i * cols..(i + 1) * cols]
    }

    /// Same buffer under a new shape with equal element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<DenseTensor> {
        if shape.iter().product::<usize>() != self.data.len() || shape.iter().any(|&d| d == 0) {
            return Err(NrsError::dim("reshape", &self.shape, shape));
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Rank-2 transpose (copies).
    pub fn transpose(&self) -> DenseTensor {
        assert_eq!(self.rank(), 2, "transpose() needs a rank-2 tensor");
        let (rows, cols) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                out[j * rows + i] = self.data[i * cols + j];
            }
        }
        DenseTensor {
            shape: vec![cols, rows],
            data: out,
        }
    }

    /// Matrix product of two rank-2 tensors.
    ///
    /// Each output element accumulates `fma(a, b, acc)` over the inner
    /// dimension strictly left-to-right (fused multiply-add is a single
    /// IEEE-754 rounding, identical on every platform), so the result is
    /// bit-identical to a naive triple loop using the same operation and
    /// independent of the worker thread count. The kernel blocks over rows
    /// and columns purely for cache reuse; blocking never touches the
    /// per-element accumulation order (only the inner dimension reduces).
    pub fn matmul(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(NrsError::dim("matmul", &self.shape, &other.shape));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![0.0; m * n];
        let lhs = &self.data;
        let rhs = &other.data;

        // rows per parallel task / columns per L1-resident tile
        const ROW_BLOCK: usize = 8;
        const COL_BLOCK: usize = 256;

        let kernel = |i0: usize, out_block: &mut [f64]| {
            let rows = out_block.len() / n;
            for jb in (0..n).step_by(COL_BLOCK) {
                let jend = (jb + COL_BLOCK).min(n);
                for p in 0..k {
                    let rhs_seg = &rhs[p * n + jb..p * n + jend];
                    for r in 0..rows {
                        let a = lhs[(i0 + r) * k + p];
                        let out_seg = &mut out_block[r * n + jb..r * n + jend];
                        for (o, &b) in out_seg.iter_mut().zip(rhs_seg) {
                            *o = a.mul_add(b, *o);
                        }
                    }
                }
            }
        };

        if m * k * n < PAR_MATMUL_THRESHOLD {
            for (chunk_idx, out_block) in out.chunks_mut(ROW_BLOCK * n).enumerate() {
                kernel(chunk_idx * ROW_BLOCK, out_block);
            }
        } else {
            out.par_chunks_mut(ROW_BLOCK * n)
                .enumerate()
                .for_each(|(chunk_idx, out_block)| kernel(chunk_idx * ROW_BLOCK, out_block));
        }

        Ok(DenseTensor {
            shape: vec![m, n],
            data: out,
        })
    }

    /// Elementwise sum.
    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with("add", other, |a, b| a + b)
    }

    /// Elementwise difference.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with("mul", other, |a, b| a * b)
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: f64) -> DenseTensor {
        self.map(|v| v * factor)
    }

    /// max(0, v) per element.
    pub fn relu(&self) -> DenseTensor {
        self.map(|v| if v >= 0.0 { v } else { 0.0 })
    }

    /// 1 where the forward pre-activation was >= 0, else 0. The tie at
    /// exactly zero passes gradient, matching `relu`'s choice of branch.
    pub fn relu_grad_mask(&self) -> DenseTensor {
        self.map(|v| if v >= 0.0 { 1.0 } else { 0.0 })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(
        &self,
        op: &'static str,
        other: &DenseTensor,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(NrsError::dim(op, &self.shape, &other.shape));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }
}
