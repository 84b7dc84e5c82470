//! Adjacency partitioning and degree normalization.
//!
//! The neighborhood of each joint splits into three partitions relative
//! to the skeleton's gravity center: the joint itself (root/identity),
//! neighbors strictly closer to the center (centripetal), and everything
//! else (centrifugal). Each partition is degree-normalized on its own.

use super::{GraphError, SkeletonSpec};
use crate::tensor::{Real, Tensor};

pub const PARTITION_NAMES: [&str; 3] = ["root", "centripetal", "centrifugal"];

/// Raw and degree-normalized partition matrices for one pyramid level.
#[derive(Clone, Debug)]
pub struct PartitionedAdjacency {
    pub level: usize,
    pub n: usize,
    /// Row-major n x n, order: root, centripetal, centrifugal.
    /// Rows index the receiving joint, columns the source joint.
    pub raw: [Vec<f64>; 3],
    /// raw_ij / sqrt(d_i * d_j) with d = per-row sums of that partition;
    /// rows of degree zero use d = 1 (no-op guard).
    pub normalized: [Vec<f64>; 3],
}

impl PartitionedAdjacency {
    /// Per-row sums of one raw partition, with the zero-degree guard.
    pub fn guarded_degrees(raw: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let d: f64 = raw[i * n..(i + 1) * n].iter().sum();
                if d == 0.0 {
                    1.0
                } else {
                    d
                }
            })
            .collect()
    }

    /// Raw partitions as constant tensors in the requested precision.
    pub fn raw_tensors<T: Real>(&self) -> [Tensor<T>; 3] {
        [0, 1, 2].map(|p| Tensor::from_f64_slice(&self.raw[p], &[self.n, self.n]))
    }

    /// Normalized partitions as constant tensors.
    pub fn normalized_tensors<T: Real>(&self) -> [Tensor<T>; 3] {
        [0, 1, 2].map(|p| Tensor::from_f64_slice(&self.normalized[p], &[self.n, self.n]))
    }
}

/// Splits the adjacency of `spec` into root/centripetal/centrifugal
/// partitions and degree-normalizes each.
///
/// An edge entry at (i, j) lands in centripetal when the source j sits
/// strictly closer to the center than the receiver i; ties and outward
/// edges go to centrifugal. The three raw partitions always sum to
/// A + I elementwise.
pub fn partition_and_normalize(spec: &SkeletonSpec) -> Result<PartitionedAdjacency, GraphError> {
    spec.validate()?;
    let n = spec.joint_count();
    let hops = spec.hop_distances(spec.center_joint);
    let adjacency = spec.adjacency();

    let mut root = vec![0.0; n * n];
    let mut centripetal = vec![0.0; n * n];
    let mut centrifugal = vec![0.0; n * n];
    for i in 0..n {
        root[i * n + i] = 1.0;
        for j in 0..n {
            if adjacency[i * n + j] != 0.0 {
                if hops[j] < hops[i] {
                    centripetal[i * n + j] = 1.0;
                } else {
                    centrifugal[i * n + j] = 1.0;
                }
            }
        }
    }

    let raw = [root, centripetal, centrifugal];
    let normalized = [0, 1, 2].map(|p| {
        let part = &raw[p];
        let d = PartitionedAdjacency::guarded_degrees(part, n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = part[i * n + j] / (d[i] * d[j]).sqrt();
            }
        }
        out
    });

    Ok(PartitionedAdjacency {
        level: 0,
        n,
        raw,
        normalized,
    })
}
