//! Skeleton topology: partitioned, degree-normalized adjacencies and the
//! multi-resolution graph pyramid with spatial up/downsampling plus
//! temporal resampling.

mod partition;
mod pyramid;
mod resample;
#[cfg(test)]
mod tests;

pub use partition::{partition_and_normalize, PartitionedAdjacency, PARTITION_NAMES};
pub use pyramid::{build_pyramid, GraphPyramid, PyramidLevel, PyramidTable};
pub use resample::temporal_resample;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({a}, {b}) references a joint out of range (joint count {n})")]
    EdgeOutOfRange { a: usize, b: usize, n: usize },
    #[error("self-loop on joint {joint}; identity is handled by the root partition")]
    SelfLoop { joint: usize },
    #[error("duplicate edge ({a}, {b})")]
    DuplicateEdge { a: usize, b: usize },
    #[error("skeleton graph is disconnected: {unreached} of {n} joints unreachable from joint 0")]
    Disconnected { unreached: usize, n: usize },
    #[error("{what} joint {joint} out of range (joint count {n})")]
    JointOutOfRange {
        what: &'static str,
        joint: usize,
        n: usize,
    },
    #[error("joint name count {names} does not match joint count {n}")]
    NameCount { names: usize, n: usize },
    #[error("pyramid table inconsistent: {0}")]
    Table(String),
    #[error("pyramid level {level} out of range ({levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("tensor has {got} joints, level expects {expected}")]
    JointDimMismatch { expected: usize, got: usize },
    #[error("temporal resample target length must be >= 1")]
    EmptyResample,
    #[error("motion tensor must have >= 1 frame")]
    NoFrames,
    #[error("no bundled pyramid named `{0}` (available: ntu25, h36m15)")]
    UnknownBundled(String),
    #[error("pyramid file: {0}")]
    Io(#[from] std::io::Error),
    #[error("pyramid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Skeleton topology at one resolution.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SkeletonSpec {
    pub name: String,
    /// Joint names, index order defines the joint dimension layout.
    pub joint_names: Vec<String>,
    /// Undirected edges over joint indices, no self-loops.
    pub edges: Vec<(usize, usize)>,
    /// Gravity center used to orient the partitions.
    pub center_joint: usize,
    /// Anchor joint (coordinate origin for local normalization).
    pub root_joint: usize,
}

impl SkeletonSpec {
    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.joint_count();
        if self.center_joint >= n {
            return Err(GraphError::JointOutOfRange {
                what: "center",
                joint: self.center_joint,
                n,
            });
        }
        if self.root_joint >= n {
            return Err(GraphError::JointOutOfRange {
                what: "root",
                joint: self.root_joint,
                n,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return Err(GraphError::EdgeOutOfRange { a, b, n });
            }
            if a == b {
                return Err(GraphError::SelfLoop { joint: a });
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge { a, b });
            }
        }
        let unreached = n - reachable_count(n, &self.edges);
        if unreached > 0 {
            return Err(GraphError::Disconnected { unreached, n });
        }
        Ok(())
    }

    /// Symmetric 0/1 adjacency without self-loops, row-major n x n.
    pub fn adjacency(&self) -> Vec<f64> {
        let n = self.joint_count();
        let mut a = vec![0.0; n * n];
        for &(i, j) in &self.edges {
            a[i * n + j] = 1.0;
            a[j * n + i] = 1.0;
        }
        a
    }

    /// Hop distance from every joint to `from` (breadth-first).
    pub fn hop_distances(&self, from: usize) -> Vec<usize> {
        let n = self.joint_count();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

fn reachable_count(n: usize, edges: &[(usize, usize)]) -> usize {
    if n == 0 {
        return 0;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a < n && b < n {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count
}
