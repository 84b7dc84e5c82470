//! Reverse-mode differentiation over the recorded op graph.
//!
//! Node ids grow monotonically as ops execute, so every node's id is
//! strictly greater than its parents'. Walking nodes in descending id
//! order is therefore a valid reverse topological order; a max-heap
//! gives a deterministic traversal without explicit dependency counts.

use super::{no_grad, with_grad_enabled, BackwardCtx, Real, Tensor};
use std::collections::{BinaryHeap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutogradError {
    #[error("backward requires a scalar output, got shape {shape:?}")]
    NonScalarOutput { shape: Vec<usize> },
    #[error("backward output does not participate in any recorded computation")]
    NoGraph,
    #[error("non-finite gradient produced by backward of `{op}` (path from output: {path})")]
    NonFiniteGradient { op: &'static str, path: String },
    #[error("gradient requested for a tensor outside the recorded graph")]
    NotInGraph,
}

/// Gradients of one scalar output with respect to the graph's leaves.
pub struct Gradients<T: Real> {
    leaf_grads: HashMap<u64, Tensor<T>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for `t` if `t` is a leaf the backward pass reached.
    pub fn get(&self, t: &Tensor<T>) -> Option<&Tensor<T>> {
        t.node_id().and_then(|id| self.leaf_grads.get(&id))
    }

    /// Gradient for the leaf `t`. A leaf the output does not depend on
    /// gets an explicit zero gradient; a tensor with no recorded node
    /// at all is an error.
    pub fn wrt(&self, t: &Tensor<T>) -> Result<Tensor<T>, AutogradError> {
        let id = t.node_id().ok_or(AutogradError::NotInGraph)?;
        Ok(self
            .leaf_grads
            .get(&id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(t.shape())))
    }

    pub fn len(&self) -> usize {
        self.leaf_grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_grads.is_empty()
    }
}

struct HeapEntry<T: Real> {
    id: u64,
    tensor: Tensor<T>,
}

impl<T: Real> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl<T: Real> Eq for HeapEntry<T> {}
impl<T: Real> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

/// Computes gradients of the scalar `output` with respect to every leaf
/// it depends on. With `create_graph` the returned gradients carry their
/// own computation history and can be differentiated again (used for
/// gradient-penalty terms); without it they are constants.
pub fn backward<T: Real>(
    output: &Tensor<T>,
    create_graph: bool,
) -> Result<Gradients<T>, AutogradError> {
    if output.numel() != 1 {
        return Err(AutogradError::NonScalarOutput {
            shape: output.shape().to_vec(),
        });
    }
    let root = output.node().ok_or(AutogradError::NoGraph)?;
    if create_graph {
        with_grad_enabled(true, || backward_inner(output, root.id))
    } else {
        no_grad(|| backward_inner(output, root.id))
    }
}

fn backward_inner<T: Real>(
    output: &Tensor<T>,
    root_id: u64,
) -> Result<Gradients<T>, AutogradError> {
    let mut grads: HashMap<u64, Tensor<T>> = HashMap::new();
    let mut leaf_grads: HashMap<u64, Tensor<T>> = HashMap::new();
    let mut heap: BinaryHeap<HeapEntry<T>> = BinaryHeap::new();
    let mut enqueued: HashSet<u64> = HashSet::new();
    // For error reporting: the child that first sent gradient to a node.
    let mut came_from: HashMap<u64, u64> = HashMap::new();
    let mut op_of: HashMap<u64, &'static str> = HashMap::new();

    grads.insert(root_id, Tensor::ones(output.shape()));
    heap.push(HeapEntry {
        id: root_id,
        tensor: output.clone(),
    });
    enqueued.insert(root_id);
    op_of.insert(root_id, output.node().map(|n| n.op).unwrap_or("?"));

    while let Some(entry) = heap.pop() {
        let tensor = entry.tensor;
        let node = tensor.node().expect("heap holds graph tensors").clone();
        let grad = grads
            .remove(&node.id)
            .expect("popped node always has an accumulated gradient");
        let backward_fn = match &node.backward {
            None => {
                // Leaf: record the final gradient.
                leaf_grads.insert(node.id, grad);
                continue;
            }
            Some(f) => f,
        };
        let ctx = BackwardCtx {
            grad: &grad,
            parents: &node.parents,
            output: &tensor,
        };
        let contributions = backward_fn(&ctx);
        debug_assert_eq!(
            contributions.len(),
            node.parents.len(),
            "backward of `{}` returned {} grads for {} parents",
            node.op,
            contributions.len(),
            node.parents.len()
        );
        for (parent, contribution) in node.parents.iter().zip(contributions) {
            let (pid, contribution) = match (parent.node_id(), contribution) {
                (Some(pid), Some(c)) => (pid, c),
                _ => continue,
            };
            debug_assert_eq!(
                contribution.shape(),
                parent.shape(),
                "backward of `{}` produced gradient shape {:?} for parent shape {:?}",
                node.op,
                contribution.shape(),
                parent.shape()
            );
            if !contribution.all_finite() {
                return Err(AutogradError::NonFiniteGradient {
                    op: node.op,
                    path: op_path(node.id, &came_from, &op_of),
                });
            }
            op_of.entry(pid).or_insert_with(|| {
                parent.node().map(|n| n.op).unwrap_or("?")
            });
            came_from.entry(pid).or_insert(node.id);
            match grads.remove(&pid) {
                None => {
                    grads.insert(pid, contribution);
                }
                Some(existing) => {
                    grads.insert(pid, existing.add(&contribution));
                }
            }
            if enqueued.insert(pid) {
                heap.push(HeapEntry {
                    id: pid,
                    tensor: parent.clone(),
                });
            }
        }
    }

    Ok(Gradients { leaf_grads })
}

/// Reconstructs the op chain from the output down to `id` for messages.
fn op_path(
    id: u64,
    came_from: &HashMap<u64, u64>,
    op_of: &HashMap<u64, &'static str>,
) -> String {
    let mut chain = vec![*op_of.get(&id).unwrap_or(&"?")];
    let mut cur = id;
    while let Some(&child) = came_from.get(&cur) {
        chain.push(*op_of.get(&child).unwrap_or(&"?"));
        cur = child;
        if chain.len() > 64 {
            chain.push("..");
            break;
        }
    }
    chain.reverse();
    chain.join(" -> ")
}
