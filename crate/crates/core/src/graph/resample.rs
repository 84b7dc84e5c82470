//! Temporal resampling of motion tensors.

use super::GraphError;
use crate::tensor::{AxisMap, Real, Tensor};
use std::sync::Arc;

/// Linearly resamples `[B, C, T, N]` to `new_t` frames on a uniform
/// grid with endpoints preserved. `new_t == T` is an exact identity.
pub fn temporal_resample<T: Real>(x: &Tensor<T>, new_t: usize) -> Result<Tensor<T>, GraphError> {
    if new_t == 0 {
        return Err(GraphError::EmptyResample);
    }
    let shape = x.shape();
    assert_eq!(shape.len(), 4, "motion tensor is [B, C, T, N], got {:?}", shape);
    let t = shape[2];
    if t == 0 {
        return Err(GraphError::NoFrames);
    }
    if new_t == t {
        // Identity map keeps values bitwise.
        return Ok(x.clone());
    }
    let map = Arc::new(AxisMap::linear_resample(t, new_t));
    Ok(x.axis_linear(2, &map))
}
