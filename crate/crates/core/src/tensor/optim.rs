//! Adam optimizer over named parameter trees.

use super::param::Parameterized;
use super::{Gradients, Real, Tensor};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("non-finite gradient for parameter `{name}`")]
    NonFiniteGradient { name: String },
    #[error("optimizer state for `{name}` has {state} elements, parameter has {param}")]
    StateShapeMismatch {
        name: String,
        state: usize,
        param: usize,
    },
    #[error("gradient missing for parameter `{name}`")]
    MissingGradient { name: String },
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter.
#[derive(Clone, Debug)]
pub struct AdamState<T: Real> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

/// Adam with bias correction. Moments are kept per parameter path, so
/// the update is independent of traversal details and survives
/// checkpoint round trips exactly.
pub struct Adam<T: Real> {
    pub cfg: AdamConfig,
    /// Number of completed steps (t in the bias-correction terms).
    pub step_count: u64,
    pub state: BTreeMap<String, AdamState<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            step_count: 0,
            state: BTreeMap::new(),
        }
    }

    /// Applies one update to every parameter of `model` using `grads`.
    /// Parameters the output did not depend on receive zero gradient and
    /// keep their value (their moments still decay toward zero).
    pub fn step<M: Parameterized<T> + ?Sized>(
        &mut self,
        model: &mut M,
        prefix: &str,
        grads: &Gradients<T>,
    ) -> Result<(), OptimError> {
        self.step_count += 1;
        let t = self.step_count;
        let bc1 = 1.0 - self.cfg.beta1.powi(t as i32);
        let bc2 = 1.0 - self.cfg.beta2.powi(t as i32);
        let lr = T::from_f64(self.cfg.lr);
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let one_m_b1 = T::from_f64(1.0 - self.cfg.beta1);
        let one_m_b2 = T::from_f64(1.0 - self.cfg.beta2);
        let inv_bc1 = T::from_f64(1.0 / bc1);
        let inv_bc2 = T::from_f64(1.0 / bc2);
        let eps = T::from_f64(self.cfg.eps);

        let mut result = Ok(());
        let state = &mut self.state;
        model.visit_params_mut(prefix, &mut |name, param| {
            if result.is_err() {
                return;
            }
            let g = match grads.wrt(&*param) {
                Ok(g) => g,
                Err(_) => {
                    result = Err(OptimError::MissingGradient {
                        name: name.to_string(),
                    });
                    return;
                }
            };
            if !g.all_finite() {
                result = Err(OptimError::NonFiniteGradient {
                    name: name.to_string(),
                });
                return;
            }
            let n = param.numel();
            let entry = state.entry(name.to_string()).or_insert_with(|| AdamState {
                m: vec![T::ZERO; n],
                v: vec![T::ZERO; n],
            });
            if entry.m.len() != n || entry.v.len() != n {
                result = Err(OptimError::StateShapeMismatch {
                    name: name.to_string(),
                    state: entry.m.len(),
                    param: n,
                });
                return;
            }
            let gd = g.data();
            let pd = param.data();
            let mut new_data = Vec::with_capacity(n);
            for i in 0..n {
                let gi = gd[i];
                entry.m[i] = b1 * entry.m[i] + one_m_b1 * gi;
                entry.v[i] = b2 * entry.v[i] + one_m_b2 * gi * gi;
                let m_hat = entry.m[i] * inv_bc1;
                let v_hat = entry.v[i] * inv_bc2;
                new_data.push(pd[i] - lr * m_hat / (v_hat.sqrt() + eps));
            }
            *param = Tensor::leaf(new_data, param.shape());
        });
        result
    }
}
