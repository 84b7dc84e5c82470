//! Named parameter trees.
//!
//! Models expose their trainable tensors through a visitor, keyed by
//! slash-separated paths. Optimizers and checkpoints operate on those
//! paths, so layout on disk and update order are both deterministic.

use super::{Real, Tensor};
use std::collections::BTreeMap;

/// A model whose trainable leaves can be enumerated by path.
pub trait Parameterized<T: Real> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>));
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>));
}

pub fn join_path(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{}/{}", prefix, name)
    }
}

/// Sorted snapshot of a model's parameters.
pub type ParamMap<T> = BTreeMap<String, Tensor<T>>;

pub fn collect_params<T: Real, M: Parameterized<T> + ?Sized>(
    model: &M,
    prefix: &str,
) -> ParamMap<T> {
    let mut map = BTreeMap::new();
    model.visit_params(prefix, &mut |name, t| {
        let prev = map.insert(name.to_string(), t.clone());
        assert!(prev.is_none(), "duplicate parameter path `{}`", name);
    });
    map
}

/// Leaf parameter with standard fan-in scaled uniform init.
pub fn init_uniform_fan_in<T: Real>(
    shape: &[usize],
    fan_in: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Tensor<T> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let data = super::rng::sample_uniform_vec::<T>(
        rng,
        shape.iter().product(),
        -bound,
        bound,
    );
    Tensor::leaf(data, shape)
}
