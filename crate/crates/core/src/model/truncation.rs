//! Inference-time truncation: pull intermediate latents toward the
//! center of mass of the mapping output distribution.

use crate::tensor::{no_grad, sample_normal_vec, Real, StreamRng, Tensor};

use super::mapping::MappingNetwork;
use super::ModelError;

/// Number of mapped latents averaged into the center of mass.
pub const CENTER_SAMPLES: usize = 1000;

pub struct TruncationConfig<T: Real> {
    pub psi: f64,
    /// `[w_dim]` mean of mapped latents.
    pub center: Tensor<T>,
}

/// Estimates the center of mass of the intermediate latent space from
/// 1000 mapped samples, cycling through the class set.
pub fn latent_center<T: Real>(
    mapping: &MappingNetwork<T>,
    num_classes: usize,
    rng: &StreamRng,
) -> Result<Tensor<T>, ModelError> {
    let n = CENTER_SAMPLES;
    let latent = mapping.latent_dim();
    let z = Tensor::from_vec(
        sample_normal_vec::<T>(&mut rng.stream("truncation-center", 0), n * latent),
        &[n, latent],
    );
    let classes: Vec<usize> = (0..n).map(|i| i % num_classes.max(1)).collect();
    no_grad(|| {
        let w = mapping.forward(&z, &classes)?;
        let dim = mapping.w_dim();
        Ok(w.sum_to(&[1, dim])
            .scale(T::ONE / T::from_f64(n as f64))
            .reshape(&[dim]))
    })
}

/// `w' = center + psi * (w - center)` on a `[B, w_dim]` batch. Psi of 1
/// returns the input unchanged, bit for bit.
pub fn truncate<T: Real>(
    w: &Tensor<T>,
    config: &TruncationConfig<T>,
) -> Result<Tensor<T>, ModelError> {
    if !(0.0..=1.0).contains(&config.psi) || !config.psi.is_finite() {
        return Err(ModelError::PsiOutOfRange(config.psi));
    }
    let dim = config.center.numel();
    if w.shape().len() != 2 || w.shape()[1] != dim {
        return Err(ModelError::ShapeMismatch {
            what: "truncation input",
            expected: vec![w.shape().first().copied().unwrap_or(0), dim],
            got: w.shape().to_vec(),
        });
    }
    if config.psi == 1.0 {
        return Ok(w.clone());
    }
    let center = config.center.reshape(&[1, dim]);
    Ok(w.sub(&center)
        .scale(T::from_f64(config.psi))
        .add(&center))
}
