//! Gradient penalty on critic scores along real/fake interpolations.

use super::TrainError;
use crate::model::{Discriminator, ModelError};
use crate::tensor::{backward, no_grad, sample_uniform_vec, Real, StreamRng, Tensor};

/// RNG site for the per-sample mixing coefficients.
const EPS_SITE: &str = "gp/eps";

/// Keeps the interpolated-point norm differentiable at zero gradient.
const NORM_FLOOR: f64 = 1e-12;

/// Penalty pushing the critic's gradient norm toward 1 along random
/// interpolations between real and fake samples. The returned scalar
/// carries a full second-order graph, so differentiating it reaches the
/// critic's parameters.
pub fn gradient_penalty<T: Real>(
    discriminator: &Discriminator<T>,
    x_real: &Tensor<T>,
    x_fake: &Tensor<T>,
    classes: &[usize],
    rng: &StreamRng,
    step: u64,
) -> Result<Tensor<T>, TrainError> {
    let b = x_real.shape()[0];
    let eps = sample_uniform_vec::<T>(&mut rng.stream(EPS_SITE, step), b, 0.0, 1.0);
    gradient_penalty_with_eps(discriminator, x_real, x_fake, classes, &eps)
}

/// Same penalty with caller-chosen mixing coefficients, one per sample.
pub fn gradient_penalty_with_eps<T: Real>(
    discriminator: &Discriminator<T>,
    x_real: &Tensor<T>,
    x_fake: &Tensor<T>,
    classes: &[usize],
    eps: &[T],
) -> Result<Tensor<T>, TrainError> {
    gradient_penalty_fn(
        |x| discriminator.criticize(x, classes),
        x_real,
        x_fake,
        eps,
    )
}

/// Core penalty over any critic producing one score per sample. Scores
/// must be per-sample independent for the per-row norms to equal the
/// sample-wise gradient norms.
pub fn gradient_penalty_fn<T, F>(
    critic: F,
    x_real: &Tensor<T>,
    x_fake: &Tensor<T>,
    eps: &[T],
) -> Result<Tensor<T>, TrainError>
where
    T: Real,
    F: FnOnce(&Tensor<T>) -> Result<Tensor<T>, ModelError>,
{
    if x_real.shape() != x_fake.shape() {
        return Err(TrainError::BatchMismatch {
            real: x_real.shape().to_vec(),
            fake: x_fake.shape().to_vec(),
        });
    }
    let shape = x_real.shape().to_vec();
    let b = shape[0];
    if eps.len() != b {
        return Err(TrainError::Config(format!(
            "need one mixing coefficient per sample: batch {}, got {}",
            b,
            eps.len()
        )));
    }
    let mut eps_shape = vec![1; shape.len()];
    eps_shape[0] = b;
    // Mix at the data level and re-enter the graph as a leaf, so the
    // penalty differentiates the critic alone, not the fake's history.
    let mixed = no_grad(|| {
        let e = Tensor::from_vec(eps.to_vec(), &eps_shape);
        let counter = e.neg().add_scalar(T::ONE);
        x_real.mul(&e).add(&x_fake.mul(&counter))
    });
    let x_hat = Tensor::leaf(mixed.data().to_vec(), &shape);

    let scores = critic(&x_hat)?;
    let grads = backward(&scores.sum_all(), true)?;
    let grad_x = grads.wrt(&x_hat)?;

    let mut norm_shape = vec![1; shape.len()];
    norm_shape[0] = b;
    let norm = grad_x
        .square()
        .sum_to(&norm_shape)
        .add_scalar(T::from_f64(NORM_FLOOR))
        .sqrt_t();
    Ok(norm.add_scalar(-T::ONE).square().mean_all())
}
