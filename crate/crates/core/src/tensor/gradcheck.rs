//! Finite-difference verification of analytic gradients (f64 only;
//! 32-bit differences are dominated by rounding noise).

use super::{backward, Tensor};
use thiserror::Error;

#[derive(Debug, Error)]
#[error(
    "gradient mismatch at input {input}, element {index}: analytic {analytic:.9e}, \
     numeric {numeric:.9e}, rel err {rel_err:.3e} (tol {tol:.1e})"
)]
pub struct GradCheckError {
    pub input: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
    pub tol: f64,
}

/// Central-difference gradient of `f` at `x0` with step `h`.
pub fn central_diff_grad<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x0.len());
    let mut x = x0.to_vec();
    for i in 0..x0.len() {
        x[i] = x0[i] + h;
        let up = f(&x);
        x[i] = x0[i] - h;
        let down = f(&x);
        x[i] = x0[i];
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / f64::max(1.0, f64::max(a.abs(), b.abs()))
}

/// Verifies the reverse-mode gradient of a scalar-valued function of
/// several tensors against central differences, one input at a time.
pub fn grad_check_multi<F>(
    f: F,
    inputs: &[(&[f64], &[usize])],
    h: f64,
    tol: f64,
) -> Result<(), GradCheckError>
where
    F: Fn(&[Tensor<f64>]) -> Tensor<f64>,
{
    let leaves: Vec<Tensor<f64>> = inputs
        .iter()
        .map(|(data, shape)| Tensor::leaf(data.to_vec(), shape))
        .collect();
    let out = f(&leaves);
    assert_eq!(out.numel(), 1, "grad check target must be scalar");
    let grads = backward(&out, false).expect("grad check backward");

    for (which, (data, shape)) in inputs.iter().enumerate() {
        let analytic = grads
            .wrt(&leaves[which])
            .expect("grad check leaf is in graph");
        let analytic = analytic.to_f64_vec();
        let numeric = central_diff_grad(
            |x| {
                let mut probe: Vec<Tensor<f64>> = leaves.clone();
                probe[which] = Tensor::from_vec(x.to_vec(), shape);
                // Constants elsewhere: re-evaluate with only this input moved.
                f(&probe).item()
            },
            data,
            h,
        );
        for i in 0..data.len() {
            let e = rel_err(analytic[i], numeric[i]);
            if !analytic[i].is_finite() || !numeric[i].is_finite() || e > tol {
                return Err(GradCheckError {
                    input: which,
                    index: i,
                    analytic: analytic[i],
                    numeric: numeric[i],
                    rel_err: e,
                    tol,
                });
            }
        }
    }
    Ok(())
}

/// Single-input convenience wrapper around `grad_check_multi`.
pub fn grad_check<F>(f: F, x0: &[f64], shape: &[usize], h: f64, tol: f64) -> Result<(), GradCheckError>
where
    F: Fn(&Tensor<f64>) -> Tensor<f64>,
{
    grad_check_multi(|xs| f(&xs[0]), &[(x0, shape)], h, tol)
}

/// Finite-difference check of a scalar function of flat `f64`
/// parameters, for callers that assemble tensors themselves.
pub fn check_against<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    analytic: &[f64],
    h: f64,
    tol: f64,
) -> Result<(), GradCheckError> {
    assert_eq!(x0.len(), analytic.len());
    let numeric = central_diff_grad(&f, x0, h);
    for i in 0..x0.len() {
        let e = rel_err(analytic[i], numeric[i]);
        if !analytic[i].is_finite() || !numeric[i].is_finite() || e > tol {
            return Err(GradCheckError {
                input: 0,
                index: i,
                analytic: analytic[i],
                numeric: numeric[i],
                rel_err: e,
                tol,
            });
        }
    }
    Ok(())
}
