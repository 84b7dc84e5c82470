//! Unbiased MMD estimation under a Gaussian RBF bandwidth mixture.

use super::{BandwidthSpec, KernelConfig, MetricsError};
use crate::tensor::{Real, Tensor};

/// One MMD evaluation: `value` is the reporting number (negatives
/// clamped to zero before the square root), `raw` keeps the unbiased
/// MMD^2 estimates (one per frame for the per-frame variant).
#[derive(Clone, Debug)]
pub struct MmdValue {
    pub value: f64,
    pub raw: Vec<f64>,
    pub clamped: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Median pairwise Euclidean distance over the pooled sample.
pub fn median_pairwise_distance(pool: &[&[f64]]) -> f64 {
    let mut dists = Vec::with_capacity(pool.len() * (pool.len() - 1) / 2);
    for i in 0..pool.len() {
        for j in (i + 1)..pool.len() {
            dists.push(squared_distance(pool[i], pool[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let mid = dists.len() / 2;
    if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    }
}

fn resolve_bandwidths(
    kernel: &KernelConfig,
    pool: &[&[f64]],
) -> Result<Vec<f64>, MetricsError> {
    kernel.validate()?;
    Ok(match &kernel.bandwidths {
        BandwidthSpec::Fixed(values) => values.clone(),
        BandwidthSpec::MedianScaled(factors) => {
            let median = median_pairwise_distance(pool);
            if median == 0.0 {
                vec![kernel.fallback_bandwidth; factors.len()]
            } else {
                factors.iter().map(|f| f * median).collect()
            }
        }
    })
}

/// Mixture kernel value for one squared distance: the sum of Gaussian
/// RBFs exp(-d^2 / (2 sigma^2)) over the bandwidth set.
fn kernel_value(d2: f64, bandwidths: &[f64]) -> f64 {
    bandwidths
        .iter()
        .map(|&s| (-d2 / (2.0 * s * s)).exp())
        .sum()
}

/// Unbiased MMD^2 estimator: diagonal-excluded within-set averages plus
/// the full cross average, under the mixture kernel.
pub fn mmd2_unbiased(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    kernel: &KernelConfig,
) -> Result<f64, MetricsError> {
    let (n, m) = (x.len(), y.len());
    if n < 2 || m < 2 {
        return Err(MetricsError::SampleCount {
            need: 2,
            real: n,
            fake: m,
        });
    }
    let dim = x[0].len();
    for v in x.iter().chain(y.iter()) {
        if v.len() != dim {
            return Err(MetricsError::DimMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let pool: Vec<&[f64]> = x.iter().chain(y.iter()).map(|v| v.as_slice()).collect();
    let bandwidths = resolve_bandwidths(kernel, &pool)?;

    let mut xx = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                xx += kernel_value(squared_distance(&x[i], &x[j]), &bandwidths);
            }
        }
    }
    let mut yy = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                yy += kernel_value(squared_distance(&y[i], &y[j]), &bandwidths);
            }
        }
    }
    let mut xy = 0.0;
    for xi in x {
        for yj in y {
            xy += kernel_value(squared_distance(xi, yj), &bandwidths);
        }
    }
    Ok(xx / (n * (n - 1)) as f64 + yy / (m * (m - 1)) as f64 - 2.0 * xy / (n * m) as f64)
}

fn check_sets<T: Real>(
    real: &[Tensor<T>],
    fake: &[Tensor<T>],
) -> Result<Vec<usize>, MetricsError> {
    if real.len() < 2 || fake.len() < 2 {
        return Err(MetricsError::SampleCount {
            need: 2,
            real: real.len(),
            fake: fake.len(),
        });
    }
    let shape = real[0].shape().to_vec();
    for s in real.iter().chain(fake.iter()) {
        if s.shape() != shape.as_slice() {
            return Err(MetricsError::ShapeMismatch {
                real: shape,
                fake: s.shape().to_vec(),
            });
        }
    }
    Ok(shape)
}

fn clamp_root(raw: &[f64]) -> (f64, bool) {
    let clamped = raw.iter().any(|&v| v < 0.0);
    let mean = raw.iter().map(|&v| v.max(0.0).sqrt()).sum::<f64>() / raw.len() as f64;
    (mean, clamped)
}

/// Per-frame MMD: each frame's joint coordinates form one sample; the
/// reported value is the mean over frames of sqrt(max(MMD^2, 0)).
pub fn mmd_actions<T: Real>(
    real: &[Tensor<T>],
    fake: &[Tensor<T>],
    kernel: &KernelConfig,
) -> Result<MmdValue, MetricsError> {
    let shape = check_sets(real, fake)?;
    let [c, t, n] = [shape[0], shape[1], shape[2]];
    let frame_of = |s: &Tensor<T>, frame: usize| -> Vec<f64> {
        let data = s.data();
        let mut out = Vec::with_capacity(c * n);
        for ch in 0..c {
            let base = (ch * t + frame) * n;
            out.extend(data[base..base + n].iter().map(|v| v.to_f64()));
        }
        out
    };
    let mut raw = Vec::with_capacity(t);
    for frame in 0..t {
        let x: Vec<Vec<f64>> = real.iter().map(|s| frame_of(s, frame)).collect();
        let y: Vec<Vec<f64>> = fake.iter().map(|s| frame_of(s, frame)).collect();
        raw.push(mmd2_unbiased(&x, &y, kernel)?);
    }
    let (value, clamped) = clamp_root(&raw);
    Ok(MmdValue {
        value,
        raw,
        clamped,
    })
}

/// Whole-sequence MMD over flattened `[C, T, N]` vectors, same
/// clamping and rooting convention as the per-frame variant.
pub fn mmd_sequences<T: Real>(
    real: &[Tensor<T>],
    fake: &[Tensor<T>],
    kernel: &KernelConfig,
) -> Result<MmdValue, MetricsError> {
    check_sets(real, fake)?;
    let x: Vec<Vec<f64>> = real.iter().map(|s| s.to_f64_vec()).collect();
    let y: Vec<Vec<f64>> = fake.iter().map(|s| s.to_f64_vec()).collect();
    let raw = vec![mmd2_unbiased(&x, &y, kernel)?];
    let (value, clamped) = clamp_root(&raw);
    Ok(MmdValue {
        value,
        raw,
        clamped,
    })
}
