//! Distribution-quality metrics between real and synthetic sequence
//! sets: unbiased MMD (per-frame and whole-sequence) under a Gaussian
//! RBF mixture kernel, and Fréchet distance over pluggable features.

mod features;
mod fid;
mod mmd;
#[cfg(test)]
mod tests;

pub use features::{train_classifier, FeatureExtractor, GcnClassifier, IdentityFlatten};
pub use fid::{fid, fid_from_moments, sqrtm_psd, COV_REGULARIZER};
pub use mmd::{median_pairwise_distance, mmd2_unbiased, mmd_actions, mmd_sequences, MmdValue};

use crate::model::ModelError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least {need} samples per side, got {real} real and {fake} fake")]
    SampleCount { need: usize, real: usize, fake: usize },
    #[error("vector length mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("sequence shape mismatch: real {real:?} vs fake {fake:?}")]
    ShapeMismatch { real: Vec<usize>, fake: Vec<usize> },
    #[error("kernel config: {0}")]
    Kernel(String),
    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {delta}")]
    Asymmetric { i: usize, j: usize, delta: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue}")]
    NotPsd { eigenvalue: f64 },
    #[error("feature extraction: {0}")]
    Feature(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("metrics io: {0}")]
    Io(#[from] std::io::Error),
    #[error("metrics serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// How RBF bandwidths are chosen for the mixture kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthSpec {
    /// Factors multiplied by the median pairwise distance of the
    /// pooled sample; an all-identical pool falls back to bandwidth 1.
    MedianScaled(Vec<f64>),
    /// Absolute bandwidths.
    Fixed(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidths: BandwidthSpec,
    /// Bandwidth used when the median pairwise distance is zero.
    pub fallback_bandwidth: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            bandwidths: BandwidthSpec::MedianScaled(vec![0.25, 0.5, 1.0, 2.0, 4.0]),
            fallback_bandwidth: 1.0,
        }
    }
}

impl KernelConfig {
    pub fn fixed(bandwidths: Vec<f64>) -> Self {
        KernelConfig {
            bandwidths: BandwidthSpec::Fixed(bandwidths),
            fallback_bandwidth: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let values = match &self.bandwidths {
            BandwidthSpec::MedianScaled(v) | BandwidthSpec::Fixed(v) => v,
        };
        if values.is_empty() {
            return Err(MetricsError::Kernel("bandwidth set is empty".to_string()));
        }
        if values.iter().any(|&b| !b.is_finite() || b <= 0.0) {
            return Err(MetricsError::Kernel(format!(
                "bandwidths must be positive and finite, got {values:?}"
            )));
        }
        if !self.fallback_bandwidth.is_finite() || self.fallback_bandwidth <= 0.0 {
            return Err(MetricsError::Kernel(format!(
                "fallback bandwidth must be positive, got {}",
                self.fallback_bandwidth
            )));
        }
        Ok(())
    }

    /// Identifies the kernel so reported numbers are only compared
    /// within one fingerprint.
    pub fn fingerprint(&self) -> String {
        match &self.bandwidths {
            BandwidthSpec::MedianScaled(v) => format!("rbf-median{v:?}"),
            BandwidthSpec::Fixed(v) => format!("rbf-fixed{v:?}"),
        }
    }
}

/// Evaluation summary written as the report JSON. `mmd_a` and `mmd_s`
/// are clamped-root values; the raw unbiased estimates (which may dip
/// below zero) ride along with a flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fid: f64,
    pub mmd_a: f64,
    pub mmd_s: f64,
    pub mmd_a_raw_mean: f64,
    pub mmd_s_raw: f64,
    pub mmd_clamped: bool,
    pub n_real: usize,
    pub n_fake: usize,
    pub kernel_fingerprint: String,
    pub feature_fingerprint: String,
    pub dataset: String,
    pub model_checkpoint: String,
}

impl MetricsReport {
    pub fn write(&self, path: &Path) -> Result<(), MetricsError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Computes the full report for two sequence sets of shape `[C, T, N]`.
pub fn compute_report<T: crate::tensor::Real>(
    real: &[crate::tensor::Tensor<T>],
    fake: &[crate::tensor::Tensor<T>],
    extractor: &dyn FeatureExtractor<T>,
    kernel: &KernelConfig,
    dataset: &str,
    model_checkpoint: &str,
) -> Result<MetricsReport, MetricsError> {
    let mmd_a = mmd_actions(real, fake, kernel)?;
    let mmd_s = mmd_sequences(real, fake, kernel)?;
    let feats_real = real
        .iter()
        .map(|s| extractor.extract(s))
        .collect::<Result<Vec<_>, _>>()?;
    let feats_fake = fake
        .iter()
        .map(|s| extractor.extract(s))
        .collect::<Result<Vec<_>, _>>()?;
    let fid = fid(&feats_real, &feats_fake)?;
    let mmd_a_raw_mean = mmd_a.raw.iter().sum::<f64>() / mmd_a.raw.len() as f64;
    Ok(MetricsReport {
        fid,
        mmd_a: mmd_a.value,
        mmd_s: mmd_s.value,
        mmd_a_raw_mean,
        mmd_s_raw: mmd_s.raw[0],
        mmd_clamped: mmd_a.clamped || mmd_s.clamped,
        n_real: real.len(),
        n_fake: fake.len(),
        kernel_fingerprint: kernel.fingerprint(),
        feature_fingerprint: extractor.fingerprint(),
        dataset: dataset.to_string(),
        model_checkpoint: model_checkpoint.to_string(),
    })
}
