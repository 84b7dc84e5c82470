//! Feature maps for the Fréchet distance: raw flattening and the
//! penultimate activations of a small trained graph classifier.

use super::MetricsError;
use crate::graph::GraphPyramid;
use crate::model::{Linear, SpatialGcn, TemporalConv};
use crate::tensor::{
    backward, join_path, no_grad, Adam, AdamConfig, Parameterized, Real, StreamRng, Tensor,
};
use std::sync::Arc;

/// Deterministic map from one `[C, T, N]` sequence to a fixed-length
/// feature vector.
pub trait FeatureExtractor<T: Real> {
    fn feature_dim(&self) -> usize;
    fn extract(&self, sample: &Tensor<T>) -> Result<Vec<f64>, MetricsError>;
    fn fingerprint(&self) -> String;
}

/// Uses the raw sequence values as features.
pub struct IdentityFlatten {
    shape: [usize; 3],
}

impl IdentityFlatten {
    pub fn new(channels: usize, frames: usize, joints: usize) -> Self {
        IdentityFlatten {
            shape: [channels, frames, joints],
        }
    }
}

impl<T: Real> FeatureExtractor<T> for IdentityFlatten {
    fn feature_dim(&self) -> usize {
        self.shape.iter().product()
    }

    fn extract(&self, sample: &Tensor<T>) -> Result<Vec<f64>, MetricsError> {
        if sample.shape() != self.shape.as_slice() {
            return Err(MetricsError::Feature(format!(
                "expected sequence shape {:?}, got {:?}",
                self.shape,
                sample.shape()
            )));
        }
        Ok(sample.to_f64_vec())
    }

    fn fingerprint(&self) -> String {
        format!("identity-flatten{:?}", self.shape)
    }
}

/// Small action classifier: one spatial graph convolution, one temporal
/// convolution, global mean pooling, and a linear head. The pooled
/// activations before the head are the FID features.
pub struct GcnClassifier<T: Real> {
    pub sgcn: SpatialGcn<T>,
    pub tconv: TemporalConv<T>,
    pub head: Linear<T>,
    in_channels: usize,
    hidden: usize,
    num_classes: usize,
    provenance: String,
}

impl<T: Real> GcnClassifier<T> {
    pub fn new(
        pyramid: Arc<GraphPyramid>,
        in_channels: usize,
        hidden: usize,
        num_classes: usize,
        rng: &StreamRng,
    ) -> Self {
        let adjacency = &pyramid.levels.last().expect("pyramid has levels").adjacency;
        let sgcn = SpatialGcn::new(adjacency, in_channels, hidden, &mut rng.stream("clf/sgcn", 0));
        let tconv = TemporalConv::new(hidden, hidden, 3, &mut rng.stream("clf/tconv", 0));
        let head = Linear::new(hidden, num_classes, &mut rng.stream("clf/head", 0));
        GcnClassifier {
            sgcn,
            tconv,
            head,
            in_channels,
            hidden,
            num_classes,
            provenance: "untrained".to_string(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Pooled penultimate activations, shape `[B, hidden]`.
    pub fn features(&self, x: &Tensor<T>) -> Result<Tensor<T>, MetricsError> {
        let shape = x.shape();
        if shape.len() != 4 || shape[1] != self.in_channels {
            return Err(MetricsError::Feature(format!(
                "classifier expects [B, {}, T, N], got {:?}",
                self.in_channels, shape
            )));
        }
        let b = shape[0];
        let (t, n) = (shape[2], shape[3]);
        let h = self.sgcn.forward(x)?.relu();
        let h = self.tconv.forward(&h)?.relu();
        let pooled = h
            .sum_to(&[b, self.hidden, 1, 1])
            .scale(T::from_f64(1.0 / (t * n) as f64));
        Ok(pooled.reshape(&[b, self.hidden]))
    }

    pub fn logits(&self, x: &Tensor<T>) -> Result<Tensor<T>, MetricsError> {
        Ok(self.head.forward(&self.features(x)?)?)
    }

    /// Fraction of samples whose argmax logit matches the label.
    pub fn accuracy(&self, samples: &[Tensor<T>], labels: &[usize]) -> Result<f64, MetricsError> {
        assert_eq!(samples.len(), labels.len(), "one label per sample");
        let mut hits = 0usize;
        for (sample, &label) in samples.iter().zip(labels) {
            let shape = sample.shape();
            let batched = sample.reshape(&[1, shape[0], shape[1], shape[2]]);
            let row = no_grad(|| self.logits(&batched))?;
            let data = row.data();
            let best = (0..self.num_classes)
                .max_by(|&a, &b| data[a].to_f64().total_cmp(&data[b].to_f64()))
                .expect("at least one class");
            if best == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / samples.len().max(1) as f64)
    }
}

impl<T: Real> Parameterized<T> for GcnClassifier<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.sgcn.visit_params(&join_path(prefix, "sgcn"), f);
        self.tconv.visit_params(&join_path(prefix, "tconv"), f);
        self.head.visit_params(&join_path(prefix, "head"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.sgcn.visit_params_mut(&join_path(prefix, "sgcn"), f);
        self.tconv.visit_params_mut(&join_path(prefix, "tconv"), f);
        self.head.visit_params_mut(&join_path(prefix, "head"), f);
    }
}

impl<T: Real> FeatureExtractor<T> for GcnClassifier<T> {
    fn feature_dim(&self) -> usize {
        self.hidden
    }

    fn extract(&self, sample: &Tensor<T>) -> Result<Vec<f64>, MetricsError> {
        let shape = sample.shape();
        if shape.len() != 3 {
            return Err(MetricsError::Feature(format!(
                "expected one [C, T, N] sequence, got {shape:?}"
            )));
        }
        let batched = sample.reshape(&[1, shape[0], shape[1], shape[2]]);
        let feats = no_grad(|| self.features(&batched))?;
        Ok(feats.to_f64_vec())
    }

    fn fingerprint(&self) -> String {
        format!(
            "gcn-classifier(h={},classes={},{})",
            self.hidden, self.num_classes, self.provenance
        )
    }
}

/// Mean cross-entropy of `logits` against integer labels. The row max
/// is subtracted as a constant for a stable log-sum-exp.
fn cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Tensor<T> {
    let shape = logits.shape();
    let (b, k) = (shape[0], shape[1]);
    assert_eq!(labels.len(), b, "one label per row");
    let data = logits.data();
    let mut maxes = Vec::with_capacity(b);
    let mut onehot = vec![T::ZERO; b * k];
    for (i, &label) in labels.iter().enumerate() {
        assert!(label < k, "label out of range");
        let row = &data[i * k..(i + 1) * k];
        let m = row
            .iter()
            .fold(f64::NEG_INFINITY, |acc, v| acc.max(v.to_f64()));
        maxes.push(T::from_f64(m));
        onehot[i * k + label] = T::ONE;
    }
    let row_max = Tensor::from_vec(maxes, &[b, 1]);
    let shifted = logits.sub(&row_max);
    let lse = shifted.exp().sum_to(&[b, 1]).ln();
    let log_probs = shifted.sub(&lse);
    let picked = log_probs.mul(&Tensor::from_vec(onehot, &[b, k]));
    picked.sum_all().scale(T::from_f64(-1.0 / b as f64))
}

/// Trains a fresh classifier on the given sequences with Adam. Batches
/// cycle deterministically from `seed`; the classifier records its
/// training provenance in the feature fingerprint.
pub fn train_classifier<T: Real>(
    samples: &[Tensor<T>],
    labels: &[usize],
    pyramid: Arc<GraphPyramid>,
    num_classes: usize,
    hidden: usize,
    steps: usize,
    seed: u64,
) -> Result<GcnClassifier<T>, MetricsError> {
    if samples.is_empty() || samples.len() != labels.len() {
        return Err(MetricsError::Feature(format!(
            "need matched samples and labels, got {} and {}",
            samples.len(),
            labels.len()
        )));
    }
    let shape = samples[0].shape().to_vec();
    let rng = StreamRng::new(seed);
    let mut classifier =
        GcnClassifier::new(pyramid, shape[0], hidden, num_classes, &rng);
    let mut adam = Adam::new(AdamConfig {
        lr: 1e-2,
        ..AdamConfig::default()
    });
    let batch = samples.len().min(32);
    let per: usize = shape.iter().product();
    for step in 0..steps {
        let mut data = Vec::with_capacity(batch * per);
        let mut batch_labels = Vec::with_capacity(batch);
        for i in 0..batch {
            let idx = (step * batch + i) % samples.len();
            data.extend_from_slice(samples[idx].data());
            batch_labels.push(labels[idx]);
        }
        let x = Tensor::from_vec(data, &[batch, shape[0], shape[1], shape[2]]);
        let logits = classifier.logits(&x)?;
        let loss = cross_entropy(&logits, &batch_labels);
        let grads = backward(&loss, false).map_err(|e| MetricsError::Feature(e.to_string()))?;
        adam.step(&mut classifier, "clf", &grads)
            .map_err(|e| MetricsError::Feature(e.to_string()))?;
    }
    classifier.provenance = format!("steps={steps},seed={seed}");
    Ok(classifier)
}
