//! Adversarial training: alternating critic and generator updates with
//! a second-order gradient penalty, streamed JSONL logs, and resumable
//! checkpoints that carry optimizer state.

mod penalty;
mod trainer;

pub use penalty::{gradient_penalty, gradient_penalty_fn, gradient_penalty_with_eps};
pub use trainer::{
    load_generator, train, CriticStats, EvalHook, GeneratorStats, LoadedGenerator, TrainOutcome,
    Trainer,
};

use crate::model::ModelError;
use crate::tensor::{AutogradError, CheckpointError, OptimError, Real, Tensor};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training config: {0}")]
    Config(String),
    #[error("batch shape mismatch: real {real:?} vs fake {fake:?}")]
    BatchMismatch { real: Vec<usize>, fake: Vec<usize> },
    #[error("non-finite {what} at critic step {step}")]
    NonFinite { what: &'static str, step: u64 },
    #[error("training diverged at critic step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error("dataset holds no samples")]
    EmptyDataset,
    #[error("log records must not move backwards: step {prev} then {next}")]
    LogOrder { prev: u64, next: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autograd(#[from] AutogradError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("training io: {0}")]
    Io(#[from] std::io::Error),
    #[error("training serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Loss magnitude beyond which a run is treated as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

fn default_lambda() -> f64 {
    10.0
}
fn default_n_critic() -> u64 {
    5
}
fn default_batch() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Total generator updates to run.
    pub generator_steps: u64,
    /// Gradient penalty coefficient.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Critic updates per generator update.
    #[serde(default = "default_n_critic")]
    pub n_critic: u64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default)]
    pub adam: crate::tensor::AdamConfig,
    #[serde(default)]
    pub seed: u64,
    /// Checkpoint cadence in generator steps; 0 saves only the final state.
    #[serde(default)]
    pub checkpoint_every: u64,
    /// Eval hook cadence in generator steps; 0 disables it.
    #[serde(default)]
    pub eval_every: u64,
    /// Dataset tag recorded in snapshots and checkpoints.
    #[serde(default)]
    pub dataset: String,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(TrainError::Config(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.n_critic == 0 {
            return Err(TrainError::Config(
                "n_critic must be at least 1".to_string(),
            ));
        }
        if self.batch < 2 {
            return Err(TrainError::Config(format!(
                "batch must be at least 2, got {}",
                self.batch
            )));
        }
        Ok(())
    }
}

/// Supplies real samples as stacked `[B, C, T, N]` minibatches.
pub trait BatchSource<T: Real> {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Stacks the given sample indices, in order, with their labels.
    fn batch(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>);
}

/// Fully materialized dataset; every sample shares one `[C, T, N]` shape.
pub struct InMemoryDataset<T: Real> {
    samples: Vec<Vec<T>>,
    labels: Vec<usize>,
    sample_shape: [usize; 3],
}

impl<T: Real> InMemoryDataset<T> {
    pub fn new(sample_shape: [usize; 3]) -> Self {
        InMemoryDataset {
            samples: Vec::new(),
            labels: Vec::new(),
            sample_shape,
        }
    }

    pub fn sample_shape(&self) -> [usize; 3] {
        self.sample_shape
    }

    pub fn push(&mut self, data: Vec<T>, label: usize) {
        assert_eq!(
            data.len(),
            self.sample_shape.iter().product::<usize>(),
            "sample length must match the dataset's per-sample shape"
        );
        self.samples.push(data);
        self.labels.push(label);
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }
}

impl<T: Real> BatchSource<T> for InMemoryDataset<T> {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn batch(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>) {
        let per: usize = self.sample_shape.iter().product();
        let mut data = Vec::with_capacity(indices.len() * per);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(&self.samples[i]);
            labels.push(self.labels[i]);
        }
        let [c, t, n] = self.sample_shape;
        (Tensor::from_vec(data, &[indices.len(), c, t, n]), labels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Critic,
    Generator,
    Eval,
}

/// One JSONL row of the run log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogRecord {
    /// Generator updates completed when the row was written.
    pub generator_step: u64,
    /// Critic updates completed when the row was written.
    pub critic_step: u64,
    pub kind: LogKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critic_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wasserstein: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_norm: Option<f64>,
    pub wall_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<serde_json::Value>,
}

/// Append-only JSONL log with monotone step indices.
pub struct RunLog {
    out: BufWriter<File>,
    last_critic_step: u64,
}

impl RunLog {
    pub fn create(path: &Path) -> Result<Self, TrainError> {
        Ok(RunLog {
            out: BufWriter::new(File::create(path)?),
            last_critic_step: 0,
        })
    }

    /// Reopens an existing log to continue after `resume_step` critic steps.
    pub fn append_to(path: &Path, resume_step: u64) -> Result<Self, TrainError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RunLog {
            out: BufWriter::new(file),
            last_critic_step: resume_step,
        })
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), TrainError> {
        if record.critic_step < self.last_critic_step {
            return Err(TrainError::LogOrder {
                prev: self.last_critic_step,
                next: record.critic_step,
            });
        }
        self.last_critic_step = record.critic_step;
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads every record of a JSONL run log.
pub fn read_run_log(path: &Path) -> Result<Vec<LogRecord>, TrainError> {
    let text = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}

pub(crate) fn meta_u64(
    meta: &BTreeMap<String, String>,
    key: &str,
) -> Result<u64, TrainError> {
    meta.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| TrainError::Checkpoint(CheckpointError::Meta { key: key.to_string() }))
}
