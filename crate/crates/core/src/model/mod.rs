//! Generator and discriminator for conditional skeleton-action synthesis:
//! spatiotemporal graph-convolution layers, residual up/down blocks with
//! noise injection, the latent mapping network, and truncation.

mod audit;
mod config;
mod discriminator;
mod generator;
mod layers;
mod mapping;
mod truncation;

pub use audit::{audit_normalization, BlockAudit, NormalizationAudit};
pub use config::{BatchNormPolicy, ModelConfig, W_DIM};
pub use discriminator::{DiscriminatorBlock, Discriminator};
pub use generator::{Generator, GeneratorBlock};
pub use layers::{BatchNorm, Linear, NoiseInjection, SpatialGcn, TemporalConv};
pub use mapping::{ClassEmbedding, MappingNetwork};
pub use truncation::{latent_center, truncate, TruncationConfig};

use crate::graph::GraphError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("class id {class} out of range (model has {num_classes} classes)")]
    InvalidClass { class: usize, num_classes: usize },
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("truncation psi {0} outside [0, 1]")]
    PsiOutOfRange(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
