//! Conditional graph-convolutional GAN for human skeleton action
//! synthesis: tensors with reverse-mode autodiff, skeleton graph
//! pyramids, generator/discriminator models, adversarial training with
//! a gradient penalty, and distribution metrics.

pub mod data;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod training;

pub use data::{DatasetManifest, MotionSample, SynthMotionConfig};
pub use graph::{GraphPyramid, SkeletonSpec};
pub use metrics::{KernelConfig, MetricsReport};
pub use model::{Discriminator, Generator, ModelConfig};
pub use tensor::{backward, AxisMap, Real, StreamRng, Tensor};
pub use training::{train, BatchSource, TrainConfig, Trainer};
