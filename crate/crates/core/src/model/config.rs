//! Model configuration: dimensions, block schedule, and the batch-norm
//! placement policy.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Width of the intermediate latent space and the mapping network.
pub const W_DIM: usize = 512;

/// Where the generator places batch normalization. `TimeOnlyBlocks`
/// restricts it to blocks that do not upsample spatially; `AllBlocks`
/// exists so the placement audit has a violation to catch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BatchNormPolicy {
    #[default]
    TimeOnlyBlocks,
    None,
    AllBlocks,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Bundled pyramid name ("ntu25", "h36m15") or a table file path.
    pub pyramid: String,
    /// Output frame count of a full generated sequence.
    pub frames: usize,
    /// Coordinate channels produced per joint (3 for 3D, 2 for 2D).
    pub out_channels: usize,
    pub num_classes: usize,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    #[serde(default = "default_mapping_depth")]
    pub mapping_depth: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    /// Generator block input widths, finest-to-coarsest for the
    /// discriminator mirror; the last block feeds `out_channels`.
    #[serde(default = "default_channels")]
    pub channels: Vec<usize>,
    #[serde(default = "default_temporal_kernel")]
    pub temporal_kernel: usize,
    #[serde(default)]
    pub batch_norm: BatchNormPolicy,
}

fn default_latent_dim() -> usize {
    512
}

fn default_mapping_depth() -> usize {
    4
}

fn default_embed_dim() -> usize {
    64
}

fn default_channels() -> Vec<usize> {
    vec![512, 256, 128, 64]
}

fn default_temporal_kernel() -> usize {
    9
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.frames < 2 {
            return Err(ModelError::Config(format!(
                "frames must be at least 2, got {}",
                self.frames
            )));
        }
        if self.out_channels == 0 || self.num_classes == 0 || self.latent_dim == 0 {
            return Err(ModelError::Config(
                "out_channels, num_classes, and latent_dim must be positive".into(),
            ));
        }
        if self.embed_dim == 0 {
            return Err(ModelError::Config("embed_dim must be positive".into()));
        }
        if self.channels.is_empty() {
            return Err(ModelError::Config("channels must be non-empty".into()));
        }
        if self.temporal_kernel == 0 || self.temporal_kernel % 2 == 0 {
            return Err(ModelError::Config(format!(
                "temporal_kernel must be odd, got {}",
                self.temporal_kernel
            )));
        }
        Ok(())
    }

    pub fn block_count(&self) -> usize {
        self.channels.len()
    }

    /// Frame counts per stage, coarse to fine: stage k runs at
    /// ceil(frames / 2^(blocks - k)), doubling (up to rounding) each
    /// block until the full length is reached.
    pub fn frame_schedule(&self) -> Vec<usize> {
        let blocks = self.block_count();
        (0..=blocks)
            .map(|k| {
                let d = 1usize << (blocks - k);
                self.frames.div_ceil(d)
            })
            .collect()
    }

    /// Pyramid level per stage: spatial upsampling happens in the first
    /// `level_count - 1` blocks, the rest touch time only.
    pub fn level_schedule(&self, level_count: usize) -> Result<Vec<usize>, ModelError> {
        let blocks = self.block_count();
        if level_count == 0 || level_count - 1 > blocks {
            return Err(ModelError::Config(format!(
                "pyramid has {} levels but the schedule only has {} blocks",
                level_count, blocks
            )));
        }
        Ok((0..=blocks).map(|k| k.min(level_count - 1)).collect())
    }
}
