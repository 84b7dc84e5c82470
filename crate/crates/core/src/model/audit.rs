//! Structural audit of normalization placement. The config carries a
//! policy flag, but the audit inspects the constructed blocks and the
//! parameter tree, so a mislabeled model cannot pass.

use serde::Serialize;

use crate::tensor::{collect_params, Real};

use super::discriminator::Discriminator;
use super::generator::Generator;

#[derive(Debug, Clone, Serialize)]
pub struct BlockAudit {
    pub index: usize,
    pub spatial_upsample: bool,
    pub time_upsample: bool,
    pub batch_norm: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationAudit {
    pub generator_blocks: Vec<BlockAudit>,
    /// Discriminator parameter paths that belong to a normalization
    /// layer; must be empty.
    pub discriminator_norm_params: Vec<String>,
    pub violations: Vec<String>,
}

impl NormalizationAudit {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn audit_normalization<T: Real>(
    generator: &Generator<T>,
    discriminator: &Discriminator<T>,
) -> NormalizationAudit {
    let mut generator_blocks = Vec::new();
    let mut violations = Vec::new();
    for (index, block) in generator.blocks.iter().enumerate() {
        let audit = BlockAudit {
            index,
            spatial_upsample: block.spatial_upsample(),
            time_upsample: block.t_out > block.t_in,
            batch_norm: block.bn.is_some(),
        };
        if audit.spatial_upsample && audit.batch_norm {
            violations.push(format!(
                "generator block {} applies batch norm while spatially upsampling",
                index
            ));
        }
        generator_blocks.push(audit);
    }
    let discriminator_norm_params: Vec<String> = collect_params(discriminator, "d")
        .keys()
        .filter(|path| path.contains("/bn/") || path.ends_with("/gamma") || path.ends_with("/beta"))
        .cloned()
        .collect();
    for path in &discriminator_norm_params {
        violations.push(format!("discriminator has normalization parameter `{}`", path));
    }
    NormalizationAudit {
        generator_blocks,
        discriminator_norm_params,
        violations,
    }
}
