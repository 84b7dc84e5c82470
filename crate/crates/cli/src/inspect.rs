//! `kforge inspect-pyramid`: print level sizes, adjacency partition
//! occupancy, and the normalization placement audit.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use kforge_core::graph::PARTITION_NAMES;
use kforge_core::model::audit_normalization;
use kforge_core::training::{load_generator, LoadedGenerator};
use kforge_core::{Discriminator, Generator, ModelConfig, StreamRng};

use crate::config;

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Bundled pyramid name or pyramid table JSON path.
    #[arg(long, required_unless_present = "checkpoint", conflicts_with = "checkpoint")]
    pub pyramid: Option<String>,
    /// Model config JSON; enables the normalization audit.
    #[arg(long, conflicts_with = "checkpoint")]
    pub model: Option<PathBuf>,
    /// Checkpoint; its meta block supplies both pyramid and model.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Also write the inspection as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &InspectArgs) -> Result<()> {
    let (pyramid, model_cfg) = match &args.checkpoint {
        Some(path) => {
            let loaded: LoadedGenerator<f32> = load_generator(path)
                .with_context(|| format!("loading checkpoint {}", path.display()))?;
            (loaded.pyramid, Some(loaded.model_cfg))
        }
        None => {
            let name = args.pyramid.as_deref().expect("clap requires --pyramid");
            let pyramid = config::resolve_pyramid(name)?;
            let model_cfg = match &args.model {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading model config {}", path.display()))?;
                    Some(
                        serde_json::from_str::<ModelConfig>(&text)
                            .with_context(|| format!("model config {} schema", path.display()))?,
                    )
                }
                None => None,
            };
            (pyramid, model_cfg)
        }
    };

    println!("pyramid {}: {} levels", pyramid.name, pyramid.levels.len());
    let mut levels_json = Vec::new();
    for (i, level) in pyramid.levels.iter().enumerate() {
        let nonzero: Vec<usize> = level
            .adjacency
            .raw
            .iter()
            .map(|part| part.iter().filter(|&&v| v != 0.0).count())
            .collect();
        let occupancy: Vec<String> = PARTITION_NAMES
            .iter()
            .zip(&nonzero)
            .map(|(name, count)| format!("{name}={count}"))
            .collect();
        println!(
            "  level {i}: {} joints, {} edges; nonzero {}",
            level.spec.joint_names.len(),
            level.spec.edges.len(),
            occupancy.join(" ")
        );
        levels_json.push(serde_json::json!({
            "joints": level.spec.joint_names.len(),
            "edges": level.spec.edges.len(),
            "nonzero": PARTITION_NAMES
                .iter()
                .zip(&nonzero)
                .map(|(name, count)| (name.to_string(), serde_json::Value::from(*count)))
                .collect::<serde_json::Map<String, serde_json::Value>>(),
        }));
    }

    // The audit is structural, so a fresh zero-seeded build of the
    // configured model is as good as trained weights.
    let audit = match &model_cfg {
        Some(cfg) => {
            let rng = StreamRng::new(0);
            let generator = Generator::<f32>::new(cfg, pyramid.clone(), &rng)?;
            let discriminator = Discriminator::<f32>::new(cfg, pyramid.clone(), &rng)?;
            let audit = audit_normalization(&generator, &discriminator);
            for block in &audit.generator_blocks {
                println!(
                    "  block {}: spatial_upsample={} time_upsample={} batch_norm={}",
                    block.index, block.spatial_upsample, block.time_upsample, block.batch_norm
                );
            }
            if audit.clean() {
                println!("audit: clean");
            } else {
                println!("audit: {} violation(s)", audit.violations.len());
                for violation in &audit.violations {
                    println!("  - {violation}");
                }
            }
            Some(audit)
        }
        None => None,
    };

    if let Some(out) = &args.out {
        config::write_json(
            out,
            &serde_json::json!({
                "command": "inspect-pyramid",
                "pyramid": pyramid.name,
                "level_sizes": pyramid.level_sizes(),
                "levels": levels_json,
                "audit": audit,
            }),
        )?;
    }
    Ok(())
}
