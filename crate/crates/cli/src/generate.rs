//! `kforge generate`: rebuild a generator from a checkpoint and sample
//! sequences for one class, with optional latent truncation and SVG
//! strips.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use kforge_core::data::{export_sequence, render_svg_with_edges, MotionSample};
use kforge_core::model::{latent_center, truncate, TruncationConfig};
use kforge_core::tensor::{no_grad, sample_normal_vec};
use kforge_core::training::{load_generator, LoadedGenerator};
use kforge_core::{StreamRng, Tensor};

use crate::config;

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Checkpoint holding the generator, its configs, and its pyramid.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output directory for sequence files.
    #[arg(long)]
    pub out: PathBuf,
    /// Class id to condition on.
    #[arg(long)]
    pub class: usize,
    /// Number of sequences to sample.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Truncation strength: 1 leaves latents untouched, 0 collapses
    /// every latent onto the center of mass.
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    /// Seed for the per-block noise branch, shared by all samples in
    /// one invocation.
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// Seed for latent draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also render each sequence as an SVG frame strip.
    #[arg(long)]
    pub svg: bool,
    /// Frame stride for the SVG strips.
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
}

pub fn run(args: &GenerateArgs) -> Result<()> {
    let loaded: LoadedGenerator<f32> = load_generator(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let num_classes = loaded.model_cfg.num_classes;
    if args.class >= num_classes {
        bail!(
            "class {} is out of range: the model has {} classes",
            args.class,
            num_classes
        );
    }
    if !(0.0..=1.0).contains(&args.psi) {
        bail!("psi must lie in [0, 1], got {}", args.psi);
    }
    if args.count == 0 {
        bail!("count must be at least 1");
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    config::write_json(
        &args.out.join("effective-config.json"),
        &serde_json::json!({
            "command": "generate",
            "checkpoint": args.checkpoint,
            "class": args.class,
            "count": args.count,
            "psi": args.psi,
            "noise_seed": args.noise_seed,
            "seed": args.seed,
            "svg": args.svg,
            "stride": args.stride,
        }),
    )?;

    let generator = &loaded.generator;
    // The center depends only on the checkpoint, so truncated outputs
    // are reproducible from the artifact alone.
    let truncation = if args.psi < 1.0 {
        let center = latent_center(
            &generator.mapping,
            num_classes,
            &StreamRng::new(loaded.train_cfg.seed),
        )?;
        Some(TruncationConfig {
            psi: args.psi,
            center,
        })
    } else {
        None
    };

    let spec = &loaded.pyramid.levels.last().expect("pyramid is nonempty").spec;
    let (c, t, j) = (
        generator.out_channels(),
        generator.frames(),
        generator.joints_out(),
    );
    let latent = loaded.model_cfg.latent_dim;
    let rng = StreamRng::new(args.seed);
    for i in 0..args.count {
        let z = Tensor::from_vec(
            sample_normal_vec::<f32>(&mut rng.stream("z/generate", i as u64), latent),
            &[1, latent],
        );
        let x = no_grad(|| -> Result<Tensor<f32>> {
            let w = generator.mapping.forward(&z, &[args.class])?;
            let w = match &truncation {
                Some(cfg) => truncate(&w, cfg)?,
                None => w,
            };
            Ok(generator.generate(&w, args.noise_seed)?)
        })?;
        let sample = MotionSample::new(
            Tensor::from_vec(x.to_f64_vec(), &[c, t, j]),
            args.class,
            // The pyramid name, not the level spec name, so a bundled
            // skeleton resolves again at import and render time.
            loaded.pyramid.name.clone(),
            format!(
                "generate:ckpt={}:psi={}:index={}",
                args.checkpoint.display(),
                args.psi,
                i
            ),
        );
        export_sequence(&sample, &args.out.join(format!("seq-{i:03}.json")))?;
        if args.svg {
            render_svg_with_edges(
                &sample,
                &spec.edges,
                &args.out.join(format!("seq-{i:03}.svg")),
                args.stride,
            )?;
        }
    }
    println!(
        "wrote {} class-{} sequence(s) to {}",
        args.count,
        args.class,
        args.out.display()
    );
    Ok(())
}
