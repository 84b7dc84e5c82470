//! `kforge train`: load a run spec, materialize the dataset, and run
//! the adversarial loop with periodic metric reports.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use kforge_core::data::{generate_synthetic_dataset, MotionSample, Split};
use kforge_core::metrics::{compute_report, IdentityFlatten};
use kforge_core::tensor::{no_grad, sample_normal_vec, StreamRng};
use kforge_core::training::{train as run_training, BatchSource, EvalHook};
use kforge_core::{
    DatasetManifest, Discriminator, Generator, GraphPyramid, KernelConfig, Tensor,
};

use crate::config::{self, DataSpec, RunSpec};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Run configuration JSON with `train`, `model`, and `data` blocks.
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory for checkpoints, logs, and reports.
    #[arg(long)]
    pub out: PathBuf,
    /// Dotted-path overrides, e.g. --set train.batch=8.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Shorthand for --set train.seed=N.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shorthand for --set train.generator_steps=N.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Continue a run from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Force single-threaded workers.
    #[arg(long)]
    pub deterministic: bool,
}

/// Eval-split samples scored by the periodic hook; capped so a report
/// stays a small fraction of a training interval.
const EVAL_SAMPLE_CAP: usize = 32;

pub fn run(args: &TrainArgs) -> Result<()> {
    let mut spec = config::load_spec(&args.config, &args.set, args.seed, args.steps)?;
    if spec.train.dataset.is_empty() {
        spec.train.dataset = match &spec.data {
            DataSpec::Synth(cfg) => format!("synth:{}", cfg.skeleton),
            DataSpec::Manifest(path) => path.display().to_string(),
        };
    }
    let manifest = match &spec.data {
        DataSpec::Synth(cfg) => generate_synthetic_dataset(cfg)?,
        DataSpec::Manifest(path) => DatasetManifest::load(path)
            .with_context(|| format!("loading manifest {}", path.display()))?,
    };
    let pyramid = config::resolve_pyramid(&spec.model.pyramid)?;
    check_consistency(&spec, &manifest, &pyramid)?;
    let dataset = manifest.to_dataset::<f32>(Some(Split::Train));
    if dataset.is_empty() {
        bail!("the manifest has no train-split samples");
    }
    let threads = config::worker_threads(args.deterministic);
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating run directory {}", args.out.display()))?;
    config::write_json(
        &args.out.join("effective-config.json"),
        &serde_json::json!({
            "command": "train",
            "threads": threads,
            "resume": args.resume,
            "config": &spec,
        }),
    )?;
    if matches!(spec.data, DataSpec::Synth(_)) {
        // The materialized manifest makes the run dir self-sufficient
        // for `evaluate --real`.
        manifest.save(&args.out.join("dataset.json"))?;
    }

    let joints = pyramid.level_sizes().last().copied().unwrap_or(0);
    let ctx = EvalCtx {
        real: eval_samples(&manifest),
        extractor: IdentityFlatten::new(spec.model.out_channels, spec.model.frames, joints),
        kernel: KernelConfig::default(),
        out_dir: args.out.clone(),
        seed: spec.train.seed,
        latent: spec.model.latent_dim,
        num_classes: spec.model.num_classes,
        shape: [spec.model.out_channels, spec.model.frames, joints],
        dataset: spec.train.dataset.clone(),
    };
    let mut hook_fn;
    let mut eval: Option<EvalHook<'_, f32>> = None;
    if spec.train.eval_every > 0 {
        hook_fn = |generator: &Generator<f32>, _: &Discriminator<f32>, step: u64| {
            periodic_report(&ctx, generator, step)
                .unwrap_or_else(|err| serde_json::json!({ "error": format!("{err:#}") }))
        };
        eval = Some(&mut hook_fn);
    }

    let outcome = run_training(
        &spec.train,
        &spec.model,
        pyramid,
        &dataset,
        &args.out,
        args.resume.as_deref(),
        eval,
    )?;
    println!(
        "run {}: {} generator / {} critic steps, final checkpoint {}",
        args.out.display(),
        outcome.generator_steps_done,
        outcome.critic_steps_done,
        outcome.final_checkpoint.display()
    );
    Ok(())
}

fn check_consistency(
    spec: &RunSpec,
    manifest: &DatasetManifest,
    pyramid: &GraphPyramid,
) -> Result<()> {
    if manifest.num_classes != spec.model.num_classes {
        bail!(
            "manifest has {} classes but model.num_classes is {}",
            manifest.num_classes,
            spec.model.num_classes
        );
    }
    if manifest.channels != spec.model.out_channels {
        bail!(
            "manifest stores {}-channel samples but model.out_channels is {}",
            manifest.channels,
            spec.model.out_channels
        );
    }
    if manifest.frames != spec.model.frames {
        bail!(
            "manifest stores {}-frame samples but model.frames is {}",
            manifest.frames,
            spec.model.frames
        );
    }
    let joints = pyramid.level_sizes().last().copied().unwrap_or(0);
    match manifest.samples(None).next() {
        Some(sample) if sample.joints() != joints => bail!(
            "manifest samples have {} joints but the pyramid ends at {}",
            sample.joints(),
            joints
        ),
        None => bail!("manifest has no samples"),
        _ => Ok(()),
    }
}

/// Real samples for the periodic report: the eval split when one
/// exists, else the head of the train split.
fn eval_samples(manifest: &DatasetManifest) -> Vec<Tensor<f32>> {
    let mut picked: Vec<&MotionSample> = manifest
        .samples(Some(Split::Eval))
        .take(EVAL_SAMPLE_CAP)
        .collect();
    if picked.is_empty() {
        picked = manifest
            .samples(Some(Split::Train))
            .take(EVAL_SAMPLE_CAP)
            .collect();
    }
    picked
        .into_iter()
        .map(|s| {
            let data: Vec<f32> = s.data.data().iter().map(|&v| v as f32).collect();
            Tensor::from_vec(data, s.data.shape())
        })
        .collect()
}

struct EvalCtx {
    real: Vec<Tensor<f32>>,
    extractor: IdentityFlatten,
    kernel: KernelConfig,
    out_dir: PathBuf,
    seed: u64,
    latent: usize,
    num_classes: usize,
    shape: [usize; 3],
    dataset: String,
}

/// Scores the current generator against the held-out samples and drops
/// the report next to the checkpoints. Latents come from the run seed
/// keyed by step; the step doubles as the noise seed.
fn periodic_report(
    ctx: &EvalCtx,
    generator: &Generator<f32>,
    step: u64,
) -> Result<serde_json::Value> {
    let n = ctx.real.len();
    let z = Tensor::from_vec(
        sample_normal_vec::<f32>(
            &mut StreamRng::new(ctx.seed).stream("z/eval", step),
            n * ctx.latent,
        ),
        &[n, ctx.latent],
    );
    let classes: Vec<usize> = (0..n).map(|i| i % ctx.num_classes).collect();
    let batch = no_grad(|| generator.synthesize(&z, &classes, step))?;
    let [c, t, j] = ctx.shape;
    let fake: Vec<Tensor<f32>> = (0..n)
        .map(|i| batch.narrow(0, i, 1).reshape(&[c, t, j]))
        .collect();
    let report = compute_report(
        &ctx.real,
        &fake,
        &ctx.extractor,
        &ctx.kernel,
        &ctx.dataset,
        "in-training",
    )?;
    report.write(&ctx.out_dir.join(format!("eval-{step:06}.json")))?;
    Ok(serde_json::to_value(&report)?)
}
