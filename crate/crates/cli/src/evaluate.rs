//! `kforge evaluate`: score generated samples against a real manifest
//! with FID and the action / sequence MMD statistics.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use kforge_core::data::{import_sequence, MotionSample, Split};
use kforge_core::metrics::{compute_report, train_classifier, FeatureExtractor, IdentityFlatten};
use kforge_core::model::{latent_center, truncate, TruncationConfig};
use kforge_core::tensor::{no_grad, sample_normal_vec};
use kforge_core::training::{load_generator, LoadedGenerator};
use kforge_core::{DatasetManifest, KernelConfig, StreamRng, Tensor};

use crate::config;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Features {
    /// Flattened raw coordinates.
    Identity,
    /// Hidden features of a small graph-convolutional classifier
    /// trained on the real train split.
    Gcn,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Eval,
}

impl SplitArg {
    fn to_split(self) -> Option<Split> {
        match self {
            SplitArg::All => None,
            SplitArg::Train => Some(Split::Train),
            SplitArg::Eval => Some(Split::Eval),
        }
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Real dataset manifest.
    #[arg(long)]
    pub real: PathBuf,
    /// Output directory for the report.
    #[arg(long)]
    pub out: PathBuf,
    /// Generator checkpoint to sample from.
    #[arg(long, required_unless_present = "generated", conflicts_with = "generated")]
    pub checkpoint: Option<PathBuf>,
    /// Directory of sequence JSON files to score instead of sampling.
    #[arg(long)]
    pub generated: Option<PathBuf>,
    /// Sample count when drawing from a checkpoint.
    #[arg(long, default_value_t = 64)]
    pub count: usize,
    /// Truncation strength for checkpoint sampling.
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    /// Base noise seed, advanced by one per sample.
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// Seed for latent draws and classifier training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Feature embedding behind FID.
    #[arg(long, value_enum, default_value_t = Features::Identity)]
    pub features: Features,
    /// Real-manifest split to compare against.
    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    pub split: SplitArg,
    /// Force single-threaded workers.
    #[arg(long)]
    pub deterministic: bool,
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.psi) {
        bail!("psi must lie in [0, 1], got {}", args.psi);
    }
    let manifest = DatasetManifest::load(&args.real)
        .with_context(|| format!("loading manifest {}", args.real.display()))?;
    let real: Vec<&MotionSample> = manifest.samples(args.split.to_split()).collect();
    if real.is_empty() {
        bail!("the requested split of {} has no samples", args.real.display());
    }
    let joints = real[0].joints();
    let threads = config::worker_threads(args.deterministic);
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    config::write_json(
        &args.out.join("effective-config.json"),
        &serde_json::json!({
            "command": "evaluate",
            "real": args.real,
            "checkpoint": args.checkpoint,
            "generated": args.generated,
            "count": args.count,
            "psi": args.psi,
            "noise_seed": args.noise_seed,
            "seed": args.seed,
            "features": format!("{:?}", args.features).to_lowercase(),
            "split": format!("{:?}", args.split).to_lowercase(),
            "threads": threads,
        }),
    )?;

    let (fake, source) = match (&args.checkpoint, &args.generated) {
        (Some(ckpt), None) => (
            sample_from_checkpoint(args, ckpt, &manifest)?,
            ckpt.display().to_string(),
        ),
        (None, Some(dir)) => (import_generated(dir, threads)?, dir.display().to_string()),
        _ => bail!("provide exactly one of --checkpoint or --generated"),
    };
    for sample in &fake {
        if sample.channels() != manifest.channels
            || sample.frames() != manifest.frames
            || sample.joints() != joints
        {
            bail!(
                "{} has shape [{}, {}, {}] but the manifest stores [{}, {}, {}]",
                sample.provenance,
                sample.channels(),
                sample.frames(),
                sample.joints(),
                manifest.channels,
                manifest.frames,
                joints
            );
        }
    }

    let real_t: Vec<Tensor<f64>> = real.iter().map(|s| s.data.clone()).collect();
    let fake_t: Vec<Tensor<f64>> = fake.iter().map(|s| s.data.clone()).collect();
    let extractor: Box<dyn FeatureExtractor<f64>> = match args.features {
        Features::Identity => Box::new(IdentityFlatten::new(
            manifest.channels,
            manifest.frames,
            joints,
        )),
        Features::Gcn => {
            let samples: Vec<Tensor<f64>> = manifest
                .samples(Some(Split::Train))
                .map(|s| s.data.clone())
                .collect();
            let labels: Vec<usize> = manifest
                .samples(Some(Split::Train))
                .map(|s| s.class)
                .collect();
            if samples.is_empty() {
                bail!("gcn features need a train split in the manifest");
            }
            let pyramid = config::resolve_pyramid(&manifest.skeleton)?;
            Box::new(train_classifier(
                &samples,
                &labels,
                pyramid,
                manifest.num_classes,
                32,
                200,
                args.seed,
            )?)
        }
    };
    let kernel = KernelConfig::default();
    let report = compute_report(
        &real_t,
        &fake_t,
        extractor.as_ref(),
        &kernel,
        &args.real.display().to_string(),
        &source,
    )?;
    let report_path = args.out.join("report.json");
    report.write(&report_path)?;
    println!(
        "report {}: fid={:.6} mmd_a={:.6} mmd_s={:.6} (n_real={}, n_fake={})",
        report_path.display(),
        report.fid,
        report.mmd_a,
        report.mmd_s,
        report.n_real,
        report.n_fake
    );
    Ok(())
}

/// Draws `count` samples from the checkpoint, cycling class ids and
/// advancing the noise seed per sample so draws are independent.
fn sample_from_checkpoint(
    args: &EvaluateArgs,
    checkpoint: &Path,
    manifest: &DatasetManifest,
) -> Result<Vec<MotionSample>> {
    let loaded: LoadedGenerator<f32> = load_generator(checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let num_classes = loaded.model_cfg.num_classes;
    if num_classes != manifest.num_classes {
        bail!(
            "checkpoint models {} classes but the manifest has {}",
            num_classes,
            manifest.num_classes
        );
    }
    let generator = &loaded.generator;
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
    let (c, t, j) = (
        generator.out_channels(),
        generator.frames(),
        generator.joints_out(),
    );
    let latent = loaded.model_cfg.latent_dim;
    let rng = StreamRng::new(args.seed);
    (0..args.count)
        .map(|i| {
            let class = i % num_classes;
            let z = Tensor::from_vec(
                sample_normal_vec::<f32>(&mut rng.stream("z/evaluate", i as u64), latent),
                &[1, latent],
            );
            let x = no_grad(|| -> Result<Tensor<f32>> {
                let w = generator.mapping.forward(&z, &[class])?;
                let w = match &truncation {
                    Some(cfg) => truncate(&w, cfg)?,
                    None => w,
                };
                Ok(generator.generate(&w, args.noise_seed.wrapping_add(i as u64))?)
            })?;
            Ok(MotionSample::new(
                Tensor::from_vec(x.to_f64_vec(), &[c, t, j]),
                class,
                loaded.pyramid.name.clone(),
                format!("evaluate:ckpt={}:index={}", checkpoint.display(), i),
            ))
        })
        .collect()
}

/// Imports every sequence JSON in the directory in name order,
/// skipping config snapshots, spread over the worker threads.
fn import_generated(dir: &Path, threads: usize) -> Result<Vec<MotionSample>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".json") && !n.ends_with("config.json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no sequence JSON files in {}", dir.display());
    }
    let results = config::parallel_map(paths, threads, |path| {
        import_sequence(&path).map_err(|err| (path, err))
    });
    let mut samples = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Ok(sample) => samples.push(sample),
            Err((path, err)) => bail!("importing {}: {err}", path.display()),
        }
    }
    Ok(samples)
}
