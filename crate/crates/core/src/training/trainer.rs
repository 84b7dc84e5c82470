//! Alternating-update trainer and the outer run loop.

use super::{
    gradient_penalty, meta_u64, BatchSource, LogKind, LogRecord, RunLog, TrainConfig, TrainError,
    DIVERGENCE_LIMIT,
};
use crate::graph::{GraphPyramid, PyramidTable};
use crate::model::{Discriminator, Generator, ModelConfig, ModelError};
use crate::tensor::{
    backward, collect_params, load_checkpoint, no_grad, sample_normal_vec, save_checkpoint, Adam,
    AdamState, CheckpointError, Gradients, Parameterized, Real, StreamRng, Tensor,
};
use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Copy, Debug)]
pub struct CriticStats {
    pub loss: f64,
    /// Mean fake score minus mean real score, before the penalty.
    pub wasserstein: f64,
    pub penalty: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratorStats {
    pub loss: f64,
    pub grad_norm: f64,
}

/// Both models, their optimizers, and the step counters that key every
/// random draw. Restoring a checkpoint restores all of it, so a resumed
/// run replays the exact step sequence of an uninterrupted one.
pub struct Trainer<T: Real> {
    pub cfg: TrainConfig,
    pub model_cfg: ModelConfig,
    pub generator: Generator<T>,
    pub discriminator: Discriminator<T>,
    pub adam_g: Adam<T>,
    pub adam_d: Adam<T>,
    rng: StreamRng,
    pub generator_steps_done: u64,
    pub critic_steps_done: u64,
}

impl<T: Real> Trainer<T> {
    pub fn new(
        cfg: TrainConfig,
        model_cfg: &ModelConfig,
        pyramid: Arc<GraphPyramid>,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let rng = StreamRng::new(cfg.seed);
        let generator = Generator::new(model_cfg, pyramid.clone(), &rng)?;
        let discriminator = Discriminator::new(model_cfg, pyramid, &rng)?;
        let adam_g = Adam::new(cfg.adam);
        let adam_d = Adam::new(cfg.adam);
        Ok(Trainer {
            cfg,
            model_cfg: model_cfg.clone(),
            generator,
            discriminator,
            adam_g,
            adam_d,
            rng,
            generator_steps_done: 0,
            critic_steps_done: 0,
        })
    }

    /// Draws an iid minibatch keyed by the current critic step.
    pub fn draw_batch(&self, data: &dyn BatchSource<T>) -> (Tensor<T>, Vec<usize>) {
        let mut r = self.rng.stream("data/idx", self.critic_steps_done);
        let indices: Vec<usize> = (0..self.cfg.batch)
            .map(|_| r.random_range(0..data.len()))
            .collect();
        data.batch(&indices)
    }

    /// One critic update: fresh latents drive a detached generator pass,
    /// then the critic descends score difference plus gradient penalty.
    pub fn critic_step(
        &mut self,
        x_real: &Tensor<T>,
        labels: &[usize],
    ) -> Result<CriticStats, TrainError> {
        let step = self.critic_steps_done;
        let b = x_real.shape()[0];
        let z = self.sample_latents(b, "z/critic", step);
        let noise_seed = self.rng.stream("noise-seed/critic", step).random::<u64>();
        let fake = no_grad(|| self.generator.synthesize(&z, labels, noise_seed))?;

        let s_real = self.discriminator.criticize(x_real, labels)?;
        let s_fake = self.discriminator.criticize(&fake, labels)?;
        let wasserstein = s_fake.mean_all().sub(&s_real.mean_all());
        // Catch a poisoned critic before the penalty differentiates it.
        self.guard(wasserstein.item().to_f64(), "critic scores")?;
        let gp = gradient_penalty(
            &self.discriminator,
            x_real,
            &fake,
            labels,
            &self.rng,
            step,
        )?;
        let loss = wasserstein.add(&gp.scale(T::from_f64(self.cfg.lambda)));
        let loss_val = loss.item().to_f64();
        self.guard(loss_val, "critic loss")?;

        let grads = backward(&loss, false)?;
        let grad_norm = global_grad_norm(&self.discriminator, "d", &grads)?;
        self.adam_d.step(&mut self.discriminator, "d", &grads)?;
        self.critic_steps_done += 1;
        Ok(CriticStats {
            loss: loss_val,
            wasserstein: wasserstein.item().to_f64(),
            penalty: gp.item().to_f64(),
            grad_norm,
        })
    }

    /// One generator update: ascend the critic's score on fresh fakes.
    pub fn generator_step(&mut self, labels: &[usize]) -> Result<GeneratorStats, TrainError> {
        let step = self.generator_steps_done;
        let z = self.sample_latents(labels.len(), "z/generator", step);
        let noise_seed = self
            .rng
            .stream("noise-seed/generator", step)
            .random::<u64>();
        let fake = self.generator.synthesize(&z, labels, noise_seed)?;
        let scores = self.discriminator.criticize(&fake, labels)?;
        let loss = scores.mean_all().neg();
        let loss_val = loss.item().to_f64();
        self.guard(loss_val, "generator loss")?;

        let grads = backward(&loss, false)?;
        let grad_norm = global_grad_norm(&self.generator, "g", &grads)?;
        self.adam_g.step(&mut self.generator, "g", &grads)?;
        self.generator_steps_done += 1;
        Ok(GeneratorStats {
            loss: loss_val,
            grad_norm,
        })
    }

    fn sample_latents(&self, b: usize, site: &str, step: u64) -> Tensor<T> {
        let dim = self.generator.mapping.latent_dim();
        let data = sample_normal_vec::<T>(&mut self.rng.stream(site, step), b * dim);
        Tensor::from_vec(data, &[b, dim])
    }

    fn guard(&self, loss: f64, what: &'static str) -> Result<(), TrainError> {
        if !loss.is_finite() {
            return Err(TrainError::NonFinite {
                what,
                step: self.critic_steps_done,
            });
        }
        if loss.abs() > DIVERGENCE_LIMIT {
            return Err(TrainError::Diverged {
                step: self.critic_steps_done,
                loss,
            });
        }
        Ok(())
    }

    /// Writes models, optimizer moments, and counters as one checkpoint.
    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        let mut entries = collect_params(&self.generator, "g");
        entries.extend(collect_params(&self.discriminator, "d"));
        push_adam_entries(&mut entries, &self.adam_g);
        push_adam_entries(&mut entries, &self.adam_d);
        let mut meta = BTreeMap::new();
        meta.insert(
            "generator_steps".to_string(),
            self.generator_steps_done.to_string(),
        );
        meta.insert(
            "critic_steps".to_string(),
            self.critic_steps_done.to_string(),
        );
        meta.insert("adam_g_steps".to_string(), self.adam_g.step_count.to_string());
        meta.insert("adam_d_steps".to_string(), self.adam_d.step_count.to_string());
        meta.insert("seed".to_string(), self.cfg.seed.to_string());
        meta.insert("train_config".to_string(), serde_json::to_string(&self.cfg)?);
        meta.insert(
            "model_config".to_string(),
            serde_json::to_string(&self.model_cfg)?,
        );
        meta.insert(
            "pyramid".to_string(),
            serde_json::to_string(&self.generator.pyramid.to_table())?,
        );
        save_checkpoint(path, &meta, &entries)?;
        Ok(())
    }

    /// Restores everything `save` wrote. The trainer must have been
    /// built with the same model config; shapes are checked per entry.
    pub fn restore(&mut self, path: &Path) -> Result<(), TrainError> {
        let (meta, mut entries) = load_checkpoint::<T>(path)?;
        restore_params(&mut self.generator, "g", &mut entries)?;
        restore_params(&mut self.discriminator, "d", &mut entries)?;
        restore_adam(&mut self.adam_g, "g", meta_u64(&meta, "adam_g_steps")?, &mut entries)?;
        restore_adam(&mut self.adam_d, "d", meta_u64(&meta, "adam_d_steps")?, &mut entries)?;
        self.generator_steps_done = meta_u64(&meta, "generator_steps")?;
        self.critic_steps_done = meta_u64(&meta, "critic_steps")?;
        if let Some(name) = entries.keys().next() {
            return Err(TrainError::Checkpoint(CheckpointError::UnexpectedParam {
                name: name.clone(),
            }));
        }
        Ok(())
    }
}

/// A generator rebuilt from a checkpoint alone: the meta block carries
/// the pyramid table and both configs.
pub struct LoadedGenerator<T: Real> {
    pub generator: Generator<T>,
    pub model_cfg: ModelConfig,
    pub train_cfg: TrainConfig,
    pub pyramid: Arc<GraphPyramid>,
    pub generator_steps: u64,
}

pub fn load_generator<T: Real>(path: &Path) -> Result<LoadedGenerator<T>, TrainError> {
    let (meta, mut entries) = load_checkpoint::<T>(path)?;
    let meta_str = |key: &str| {
        meta.get(key).map(String::as_str).ok_or_else(|| {
            TrainError::Checkpoint(CheckpointError::Meta { key: key.to_string() })
        })
    };
    let model_cfg: ModelConfig = serde_json::from_str(meta_str("model_config")?)?;
    let train_cfg: TrainConfig = serde_json::from_str(meta_str("train_config")?)?;
    let table: PyramidTable = serde_json::from_str(meta_str("pyramid")?)?;
    let pyramid = Arc::new(GraphPyramid::from_table(&table).map_err(ModelError::from)?);
    let mut generator =
        Generator::new(&model_cfg, pyramid.clone(), &StreamRng::new(train_cfg.seed))?;
    restore_params(&mut generator, "g", &mut entries)?;
    let generator_steps = meta_u64(&meta, "generator_steps")?;
    Ok(LoadedGenerator {
        generator,
        model_cfg,
        train_cfg,
        pyramid,
        generator_steps,
    })
}

fn push_adam_entries<T: Real>(entries: &mut BTreeMap<String, Tensor<T>>, adam: &Adam<T>) {
    for (path, st) in &adam.state {
        entries.insert(
            format!("optim/{path}/m"),
            Tensor::from_vec(st.m.clone(), &[st.m.len()]),
        );
        entries.insert(
            format!("optim/{path}/v"),
            Tensor::from_vec(st.v.clone(), &[st.v.len()]),
        );
    }
}

fn restore_params<T: Real, M: Parameterized<T>>(
    model: &mut M,
    prefix: &str,
    entries: &mut BTreeMap<String, Tensor<T>>,
) -> Result<(), TrainError> {
    let mut err: Option<CheckpointError> = None;
    model.visit_params_mut(prefix, &mut |name, p| {
        if err.is_some() {
            return;
        }
        match entries.remove(name) {
            None => {
                err = Some(CheckpointError::MissingParam {
                    name: name.to_string(),
                })
            }
            Some(t) => {
                if t.shape() != p.shape() {
                    err = Some(CheckpointError::ParamShape {
                        name: name.to_string(),
                        model: p.shape().to_vec(),
                        ckpt: t.shape().to_vec(),
                    });
                } else {
                    *p = Tensor::leaf(t.data().to_vec(), t.shape());
                }
            }
        }
    });
    err.map_or(Ok(()), |e| Err(e.into()))
}

fn restore_adam<T: Real>(
    adam: &mut Adam<T>,
    model_prefix: &str,
    step_count: u64,
    entries: &mut BTreeMap<String, Tensor<T>>,
) -> Result<(), TrainError> {
    adam.step_count = step_count;
    adam.state.clear();
    let prefix = format!("optim/{model_prefix}/");
    let keys: Vec<String> = entries
        .keys()
        .filter(|k| k.starts_with(&prefix))
        .cloned()
        .collect();
    let mut halves: BTreeMap<String, (Option<Vec<T>>, Option<Vec<T>>)> = BTreeMap::new();
    for key in keys {
        let t = entries.remove(&key).expect("key came from this map");
        let stem = key.strip_prefix("optim/").expect("filtered on prefix");
        if let Some(path) = stem.strip_suffix("/m") {
            halves.entry(path.to_string()).or_default().0 = Some(t.data().to_vec());
        } else if let Some(path) = stem.strip_suffix("/v") {
            halves.entry(path.to_string()).or_default().1 = Some(t.data().to_vec());
        } else {
            return Err(TrainError::Checkpoint(CheckpointError::UnexpectedParam {
                name: key,
            }));
        }
    }
    for (path, (m, v)) in halves {
        let (Some(m), Some(v)) = (m, v) else {
            return Err(TrainError::Checkpoint(CheckpointError::MissingParam {
                name: format!("optim/{path}"),
            }));
        };
        adam.state.insert(path, AdamState { m, v });
    }
    Ok(())
}

fn global_grad_norm<T: Real, M: Parameterized<T>>(
    model: &M,
    prefix: &str,
    grads: &Gradients<T>,
) -> Result<f64, TrainError> {
    let mut sum = 0.0f64;
    let mut err = None;
    model.visit_params(prefix, &mut |_, p| {
        if err.is_some() {
            return;
        }
        match grads.wrt(p) {
            Ok(g) => {
                for &v in g.data() {
                    let v = v.to_f64();
                    sum += v * v;
                }
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(sum.sqrt()),
    }
}

/// Callback run on eval cadence; its value lands in the log verbatim.
pub type EvalHook<'a, T> =
    &'a mut dyn FnMut(&Generator<T>, &Discriminator<T>, u64) -> serde_json::Value;

#[derive(Debug)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub final_checkpoint: PathBuf,
    pub generator_steps_done: u64,
    pub critic_steps_done: u64,
    pub last_critic_loss: Option<f64>,
    pub last_generator_loss: Option<f64>,
}

/// Runs the full alternating loop: `n_critic` critic updates per
/// generator update, with config snapshot, JSONL log, cadenced and
/// final checkpoints. `resume_from` restores a checkpoint first and
/// continues until `generator_steps` total updates exist.
pub fn train<T: Real>(
    train_cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    pyramid: Arc<GraphPyramid>,
    data: &dyn BatchSource<T>,
    run_dir: &Path,
    resume_from: Option<&Path>,
    mut eval: Option<EvalHook<'_, T>>,
) -> Result<TrainOutcome, TrainError> {
    train_cfg.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    std::fs::create_dir_all(run_dir)?;

    #[derive(Serialize)]
    struct Snapshot<'a> {
        train: &'a TrainConfig,
        model: &'a ModelConfig,
    }
    let snapshot = serde_json::to_string_pretty(&Snapshot {
        train: train_cfg,
        model: model_cfg,
    })?;
    std::fs::write(run_dir.join("config.json"), snapshot + "\n")?;

    let mut trainer = Trainer::new(train_cfg.clone(), model_cfg, pyramid)?;
    if let Some(ckpt) = resume_from {
        trainer.restore(ckpt)?;
    }
    let log_path = run_dir.join("log.jsonl");
    let mut log = if trainer.critic_steps_done == 0 {
        RunLog::create(&log_path)?
    } else {
        RunLog::append_to(&log_path, trainer.critic_steps_done)?
    };

    let started = Instant::now();
    let mut last_critic_loss = None;
    let mut last_generator_loss = None;
    while trainer.generator_steps_done < train_cfg.generator_steps {
        let mut labels = Vec::new();
        for _ in 0..train_cfg.n_critic {
            let (x_real, batch_labels) = trainer.draw_batch(data);
            let stats = trainer.critic_step(&x_real, &batch_labels)?;
            labels = batch_labels;
            last_critic_loss = Some(stats.loss);
            log.append(&LogRecord {
                generator_step: trainer.generator_steps_done,
                critic_step: trainer.critic_steps_done,
                kind: LogKind::Critic,
                critic_loss: Some(stats.loss),
                wasserstein: Some(stats.wasserstein),
                penalty: Some(stats.penalty),
                generator_loss: None,
                grad_norm: Some(stats.grad_norm),
                wall_ms: started.elapsed().as_millis() as u64,
                metrics: None,
            })?;
        }
        let stats = trainer.generator_step(&labels)?;
        last_generator_loss = Some(stats.loss);
        log.append(&LogRecord {
            generator_step: trainer.generator_steps_done,
            critic_step: trainer.critic_steps_done,
            kind: LogKind::Generator,
            critic_loss: None,
            wasserstein: None,
            penalty: None,
            generator_loss: Some(stats.loss),
            grad_norm: Some(stats.grad_norm),
            wall_ms: started.elapsed().as_millis() as u64,
            metrics: None,
        })?;

        let done = trainer.generator_steps_done;
        if train_cfg.checkpoint_every > 0
            && done % train_cfg.checkpoint_every == 0
            && done < train_cfg.generator_steps
        {
            trainer.save(&run_dir.join(format!("checkpoint-{done:06}.ckpt")))?;
        }
        if train_cfg.eval_every > 0 && done % train_cfg.eval_every == 0 {
            if let Some(hook) = eval.as_mut() {
                let metrics = hook(&trainer.generator, &trainer.discriminator, done);
                log.append(&LogRecord {
                    generator_step: done,
                    critic_step: trainer.critic_steps_done,
                    kind: LogKind::Eval,
                    critic_loss: None,
                    wasserstein: None,
                    penalty: None,
                    generator_loss: None,
                    grad_norm: None,
                    wall_ms: started.elapsed().as_millis() as u64,
                    metrics: Some(metrics),
                })?;
            }
        }
    }

    let final_checkpoint = run_dir.join("checkpoint-final.ckpt");
    trainer.save(&final_checkpoint)?;
    Ok(TrainOutcome {
        run_dir: run_dir.to_path_buf(),
        final_checkpoint,
        generator_steps_done: trainer.generator_steps_done,
        critic_steps_done: trainer.critic_steps_done,
        last_critic_loss,
        last_generator_loss,
    })
}
