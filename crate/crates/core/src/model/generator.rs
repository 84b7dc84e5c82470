//! Residual upsampling generator: an intermediate latent point is
//! projected to the coarsest resolution and grown block by block over
//! joints and frames.

use std::sync::Arc;

use crate::graph::{temporal_resample, GraphPyramid};
use crate::tensor::{join_path, sample_normal_vec, Parameterized, Real, StreamRng, Tensor};

use super::config::{BatchNormPolicy, ModelConfig};
use super::layers::{BatchNorm, Linear, NoiseInjection, SpatialGcn, TemporalConv};
use super::mapping::MappingNetwork;
use super::ModelError;

/// One resolution step: upsample joints (when the pyramid grows) and
/// frames, then a spatial graph convolution, a temporal convolution, a
/// rectifier, and optional batch norm, added to a temporal-only skip
/// path, plus weighted per-joint noise.
pub struct GeneratorBlock<T: Real> {
    pub level_in: usize,
    pub level_out: usize,
    pub t_in: usize,
    pub t_out: usize,
    pub sgcn: SpatialGcn<T>,
    pub tmain: TemporalConv<T>,
    pub tskip: TemporalConv<T>,
    pub noise: NoiseInjection<T>,
    pub bn: Option<BatchNorm<T>>,
}

impl<T: Real> GeneratorBlock<T> {
    pub fn spatial_upsample(&self) -> bool {
        self.level_out > self.level_in
    }

    pub fn joints_out(&self) -> usize {
        self.sgcn.joint_count()
    }

    pub fn channels_out(&self) -> usize {
        self.sgcn.c_out()
    }

    /// `noise` must be `[B, 1, t_out, joints_out]`.
    pub fn forward(
        &self,
        x: &Tensor<T>,
        pyramid: &GraphPyramid,
        noise: &Tensor<T>,
    ) -> Result<Tensor<T>, ModelError> {
        let mut up = if self.spatial_upsample() {
            pyramid.upsample(x, self.level_in)?
        } else {
            x.clone()
        };
        if self.t_out != self.t_in {
            up = temporal_resample(&up, self.t_out)?;
        }
        let mut main = self.tmain.forward(&self.sgcn.forward(&up)?)?.relu();
        if let Some(bn) = &self.bn {
            main = bn.forward(&main)?;
        }
        let skip = self.tskip.forward(&up)?;
        self.noise.forward(&main.add(&skip), noise)
    }
}

impl<T: Real> Parameterized<T> for GeneratorBlock<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.sgcn.visit_params(&join_path(prefix, "sgcn"), f);
        self.tmain.visit_params(&join_path(prefix, "tmain"), f);
        self.tskip.visit_params(&join_path(prefix, "tskip"), f);
        self.noise.visit_params(&join_path(prefix, "noise"), f);
        if let Some(bn) = &self.bn {
            bn.visit_params(&join_path(prefix, "bn"), f);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.sgcn.visit_params_mut(&join_path(prefix, "sgcn"), f);
        self.tmain.visit_params_mut(&join_path(prefix, "tmain"), f);
        self.tskip.visit_params_mut(&join_path(prefix, "tskip"), f);
        self.noise.visit_params_mut(&join_path(prefix, "noise"), f);
        if let Some(bn) = &mut self.bn {
            bn.visit_params_mut(&join_path(prefix, "bn"), f);
        }
    }
}

pub struct Generator<T: Real> {
    pub mapping: MappingNetwork<T>,
    pub proj: Linear<T>,
    pub blocks: Vec<GeneratorBlock<T>>,
    pub pyramid: Arc<GraphPyramid>,
    w_dim: usize,
    c0: usize,
    t0: usize,
    n0: usize,
    out_channels: usize,
    frames: usize,
}

impl<T: Real> Generator<T> {
    pub fn new(
        cfg: &ModelConfig,
        pyramid: Arc<GraphPyramid>,
        rng: &StreamRng,
    ) -> Result<Self, ModelError> {
        cfg.validate()?;
        let w_dim = super::config::W_DIM;
        let frames = cfg.frame_schedule();
        let levels = cfg.level_schedule(pyramid.level_count())?;
        let widths: Vec<usize> = cfg
            .channels
            .iter()
            .copied()
            .chain([cfg.out_channels])
            .collect();

        let mapping = MappingNetwork::new(
            cfg.latent_dim,
            cfg.num_classes,
            cfg.embed_dim,
            cfg.mapping_depth,
            w_dim,
            &mut rng.stream("init/g/map", 0),
        );
        let (c0, t0, n0) = (widths[0], frames[0], pyramid.level_sizes()[0]);
        let proj = Linear::new(w_dim, c0 * t0 * n0, &mut rng.stream("init/g/proj", 0));

        let mut blocks = Vec::with_capacity(cfg.block_count());
        for k in 0..cfg.block_count() {
            let (level_in, level_out) = (levels[k], levels[k + 1]);
            let (c_in, c_out) = (widths[k], widths[k + 1]);
            let adjacency = &pyramid.levels[level_out].adjacency;
            let site = |part: &str| format!("init/g/blocks/{}/{}", k, part);
            let bn = match cfg.batch_norm {
                BatchNormPolicy::TimeOnlyBlocks if level_out == level_in => {
                    Some(BatchNorm::new(c_out))
                }
                BatchNormPolicy::AllBlocks => Some(BatchNorm::new(c_out)),
                _ => None,
            };
            blocks.push(GeneratorBlock {
                level_in,
                level_out,
                t_in: frames[k],
                t_out: frames[k + 1],
                sgcn: SpatialGcn::new(adjacency, c_in, c_out, &mut rng.stream(&site("sgcn"), 0)),
                tmain: TemporalConv::new(
                    c_out,
                    c_out,
                    cfg.temporal_kernel,
                    &mut rng.stream(&site("tmain"), 0),
                ),
                tskip: TemporalConv::new(
                    c_in,
                    c_out,
                    cfg.temporal_kernel,
                    &mut rng.stream(&site("tskip"), 0),
                ),
                noise: NoiseInjection::new(c_out),
                bn,
            });
        }
        Ok(Generator {
            mapping,
            proj,
            blocks,
            pyramid,
            w_dim,
            c0,
            t0,
            n0,
            out_channels: cfg.out_channels,
            frames: cfg.frames,
        })
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn joints_out(&self) -> usize {
        *self.pyramid.level_sizes().last().expect("non-empty pyramid")
    }

    /// Runs the block stack on an intermediate latent batch `[B, w_dim]`.
    /// Output is `[B, out_channels, frames, joints]`, bit-deterministic
    /// given `(w, noise_seed)`.
    pub fn generate(&self, w: &Tensor<T>, noise_seed: u64) -> Result<Tensor<T>, ModelError> {
        let s = w.shape();
        if s.len() != 2 || s[1] != self.w_dim {
            return Err(ModelError::ShapeMismatch {
                what: "generator latent input",
                expected: vec![s.first().copied().unwrap_or(0), self.w_dim],
                got: s.to_vec(),
            });
        }
        let b = s[0];
        let noise_rng = StreamRng::new(noise_seed);
        let mut h = self.proj.forward(w)?.reshape(&[b, self.c0, self.t0, self.n0]);
        for (k, block) in self.blocks.iter().enumerate() {
            let (t, n) = (block.t_out, block.joints_out());
            let noise = Tensor::from_vec(
                sample_normal_vec::<T>(&mut noise_rng.stream(&format!("noise/{}", k), 0), b * t * n),
                &[b, 1, t, n],
            );
            h = block.forward(&h, &self.pyramid, &noise)?;
        }
        Ok(h)
    }

    /// Maps `(z, classes)` through the mapping network and generates.
    pub fn synthesize(
        &self,
        z: &Tensor<T>,
        classes: &[usize],
        noise_seed: u64,
    ) -> Result<Tensor<T>, ModelError> {
        let w = self.mapping.forward(z, classes)?;
        self.generate(&w, noise_seed)
    }
}

impl<T: Real> Parameterized<T> for Generator<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.mapping.visit_params(&join_path(prefix, "map"), f);
        self.proj.visit_params(&join_path(prefix, "proj"), f);
        for (k, block) in self.blocks.iter().enumerate() {
            block.visit_params(&join_path(prefix, &format!("blocks/{}", k)), f);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.mapping.visit_params_mut(&join_path(prefix, "map"), f);
        self.proj.visit_params_mut(&join_path(prefix, "proj"), f);
        for (k, block) in self.blocks.iter_mut().enumerate() {
            block.visit_params_mut(&join_path(prefix, &format!("blocks/{}", k)), f);
        }
    }
}
