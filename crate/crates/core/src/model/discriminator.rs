//! Residual downsampling critic: scores a class-conditioned skeleton
//! sequence by coarsening it back to the root of the pyramid. No
//! normalization layers anywhere; the per-sample gradient penalty
//! forbids cross-batch statistics.

use std::sync::Arc;

use crate::graph::{temporal_resample, GraphPyramid};
use crate::tensor::{join_path, Parameterized, Real, StreamRng, Tensor};

use super::config::ModelConfig;
use super::layers::{Linear, SpatialGcn, TemporalConv};
use super::mapping::ClassEmbedding;
use super::ModelError;

/// One coarsening step: spatial graph convolution, temporal convolution,
/// leaky rectifier, added to a temporal-only skip path, then joint
/// removal (when the pyramid shrinks) and frame halving.
pub struct DiscriminatorBlock<T: Real> {
    pub level_in: usize,
    pub level_out: usize,
    pub t_in: usize,
    pub t_out: usize,
    pub sgcn: SpatialGcn<T>,
    pub tmain: TemporalConv<T>,
    pub tskip: TemporalConv<T>,
}

impl<T: Real> DiscriminatorBlock<T> {
    pub fn spatial_downsample(&self) -> bool {
        self.level_out < self.level_in
    }

    pub fn forward(&self, x: &Tensor<T>, pyramid: &GraphPyramid) -> Result<Tensor<T>, ModelError> {
        let leak = T::from_f64(0.2);
        let main = self.tmain.forward(&self.sgcn.forward(x)?)?.leaky_relu(leak);
        let mut h = main.add(&self.tskip.forward(x)?);
        if self.spatial_downsample() {
            h = pyramid.downsample(&h, self.level_in)?;
        }
        if self.t_out != self.t_in {
            h = temporal_resample(&h, self.t_out)?;
        }
        Ok(h)
    }
}

impl<T: Real> Parameterized<T> for DiscriminatorBlock<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.sgcn.visit_params(&join_path(prefix, "sgcn"), f);
        self.tmain.visit_params(&join_path(prefix, "tmain"), f);
        self.tskip.visit_params(&join_path(prefix, "tskip"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.sgcn.visit_params_mut(&join_path(prefix, "sgcn"), f);
        self.tmain.visit_params_mut(&join_path(prefix, "tmain"), f);
        self.tskip.visit_params_mut(&join_path(prefix, "tskip"), f);
    }
}

pub struct Discriminator<T: Real> {
    pub embed: ClassEmbedding<T>,
    pub blocks: Vec<DiscriminatorBlock<T>>,
    pub head: Linear<T>,
    pub pyramid: Arc<GraphPyramid>,
    in_channels: usize,
    frames: usize,
    head_t: usize,
    head_n: usize,
}

impl<T: Real> Discriminator<T> {
    pub fn new(
        cfg: &ModelConfig,
        pyramid: Arc<GraphPyramid>,
        rng: &StreamRng,
    ) -> Result<Self, ModelError> {
        cfg.validate()?;
        let blocks_n = cfg.block_count();
        let frames = cfg.frame_schedule();
        let levels = cfg.level_schedule(pyramid.level_count())?;
        // Channel widths mirror the generator's, coarsest width last.
        let widths: Vec<usize> = [cfg.out_channels + cfg.embed_dim]
            .into_iter()
            .chain(cfg.channels.iter().rev().copied())
            .collect();

        let embed = ClassEmbedding::new(
            cfg.num_classes,
            cfg.embed_dim,
            &mut rng.stream("init/d/embed", 0),
        );
        let mut blocks = Vec::with_capacity(blocks_n);
        for k in 0..blocks_n {
            let level_in = levels[blocks_n - k];
            let level_out = levels[blocks_n - k - 1];
            let (c_in, c_out) = (widths[k], widths[k + 1]);
            let adjacency = &pyramid.levels[level_in].adjacency;
            let site = |part: &str| format!("init/d/blocks/{}/{}", k, part);
            blocks.push(DiscriminatorBlock {
                level_in,
                level_out,
                t_in: frames[blocks_n - k],
                t_out: frames[blocks_n - k - 1],
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
            });
        }
        let head = Linear::new(
            *widths.last().expect("non-empty widths"),
            1,
            &mut rng.stream("init/d/head", 0),
        );
        Ok(Discriminator {
            embed,
            blocks,
            head,
            pyramid: pyramid.clone(),
            in_channels: cfg.out_channels,
            frames: cfg.frames,
            head_t: frames[0],
            head_n: pyramid.level_sizes()[0],
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn num_classes(&self) -> usize {
        self.embed.num_classes()
    }

    /// Scores one batch: `[B]` critic values, one per sample, built by
    /// concatenating the class embedding channel-wise, coarsening, and
    /// averaging over remaining frames and joints into an affine head.
    pub fn criticize(&self, x: &Tensor<T>, classes: &[usize]) -> Result<Tensor<T>, ModelError> {
        let s = x.shape();
        let joints = *self.pyramid.level_sizes().last().expect("non-empty pyramid");
        let expected = vec![classes.len(), self.in_channels, self.frames, joints];
        if s != expected.as_slice() {
            return Err(ModelError::ShapeMismatch {
                what: "discriminator input",
                expected,
                got: s.to_vec(),
            });
        }
        let (b, t, n) = (s[0], s[2], s[3]);
        let e_dim = self.embed.dim();
        let e = self
            .embed
            .lookup(classes)?
            .reshape(&[b, e_dim, 1, 1])
            .broadcast_to(&[b, e_dim, t, n]);
        let mut h = Tensor::concat(&[x, &e], 1);
        for block in &self.blocks {
            h = block.forward(&h, &self.pyramid)?;
        }
        let c = h.shape()[1];
        let pooled = h
            .sum_to(&[b, c, 1, 1])
            .scale(T::ONE / T::from_f64((self.head_t * self.head_n) as f64))
            .reshape(&[b, c]);
        Ok(self.head.forward(&pooled)?.reshape(&[b]))
    }
}

impl<T: Real> Parameterized<T> for Discriminator<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.embed.visit_params(&join_path(prefix, "embed"), f);
        for (k, block) in self.blocks.iter().enumerate() {
            block.visit_params(&join_path(prefix, &format!("blocks/{}", k)), f);
        }
        self.head.visit_params(&join_path(prefix, "head"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.embed.visit_params_mut(&join_path(prefix, "embed"), f);
        for (k, block) in self.blocks.iter_mut().enumerate() {
            block.visit_params_mut(&join_path(prefix, &format!("blocks/{}", k)), f);
        }
        self.head.visit_params_mut(&join_path(prefix, "head"), f);
    }
}
