//! Layer primitives shared by the generator and discriminator.
//!
//! Motion tensors are `[B, C, T, N]` throughout: batch, channels,
//! frames, joints.

use rand_chacha::ChaCha8Rng;

use crate::graph::PartitionedAdjacency;
use crate::tensor::{init_uniform_fan_in, join_path, Parameterized, Real, Tensor};

use super::ModelError;

/// Affine map `[B, in] -> [B, out]`.
pub struct Linear<T: Real> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    in_dim: usize,
    out_dim: usize,
}

impl<T: Real> Linear<T> {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Linear {
            weight: init_uniform_fan_in(&[in_dim, out_dim], in_dim, rng),
            bias: init_uniform_fan_in(&[out_dim], in_dim, rng),
            in_dim,
            out_dim,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_dim {
            return Err(ModelError::ShapeMismatch {
                what: "linear input",
                expected: vec![x.shape().first().copied().unwrap_or(0), self.in_dim],
                got: x.shape().to_vec(),
            });
        }
        Ok(x.matmul(&self.weight)
            .add(&self.bias.reshape(&[1, self.out_dim])))
    }
}

impl<T: Real> Parameterized<T> for Linear<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "weight"), &self.weight);
        f(&join_path(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "weight"), &mut self.weight);
        f(&join_path(prefix, "bias"), &mut self.bias);
    }
}

/// Spatial graph convolution over partitioned adjacencies with a
/// learnable edge-importance mask shared across partitions.
///
/// Forward computes sum_p norm(A_p * M) X W_p per frame, where the
/// normalization divides by the masked row degrees on both sides and is
/// recomputed from the current mask every pass.
pub struct SpatialGcn<T: Real> {
    pub weights: [Tensor<T>; 3],
    pub mask: Tensor<T>,
    pub bias: Tensor<T>,
    raw: [Tensor<T>; 3],
    n: usize,
    c_in: usize,
    c_out: usize,
}

impl<T: Real> SpatialGcn<T> {
    pub fn new(
        adjacency: &PartitionedAdjacency,
        c_in: usize,
        c_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let n = adjacency.n;
        let weights = [
            init_uniform_fan_in(&[c_in, c_out], c_in, rng),
            init_uniform_fan_in(&[c_in, c_out], c_in, rng),
            init_uniform_fan_in(&[c_in, c_out], c_in, rng),
        ];
        SpatialGcn {
            weights,
            mask: Tensor::leaf(vec![T::ONE; n * n], &[n, n]),
            bias: Tensor::leaf(vec![T::ZERO; c_out], &[c_out]),
            raw: adjacency.raw_tensors(),
            n,
            c_in,
            c_out,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.n
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    /// `(d_i^-1/2 * (raw \u{2299} mask)) * d_j^-1/2` with d = masked row
    /// sums. Degrees below one (empty rows included) are treated as one,
    /// matching the unmasked rule's zero-degree guard and keeping the
    /// root of drifting masked degrees real.
    pub fn normalize_masked(raw: &Tensor<T>, mask: &Tensor<T>) -> Tensor<T> {
        let n = raw.shape()[0];
        let masked = raw.mul(mask);
        let deg = masked.sum_to(&[n, 1]);
        let inv = deg.clamp_min(T::ONE).powf_scalar(T::from_f64(-0.5));
        masked.mul(&inv).mul(&inv.reshape(&[1, n]))
    }

    /// Normalized partitions with the mask frozen at all-ones: the
    /// static, mask-free form of the layer's propagation rule.
    pub fn static_normalized(&self) -> [Tensor<T>; 3] {
        let ones = Tensor::from_vec(vec![T::ONE; self.n * self.n], &[self.n, self.n]);
        [
            Self::normalize_masked(&self.raw[0], &ones),
            Self::normalize_masked(&self.raw[1], &ones),
            Self::normalize_masked(&self.raw[2], &ones),
        ]
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize), ModelError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.c_in || s[3] != self.n {
            return Err(ModelError::ShapeMismatch {
                what: "spatial gcn input",
                expected: vec![
                    s.first().copied().unwrap_or(0),
                    self.c_in,
                    s.get(2).copied().unwrap_or(0),
                    self.n,
                ],
                got: s.to_vec(),
            });
        }
        Ok((s[0], s[2]))
    }

    /// Aggregates `x` with explicit normalized partition matrices. The
    /// mask-driven forward goes through here with its freshly
    /// renormalized partitions, so a ones mask reproduces the static
    /// rule bit for bit.
    pub fn forward_with(
        &self,
        x: &Tensor<T>,
        norms: &[Tensor<T>; 3],
    ) -> Result<Tensor<T>, ModelError> {
        let (b, t) = self.check_input(x)?;
        let (n, c_in, c_out) = (self.n, self.c_in, self.c_out);
        let h = x.permute(&[0, 2, 3, 1]);
        let mut acc: Option<Tensor<T>> = None;
        for p in 0..3 {
            let mixed = h.reshape(&[b * t * n, c_in]).matmul(&self.weights[p]);
            let per_joint = mixed
                .reshape(&[b, t, n, c_out])
                .permute(&[2, 0, 1, 3])
                .reshape(&[n, b * t * c_out]);
            let spread = norms[p]
                .matmul(&per_joint)
                .reshape(&[n, b, t, c_out])
                .permute(&[1, 2, 0, 3]);
            acc = Some(match acc {
                Some(a) => a.add(&spread),
                None => spread,
            });
        }
        let out = acc
            .expect("three partitions")
            .add(&self.bias.reshape(&[1, 1, 1, c_out]));
        Ok(out.permute(&[0, 3, 1, 2]))
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let norms = [
            Self::normalize_masked(&self.raw[0], &self.mask),
            Self::normalize_masked(&self.raw[1], &self.mask),
            Self::normalize_masked(&self.raw[2], &self.mask),
        ];
        self.forward_with(x, &norms)
    }
}

impl<T: Real> Parameterized<T> for SpatialGcn<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "w0"), &self.weights[0]);
        f(&join_path(prefix, "w1"), &self.weights[1]);
        f(&join_path(prefix, "w2"), &self.weights[2]);
        f(&join_path(prefix, "mask"), &self.mask);
        f(&join_path(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "w0"), &mut self.weights[0]);
        f(&join_path(prefix, "w1"), &mut self.weights[1]);
        f(&join_path(prefix, "w2"), &mut self.weights[2]);
        f(&join_path(prefix, "mask"), &mut self.mask);
        f(&join_path(prefix, "bias"), &mut self.bias);
    }
}

/// Joint-wise 1-D convolution along frames: kernel `[C_out, C_in, K]`,
/// odd K, stride 1, replicate padding so frame count is preserved and
/// constant signals stay constant under sum-one kernels.
pub struct TemporalConv<T: Real> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
    c_in: usize,
    c_out: usize,
    k: usize,
}

impl<T: Real> TemporalConv<T> {
    pub fn new(c_in: usize, c_out: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(k % 2 == 1, "temporal kernel must be odd, got {}", k);
        TemporalConv {
            kernel: init_uniform_fan_in(&[c_out, c_in, k], c_in * k, rng),
            bias: Tensor::leaf(vec![T::ZERO; c_out], &[c_out]),
            c_in,
            c_out,
            k,
        }
    }

    /// Centered delta kernel: the exact identity map when C_in == C_out.
    pub fn identity(c: usize, k: usize) -> Self {
        assert!(k % 2 == 1, "temporal kernel must be odd, got {}", k);
        let mut data = vec![T::ZERO; c * c * k];
        for ch in 0..c {
            data[(ch * c + ch) * k + (k - 1) / 2] = T::ONE;
        }
        TemporalConv {
            kernel: Tensor::leaf(data, &[c, c, k]),
            bias: Tensor::leaf(vec![T::ZERO; c], &[c]),
            c_in: c,
            c_out: c,
            k,
        }
    }

    pub fn kernel_len(&self) -> usize {
        self.k
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.c_in {
            return Err(ModelError::ShapeMismatch {
                what: "temporal conv input",
                expected: vec![
                    s.first().copied().unwrap_or(0),
                    self.c_in,
                    s.get(2).copied().unwrap_or(0),
                    s.get(3).copied().unwrap_or(0),
                ],
                got: s.to_vec(),
            });
        }
        let (b, t, n) = (s[0], s[2], s[3]);
        let pad = (self.k - 1) / 2;
        let ck = self.c_in * self.k;
        let cols = if pad == 0 {
            x.im2col_time(self.k)
        } else {
            let first = x.narrow(2, 0, 1).broadcast_to(&[b, self.c_in, pad, n]);
            let last = x.narrow(2, t - 1, 1).broadcast_to(&[b, self.c_in, pad, n]);
            // The interior rows of the padded patch matrix never touch
            // im2col's own zero padding, so this is replicate padding.
            Tensor::concat(&[&first, x, &last], 2)
                .im2col_time(self.k)
                .reshape(&[b, t + 2 * pad, n, ck])
                .narrow(1, pad, t)
                .reshape(&[b * t * n, ck])
        };
        let w = self.kernel.reshape(&[self.c_out, ck]).t2();
        let y = cols
            .matmul(&w)
            .reshape(&[b, t, n, self.c_out])
            .add(&self.bias.reshape(&[1, 1, 1, self.c_out]));
        Ok(y.permute(&[0, 3, 1, 2]))
    }
}

impl<T: Real> Parameterized<T> for TemporalConv<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "kernel"), &self.kernel);
        f(&join_path(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "kernel"), &mut self.kernel);
        f(&join_path(prefix, "bias"), &mut self.bias);
    }
}

/// Adds per-joint noise scaled by a learned per-channel weight. Weights
/// start at zero, so a fresh layer is an exact pass-through.
pub struct NoiseInjection<T: Real> {
    pub weight: Tensor<T>,
    channels: usize,
}

impl<T: Real> NoiseInjection<T> {
    pub fn new(channels: usize) -> Self {
        NoiseInjection {
            weight: Tensor::leaf(vec![T::ZERO; channels], &[channels]),
            channels,
        }
    }

    /// `x + weight[c] * noise`, noise shaped `[B, 1, T, N]`.
    pub fn forward(&self, x: &Tensor<T>, noise: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let s = x.shape();
        let expected = vec![s[0], 1, s[2], s[3]];
        if s.len() != 4 || s[1] != self.channels || noise.shape() != expected.as_slice() {
            return Err(ModelError::ShapeMismatch {
                what: "noise injection",
                expected,
                got: noise.shape().to_vec(),
            });
        }
        Ok(x.add(&noise.mul(&self.weight.reshape(&[1, self.channels, 1, 1]))))
    }
}

impl<T: Real> Parameterized<T> for NoiseInjection<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "weight"), &self.weight);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "weight"), &mut self.weight);
    }
}

/// Per-channel batch normalization over batch, frames, and joints with
/// batch statistics; affine scale and shift are learned.
pub struct BatchNorm<T: Real> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    channels: usize,
    eps: f64,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: Tensor::leaf(vec![T::ONE; channels], &[channels]),
            beta: Tensor::leaf(vec![T::ZERO; channels], &[channels]),
            channels,
            eps: 1e-5,
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.channels {
            return Err(ModelError::ShapeMismatch {
                what: "batch norm input",
                expected: vec![
                    s.first().copied().unwrap_or(0),
                    self.channels,
                    s.get(2).copied().unwrap_or(0),
                    s.get(3).copied().unwrap_or(0),
                ],
                got: s.to_vec(),
            });
        }
        let c = self.channels;
        let count = T::from_f64((s[0] * s[2] * s[3]) as f64);
        let inv_count = T::ONE / count;
        let mu = x.sum_to(&[1, c, 1, 1]).scale(inv_count);
        let centered = x.sub(&mu);
        let var = centered.square().sum_to(&[1, c, 1, 1]).scale(inv_count);
        let inv_std = var
            .add_scalar(T::from_f64(self.eps))
            .powf_scalar(T::from_f64(-0.5));
        Ok(centered
            .mul(&inv_std)
            .mul(&self.gamma.reshape(&[1, c, 1, 1]))
            .add(&self.beta.reshape(&[1, c, 1, 1])))
    }
}

impl<T: Real> Parameterized<T> for BatchNorm<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "gamma"), &self.gamma);
        f(&join_path(prefix, "beta"), &self.beta);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "gamma"), &mut self.gamma);
        f(&join_path(prefix, "beta"), &mut self.beta);
    }
}
