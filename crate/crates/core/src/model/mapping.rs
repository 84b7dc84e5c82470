//! Latent mapping: class embedding plus the nonlinear network that turns
//! a latent code and class into an intermediate latent point.

use rand_chacha::ChaCha8Rng;

use crate::tensor::{join_path, sample_normal_vec, Parameterized, Real, Tensor};

use super::layers::Linear;
use super::ModelError;

/// Learned table `[num_classes, dim]`; lookup is a one-hot matmul so
/// gradients flow into the table.
pub struct ClassEmbedding<T: Real> {
    pub table: Tensor<T>,
    num_classes: usize,
    dim: usize,
}

impl<T: Real> ClassEmbedding<T> {
    pub fn new(num_classes: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let data = sample_normal_vec::<T>(rng, num_classes * dim);
        ClassEmbedding {
            table: Tensor::leaf(data, &[num_classes, dim]),
            num_classes,
            dim,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookup(&self, classes: &[usize]) -> Result<Tensor<T>, ModelError> {
        let b = classes.len();
        let mut onehot = vec![T::ZERO; b * self.num_classes];
        for (i, &c) in classes.iter().enumerate() {
            if c >= self.num_classes {
                return Err(ModelError::InvalidClass {
                    class: c,
                    num_classes: self.num_classes,
                });
            }
            onehot[i * self.num_classes + c] = T::ONE;
        }
        let onehot = Tensor::from_vec(onehot, &[b, self.num_classes]);
        Ok(onehot.matmul(&self.table))
    }
}

impl<T: Real> Parameterized<T> for ClassEmbedding<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "table"), &self.table);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "table"), &mut self.table);
    }
}

/// Projects `concat(z, embed(y))` into the intermediate latent space,
/// then applies `depth` hidden affine layers with a rectifier between
/// layers. Depth 0 degenerates to the bare input projection.
pub struct MappingNetwork<T: Real> {
    pub embed: ClassEmbedding<T>,
    pub input: Linear<T>,
    pub hidden: Vec<Linear<T>>,
    latent_dim: usize,
    w_dim: usize,
}

impl<T: Real> MappingNetwork<T> {
    pub fn new(
        latent_dim: usize,
        num_classes: usize,
        embed_dim: usize,
        depth: usize,
        w_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let embed = ClassEmbedding::new(num_classes, embed_dim, rng);
        let input = Linear::new(latent_dim + embed_dim, w_dim, rng);
        let hidden = (0..depth).map(|_| Linear::new(w_dim, w_dim, rng)).collect();
        MappingNetwork {
            embed,
            input,
            hidden,
            latent_dim,
            w_dim,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    pub fn forward(&self, z: &Tensor<T>, classes: &[usize]) -> Result<Tensor<T>, ModelError> {
        let s = z.shape();
        if s.len() != 2 || s[1] != self.latent_dim || s[0] != classes.len() {
            return Err(ModelError::ShapeMismatch {
                what: "mapping latent input",
                expected: vec![classes.len(), self.latent_dim],
                got: s.to_vec(),
            });
        }
        let e = self.embed.lookup(classes)?;
        let mut h = self.input.forward(&Tensor::concat(&[z, &e], 1))?;
        for layer in &self.hidden {
            h = layer.forward(&h.relu())?;
        }
        Ok(h)
    }
}

impl<T: Real> Parameterized<T> for MappingNetwork<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.embed.visit_params(&join_path(prefix, "embed"), f);
        self.input.visit_params(&join_path(prefix, "in"), f);
        for (i, layer) in self.hidden.iter().enumerate() {
            layer.visit_params(&join_path(prefix, &format!("h{}", i)), f);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.embed.visit_params_mut(&join_path(prefix, "embed"), f);
        self.input.visit_params_mut(&join_path(prefix, "in"), f);
        for (i, layer) in self.hidden.iter_mut().enumerate() {
            layer.visit_params_mut(&join_path(prefix, &format!("h{}", i)), f);
        }
    }
}
