//! Dense row-major tensors with reverse-mode automatic differentiation.
//!
//! Gradients are built out of the same differentiable ops as the forward
//! pass, so a backward pass run with `create_graph` yields gradients that
//! can themselves be differentiated (needed for gradient-penalty terms).
//!
//! Two element types are supported: `f32` for training and `f64` for
//! verification (finite-difference checks are noise-dominated in 32-bit).

mod autograd;
mod checkpoint;
mod gradcheck;
mod ops;
mod optim;
mod param;
mod rng;
#[cfg(test)]
mod tests;

pub use autograd::{backward, AutogradError, Gradients};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CKPT_MAGIC};
pub use gradcheck::{
    central_diff_grad, check_against, grad_check, grad_check_multi, GradCheckError,
};
pub use ops::AxisMap;
pub use optim::{Adam, AdamConfig, AdamState, OptimError};
pub use param::{collect_params, init_uniform_fan_in, join_path, ParamMap, Parameterized};
pub use rng::{sample_normal_vec, sample_uniform_vec, StreamRng};

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Element type for tensors: `f32` (training) or `f64` (verification).
pub trait Real:
    Copy
    + Send
    + Sync
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    /// Short dtype tag used in checkpoints and error messages.
    const DTYPE: &'static str;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: Self) -> Self;
    fn maximum(self, o: Self) -> Self;
    fn is_finite(self) -> bool;
    /// Row-major C = A(m,k) * B(k,n).
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]);
    fn to_le_bytes_vec(self) -> Vec<u8>;
    fn from_le_slice(bytes: &[u8]) -> Self;
    /// Size of one element in checkpoint blobs.
    const BYTE_WIDTH: usize;
}

impl Real for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const DTYPE: &'static str = "f32";
    const BYTE_WIDTH: usize = 4;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn ln(self) -> Self {
        f32::ln(self)
    }
    fn powf(self, p: Self) -> Self {
        f32::powf(self, p)
    }
    fn maximum(self, o: Self) -> Self {
        f32::max(self, o)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]) {
        debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
    fn to_le_bytes_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }
    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte f32 slice"))
    }
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const DTYPE: &'static str = "f64";
    const BYTE_WIDTH: usize = 8;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, p: Self) -> Self {
        f64::powf(self, p)
    }
    fn maximum(self, o: Self) -> Self {
        f64::max(self, o)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]) {
        debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
    fn to_le_bytes_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }
    fn from_le_slice(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte f64 slice"))
    }
}

static NEXT_NODE_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_node_id() -> u64 {
    NEXT_NODE_ID.fetch_add(1, Ordering::Relaxed)
}

/// Per-parent gradient contributions, in parent order. `None` marks a
/// parent that receives no gradient (e.g. constant operands).
pub(crate) type BackwardFn<T> =
    Box<dyn Fn(&BackwardCtx<'_, T>) -> Vec<Option<Tensor<T>>> + Send + Sync>;

pub(crate) struct BackwardCtx<'a, T: Real> {
    /// Upstream gradient w.r.t. this node's output.
    pub grad: &'a Tensor<T>,
    pub parents: &'a [Tensor<T>],
    /// The node's own forward output (saved activation).
    pub output: &'a Tensor<T>,
}

/// One recorded operation in the computation graph. Parents are held as
/// tensors, which keeps every saved activation alive until the graph is
/// dropped.
pub(crate) struct Node<T: Real> {
    pub id: u64,
    pub op: &'static str,
    pub parents: Vec<Tensor<T>>,
    pub backward: Option<BackwardFn<T>>,
}

struct Inner<T: Real> {
    data: Arc<Vec<T>>,
    shape: Vec<usize>,
    node: Option<Arc<Node<T>>>,
}

/// Immutable dense tensor. Cloning is cheap (shared storage).
pub struct Tensor<T: Real> {
    inner: Arc<Inner<T>>,
}

impl<T: Real> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            inner: Arc::clone(&self.inner),
        }
    }
}

thread_local! {
    static GRAD_ENABLED: std::cell::Cell<bool> = const { std::cell::Cell::new(true) };
}

/// True when new ops record autodiff nodes on this thread.
pub fn grad_recording_enabled() -> bool {
    GRAD_ENABLED.with(|f| f.get())
}

/// Runs `f` with gradient recording disabled; ops inside produce constants.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    with_grad_enabled(false, f)
}

pub fn with_grad_enabled<R>(enabled: bool, f: impl FnOnce() -> R) -> R {
    GRAD_ENABLED.with(|flag| {
        let prev = flag.get();
        flag.set(enabled);
        let out = f();
        flag.set(prev);
        out
    })
}

impl<T: Real> Tensor<T> {
    fn from_parts(data: Arc<Vec<T>>, shape: Vec<usize>, node: Option<Arc<Node<T>>>) -> Self {
        debug_assert_eq!(data.len(), shape.iter().product::<usize>());
        Tensor {
            inner: Arc::new(Inner { data, shape, node }),
        }
    }

    /// Constant tensor: carries no gradient.
    pub fn from_vec(data: Vec<T>, shape: &[usize]) -> Self {
        assert_eq!(
            data.len(),
            shape.iter().product::<usize>(),
            "data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Self::from_parts(Arc::new(data), shape.to_vec(), None)
    }

    /// Differentiable leaf. Leaves are the only tensors gradients can be
    /// requested for.
    pub fn leaf(data: Vec<T>, shape: &[usize]) -> Self {
        assert_eq!(
            data.len(),
            shape.iter().product::<usize>(),
            "data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        let node = Arc::new(Node {
            id: fresh_node_id(),
            op: "leaf",
            parents: Vec::new(),
            backward: None,
        });
        Self::from_parts(Arc::new(data), shape.to_vec(), Some(node))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::from_vec(vec![T::ZERO; shape.iter().product()], shape)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::from_vec(vec![T::ONE; shape.iter().product()], shape)
    }

    pub fn full(shape: &[usize], v: T) -> Self {
        Self::from_vec(vec![v; shape.iter().product()], shape)
    }

    pub fn scalar(v: T) -> Self {
        Self::from_vec(vec![v], &[])
    }

    pub fn from_f64_slice(data: &[f64], shape: &[usize]) -> Self {
        Self::from_vec(data.iter().map(|&v| T::from_f64(v)).collect(), shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.inner.data
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.inner.data.iter().map(|v| v.to_f64()).collect()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.inner.data[0]
    }

    /// True when any op downstream of this tensor records gradients for it.
    pub fn requires_grad(&self) -> bool {
        self.inner.node.is_some()
    }

    /// Same values, no gradient history.
    pub fn detach(&self) -> Self {
        Self::from_parts(Arc::clone(&self.inner.data), self.inner.shape.clone(), None)
    }

    /// Queryable finiteness check (NaN/Inf detection).
    pub fn all_finite(&self) -> bool {
        self.inner.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn node(&self) -> Option<&Arc<Node<T>>> {
        self.inner.node.as_ref()
    }

    pub(crate) fn node_id(&self) -> Option<u64> {
        self.inner.node.as_ref().map(|n| n.id)
    }

    pub(crate) fn data_arc(&self) -> Arc<Vec<T>> {
        Arc::clone(&self.inner.data)
    }

    pub(crate) fn with_node(
        data: Vec<T>,
        shape: Vec<usize>,
        op: &'static str,
        parents: Vec<Tensor<T>>,
        backward: BackwardFn<T>,
    ) -> Self {
        Self::with_node_arc(Arc::new(data), shape, op, parents, backward)
    }

    /// Like `with_node` but shares an existing buffer (used by views).
    pub(crate) fn with_node_arc(
        data: Arc<Vec<T>>,
        shape: Vec<usize>,
        op: &'static str,
        parents: Vec<Tensor<T>>,
        backward: BackwardFn<T>,
    ) -> Self {
        let record = grad_recording_enabled() && parents.iter().any(|p| p.inner.node.is_some());
        let node = record.then(|| {
            Arc::new(Node {
                id: fresh_node_id(),
                op,
                parents,
                backward: Some(backward),
            })
        });
        Self::from_parts(data, shape, node)
    }
}

impl<T: Real> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preview: Vec<&T> = self.inner.data.iter().take(8).collect();
        write!(
            f,
            "Tensor{{shape: {:?}, grad: {}, data: {:?}{}}}",
            self.inner.shape,
            self.inner.node.is_some(),
            preview,
            if self.numel() > 8 { ", .." } else { "" }
        )
    }
}

// ── shape helpers ────────────────────────────────────────────────────

/// NumPy-style broadcast of two shapes, right-aligned.
pub fn broadcast_shapes(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        if da == db || da == 1 || db == 1 {
            out[i] = da.max(db);
        } else {
            return None;
        }
    }
    Some(out)
}

/// Row-major strides, with stride 0 on axes being broadcast up to `out`.
pub(crate) fn broadcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let mut strides = vec![0usize; out.len()];
    let offset = out.len() - shape.len();
    let mut s = 1usize;
    for i in (0..shape.len()).rev() {
        strides[offset + i] = if shape[i] == 1 { 0 } else { s };
        s *= shape[i];
    }
    strides
}

pub(crate) fn contiguous_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}
