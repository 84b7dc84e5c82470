//! Tensor operations. Every differentiable op records a backward rule
//! built from these same ops, so gradients are themselves differentiable.

use super::{
    broadcast_shapes, broadcast_strides, contiguous_strides, BackwardCtx, Real, Tensor,
};
use std::sync::Arc;

// ── iteration helpers ────────────────────────────────────────────────

/// Applies `f` elementwise over the broadcast of `a` and `b`.
fn binary_broadcast<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> (Vec<T>, Vec<usize>) {
    let out_shape = broadcast_shapes(a.shape(), b.shape()).unwrap_or_else(|| {
        panic!(
            "shapes {:?} and {:?} do not broadcast",
            a.shape(),
            b.shape()
        )
    });
    let n: usize = out_shape.iter().product();
    let ad = a.data();
    let bd = b.data();
    if a.shape() == b.shape() {
        let out = ad.iter().zip(bd).map(|(&x, &y)| f(x, y)).collect();
        return (out, out_shape);
    }
    let sa = broadcast_strides(a.shape(), &out_shape);
    let sb = broadcast_strides(b.shape(), &out_shape);
    let mut out = Vec::with_capacity(n);
    let rank = out_shape.len();
    let mut idx = vec![0usize; rank];
    let mut oa = 0usize;
    let mut ob = 0usize;
    for _ in 0..n {
        out.push(f(ad[oa], bd[ob]));
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            oa += sa[ax];
            ob += sb[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            idx[ax] = 0;
            oa -= out_shape[ax] * sa[ax];
            ob -= out_shape[ax] * sb[ax];
        }
    }
    (out, out_shape)
}

fn unary_map<T: Real>(x: &Tensor<T>, f: impl Fn(T) -> T) -> Vec<T> {
    x.data().iter().map(|&v| f(v)).collect()
}

// ── elementwise arithmetic ───────────────────────────────────────────

impl<T: Real> Tensor<T> {
    pub fn add(&self, other: &Tensor<T>) -> Tensor<T> {
        let (data, shape) = binary_broadcast(self, other, |x, y| x + y);
        let (pa, pb) = (self.shape().to_vec(), other.shape().to_vec());
        Tensor::with_node(
            data,
            shape,
            "add",
            vec![self.clone(), other.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                vec![
                    Some(ctx.grad.sum_to(&pa)),
                    Some(ctx.grad.sum_to(&pb)),
                ]
            }),
        )
    }

    pub fn sub(&self, other: &Tensor<T>) -> Tensor<T> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Tensor<T>) -> Tensor<T> {
        let (data, shape) = binary_broadcast(self, other, |x, y| x * y);
        let (pa, pb) = (self.shape().to_vec(), other.shape().to_vec());
        Tensor::with_node(
            data,
            shape,
            "mul",
            vec![self.clone(), other.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                let a = &ctx.parents[0];
                let b = &ctx.parents[1];
                vec![
                    Some(ctx.grad.mul(b).sum_to(&pa)),
                    Some(ctx.grad.mul(a).sum_to(&pb)),
                ]
            }),
        )
    }

    pub fn neg(&self) -> Tensor<T> {
        let data = unary_map(self, |v| -v);
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "neg",
            vec![self.clone()],
            Box::new(|ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.neg())]),
        )
    }

    /// Multiplies every element by the constant `c`.
    pub fn scale(&self, c: T) -> Tensor<T> {
        let data = unary_map(self, |v| v * c);
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "scale",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.scale(c))]),
        )
    }

    /// Adds the constant `c` to every element.
    pub fn add_scalar(&self, c: T) -> Tensor<T> {
        let data = unary_map(self, |v| v + c);
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "add_scalar",
            vec![self.clone()],
            Box::new(|ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.clone())]),
        )
    }

    pub fn relu(&self) -> Tensor<T> {
        let data = unary_map(self, |v| if v > T::ZERO { v } else { T::ZERO });
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "relu",
            vec![self.clone()],
            Box::new(|ctx: &BackwardCtx<'_, T>| {
                let mask: Vec<T> = ctx.parents[0]
                    .data()
                    .iter()
                    .map(|&v| if v > T::ZERO { T::ONE } else { T::ZERO })
                    .collect();
                let mask = Tensor::from_vec(mask, ctx.parents[0].shape());
                vec![Some(ctx.grad.mul(&mask))]
            }),
        )
    }

    pub fn leaky_relu(&self, slope: T) -> Tensor<T> {
        let data = unary_map(self, |v| if v > T::ZERO { v } else { v * slope });
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "leaky_relu",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                let mask: Vec<T> = ctx.parents[0]
                    .data()
                    .iter()
                    .map(|&v| if v > T::ZERO { T::ONE } else { slope })
                    .collect();
                let mask = Tensor::from_vec(mask, ctx.parents[0].shape());
                vec![Some(ctx.grad.mul(&mask))]
            }),
        )
    }

    /// Elementwise x^p for constant p. Derivative chains through
    /// `p * x^(p-1)`, so it stays differentiable to any order.
    pub fn powf_scalar(&self, p: T) -> Tensor<T> {
        let data = unary_map(self, |v| v.powf(p));
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "powf",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                let x = &ctx.parents[0];
                vec![Some(ctx.grad.mul(&x.powf_scalar(p - T::ONE).scale(p)))]
            }),
        )
    }

    pub fn exp(&self) -> Tensor<T> {
        let data = unary_map(self, |v| v.exp());
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "exp",
            vec![self.clone()],
            Box::new(|ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.mul(ctx.output))]),
        )
    }

    pub fn ln(&self) -> Tensor<T> {
        let data = unary_map(self, |v| v.ln());
        Tensor::with_node(
            data,
            self.shape().to_vec(),
            "ln",
            vec![self.clone()],
            Box::new(|ctx: &BackwardCtx<'_, T>| {
                let x = &ctx.parents[0];
                vec![Some(ctx.grad.mul(&x.powf_scalar(-T::ONE)))]
            }),
        )
    }

    pub fn square(&self) -> Tensor<T> {
        self.mul(self)
    }

    pub fn sqrt_t(&self) -> Tensor<T> {
        self.powf_scalar(T::from_f64(0.5))
    }

    /// max(x, c) built from relu so it stays differentiable.
    pub fn clamp_min(&self, c: T) -> Tensor<T> {
        self.add_scalar(-c).relu().add_scalar(c)
    }
}

// ── shape ops ────────────────────────────────────────────────────────

impl<T: Real> Tensor<T> {
    pub fn reshape(&self, shape: &[usize]) -> Tensor<T> {
        assert_eq!(
            self.numel(),
            shape.iter().product::<usize>(),
            "cannot reshape {:?} to {:?}",
            self.shape(),
            shape
        );
        let orig = self.shape().to_vec();
        // Shares storage; only the shape changes.
        Tensor::with_node_arc(
            self.data_arc(),
            shape.to_vec(),
            "reshape",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.reshape(&orig))]),
        )
    }

    pub fn permute(&self, axes: &[usize]) -> Tensor<T> {
        let rank = self.shape().len();
        assert_eq!(axes.len(), rank, "permute axes {:?} for rank {}", axes, rank);
        let mut seen = vec![false; rank];
        for &a in axes {
            assert!(a < rank && !seen[a], "invalid permutation {:?}", axes);
            seen[a] = true;
        }
        let in_shape = self.shape();
        let out_shape: Vec<usize> = axes.iter().map(|&a| in_shape[a]).collect();
        let in_strides = contiguous_strides(in_shape);
        // Stride of output axis i is the input stride of the axis it came from.
        let perm_strides: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
        let n = self.numel();
        let src = self.data();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; rank];
        let mut off = 0usize;
        for _ in 0..n {
            data.push(src[off]);
            for ax in (0..rank).rev() {
                idx[ax] += 1;
                off += perm_strides[ax];
                if idx[ax] < out_shape[ax] {
                    break;
                }
                idx[ax] = 0;
                off -= out_shape[ax] * perm_strides[ax];
            }
        }
        let mut inverse = vec![0usize; rank];
        for (i, &a) in axes.iter().enumerate() {
            inverse[a] = i;
        }
        Tensor::with_node(
            data,
            out_shape,
            "permute",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.permute(&inverse))]),
        )
    }

    /// 2-D transpose.
    pub fn t2(&self) -> Tensor<T> {
        assert_eq!(self.shape().len(), 2, "t2 on shape {:?}", self.shape());
        self.permute(&[1, 0])
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Tensor<T> {
        if self.shape() == shape {
            return self.clone();
        }
        assert_eq!(
            broadcast_shapes(self.shape(), shape).as_deref(),
            Some(shape),
            "cannot broadcast {:?} to {:?}",
            self.shape(),
            shape
        );
        let n: usize = shape.iter().product();
        let strides = broadcast_strides(self.shape(), shape);
        let src = self.data();
        let rank = shape.len();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; rank];
        let mut off = 0usize;
        for _ in 0..n {
            data.push(src[off]);
            for ax in (0..rank).rev() {
                idx[ax] += 1;
                off += strides[ax];
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
                off -= shape[ax] * strides[ax];
            }
        }
        let orig = self.shape().to_vec();
        Tensor::with_node(
            data,
            shape.to_vec(),
            "broadcast_to",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.sum_to(&orig))]),
        )
    }

    /// Sums axes so the result has `shape`, the adjoint of `broadcast_to`.
    /// `shape` must broadcast to `self.shape()`.
    pub fn sum_to(&self, shape: &[usize]) -> Tensor<T> {
        if self.shape() == shape {
            return self.clone();
        }
        assert_eq!(
            broadcast_shapes(shape, self.shape()).as_deref(),
            Some(self.shape()),
            "cannot reduce {:?} to {:?}",
            self.shape(),
            shape
        );
        let out_n: usize = shape.iter().product();
        let strides = broadcast_strides(shape, self.shape());
        let src = self.data();
        let in_shape = self.shape().to_vec();
        let rank = in_shape.len();
        let mut data = vec![T::ZERO; out_n];
        let mut idx = vec![0usize; rank];
        let mut off = 0usize;
        for &v in src.iter() {
            data[off] += v;
            for ax in (0..rank).rev() {
                idx[ax] += 1;
                off += strides[ax];
                if idx[ax] < in_shape[ax] {
                    break;
                }
                idx[ax] = 0;
                off -= in_shape[ax] * strides[ax];
            }
        }
        let orig = self.shape().to_vec();
        Tensor::with_node(
            data,
            shape.to_vec(),
            "sum_to",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| vec![Some(ctx.grad.broadcast_to(&orig))]),
        )
    }

    /// Sum of all elements, as a scalar (shape `[]`).
    pub fn sum_all(&self) -> Tensor<T> {
        let mut acc = T::ZERO;
        for &v in self.data() {
            acc += v;
        }
        let orig = self.shape().to_vec();
        Tensor::with_node(
            vec![acc],
            vec![],
            "sum_all",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                vec![Some(ctx.grad.broadcast_to(&orig))]
            }),
        )
    }

    pub fn mean_all(&self) -> Tensor<T> {
        let n = self.numel();
        assert!(n > 0, "mean of empty tensor");
        self.sum_all().scale(T::from_f64(1.0 / n as f64))
    }

    /// Slice `len` elements starting at `start` along `axis`.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Tensor<T> {
        let shape = self.shape();
        assert!(axis < shape.len(), "narrow axis {} rank {}", axis, shape.len());
        assert!(
            start + len <= shape[axis],
            "narrow [{}, {}) out of bounds for axis {} of length {}",
            start,
            start + len,
            axis,
            shape[axis]
        );
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let axis_len = shape[axis];
        let mut out_shape = shape.to_vec();
        out_shape[axis] = len;
        let src = self.data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * axis_len + start) * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let after = axis_len - start - len;
        Tensor::with_node(
            data,
            out_shape,
            "narrow",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                vec![Some(ctx.grad.pad_axis(axis, start, after))]
            }),
        )
    }

    /// Zero-pads `axis` with `before` leading and `after` trailing slots.
    pub fn pad_axis(&self, axis: usize, before: usize, after: usize) -> Tensor<T> {
        let shape = self.shape();
        assert!(axis < shape.len(), "pad axis {} rank {}", axis, shape.len());
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let axis_len = shape[axis];
        let new_len = axis_len + before + after;
        let mut out_shape = shape.to_vec();
        out_shape[axis] = new_len;
        let src = self.data();
        let mut data = vec![T::ZERO; outer * new_len * inner];
        for o in 0..outer {
            let dst_base = (o * new_len + before) * inner;
            let src_base = o * axis_len * inner;
            data[dst_base..dst_base + axis_len * inner]
                .copy_from_slice(&src[src_base..src_base + axis_len * inner]);
        }
        Tensor::with_node(
            data,
            out_shape,
            "pad_axis",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                vec![Some(ctx.grad.narrow(axis, before, axis_len))]
            }),
        )
    }

    pub fn concat(parts: &[&Tensor<T>], axis: usize) -> Tensor<T> {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let rank = parts[0].shape().len();
        assert!(axis < rank, "concat axis {} rank {}", axis, rank);
        for p in parts {
            assert_eq!(p.shape().len(), rank, "concat rank mismatch");
            for d in 0..rank {
                assert!(
                    d == axis || p.shape()[d] == parts[0].shape()[d],
                    "concat shape mismatch on axis {}: {:?} vs {:?}",
                    d,
                    p.shape(),
                    parts[0].shape()
                );
            }
        }
        let lens: Vec<usize> = parts.iter().map(|p| p.shape()[axis]).collect();
        let total: usize = lens.iter().sum();
        let outer: usize = parts[0].shape()[..axis].iter().product();
        let inner: usize = parts[0].shape()[axis + 1..].iter().product();
        let mut out_shape = parts[0].shape().to_vec();
        out_shape[axis] = total;
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (p, &len) in parts.iter().zip(&lens) {
                let base = o * len * inner;
                data.extend_from_slice(&p.data()[base..base + len * inner]);
            }
        }
        let parents: Vec<Tensor<T>> = parts.iter().map(|p| (*p).clone()).collect();
        Tensor::with_node(
            data,
            out_shape,
            "concat",
            parents,
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                let mut grads = Vec::with_capacity(lens.len());
                let mut start = 0usize;
                for &len in &lens {
                    grads.push(Some(ctx.grad.narrow(axis, start, len)));
                    start += len;
                }
                grads
            }),
        )
    }
}

// ── matrix multiply ──────────────────────────────────────────────────

impl<T: Real> Tensor<T> {
    /// 2-D matrix product `[m,k] x [k,n] -> [m,n]`.
    pub fn matmul(&self, other: &Tensor<T>) -> Tensor<T> {
        assert_eq!(self.shape().len(), 2, "matmul lhs shape {:?}", self.shape());
        assert_eq!(other.shape().len(), 2, "matmul rhs shape {:?}", other.shape());
        let (m, k) = (self.shape()[0], self.shape()[1]);
        let (k2, n) = (other.shape()[0], other.shape()[1]);
        assert_eq!(k, k2, "matmul inner dims {} vs {}", k, k2);
        let mut data = vec![T::ZERO; m * n];
        T::gemm(m, k, n, self.data(), other.data(), &mut data);
        Tensor::with_node(
            data,
            vec![m, n],
            "matmul",
            vec![self.clone(), other.clone()],
            Box::new(|ctx: &BackwardCtx<'_, T>| {
                let a = &ctx.parents[0];
                let b = &ctx.parents[1];
                vec![
                    Some(ctx.grad.matmul(&b.t2())),
                    Some(a.t2().matmul(ctx.grad)),
                ]
            }),
        )
    }
}

// ── sparse linear maps along one axis ────────────────────────────────

/// Sparse row-stochastic-style linear map applied along a single axis:
/// `out[j] = sum_i rows[j][i] * in[i]`. One structure covers joint
/// up/downsampling and temporal resampling; the adjoint is the transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisMap {
    pub in_len: usize,
    pub out_len: usize,
    /// rows[j] lists (input index, weight) pairs, input index ascending.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl AxisMap {
    pub fn new(in_len: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        for row in &rows {
            for &(i, _) in row {
                assert!(i < in_len, "AxisMap source index {} out of {}", i, in_len);
            }
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
        }
        AxisMap {
            in_len,
            out_len: rows.len(),
            rows,
        }
    }

    pub fn identity(n: usize) -> Self {
        AxisMap::new(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn transposed(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.in_len];
        for (j, row) in self.rows.iter().enumerate() {
            for &(i, w) in row {
                rows[i].push((j, w));
            }
        }
        AxisMap {
            in_len: self.out_len,
            out_len: self.in_len,
            rows,
        }
    }

    /// Dense [out_len, in_len] matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.out_len * self.in_len];
        for (j, row) in self.rows.iter().enumerate() {
            for &(i, w) in row {
                m[j * self.in_len + i] = w;
            }
        }
        m
    }

    /// Linear interpolation map from `in_len` to `out_len` samples with
    /// aligned endpoints. Each output draws from at most two inputs.
    pub fn linear_resample(in_len: usize, out_len: usize) -> Self {
        assert!(in_len > 0 && out_len > 0, "resample with empty axis");
        if in_len == 1 {
            return AxisMap::new(1, (0..out_len).map(|_| vec![(0, 1.0)]).collect());
        }
        if out_len == 1 {
            return AxisMap::new(in_len, vec![vec![(0, 1.0)]]);
        }
        let mut rows = Vec::with_capacity(out_len);
        let scale = (in_len - 1) as f64 / (out_len - 1) as f64;
        for j in 0..out_len {
            let pos = j as f64 * scale;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 >= in_len || frac == 0.0 {
                rows.push(vec![(lo.min(in_len - 1), 1.0)]);
            } else {
                rows.push(vec![(lo, 1.0 - frac), (lo + 1, frac)]);
            }
        }
        AxisMap::new(in_len, rows)
    }
}

impl<T: Real> Tensor<T> {
    /// Applies `map` along `axis`; all other axes are untouched. The
    /// backward rule applies the transposed map, which is exact.
    pub fn axis_linear(&self, axis: usize, map: &Arc<AxisMap>) -> Tensor<T> {
        let shape = self.shape();
        assert!(axis < shape.len(), "axis_linear axis {} rank {}", axis, shape.len());
        assert_eq!(
            shape[axis], map.in_len,
            "axis_linear map expects axis length {}, tensor has {}",
            map.in_len, shape[axis]
        );
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out_shape = shape.to_vec();
        out_shape[axis] = map.out_len;
        let src = self.data();
        let mut data = vec![T::ZERO; outer * map.out_len * inner];
        for o in 0..outer {
            let src_base = o * map.in_len * inner;
            let dst_base = o * map.out_len * inner;
            for (j, row) in map.rows.iter().enumerate() {
                let dst = dst_base + j * inner;
                for &(i, w) in row {
                    let w = T::from_f64(w);
                    let s = src_base + i * inner;
                    for q in 0..inner {
                        data[dst + q] += w * src[s + q];
                    }
                }
            }
        }
        let map = Arc::clone(map);
        Tensor::with_node(
            data,
            out_shape,
            "axis_linear",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                let t = Arc::new(map.transposed());
                vec![Some(ctx.grad.axis_linear(axis, &t))]
            }),
        )
    }
}

// ── temporal patch extraction (conv support) ─────────────────────────

impl<T: Real> Tensor<T> {
    /// Unfolds `[B, C, T, N]` into `[B*T*N, C*K]` rows of time-window
    /// patches with zero padding of (K-1)/2 on each side. K must be odd.
    /// Adjoint of `col2im_time`.
    pub fn im2col_time(&self, k: usize) -> Tensor<T> {
        let shape = self.shape();
        assert_eq!(shape.len(), 4, "im2col_time expects [B,C,T,N], got {:?}", shape);
        assert!(k % 2 == 1, "temporal kernel must be odd, got {}", k);
        let (b, c, t, n) = (shape[0], shape[1], shape[2], shape[3]);
        let pad = (k - 1) / 2;
        let src = self.data();
        let mut data = vec![T::ZERO; b * t * n * c * k];
        let mut dst = 0usize;
        for bi in 0..b {
            for ti in 0..t {
                for ni in 0..n {
                    for ci in 0..c {
                        let chan_base = (bi * c + ci) * t;
                        for ki in 0..k {
                            let tt = ti + ki;
                            if tt >= pad && tt - pad < t {
                                data[dst] = src[(chan_base + (tt - pad)) * n + ni];
                            }
                            dst += 1;
                        }
                    }
                }
            }
        }
        Tensor::with_node(
            data,
            vec![b * t * n, c * k],
            "im2col_time",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                vec![Some(ctx.grad.col2im_time(b, c, t, n, k))]
            }),
        )
    }

    /// Folds `[B*T*N, C*K]` patch rows back to `[B, C, T, N]`,
    /// accumulating overlaps. Adjoint of `im2col_time`.
    pub fn col2im_time(&self, b: usize, c: usize, t: usize, n: usize, k: usize) -> Tensor<T> {
        let shape = self.shape();
        assert_eq!(
            shape,
            &[b * t * n, c * k],
            "col2im_time expects [{}, {}], got {:?}",
            b * t * n,
            c * k,
            shape
        );
        assert!(k % 2 == 1, "temporal kernel must be odd, got {}", k);
        let pad = (k - 1) / 2;
        let src = self.data();
        let mut data = vec![T::ZERO; b * c * t * n];
        let mut s = 0usize;
        for bi in 0..b {
            for ti in 0..t {
                for ni in 0..n {
                    for ci in 0..c {
                        let chan_base = (bi * c + ci) * t;
                        for ki in 0..k {
                            let tt = ti + ki;
                            if tt >= pad && tt - pad < t {
                                data[(chan_base + (tt - pad)) * n + ni] += src[s];
                            }
                            s += 1;
                        }
                    }
                }
            }
        }
        Tensor::with_node(
            data,
            vec![b, c, t, n],
            "col2im_time",
            vec![self.clone()],
            Box::new(move |ctx: &BackwardCtx<'_, T>| {
                vec![Some(ctx.grad.im2col_time(k))]
            }),
        )
    }
}
