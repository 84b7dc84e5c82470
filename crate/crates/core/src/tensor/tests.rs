use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

const FD_H: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;

// ── finite-difference checks, one per primitive ──────────────────────

#[test]
fn fd_add_broadcast() {
    grad_check_multi(
        |xs| xs[0].add(&xs[1]).mul(&xs[0]).sum_all(),
        &[
            (&[0.5, -1.2, 2.0, 0.3, 1.1, -0.7], &[2, 3]),
            (&[0.4, -0.9, 1.5], &[3]),
        ],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_mul_broadcast() {
    grad_check_multi(
        |xs| xs[0].mul(&xs[1]).sum_all(),
        &[
            (&[0.5, -1.2, 2.0, 0.3, 1.1, -0.7], &[2, 3]),
            (&[2.0, 0.25], &[2, 1]),
        ],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_matmul() {
    grad_check_multi(
        |xs| xs[0].matmul(&xs[1]).square().sum_all(),
        &[
            (&[1.0, -0.5, 0.25, 2.0, 0.75, -1.5], &[2, 3]),
            (&[0.5, 1.5, -2.0, 0.1, 0.9, -0.4], &[3, 2]),
        ],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_unary_chain() {
    // exp, ln, powf, sqrt on positive inputs.
    grad_check(
        |x| {
            x.exp()
                .ln()
                .powf_scalar(1.7)
                .add_scalar(0.3)
                .sqrt_t()
                .sum_all()
        },
        &[0.8, 1.3, 2.1, 0.4],
        &[4],
        FD_H,
        1e-5,
    )
    .unwrap();
}

#[test]
fn fd_relu_and_leaky() {
    // Inputs away from the kink at zero.
    grad_check(
        |x| x.relu().square().sum_all(),
        &[0.5, -1.2, 2.0, -0.3],
        &[4],
        FD_H,
        FD_TOL,
    )
    .unwrap();
    grad_check(
        |x| x.leaky_relu(0.2).square().sum_all(),
        &[0.5, -1.2, 2.0, -0.3],
        &[4],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_shape_ops() {
    grad_check(
        |x| {
            x.reshape(&[3, 2])
                .permute(&[1, 0])
                .narrow(1, 1, 2)
                .pad_axis(0, 1, 0)
                .square()
                .sum_all()
        },
        &[0.5, -1.2, 2.0, 0.3, 1.1, -0.7],
        &[6],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_broadcast_and_sum_to() {
    grad_check(
        |x| {
            let b = x.broadcast_to(&[4, 2, 3]);
            b.square().sum_to(&[1, 2, 1]).mul(&x.sum_to(&[2, 1])).sum_all()
        },
        &[0.5, -1.2, 2.0, 0.3, 1.1, -0.7],
        &[2, 3],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_concat() {
    grad_check_multi(
        |xs| {
            Tensor::concat(&[&xs[0], &xs[1]], 1)
                .square()
                .sum_all()
        },
        &[
            (&[1.0, -0.5, 0.25, 2.0], &[2, 2]),
            (&[0.5, 1.5, -2.0, 0.1, 0.9, -0.4], &[2, 3]),
        ],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_axis_linear() {
    let map = Arc::new(AxisMap::linear_resample(3, 5));
    grad_check(
        move |x| x.axis_linear(1, &map).square().sum_all(),
        &[0.5, -1.2, 2.0, 0.3, 1.1, -0.7],
        &[2, 3],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

#[test]
fn fd_im2col() {
    let x: Vec<f64> = (0..24).map(|i| (i as f64) * 0.17 - 2.0).collect();
    grad_check(
        |x| x.im2col_time(3).square().sum_all(),
        &x,
        &[1, 2, 4, 3],
        FD_H,
        FD_TOL,
    )
    .unwrap();
}

// ── closed-form and adjoint oracles ──────────────────────────────────

#[test]
fn double_backward_closed_form() {
    // f(x) = sum(x^3); g = 3x^2; r = sum(g^2) = 9 sum(x^4);
    // dr/dx_k = 36 x_k^3.
    let x = Tensor::<f64>::leaf(vec![0.7, -1.1, 1.9], &[3]);
    let f = x.powf_scalar(3.0).sum_all();
    let grads = backward(&f, true).unwrap();
    let g = grads.wrt(&x).unwrap();
    assert!(g.requires_grad(), "create_graph gradient must stay in graph");
    let r = g.square().sum_all();
    let grads2 = backward(&r, false).unwrap();
    let ddx = grads2.wrt(&x).unwrap();
    for (i, &xv) in [0.7f64, -1.1, 1.9].iter().enumerate() {
        assert_abs_diff_eq!(ddx.data()[i], 36.0 * xv.powi(3), epsilon = 1e-9);
    }
}

#[test]
fn double_backward_without_create_graph_is_constant() {
    let x = Tensor::<f64>::leaf(vec![0.7, -1.1], &[2]);
    let f = x.powf_scalar(3.0).sum_all();
    let g = backward(&f, false).unwrap().wrt(&x).unwrap();
    assert!(!g.requires_grad());
}

#[test]
fn second_order_norm_penalty_matches_fd() {
    // p(x) = (||df/dx|| - 1)^2 for f = sum(sin-free polynomial mix),
    // the same structure a gradient penalty uses.
    let x0 = [0.6, -0.4, 1.2, 0.9];
    let penalty = |vals: &[f64]| -> f64 {
        let x = Tensor::<f64>::leaf(vals.to_vec(), &[4]);
        let f = x
            .powf_scalar(3.0)
            .sum_all()
            .add(&x.square().sum_all().scale(0.5));
        let g = backward(&f, true).unwrap().wrt(&x).unwrap();
        let norm = g.square().sum_all().add_scalar(1e-12).sqrt_t();
        norm.add_scalar(-1.0).square().item()
    };
    // Analytic d(penalty)/dx via a second backward pass.
    let x = Tensor::<f64>::leaf(x0.to_vec(), &[4]);
    let f = x
        .powf_scalar(3.0)
        .sum_all()
        .add(&x.square().sum_all().scale(0.5));
    let g = backward(&f, true).unwrap().wrt(&x).unwrap();
    let norm = g.square().sum_all().add_scalar(1e-12).sqrt_t();
    let p = norm.add_scalar(-1.0).square();
    let analytic = backward(&p, false).unwrap().wrt(&x).unwrap();
    check_against(penalty, &x0, &analytic.to_f64_vec(), 1e-6, 1e-6).unwrap();
}

#[test]
fn adjoint_pairs_exact() {
    // <A x, y> == <x, A^T y> for the paired structural ops.
    let x: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin()).collect();
    let y: Vec<f64> = (0..72).map(|i| (i as f64 * 0.11).cos()).collect();
    let xt = Tensor::<f64>::from_vec(x.clone(), &[1, 2, 4, 3]);
    // im2col: [1,2,4,3] k=3 -> [12, 6]
    let yt = Tensor::<f64>::from_vec(y.clone(), &[12, 6]);
    let ax = xt.im2col_time(3);
    let aty = yt.col2im_time(1, 2, 4, 3, 3);
    let lhs: f64 = ax
        .data()
        .iter()
        .zip(yt.data())
        .map(|(&a, &b)| a * b)
        .sum();
    let rhs: f64 = xt
        .data()
        .iter()
        .zip(aty.data())
        .map(|(&a, &b)| a * b)
        .sum();
    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);

    let map = Arc::new(AxisMap::linear_resample(4, 7));
    let u = Tensor::<f64>::from_vec((0..8).map(|i| i as f64 * 0.3 - 1.0).collect(), &[2, 4]);
    let v = Tensor::<f64>::from_vec((0..14).map(|i| (i as f64 * 0.21).sin()).collect(), &[2, 7]);
    let au = u.axis_linear(1, &map);
    let atv = v.axis_linear(1, &Arc::new(map.transposed()));
    let lhs: f64 = au.data().iter().zip(v.data()).map(|(&a, &b)| a * b).sum();
    let rhs: f64 = u.data().iter().zip(atv.data()).map(|(&a, &b)| a * b).sum();
    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
}

#[test]
fn axis_map_resample_endpoints_and_values() {
    // 2 -> 4 with aligned endpoints: positions 0, 1/3, 2/3, 1.
    let map = AxisMap::linear_resample(2, 4);
    let x = Tensor::<f64>::from_vec(vec![0.0, 3.0], &[2]);
    let y = x.axis_linear(0, &Arc::new(map));
    let want = [0.0, 1.0, 2.0, 3.0];
    for (a, b) in y.data().iter().zip(want) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
    }
}

#[test]
fn matmul_matches_naive() {
    let a: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
    let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).cos()).collect();
    let (m, k, n) = (3, 4, 5);
    let at = Tensor::<f64>::from_vec(a.clone(), &[m, k]);
    let bt = Tensor::<f64>::from_vec(b.clone(), &[k, n]);
    let c = at.matmul(&bt);
    for i in 0..m {
        for j in 0..n {
            let mut want = 0.0;
            for p in 0..k {
                want += a[i * k + p] * b[p * n + j];
            }
            assert_abs_diff_eq!(c.data()[i * n + j], want, epsilon = 1e-12);
        }
    }
}

// ── Adam oracle ──────────────────────────────────────────────────────

struct OneParam<T: Real> {
    w: Tensor<T>,
}

impl<T: Real> Parameterized<T> for OneParam<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_path(prefix, "w"), &self.w);
    }
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_path(prefix, "w"), &mut self.w);
    }
}

/// Straight-line reference Adam, kept separate from the production code.
fn reference_adam(theta0: &[f64], grads: &[Vec<f64>], cfg: AdamConfig) -> Vec<f64> {
    let mut theta = theta0.to_vec();
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    for (t, g) in grads.iter().enumerate() {
        let t = (t + 1) as i32;
        for i in 0..theta.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mh = m[i] / (1.0 - cfg.beta1.powi(t));
            let vh = v[i] / (1.0 - cfg.beta2.powi(t));
            theta[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    theta
}

#[test]
fn adam_matches_reference_three_steps() {
    let cfg = AdamConfig::default();
    let theta0 = [1.0, -2.0, 0.5];
    // Gradients of f(w) = <c, w> are constant c; run three steps.
    let c = [0.5, -1.5, 0.25];
    let mut model = OneParam {
        w: Tensor::<f64>::leaf(theta0.to_vec(), &[3]),
    };
    let mut opt = Adam::<f64>::new(cfg);
    for _ in 0..3 {
        let cv = Tensor::from_vec(c.to_vec(), &[3]);
        let loss = model.w.mul(&cv).sum_all();
        let grads = backward(&loss, false).unwrap();
        opt.step(&mut model, "", &grads).unwrap();
    }
    let want = reference_adam(&theta0, &vec![c.to_vec(); 3], cfg);
    for i in 0..3 {
        assert_abs_diff_eq!(model.w.data()[i], want[i], epsilon = 1e-12);
    }
}

#[test]
fn adam_first_step_magnitude_is_learning_rate() {
    // With zero moments, one step moves each weight by ~lr * sign(g).
    let cfg = AdamConfig::default();
    let mut model = OneParam {
        w: Tensor::<f64>::leaf(vec![1.0, -2.0], &[2]),
    };
    let mut opt = Adam::<f64>::new(cfg);
    let c = Tensor::from_vec(vec![0.5, -1.5], &[2]);
    let loss = model.w.mul(&c).sum_all();
    let grads = backward(&loss, false).unwrap();
    opt.step(&mut model, "", &grads).unwrap();
    let d0 = model.w.data()[0] - 1.0;
    let d1 = model.w.data()[1] + 2.0;
    assert_abs_diff_eq!(d0, -cfg.lr, epsilon = cfg.lr * 1e-4);
    assert_abs_diff_eq!(d1, cfg.lr, epsilon = cfg.lr * 1e-4);
}

#[test]
fn adam_rejects_nonfinite_gradient() {
    let mut model = OneParam {
        w: Tensor::<f64>::leaf(vec![0.0], &[1]),
    };
    let mut opt = Adam::<f64>::new(AdamConfig::default());
    // ln(0) = -inf in the forward; sum keeps it, powf(-1) backward
    // produces inf * anything.
    let loss = model.w.powf_scalar(2.0).ln().sum_all();
    match backward(&loss, false) {
        Err(AutogradError::NonFiniteGradient { .. }) => {}
        Ok(grads) => {
            // Forward already -inf; if backward survived, Adam must refuse.
            let err = opt.step(&mut model, "", &grads).unwrap_err();
            assert!(matches!(err, OptimError::NonFiniteGradient { .. }));
        }
        Err(e) => panic!("unexpected error {e}"),
    }
}

// ── autograd behavior ────────────────────────────────────────────────

#[test]
fn backward_requires_scalar() {
    let x = Tensor::<f64>::leaf(vec![1.0, 2.0], &[2]);
    let y = x.square();
    match backward(&y, false) {
        Err(AutogradError::NonScalarOutput { shape }) => assert_eq!(shape, vec![2]),
        other => panic!("expected NonScalarOutput, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn backward_requires_graph() {
    let x = Tensor::<f64>::from_vec(vec![1.0], &[1]);
    assert!(matches!(backward(&x, false), Err(AutogradError::NoGraph)));
}

#[test]
fn detach_and_no_grad_cut_history() {
    let x = Tensor::<f64>::leaf(vec![2.0], &[1]);
    let y = x.square().detach();
    assert!(!y.requires_grad());
    let z = no_grad(|| x.square());
    assert!(!z.requires_grad());
    // Inside no_grad even graph-connected inputs record nothing.
    assert!(grad_recording_enabled());
}

#[test]
fn unreached_leaf_gets_zero_gradient() {
    let x = Tensor::<f64>::leaf(vec![1.0], &[1]);
    let unused = Tensor::<f64>::leaf(vec![5.0], &[1]);
    let loss = x.square().sum_all();
    let grads = backward(&loss, false).unwrap();
    let gz = grads.wrt(&unused).unwrap();
    assert_eq!(gz.data(), &[0.0]);
    let plain = Tensor::<f64>::from_vec(vec![1.0], &[1]);
    assert!(matches!(grads.wrt(&plain), Err(AutogradError::NotInGraph)));
}

#[test]
fn shared_subexpression_accumulates() {
    // y = x*x + x*x reuses the same node; dy/dx = 4x.
    let x = Tensor::<f64>::leaf(vec![3.0], &[1]);
    let sq = x.square();
    let y = sq.add(&sq).sum_all();
    let g = backward(&y, false).unwrap().wrt(&x).unwrap();
    assert_abs_diff_eq!(g.data()[0], 12.0, epsilon = 1e-12);
}

#[test]
fn nonfinite_backward_reports_op_path() {
    // d/dx sqrt(x) at 0 is infinite: powf backward produces inf.
    let x = Tensor::<f64>::leaf(vec![0.0, 1.0], &[2]);
    let y = x.powf_scalar(0.5).sum_all();
    match backward(&y, false) {
        Err(AutogradError::NonFiniteGradient { op, path }) => {
            assert_eq!(op, "powf");
            assert!(path.contains("sum_all"), "path should trace from output: {path}");
        }
        other => panic!("expected NonFiniteGradient, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn backward_is_deterministic_bitwise() {
    let run = || -> Vec<f64> {
        let x = Tensor::<f64>::leaf(vec![0.3, -0.8, 1.7, 0.2, -0.6, 1.1], &[2, 3]);
        let w = Tensor::<f64>::leaf(vec![0.5, -0.25, 0.75, 1.5, -1.0, 0.1], &[3, 2]);
        let y = x.matmul(&w).relu().square().sum_all();
        let grads = backward(&y, false).unwrap();
        let mut out = grads.wrt(&x).unwrap().to_f64_vec();
        out.extend(grads.wrt(&w).unwrap().to_f64_vec());
        out
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "identical runs must agree bit for bit");
}

// ── stream rng ───────────────────────────────────────────────────────

#[test]
fn stream_rng_is_order_independent() {
    let root = StreamRng::new(42);
    let mut a1 = root.stream("noise", 7);
    let draws_a: Vec<f64> = sample_normal_vec(&mut a1, 5);
    // Interleave other stream usage; the (site, step) stream must not care.
    let mut other = root.stream("latent", 3);
    let _: Vec<f64> = sample_normal_vec(&mut other, 11);
    let mut a2 = root.stream("noise", 7);
    let draws_b: Vec<f64> = sample_normal_vec(&mut a2, 5);
    assert_eq!(draws_a, draws_b);

    let mut c = root.stream("noise", 8);
    let draws_c: Vec<f64> = sample_normal_vec(&mut c, 5);
    assert_ne!(draws_a, draws_c, "different steps must differ");
    let other_seed = StreamRng::new(43);
    let mut d = other_seed.stream("noise", 7);
    let draws_d: Vec<f64> = sample_normal_vec(&mut d, 5);
    assert_ne!(draws_a, draws_d, "different seeds must differ");
}

// ── checkpoint round trip ────────────────────────────────────────────

#[test]
fn checkpoint_round_trip_and_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.ckpt");
    let p2 = dir.path().join("b.ckpt");
    let mut entries = BTreeMap::new();
    entries.insert(
        "gen/w".to_string(),
        Tensor::<f32>::from_vec(vec![1.5, -2.25, 0.125], &[3]),
    );
    entries.insert(
        "disc/b".to_string(),
        Tensor::<f32>::from_vec(vec![0.0625; 4], &[2, 2]),
    );
    let mut meta = BTreeMap::new();
    meta.insert("trainer/step".to_string(), "1234".to_string());
    save_checkpoint(&p1, &meta, &entries).unwrap();
    save_checkpoint(&p2, &meta, &entries).unwrap();
    assert_eq!(
        std::fs::read(&p1).unwrap(),
        std::fs::read(&p2).unwrap(),
        "same state must serialize to identical bytes"
    );
    let (meta2, loaded) = load_checkpoint::<f32>(&p1).unwrap();
    assert_eq!(meta2.get("trainer/step").map(String::as_str), Some("1234"));
    assert_eq!(loaded.len(), 2);
    assert_eq!(loaded["gen/w"].data(), entries["gen/w"].data());
    assert_eq!(loaded["disc/b"].shape(), &[2, 2]);
    let f = std::fs::read_to_string(&p1).unwrap_or_default();
    assert!(f.starts_with(CKPT_MAGIC) || std::fs::read(&p1).unwrap().starts_with(CKPT_MAGIC.as_bytes()));
}

#[test]
fn checkpoint_dtype_mismatch_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.ckpt");
    let mut entries = BTreeMap::new();
    entries.insert("w".to_string(), Tensor::<f32>::from_vec(vec![1.0], &[1]));
    save_checkpoint(&p, &BTreeMap::new(), &entries).unwrap();
    match load_checkpoint::<f64>(&p) {
        Err(CheckpointError::DtypeMismatch { found, expected, .. }) => {
            assert_eq!(found, "f32");
            assert_eq!(expected, "f64");
        }
        other => panic!("expected dtype mismatch, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn checkpoint_bad_magic_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.ckpt");
    std::fs::write(&p, b"NOT-A-CKPT\n{}\n").unwrap();
    assert!(matches!(
        load_checkpoint::<f32>(&p),
        Err(CheckpointError::BadMagic { .. })
    ));

    let good = dir.path().join("good.ckpt");
    let mut entries = BTreeMap::new();
    entries.insert(
        "w".to_string(),
        Tensor::<f32>::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[4]),
    );
    save_checkpoint(&good, &BTreeMap::new(), &entries).unwrap();
    let bytes = std::fs::read(&good).unwrap();
    let cut = dir.path().join("cut.ckpt");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(
        load_checkpoint::<f32>(&cut),
        Err(CheckpointError::Truncated { .. })
    ));
}

// ── property tests ───────────────────────────────────────────────────

fn small_vals(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n..=n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_fd_composite(xs in small_vals(6), ys in small_vals(6)) {
        // Shift away from relu kinks; skip pathological closeness.
        let xs: Vec<f64> = xs.iter().map(|v| v + 0.11 * v.signum().max(0.0) + 0.05).collect();
        let res = grad_check_multi(
            |ts| {
                ts[0].mul(&ts[1])
                    .add(&ts[0].square())
                    .leaky_relu(0.2)
                    .sum_all()
                    .add(&ts[1].exp().sum_all().scale(0.1))
            },
            &[(&xs, &[2, 3]), (&ys, &[2, 3])],
            1e-5,
            2e-5,
        );
        // Reject draws that landed on a kink; everything else must pass.
        if let Err(e) = res {
            let near_kink = xs.iter().zip(ys.iter()).any(|(&a, &b)| {
                (a * b + a * a).abs() < 1e-3
            });
            prop_assume!(!near_kink);
            return Err(TestCaseError::fail(format!("{e}")));
        }
    }

    #[test]
    fn prop_sum_to_broadcast_adjoint(x in small_vals(8), y in small_vals(24)) {
        let xt = Tensor::<f64>::from_vec(x, &[2, 1, 4]);
        let yt = Tensor::<f64>::from_vec(y, &[2, 3, 4]);
        let bx = xt.broadcast_to(&[2, 3, 4]);
        let sy = yt.sum_to(&[2, 1, 4]);
        let lhs: f64 = bx.data().iter().zip(yt.data()).map(|(&a, &b)| a * b).sum();
        let rhs: f64 = xt.data().iter().zip(sy.data()).map(|(&a, &b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())));
    }

    #[test]
    fn prop_broadcast_shapes_symmetric(a in proptest::collection::vec(1usize..4, 0..4),
                                       b in proptest::collection::vec(1usize..4, 0..4)) {
        prop_assert_eq!(broadcast_shapes(&a, &b), broadcast_shapes(&b, &a));
        if let Some(s) = broadcast_shapes(&a, &b) {
            let again = broadcast_shapes(&a, &s);
            prop_assert_eq!(again, Some(s));
        }
    }

    #[test]
    fn prop_resample_round_trip_identity(n in 2usize..8) {
        // Downsampling an upsampled signal with aligned endpoints must
        // return the original when the upsample rate is integral.
        let m = (n - 1) * 2 + 1;
        let up = Arc::new(AxisMap::linear_resample(n, m));
        let down = Arc::new(AxisMap::linear_resample(m, n));
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.9).sin()).collect();
        let xt = Tensor::<f64>::from_vec(x.clone(), &[n]);
        let back = xt.axis_linear(0, &up).axis_linear(0, &down);
        for (a, b) in back.data().iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
