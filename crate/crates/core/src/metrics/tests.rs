use std::sync::Arc;

use nalgebra::DMatrix;

use crate::graph::{build_pyramid, GraphPyramid, SkeletonSpec};
use crate::tensor::{sample_normal_vec, StreamRng, Tensor};

use super::*;

fn gauss_vecs(seed: u64, n: usize, d: usize, mean: f64, std: f64) -> Vec<Vec<f64>> {
    let mut r = StreamRng::new(seed).stream("gauss", 0);
    (0..n)
        .map(|_| {
            sample_normal_vec::<f64>(&mut r, d)
                .into_iter()
                .map(|v| mean + std * v)
                .collect()
        })
        .collect()
}

fn toy_pyramid() -> Arc<GraphPyramid> {
    let spec = SkeletonSpec {
        name: "pair2".into(),
        joint_names: vec!["a".into(), "b".into()],
        edges: vec![(0, 1)],
        center_joint: 0,
        root_joint: 0,
    };
    Arc::new(build_pyramid(&spec, &[2]).unwrap())
}

// ── mmd ──────────────────────────────────────────────────────────────

#[test]
fn mmd_matches_brute_force() {
    // Literal transcription of the estimator, with its own distance,
    // median, and kernel code.
    fn reference(x: &[Vec<f64>], y: &[Vec<f64>], factors: Option<&[f64]>, fixed: Option<&[f64]>) -> f64 {
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for k in 0..a.len() {
                s += (a[k] - b[k]) * (a[k] - b[k]);
            }
            s.sqrt()
        };
        let sigmas: Vec<f64> = if let Some(fs) = fixed {
            fs.to_vec()
        } else {
            let pool: Vec<&Vec<f64>> = x.iter().chain(y.iter()).collect();
            let mut all = Vec::new();
            for i in 0..pool.len() {
                for j in (i + 1)..pool.len() {
                    all.push(dist(pool[i], pool[j]));
                }
            }
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let med = if all.len() % 2 == 1 {
                all[all.len() / 2]
            } else {
                (all[all.len() / 2 - 1] + all[all.len() / 2]) / 2.0
            };
            factors.unwrap().iter().map(|f| f * med).collect()
        };
        let k = |a: &[f64], b: &[f64]| -> f64 {
            let d = dist(a, b);
            sigmas.iter().map(|s| (-(d * d) / (2.0 * s * s)).exp()).sum()
        };
        let n = x.len() as f64;
        let m = y.len() as f64;
        let mut total = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                if i != j {
                    total += k(&x[i], &x[j]) / (n * (n - 1.0));
                }
            }
        }
        for i in 0..y.len() {
            for j in 0..y.len() {
                if i != j {
                    total += k(&y[i], &y[j]) / (m * (m - 1.0));
                }
            }
        }
        for xi in x {
            for yj in y {
                total -= 2.0 * k(xi, yj) / (n * m);
            }
        }
        total
    }

    let x = gauss_vecs(1, 6, 3, 0.0, 1.0);
    let y = gauss_vecs(2, 7, 3, 0.5, 1.2);

    let median = KernelConfig::default();
    let got = mmd2_unbiased(&x, &y, &median).unwrap();
    let want = reference(&x, &y, Some(&[0.25, 0.5, 1.0, 2.0, 4.0]), None);
    assert!((got - want).abs() < 1e-12, "median kernel: {got} vs {want}");

    let fixed = KernelConfig::fixed(vec![0.7, 1.3]);
    let got = mmd2_unbiased(&x, &y, &fixed).unwrap();
    let want = reference(&x, &y, None, Some(&[0.7, 1.3]));
    assert!((got - want).abs() < 1e-12, "fixed kernel: {got} vs {want}");
}

#[test]
fn identical_multisets_sit_at_the_negative_boundary() {
    let x = gauss_vecs(3, 8, 2, 0.0, 1.0);
    let m2 = mmd2_unbiased(&x, &x.clone(), &KernelConfig::fixed(vec![1.0])).unwrap();
    assert!(m2 <= 1e-15, "identical multisets must not look separated: {m2}");
    assert!(m2 >= -2.0 / 8.0 - 1e-12, "boundary overshoot: {m2}");
}

#[test]
fn unbiasedness_keeps_identical_distributions_near_zero() {
    // Mean over resamples of the unbiased estimator should be within
    // three standard errors of zero.
    let resamples = 100;
    let mut values = Vec::with_capacity(resamples);
    for s in 0..resamples {
        let x = gauss_vecs(100 + s as u64, 20, 3, 0.0, 1.0);
        let y = gauss_vecs(900 + s as u64, 20, 3, 0.0, 1.0);
        values.push(mmd2_unbiased(&x, &y, &KernelConfig::fixed(vec![1.0])).unwrap());
    }
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (resamples - 1) as f64;
    let se = (var / resamples as f64).sqrt();
    assert!(
        mean.abs() <= 3.0 * se,
        "mean {mean} exceeds 3 standard errors ({se})"
    );
}

#[test]
fn separated_gaussians_exceed_half() {
    for seed in 0..20 {
        let x = gauss_vecs(40 + seed, 500, 1, 0.0, 1.0);
        let y = gauss_vecs(4000 + seed, 500, 1, 5.0, 1.0);
        let m2 = mmd2_unbiased(&x, &y, &KernelConfig::fixed(vec![1.0])).unwrap();
        assert!(m2 > 0.5, "seed {seed}: mmd2 {m2}");
    }
}

#[test]
fn median_heuristic_is_scale_invariant() {
    let x = gauss_vecs(7, 12, 4, 0.0, 1.0);
    let y = gauss_vecs(8, 11, 4, 1.0, 0.8);
    let scale = |set: &[Vec<f64>], c: f64| -> Vec<Vec<f64>> {
        set.iter()
            .map(|v| v.iter().map(|&e| c * e).collect())
            .collect()
    };
    let kernel = KernelConfig::default();
    let base = mmd2_unbiased(&x, &y, &kernel).unwrap();
    let scaled = mmd2_unbiased(&scale(&x, 2.7), &scale(&y, 2.7), &kernel).unwrap();
    assert!((base - scaled).abs() < 1e-10, "{base} vs {scaled}");
}

#[test]
fn mmd_actions_localizes_a_frame_difference() {
    // Real and fake agree in distribution except at frame 2.
    let gen = |seed: u64, shifted: bool| -> Vec<Tensor<f64>> {
        let rng = StreamRng::new(seed);
        (0..40)
            .map(|i| {
                let mut data = sample_normal_vec::<f64>(&mut rng.stream("seq", i), 12);
                if shifted {
                    for joint in 0..3 {
                        data[2 * 3 + joint] += 5.0;
                    }
                }
                Tensor::from_vec(data, &[1, 4, 3])
            })
            .collect()
    };
    let real = gen(11, false);
    let fake = gen(12, true);
    let kernel = KernelConfig::fixed(vec![2.0]);
    let out = mmd_actions(&real, &fake, &kernel).unwrap();
    assert_eq!(out.raw.len(), 4);
    assert!(out.raw[2] > 0.5, "shifted frame: {}", out.raw[2]);
    for t in [0usize, 1, 3] {
        assert!(out.raw[t].abs() < 0.15, "frame {t}: {}", out.raw[t]);
    }
    assert!(out.value > 0.0);
}

#[test]
fn single_frame_actions_equal_sequences() {
    let make = |seed: u64| -> Vec<Tensor<f64>> {
        let rng = StreamRng::new(seed);
        (0..5)
            .map(|i| {
                Tensor::from_vec(sample_normal_vec(&mut rng.stream("s", i), 6), &[2, 1, 3])
            })
            .collect()
    };
    let real = make(21);
    let fake = make(22);
    let kernel = KernelConfig::default();
    let a = mmd_actions(&real, &fake, &kernel).unwrap();
    let s = mmd_sequences(&real, &fake, &kernel).unwrap();
    assert_eq!(a.value, s.value);
    assert_eq!(a.raw[0], s.raw[0]);
}

#[test]
fn mmd_rejects_bad_inputs_and_survives_degenerate_sets() {
    let x = gauss_vecs(1, 1, 2, 0.0, 1.0);
    let y = gauss_vecs(2, 5, 2, 0.0, 1.0);
    assert!(matches!(
        mmd2_unbiased(&x, &y, &KernelConfig::default()),
        Err(MetricsError::SampleCount { .. })
    ));

    let mut ragged = gauss_vecs(3, 4, 2, 0.0, 1.0);
    ragged[2] = vec![1.0, 2.0, 3.0];
    let other = gauss_vecs(4, 4, 2, 0.0, 1.0);
    assert!(matches!(
        mmd2_unbiased(&ragged, &other, &KernelConfig::default()),
        Err(MetricsError::DimMismatch { .. })
    ));

    assert!(matches!(
        mmd2_unbiased(&other, &other.clone(), &KernelConfig::fixed(vec![])),
        Err(MetricsError::Kernel(_))
    ));
    assert!(matches!(
        mmd2_unbiased(&other, &other.clone(), &KernelConfig::fixed(vec![-1.0])),
        Err(MetricsError::Kernel(_))
    ));

    // All-identical points: the median is 0, so the fallback bandwidth
    // applies and every kernel value is 1; the estimator is exactly 0.
    let same = vec![vec![2.0, 2.0]; 5];
    let m2 = mmd2_unbiased(&same, &same.clone(), &KernelConfig::default()).unwrap();
    assert_eq!(m2, 0.0);

    let a: Vec<Tensor<f64>> = (0..3)
        .map(|_| Tensor::from_vec(vec![0.0; 6], &[2, 1, 3]))
        .collect();
    let b: Vec<Tensor<f64>> = (0..3)
        .map(|_| Tensor::from_vec(vec![0.0; 6], &[1, 2, 3]))
        .collect();
    assert!(matches!(
        mmd_actions(&a, &b, &KernelConfig::default()),
        Err(MetricsError::ShapeMismatch { .. })
    ));
}

// ── matrix square root and fid ───────────────────────────────────────

fn random_psd(seed: u64, d: usize) -> Vec<f64> {
    let mut r = StreamRng::new(seed).stream("psd", 0);
    let g = sample_normal_vec::<f64>(&mut r, d * d);
    let m = DMatrix::from_row_slice(d, d, &g);
    let psd = &m * m.transpose() + DMatrix::identity(d, d) * 0.1;
    psd.transpose().as_slice().to_vec()
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn matmul_rm(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

#[test]
fn sqrtm_handles_trivial_and_random_matrices() {
    let eye = sqrtm_psd(&[1.0, 0.0, 0.0, 1.0], 2).unwrap();
    for (i, v) in eye.iter().enumerate() {
        let want = if i % 3 == 0 { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-12);
    }

    let diag = sqrtm_psd(&[4.0, 0.0, 0.0, 9.0], 2).unwrap();
    assert!((diag[0] - 2.0).abs() < 1e-12 && (diag[3] - 3.0).abs() < 1e-12);
    assert!(diag[1].abs() < 1e-12 && diag[2].abs() < 1e-12);

    let a = random_psd(5, 8);
    let b = sqrtm_psd(&a, 8).unwrap();
    let bb = matmul_rm(&b, &b, 8);
    let diff: Vec<f64> = bb.iter().zip(&a).map(|(x, y)| x - y).collect();
    assert!(frobenius(&diff) / frobenius(&a) < 1e-6, "B*B must reconstruct A");

    assert!(matches!(
        sqrtm_psd(&[1.0, 0.5, 0.0, 1.0], 2),
        Err(MetricsError::Asymmetric { .. })
    ));
    assert!(matches!(
        sqrtm_psd(&[-1.0, 0.0, 0.0, 1.0], 2),
        Err(MetricsError::NotPsd { .. })
    ));
}

#[test]
fn sqrtm_matches_denman_beavers_iteration() {
    // Newton-type iteration: Y <- (Y + Z^-1)/2, Z <- (Z + Y^-1)/2
    // converges to (sqrt(A), sqrt(A)^-1) for positive definite A.
    let d = 8;
    let a = random_psd(9, d);
    let mut y = DMatrix::from_row_slice(d, d, &a);
    let mut z = DMatrix::<f64>::identity(d, d);
    for _ in 0..60 {
        let yi = y.clone().try_inverse().expect("iterate stays invertible");
        let zi = z.clone().try_inverse().expect("iterate stays invertible");
        y = (&y + zi) * 0.5;
        z = (&z + yi) * 0.5;
    }
    let oracle: Vec<f64> = y.transpose().as_slice().to_vec();
    let got = sqrtm_psd(&a, d).unwrap();
    for (g, o) in got.iter().zip(&oracle) {
        assert!((g - o).abs() < 1e-6, "sqrtm disagreement: {g} vs {o}");
    }
}

#[test]
fn fid_of_identical_sets_is_zero() {
    let f = gauss_vecs(31, 60, 4, 0.3, 1.5);
    let v = fid(&f, &f.clone()).unwrap();
    assert!(v.abs() < 1e-8, "self distance: {v}");
}

#[test]
fn fid_matches_one_dimensional_closed_form() {
    // N(0,1) vs N(1,1): (mu1-mu2)^2 + (s1-s2)^2 = 1.
    let exact = fid_from_moments(&[0.0], &[1.0], &[1.0], &[1.0]).unwrap();
    assert!((exact - 1.0).abs() < 1e-12, "population moments: {exact}");

    let x = gauss_vecs(33, 10_000, 1, 0.0, 1.0);
    let y = gauss_vecs(34, 10_000, 1, 1.0, 1.0);
    let sampled = fid(&x, &y).unwrap();
    assert!((sampled - 1.0).abs() < 0.05, "sampled estimate: {sampled}");
}

#[test]
fn fid_is_symmetric() {
    let p = gauss_vecs(35, 30, 5, 0.0, 1.0);
    let q = gauss_vecs(36, 25, 5, 0.7, 1.4);
    let pq = fid(&p, &q).unwrap();
    let qp = fid(&q, &p).unwrap();
    assert!((pq - qp).abs() < 1e-8, "{pq} vs {qp}");
}

#[test]
fn fid_matches_nonsymmetric_eigen_reference() {
    // Reference route: tr((Cr Cf)^(1/2)) as the sum of square roots of
    // the eigenvalues of the (nonsymmetric) product matrix.
    let d = 8;
    let p = gauss_vecs(37, 200, d, 0.0, 1.0);
    let q = gauss_vecs(38, 220, d, 0.5, 1.3);
    let got = fid(&p, &q).unwrap();

    let moments = |set: &[Vec<f64>]| -> (Vec<f64>, DMatrix<f64>) {
        let n = set.len();
        let mut mu = vec![0.0; d];
        for f in set {
            for i in 0..d {
                mu[i] += f[i] / n as f64;
            }
        }
        let mut cov = DMatrix::zeros(d, d);
        for f in set {
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += (f[i] - mu[i]) * (f[j] - mu[j]) / (n - 1) as f64;
                }
            }
        }
        for i in 0..d {
            cov[(i, i)] += COV_REGULARIZER;
        }
        (mu, cov)
    };
    let (mu_r, cov_r) = moments(&p);
    let (mu_f, cov_f) = moments(&q);
    let gap: f64 = mu_r
        .iter()
        .zip(&mu_f)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    let product = &cov_r * &cov_f;
    let tr_cross: f64 = product
        .complex_eigenvalues()
        .iter()
        .map(|ev| ev.norm().sqrt())
        .sum();
    let want = gap + cov_r.trace() + cov_f.trace() - 2.0 * tr_cross;
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
}

#[test]
fn fid_separates_shifted_sets_from_split_halves() {
    let mut wins = 0;
    for seed in 0..20 {
        let base = gauss_vecs(600 + seed, 200, 3, 0.0, 1.0);
        let (a, b) = base.split_at(100);
        let shifted = gauss_vecs(700 + seed, 100, 3, 1.2, 1.0);
        let near = fid(a, b).unwrap();
        let far = fid(a, &shifted).unwrap();
        if near < far {
            wins += 1;
        }
    }
    assert!(wins >= 19, "halves beat shifted in only {wins}/20 seeds");
}

// ── features and reports ─────────────────────────────────────────────

#[test]
fn identity_flatten_extracts_raw_values() {
    let ex = IdentityFlatten::new(1, 2, 2);
    assert_eq!(FeatureExtractor::<f64>::feature_dim(&ex), 4);
    let s = Tensor::<f64>::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[1, 2, 2]);
    assert_eq!(ex.extract(&s).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    let bad = Tensor::<f64>::from_vec(vec![0.0; 6], &[1, 2, 3]);
    assert!(matches!(ex.extract(&bad), Err(MetricsError::Feature(_))));
    assert!(FeatureExtractor::<f64>::fingerprint(&ex).contains("identity-flatten"));
}

#[test]
fn classifier_learns_separable_classes() {
    let pyramid = toy_pyramid();
    let rng = StreamRng::new(88);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let noise = sample_normal_vec::<f32>(&mut rng.stream("noise", i), 8);
        let data: Vec<f32> = noise.iter().map(|n| sign + 0.1 * n).collect();
        samples.push(Tensor::from_vec(data, &[1, 4, 2]));
        labels.push(i as usize % 2);
    }
    let clf = train_classifier(&samples, &labels, pyramid, 2, 6, 60, 5).unwrap();
    let acc = clf.accuracy(&samples, &labels).unwrap();
    assert!(acc >= 0.9, "trained accuracy {acc}");

    let f1 = clf.extract(&samples[0]).unwrap();
    let f2 = clf.extract(&samples[0]).unwrap();
    assert_eq!(f1, f2, "feature extraction must be deterministic");
    assert_eq!(f1.len(), 6);
    assert!(clf.fingerprint().contains("steps=60"));
}

#[test]
fn report_round_trips_and_flags_clamping() {
    let rng = StreamRng::new(55);
    let real: Vec<Tensor<f64>> = (0..6)
        .map(|i| Tensor::from_vec(sample_normal_vec(&mut rng.stream("r", i), 4), &[1, 2, 2]))
        .collect();
    let fake = real.clone();
    let extractor = IdentityFlatten::new(1, 2, 2);
    let kernel = KernelConfig::default();
    let report =
        compute_report(&real, &fake, &extractor, &kernel, "toy", "ckpt-final").unwrap();

    assert!(report.fid.abs() < 1e-8);
    assert_eq!(report.mmd_a, 0.0, "identical sets clamp to zero");
    assert!(report.mmd_s_raw <= 0.0);
    assert!(report.mmd_clamped, "negative raw estimates must be flagged");
    assert_eq!((report.n_real, report.n_fake), (6, 6));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    report.write(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for field in [
        "fid",
        "mmd_a",
        "mmd_s",
        "n_real",
        "n_fake",
        "kernel_fingerprint",
        "feature_fingerprint",
        "dataset",
        "model_checkpoint",
    ] {
        assert!(text.contains(field), "report missing `{field}`");
    }
    let back = MetricsReport::read(&path).unwrap();
    assert_eq!(back.kernel_fingerprint, report.kernel_fingerprint);
    assert_eq!(back.fid, report.fid);
}
