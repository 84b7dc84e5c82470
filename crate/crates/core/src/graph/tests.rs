use super::*;
use crate::tensor::{sample_normal_vec, StreamRng, Tensor};
use approx::assert_abs_diff_eq;

fn chain_spec(n: usize, center: usize) -> SkeletonSpec {
    SkeletonSpec {
        name: format!("chain{}", n),
        joint_names: (0..n).map(|i| format!("j{}", i)).collect(),
        edges: (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
        center_joint: center,
        root_joint: 0,
    }
}

fn random_motion(b: usize, c: usize, t: usize, n: usize, seed: u64) -> Tensor<f64> {
    let mut rng = StreamRng::new(seed).stream("test-motion", 0);
    Tensor::from_vec(sample_normal_vec(&mut rng, b * c * t * n), &[b, c, t, n])
}

// ── partitioning ─────────────────────────────────────────────────────

#[test]
fn two_joint_chain_root_partition_is_identity() {
    let adj = partition_and_normalize(&chain_spec(2, 0)).unwrap();
    assert_eq!(adj.raw[0], vec![1.0, 0.0, 0.0, 1.0]);
    assert_eq!(adj.normalized[0], vec![1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn three_joint_chain_centripetal_entries() {
    // Chain 0-1-2 with center 0: joint 1 receives from 0, joint 2 from 1.
    let adj = partition_and_normalize(&chain_spec(3, 0)).unwrap();
    let n = 3;
    let cp = &adj.raw[1];
    assert_eq!(cp[n + 0], 1.0, "entry (1,0)");
    assert_eq!(cp[2 * n + 1], 1.0, "entry (2,1)");
    assert_eq!(cp.iter().sum::<f64>(), 2.0, "exactly two centripetal entries");
    // Each centripetal row/col degree is 1, so normalization leaves 1.
    assert_eq!(adj.normalized[1][n + 0], 1.0);
    assert_eq!(adj.normalized[1][2 * n + 1], 1.0);
    // Centrifugal holds the reversed edges.
    let cf = &adj.raw[2];
    assert_eq!(cf[0 * n + 1], 1.0, "entry (0,1)");
    assert_eq!(cf[n + 2], 1.0, "entry (1,2)");
    assert_eq!(cf.iter().sum::<f64>(), 2.0);
}

#[test]
fn partitions_sum_to_adjacency_plus_identity_all_levels() {
    for name in ["ntu25", "h36m15"] {
        let pyr = GraphPyramid::bundled(name).unwrap();
        for level in &pyr.levels {
            let n = level.spec.joint_count();
            let a = level.spec.adjacency();
            for i in 0..n {
                for j in 0..n {
                    let want = a[i * n + j] + if i == j { 1.0 } else { 0.0 };
                    let got: f64 = (0..3).map(|p| level.adjacency.raw[p][i * n + j]).sum();
                    assert_eq!(got, want, "{} level {} entry ({},{})", name, level.adjacency.level, i, j);
                }
            }
        }
    }
}

#[test]
fn normalization_matches_bruteforce_loop_and_is_bounded() {
    for name in ["ntu25", "h36m15"] {
        let pyr = GraphPyramid::bundled(name).unwrap();
        for level in &pyr.levels {
            let n = level.spec.joint_count();
            for p in 0..3 {
                let raw = &level.adjacency.raw[p];
                // Independent per-element recomputation.
                let mut deg = vec![0.0f64; n];
                for i in 0..n {
                    for j in 0..n {
                        deg[i] += raw[i * n + j];
                    }
                }
                for d in &mut deg {
                    if *d == 0.0 {
                        *d = 1.0;
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let want = raw[i * n + j] / (deg[i] * deg[j]).sqrt();
                        let got = level.adjacency.normalized[p][i * n + j];
                        assert_abs_diff_eq!(got, want, epsilon = 1e-15);
                        assert!((0.0..=1.0).contains(&got), "normalized entry out of [0,1]");
                    }
                }
            }
        }
    }
}

#[test]
fn disconnected_and_malformed_graphs_are_rejected() {
    let mut spec = chain_spec(4, 0);
    spec.edges.pop();
    assert!(matches!(
        partition_and_normalize(&spec),
        Err(GraphError::Disconnected { unreached: 1, n: 4 })
    ));

    let mut spec = chain_spec(3, 0);
    spec.edges.push((1, 1));
    assert!(matches!(
        partition_and_normalize(&spec),
        Err(GraphError::SelfLoop { joint: 1 })
    ));

    let mut spec = chain_spec(3, 0);
    spec.edges.push((1, 0));
    assert!(matches!(
        partition_and_normalize(&spec),
        Err(GraphError::DuplicateEdge { .. })
    ));

    let mut spec = chain_spec(3, 0);
    spec.center_joint = 7;
    assert!(matches!(
        partition_and_normalize(&spec),
        Err(GraphError::JointOutOfRange { what: "center", .. })
    ));
}

// ── pyramid structure ────────────────────────────────────────────────

#[test]
fn bundled_level_sizes() {
    assert_eq!(GraphPyramid::bundled("ntu25").unwrap().level_sizes(), vec![1, 5, 11, 25]);
    assert_eq!(GraphPyramid::bundled("h36m15").unwrap().level_sizes(), vec![1, 2, 7, 15]);
    assert!(matches!(
        GraphPyramid::bundled("nope"),
        Err(GraphError::UnknownBundled(_))
    ));
}

#[test]
fn single_level_pyramid_is_identity_only() {
    let spec = SkeletonSpec {
        name: "point".into(),
        joint_names: vec!["only".into()],
        edges: vec![],
        center_joint: 0,
        root_joint: 0,
    };
    let pyr = build_pyramid(&spec, &[1]).unwrap();
    assert_eq!(pyr.level_count(), 1);
    let adj = &pyr.levels[0].adjacency;
    assert_eq!(adj.raw[0], vec![1.0]);
    assert_eq!(adj.raw[1], vec![0.0]);
    assert_eq!(adj.raw[2], vec![0.0]);
}

#[test]
fn build_pyramid_validates_against_bundled_table() {
    let pyr = GraphPyramid::bundled("ntu25").unwrap();
    let finest = pyr.levels.last().unwrap().spec.clone();
    let mut spec = finest.clone();
    spec.name = "ntu25".into();
    let rebuilt = build_pyramid(&spec, &[1, 5, 11, 25]).unwrap();
    assert_eq!(rebuilt.level_sizes(), vec![1, 5, 11, 25]);

    assert!(build_pyramid(&spec, &[1, 5, 25]).is_err(), "size mismatch");
    let mut wrong = spec.clone();
    wrong.edges.swap_remove(0);
    wrong.edges.push((3, 9));
    assert!(build_pyramid(&wrong, &[1, 5, 11, 25]).is_err(), "edge mismatch");
}

#[test]
fn table_validation_rejects_inconsistencies() {
    let mut table = GraphPyramid::bundled("ntu25").unwrap().to_table();
    // Break the carry invariant: kept vertex no longer a pure copy.
    table.up_maps[2][0] = vec![0, 1];
    let err = GraphPyramid::from_table(&table).unwrap_err();
    assert!(matches!(err, GraphError::Table(_)), "got {err}");

    let mut table = GraphPyramid::bundled("ntu25").unwrap().to_table();
    // Retarget every use of coarse vertex 4 (including its carry) to 3.
    // Source coverage is validated before carry purity, so the reported
    // failure is the unreachable vertex.
    for row in table.up_maps[1].iter_mut() {
        for s in row.iter_mut() {
            if *s == 4 {
                *s = 3;
            }
        }
    }
    let err = GraphPyramid::from_table(&table).unwrap_err();
    assert!(
        format!("{err}").contains("unreachable"),
        "expected unreachable-vertex error, got {err}"
    );

    let mut table = GraphPyramid::bundled("h36m15").unwrap().to_table();
    table.level_sizes = vec![1, 7, 2, 15];
    assert!(GraphPyramid::from_table(&table).is_err());
}

#[test]
fn pyramid_table_round_trips_through_json() {
    let pyr = GraphPyramid::bundled("h36m15").unwrap();
    let json = serde_json::to_string(&pyr.to_table()).unwrap();
    let again = GraphPyramid::from_json(&json).unwrap();
    assert_eq!(again.level_sizes(), pyr.level_sizes());
    assert_eq!(
        again.levels.last().unwrap().spec.edges,
        pyr.levels.last().unwrap().spec.edges
    );
}

// ── up/down sampling ─────────────────────────────────────────────────

#[test]
fn upsample_constant_stays_constant() {
    let pyr = GraphPyramid::bundled("ntu25").unwrap();
    for level in 0..pyr.level_count() - 1 {
        let n = pyr.levels[level].spec.joint_count();
        let x = Tensor::<f64>::full(&[2, 3, 4, n], 2.5);
        let up = pyr.upsample(&x, level).unwrap();
        assert_eq!(up.shape(), &[2, 3, 4, pyr.levels[level + 1].spec.joint_count()]);
        for &v in up.data() {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-15);
        }
    }
}

#[test]
fn toy_upsample_averages_sources() {
    // 2 -> 3 pyramid: vertex 2 of the fine level averages both coarse
    // vertices (values 1.0 and 3.0 -> 2.0).
    let table = PyramidTable {
        skeleton_name: "toy".into(),
        level_sizes: vec![2, 3],
        joint_names: vec![
            vec!["a".into(), "b".into()],
            vec!["a".into(), "b".into(), "ab".into()],
        ],
        edges: vec![vec![[0, 1]], vec![[0, 2], [2, 1]]],
        up_maps: vec![vec![vec![0], vec![1], vec![0, 1]]],
        keep_lists: vec![vec![0, 1]],
        center_joint: vec![0, 0],
        root_joint: vec![0, 0],
    };
    let pyr = GraphPyramid::from_table(&table).unwrap();
    let x = Tensor::<f64>::from_vec(vec![1.0, 3.0], &[1, 1, 1, 2]);
    let up = pyr.upsample(&x, 0).unwrap();
    assert_eq!(up.data(), &[1.0, 3.0, 2.0]);
    // Degenerate keep-list covering all coarse vertices: down is exact.
    let down = pyr.downsample(&up, 1).unwrap();
    assert_eq!(down.data(), x.data());
}

#[test]
fn upsample_matches_bruteforce_table_evaluation() {
    for name in ["ntu25", "h36m15"] {
        let pyr = GraphPyramid::bundled(name).unwrap();
        for level in 0..pyr.level_count() - 1 {
            let (b, c, t) = (2, 3, 5);
            let n_in = pyr.levels[level].spec.joint_count();
            let n_out = pyr.levels[level + 1].spec.joint_count();
            let x = random_motion(b, c, t, n_in, 7 + level as u64);
            let up = pyr.upsample(&x, level).unwrap();
            let sources = pyr.levels[level + 1].up_sources.as_ref().unwrap();
            let xd = x.data();
            let ud = up.data();
            for bi in 0..b {
                for ci in 0..c {
                    for ti in 0..t {
                        for v in 0..n_out {
                            let base_in = ((bi * c + ci) * t + ti) * n_in;
                            let want = sources[v]
                                .iter()
                                .map(|&s| xd[base_in + s])
                                .sum::<f64>()
                                / sources[v].len() as f64;
                            let got = ud[((bi * c + ci) * t + ti) * n_out + v];
                            assert_abs_diff_eq!(got, want, epsilon = 1e-15);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn downsample_selects_keep_list_exactly() {
    let pyr = GraphPyramid::bundled("ntu25").unwrap();
    let x = random_motion(2, 3, 4, 25, 11);
    let down = pyr.downsample(&x, 3).unwrap();
    assert_eq!(down.shape(), &[2, 3, 4, 11]);
    let keeps = pyr.levels[3].keep_list.as_ref().unwrap();
    let xd = x.data();
    let dd = down.data();
    for outer in 0..2 * 3 * 4 {
        for (i, &k) in keeps.iter().enumerate() {
            assert_eq!(dd[outer * 11 + i], xd[outer * 25 + k], "pure selection, no mixing");
        }
    }
}

#[test]
fn down_of_up_is_bitwise_identity() {
    for name in ["ntu25", "h36m15"] {
        let pyr = GraphPyramid::bundled(name).unwrap();
        for level in 0..pyr.level_count() - 1 {
            let n = pyr.levels[level].spec.joint_count();
            let x = random_motion(1, 2, 3, n, 100 + level as u64);
            let round = pyr.downsample(&pyr.upsample(&x, level).unwrap(), level + 1).unwrap();
            assert_eq!(round.data(), x.data(), "{} level {}", name, level);
        }
    }
}

#[test]
fn sampling_level_and_shape_errors() {
    let pyr = GraphPyramid::bundled("ntu25").unwrap();
    let x = random_motion(1, 1, 2, 25, 1);
    assert!(matches!(
        pyr.upsample(&x, 3),
        Err(GraphError::LevelOutOfRange { .. })
    ));
    assert!(matches!(
        pyr.downsample(&x, 0),
        Err(GraphError::LevelOutOfRange { .. })
    ));
    assert!(matches!(
        pyr.upsample(&x, 1),
        Err(GraphError::JointDimMismatch { expected: 5, got: 25 })
    ));
}

// ── temporal resampling ──────────────────────────────────────────────

#[test]
fn temporal_resample_identity_and_endpoints() {
    let x = random_motion(1, 2, 6, 3, 42);
    let same = temporal_resample(&x, 6).unwrap();
    assert_eq!(same.data(), x.data());

    // Frames [0, 2] doubled to 4: uniform grid 0, 2/3, 4/3, 2.
    let two = Tensor::<f64>::from_vec(vec![0.0, 2.0], &[1, 1, 2, 1]);
    let four = temporal_resample(&two, 4).unwrap();
    let want = [0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0];
    for (got, want) in four.data().iter().zip(want) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
    }
    assert_eq!(four.data()[0], 0.0, "left endpoint preserved");
    assert_eq!(four.data()[3], 2.0, "right endpoint preserved");
}

#[test]
fn temporal_resample_constant_and_linearity() {
    let c = Tensor::<f64>::full(&[1, 1, 5, 2], 1.25);
    for new_t in [1usize, 3, 5, 9] {
        let y = temporal_resample(&c, new_t).unwrap();
        for &v in y.data() {
            assert_abs_diff_eq!(v, 1.25, epsilon = 1e-15);
        }
    }

    let x = random_motion(1, 2, 5, 3, 5);
    let y = random_motion(1, 2, 5, 3, 6);
    let (a, b) = (0.7, -1.3);
    let mixed = temporal_resample(&x.scale(a).add(&y.scale(b)), 8).unwrap();
    let separate = temporal_resample(&x, 8)
        .unwrap()
        .scale(a)
        .add(&temporal_resample(&y, 8).unwrap().scale(b));
    for (m, s) in mixed.data().iter().zip(separate.data()) {
        assert_abs_diff_eq!(*m, *s, epsilon = 1e-12);
    }

    assert!(matches!(
        temporal_resample(&x, 0),
        Err(GraphError::EmptyResample)
    ));
}
