//! Graph pyramids: one skeleton per resolution level plus the vertex
//! correspondences for moving motion tensors between levels.
//!
//! Exact correspondences ship as versioned data tables; two defaults
//! are bundled (ntu25: 1-5-11-25 joints, h36m15: 1-2-7-15 joints).

use super::partition::{partition_and_normalize, PartitionedAdjacency};
use super::{GraphError, SkeletonSpec};
use crate::tensor::{AxisMap, Real, Tensor};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const NTU25_TABLE: &str = include_str!("tables/ntu25.json");
const H36M15_TABLE: &str = include_str!("tables/h36m15.json");

/// On-disk pyramid definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PyramidTable {
    pub skeleton_name: String,
    /// Joint counts per level, strictly increasing.
    pub level_sizes: Vec<usize>,
    /// Joint names per level.
    pub joint_names: Vec<Vec<String>>,
    /// Undirected edges per level.
    pub edges: Vec<Vec<[usize; 2]>>,
    /// up_maps[l][v] = the level-l source vertices (1 or 2) averaged to
    /// produce vertex v of level l+1; length level_sizes[l+1].
    pub up_maps: Vec<Vec<Vec<usize>>>,
    /// keep_lists[l][i] = the level-(l+1) vertex carried to position i
    /// of level l when downsampling; length level_sizes[l].
    pub keep_lists: Vec<Vec<usize>>,
    /// Partition center per level.
    pub center_joint: Vec<usize>,
    /// Anchor joint per level.
    pub root_joint: Vec<usize>,
}

/// One resolution level with its topology and inter-level maps.
#[derive(Clone, Debug)]
pub struct PyramidLevel {
    pub spec: SkeletonSpec,
    pub adjacency: PartitionedAdjacency,
    /// Averaging map from the previous (coarser) level; None at level 0.
    pub up_from_prev: Option<Arc<AxisMap>>,
    /// Selection map to the previous level; None at level 0.
    pub down_to_prev: Option<Arc<AxisMap>>,
    /// This level's vertex indices in previous-level order; None at level 0.
    pub keep_list: Option<Vec<usize>>,
    /// Raw up-map sources for each vertex here; None at level 0.
    pub up_sources: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug)]
pub struct GraphPyramid {
    pub name: String,
    pub levels: Vec<PyramidLevel>,
}

impl GraphPyramid {
    /// Validates a table and materializes specs, adjacencies, and maps.
    pub fn from_table(table: &PyramidTable) -> Result<Self, GraphError> {
        let l = table.level_sizes.len();
        if l == 0 {
            return Err(GraphError::Table("no levels".into()));
        }
        for w in table.level_sizes.windows(2) {
            if w[1] <= w[0] {
                return Err(GraphError::Table(format!(
                    "level sizes must strictly increase, got {:?}",
                    table.level_sizes
                )));
            }
        }
        for (field, len) in [
            ("joint_names", table.joint_names.len()),
            ("edges", table.edges.len()),
            ("center_joint", table.center_joint.len()),
            ("root_joint", table.root_joint.len()),
        ] {
            if len != l {
                return Err(GraphError::Table(format!(
                    "{} has {} entries for {} levels",
                    field, len, l
                )));
            }
        }
        for (field, len) in [
            ("up_maps", table.up_maps.len()),
            ("keep_lists", table.keep_lists.len()),
        ] {
            if len != l - 1 {
                return Err(GraphError::Table(format!(
                    "{} has {} entries, expected {} (levels - 1)",
                    field,
                    len,
                    l - 1
                )));
            }
        }

        let mut levels = Vec::with_capacity(l);
        for i in 0..l {
            let n = table.level_sizes[i];
            if table.joint_names[i].len() != n {
                return Err(GraphError::NameCount {
                    names: table.joint_names[i].len(),
                    n,
                });
            }
            let spec = SkeletonSpec {
                name: format!("{}/level{}", table.skeleton_name, i),
                joint_names: table.joint_names[i].clone(),
                edges: table.edges[i].iter().map(|e| (e[0], e[1])).collect(),
                center_joint: table.center_joint[i],
                root_joint: table.root_joint[i],
            };
            let mut adjacency = partition_and_normalize(&spec)?;
            adjacency.level = i;

            let (up_from_prev, down_to_prev, keep_list, up_sources) = if i == 0 {
                (None, None, None, None)
            } else {
                let coarse_n = table.level_sizes[i - 1];
                let ups = &table.up_maps[i - 1];
                let keeps = &table.keep_lists[i - 1];
                if ups.len() != n {
                    return Err(GraphError::Table(format!(
                        "up_maps[{}] covers {} vertices, level has {}",
                        i - 1,
                        ups.len(),
                        n
                    )));
                }
                if keeps.len() != coarse_n {
                    return Err(GraphError::Table(format!(
                        "keep_lists[{}] has {} entries, coarser level has {}",
                        i - 1,
                        keeps.len(),
                        coarse_n
                    )));
                }
                let mut used = vec![false; coarse_n];
                for (v, srcs) in ups.iter().enumerate() {
                    if srcs.is_empty() || srcs.len() > 2 {
                        return Err(GraphError::Table(format!(
                            "up_maps[{}][{}] must list 1 or 2 sources, has {}",
                            i - 1,
                            v,
                            srcs.len()
                        )));
                    }
                    for &s in srcs {
                        if s >= coarse_n {
                            return Err(GraphError::Table(format!(
                                "up_maps[{}][{}] references coarse vertex {} of {}",
                                i - 1,
                                v,
                                s,
                                coarse_n
                            )));
                        }
                        used[s] = true;
                    }
                }
                if let Some(idle) = used.iter().position(|u| !u) {
                    return Err(GraphError::Table(format!(
                        "coarse vertex {} of level {} is unreachable in up_maps[{}]",
                        idle,
                        i - 1,
                        i - 1
                    )));
                }
                let mut seen = vec![false; n];
                for (pos, &kept) in keeps.iter().enumerate() {
                    if kept >= n {
                        return Err(GraphError::Table(format!(
                            "keep_lists[{}][{}] references vertex {} of {}",
                            i - 1,
                            pos,
                            kept,
                            n
                        )));
                    }
                    if seen[kept] {
                        return Err(GraphError::Table(format!(
                            "keep_lists[{}] repeats vertex {}",
                            i - 1,
                            kept
                        )));
                    }
                    seen[kept] = true;
                    // Carried vertex must be an exact copy of its coarse
                    // counterpart, or down(up(X)) != X.
                    if ups[kept] != vec![pos] {
                        return Err(GraphError::Table(format!(
                            "vertex {} of level {} is kept as coarse position {} \
                             but up_maps[{}][{}] = {:?} is not a pure carry",
                            kept,
                            i,
                            pos,
                            i - 1,
                            kept,
                            ups[kept]
                        )));
                    }
                }
                let up_rows: Vec<Vec<(usize, f64)>> = ups
                    .iter()
                    .map(|srcs| {
                        let w = 1.0 / srcs.len() as f64;
                        let mut sorted = srcs.clone();
                        sorted.sort_unstable();
                        sorted.into_iter().map(|s| (s, w)).collect()
                    })
                    .collect();
                let down_rows: Vec<Vec<(usize, f64)>> =
                    keeps.iter().map(|&k| vec![(k, 1.0)]).collect();
                (
                    Some(Arc::new(AxisMap::new(coarse_n, up_rows))),
                    Some(Arc::new(AxisMap::new(n, down_rows))),
                    Some(keeps.clone()),
                    Some(ups.clone()),
                )
            };

            levels.push(PyramidLevel {
                spec,
                adjacency,
                up_from_prev,
                down_to_prev,
                keep_list,
                up_sources,
            });
        }
        Ok(GraphPyramid {
            name: table.skeleton_name.clone(),
            levels,
        })
    }

    /// One of the bundled defaults: `ntu25` or `h36m15`.
    pub fn bundled(name: &str) -> Result<Self, GraphError> {
        let json = match name {
            "ntu25" => NTU25_TABLE,
            "h36m15" => H36M15_TABLE,
            other => return Err(GraphError::UnknownBundled(other.to_string())),
        };
        Self::from_json(json)
    }

    pub fn from_json(json: &str) -> Result<Self, GraphError> {
        let table: PyramidTable = serde_json::from_str(json)?;
        Self::from_table(&table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GraphError> {
        let json = std::fs::read_to_string(path)?;
        Self::from_json(&json)
    }

    /// Serializable view of the pyramid (inverse of `from_table`).
    pub fn to_table(&self) -> PyramidTable {
        PyramidTable {
            skeleton_name: self.name.clone(),
            level_sizes: self.level_sizes(),
            joint_names: self
                .levels
                .iter()
                .map(|l| l.spec.joint_names.clone())
                .collect(),
            edges: self
                .levels
                .iter()
                .map(|l| l.spec.edges.iter().map(|&(a, b)| [a, b]).collect())
                .collect(),
            up_maps: self
                .levels
                .iter()
                .skip(1)
                .map(|l| l.up_sources.clone().expect("non-base level has up map"))
                .collect(),
            keep_lists: self
                .levels
                .iter()
                .skip(1)
                .map(|l| l.keep_list.clone().expect("non-base level has keep list"))
                .collect(),
            center_joint: self.levels.iter().map(|l| l.spec.center_joint).collect(),
            root_joint: self.levels.iter().map(|l| l.spec.root_joint).collect(),
        }
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.spec.joint_count()).collect()
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn check_level(&self, level: usize) -> Result<(), GraphError> {
        if level >= self.levels.len() {
            return Err(GraphError::LevelOutOfRange {
                level,
                levels: self.levels.len(),
            });
        }
        Ok(())
    }

    fn check_joints<T: Real>(&self, x: &Tensor<T>, level: usize) -> Result<(), GraphError> {
        let expected = self.levels[level].spec.joint_count();
        let got = *x.shape().last().expect("motion tensor has a joint axis");
        if got != expected {
            return Err(GraphError::JointDimMismatch { expected, got });
        }
        Ok(())
    }

    /// Moves `[B, C, T, N_l]` up one level: carried vertices are copied,
    /// introduced vertices average their 1-2 sources.
    pub fn upsample<T: Real>(
        &self,
        x: &Tensor<T>,
        from_level: usize,
    ) -> Result<Tensor<T>, GraphError> {
        self.check_level(from_level + 1)?;
        self.check_joints(x, from_level)?;
        let map = self.levels[from_level + 1]
            .up_from_prev
            .as_ref()
            .expect("non-base level has up map");
        Ok(x.axis_linear(x.shape().len() - 1, map))
    }

    /// Moves `[B, C, T, N_l]` down one level by keep-list selection.
    pub fn downsample<T: Real>(
        &self,
        x: &Tensor<T>,
        from_level: usize,
    ) -> Result<Tensor<T>, GraphError> {
        self.check_level(from_level)?;
        if from_level == 0 {
            return Err(GraphError::LevelOutOfRange {
                level: 0,
                levels: self.levels.len(),
            });
        }
        self.check_joints(x, from_level)?;
        let map = self.levels[from_level]
            .down_to_prev
            .as_ref()
            .expect("non-base level has down map");
        Ok(x.axis_linear(x.shape().len() - 1, map))
    }
}

/// Builds a pyramid for `spec` from the bundled table matching its name
/// and the requested sizes. The finest level of the table must agree
/// with `spec` exactly.
pub fn build_pyramid(spec: &SkeletonSpec, level_sizes: &[usize]) -> Result<GraphPyramid, GraphError> {
    spec.validate()?;
    if level_sizes.len() == 1 {
        if level_sizes[0] != spec.joint_count() {
            return Err(GraphError::Table(format!(
                "single level size {} does not match spec joint count {}",
                level_sizes[0],
                spec.joint_count()
            )));
        }
        let mut adjacency = partition_and_normalize(spec)?;
        adjacency.level = 0;
        return Ok(GraphPyramid {
            name: spec.name.clone(),
            levels: vec![PyramidLevel {
                spec: spec.clone(),
                adjacency,
                up_from_prev: None,
                down_to_prev: None,
                keep_list: None,
                up_sources: None,
            }],
        });
    }
    let pyramid = GraphPyramid::bundled(&spec.name)?;
    if pyramid.level_sizes() != level_sizes {
        return Err(GraphError::Table(format!(
            "bundled `{}` has level sizes {:?}, requested {:?}",
            spec.name,
            pyramid.level_sizes(),
            level_sizes
        )));
    }
    let finest = &pyramid.levels.last().expect("pyramid has levels").spec;
    let mut a = finest.edges.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect::<Vec<_>>();
    let mut b = spec.edges.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect::<Vec<_>>();
    a.sort_unstable();
    b.sort_unstable();
    if finest.joint_count() != spec.joint_count()
        || a != b
        || finest.center_joint != spec.center_joint
    {
        return Err(GraphError::Table(format!(
            "bundled `{}` finest level disagrees with the provided skeleton",
            spec.name
        )));
    }
    Ok(pyramid)
}
