//! Dataset ingestion, normalization, synthetic motion data, and
//! sequence export/rendering.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{temporal_resample, GraphError, GraphPyramid, SkeletonSpec};
use crate::tensor::{Real, Tensor};
use crate::training::InMemoryDataset;

mod parse;
mod render;
mod synth;

pub use parse::{class_from_name, parse_skeleton_file, parse_skeleton_text};
pub use render::{render_svg, render_svg_with_edges, svg_strip};
pub use synth::{
    classify_spectral, dominant_frequency_bin, generate_synthetic_dataset, oracle_accuracy,
    SynthClassSpec, SynthMotionConfig,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed header at line {line}: {what}")]
    Header { line: usize, what: String },
    #[error("frame {frame} (line {line}): {what}")]
    Frame {
        frame: usize,
        line: usize,
        what: String,
    },
    #[error("frame {frame} (line {line}): joint count reads {got}, this layout carries 25")]
    JointCount {
        frame: usize,
        line: usize,
        got: usize,
    },
    #[error("frame {frame}: file ends inside a frame block, expected {expected}")]
    Truncated { frame: usize, expected: String },
    #[error("sequence field `{field}`: {what}")]
    Schema { field: String, what: String },
    #[error("unknown normalization mode `{0}`, expected global3d or local2d")]
    Mode(String),
    #[error("unknown skeleton `{0}`, no bundled joint layout under that name")]
    UnknownSkeleton(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One motion sequence: positions as a `[C, T, N]` tensor plus its label
/// and origin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SampleRepr", into = "SampleRepr")]
pub struct MotionSample {
    pub data: Tensor<f64>,
    pub class: usize,
    pub skeleton: String,
    pub provenance: String,
}

impl MotionSample {
    pub fn new(
        data: Tensor<f64>,
        class: usize,
        skeleton: impl Into<String>,
        provenance: impl Into<String>,
    ) -> Self {
        assert_eq!(data.shape().len(), 3, "motion data is [C, T, N]");
        MotionSample {
            data,
            class,
            skeleton: skeleton.into(),
            provenance: provenance.into(),
        }
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn joints(&self) -> usize {
        self.data.shape()[2]
    }

    /// Position component `c` of joint `j` at frame `t`.
    pub fn value(&self, c: usize, t: usize, j: usize) -> f64 {
        let (frames, joints) = (self.frames(), self.joints());
        self.data.data()[(c * frames + t) * joints + j]
    }
}

impl PartialEq for MotionSample {
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class
            && self.skeleton == other.skeleton
            && self.provenance == other.provenance
            && self.data.shape() == other.data.shape()
            && self.data.data() == other.data.data()
    }
}

/// Full-resolution spec of a bundled skeleton, by pyramid name.
pub fn bundled_skeleton(name: &str) -> Result<SkeletonSpec, DataError> {
    let pyramid = GraphPyramid::bundled(name)
        .map_err(|_| DataError::UnknownSkeleton(name.to_string()))?;
    Ok(pyramid.levels.last().expect("pyramid has levels").spec.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    /// Keep coordinates as stored (full 3-D world positions).
    Global3d,
    /// Drop the depth axis and re-anchor every frame at the root joint.
    Local2d,
}

impl FromStr for NormalizeMode {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "global3d" => Ok(NormalizeMode::Global3d),
            "local2d" => Ok(NormalizeMode::Local2d),
            other => Err(DataError::Mode(other.to_string())),
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizeMode::Global3d => "global3d",
            NormalizeMode::Local2d => "local2d",
        })
    }
}

/// Resamples a sequence to `target_t` frames and applies the movement
/// normalization. The root joint for `local2d` comes from the sample's
/// bundled skeleton spec.
pub fn normalize_sequence(
    sample: &MotionSample,
    target_t: usize,
    mode: NormalizeMode,
) -> Result<MotionSample, DataError> {
    let root = match mode {
        NormalizeMode::Global3d => 0,
        NormalizeMode::Local2d => bundled_skeleton(&sample.skeleton)?.root_joint,
    };
    normalize_sequence_with_root(sample, target_t, mode, root)
}

/// As [`normalize_sequence`] with an explicit root joint, for skeletons
/// without a bundled spec.
pub fn normalize_sequence_with_root(
    sample: &MotionSample,
    target_t: usize,
    mode: NormalizeMode,
    root_joint: usize,
) -> Result<MotionSample, DataError> {
    let [c, t, n] = [sample.channels(), sample.frames(), sample.joints()];
    if t < 2 {
        return Err(DataError::Config(format!(
            "sequence has {t} frames, normalization needs at least 2"
        )));
    }
    if root_joint >= n {
        return Err(DataError::Config(format!(
            "root joint {root_joint} out of range for {n} joints"
        )));
    }
    let resampled = temporal_resample(&sample.data.reshape(&[1, c, t, n]), target_t)?;
    let v = resampled.data();
    let (out_c, out) = match mode {
        NormalizeMode::Global3d => (c, v.to_vec()),
        NormalizeMode::Local2d => {
            if c < 2 || c > 3 {
                return Err(DataError::Config(format!(
                    "local2d expects 2 or 3 channels, sample has {c}"
                )));
            }
            let mut out = Vec::with_capacity(2 * target_t * n);
            for ch in 0..2 {
                for frame in 0..target_t {
                    let base = (ch * target_t + frame) * n;
                    let anchor = v[base + root_joint];
                    for j in 0..n {
                        out.push(v[base + j] - anchor);
                    }
                }
            }
            (2, out)
        }
    };
    Ok(MotionSample {
        data: Tensor::from_vec(out, &[out_c, target_t, n]),
        class: sample.class,
        skeleton: sample.skeleton.clone(),
        provenance: sample.provenance.clone(),
    })
}

/// On-disk sequence schema: one row per frame, each row the joints in
/// index order with channels fastest (`row[j * channels + c]`).
#[derive(Serialize, Deserialize)]
struct SequenceJson {
    skeleton: String,
    channels: usize,
    frames: usize,
    joints: usize,
    label: usize,
    data: Vec<Vec<f64>>,
}

/// Manifest-internal sample encoding: the sequence schema plus provenance.
#[derive(Serialize, Deserialize)]
struct SampleRepr {
    skeleton: String,
    channels: usize,
    frames: usize,
    joints: usize,
    label: usize,
    provenance: String,
    data: Vec<Vec<f64>>,
}

fn rows_from_tensor(data: &Tensor<f64>) -> Vec<Vec<f64>> {
    let [c, t, n] = [data.shape()[0], data.shape()[1], data.shape()[2]];
    let v = data.data();
    (0..t)
        .map(|frame| {
            let mut row = Vec::with_capacity(n * c);
            for j in 0..n {
                for ch in 0..c {
                    row.push(v[(ch * t + frame) * n + j]);
                }
            }
            row
        })
        .collect()
}

fn tensor_from_rows(
    rows: &[Vec<f64>],
    channels: usize,
    frames: usize,
    joints: usize,
) -> Result<Tensor<f64>, DataError> {
    if rows.len() != frames {
        return Err(DataError::Schema {
            field: "data".into(),
            what: format!("expected {frames} frame rows, found {}", rows.len()),
        });
    }
    let width = joints * channels;
    let mut out = vec![0.0; channels * frames * joints];
    for (frame, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(DataError::Schema {
                field: "data".into(),
                what: format!(
                    "frame row {frame} has {} values, expected joints*channels = {width}",
                    row.len()
                ),
            });
        }
        for j in 0..joints {
            for ch in 0..channels {
                let v = row[j * channels + ch];
                if !v.is_finite() {
                    return Err(DataError::Schema {
                        field: "data".into(),
                        what: format!("non-finite value at frame {frame}, joint {j}"),
                    });
                }
                out[(ch * frames + frame) * joints + j] = v;
            }
        }
    }
    Ok(Tensor::from_vec(out, &[channels, frames, joints]))
}

fn check_counts(channels: usize, frames: usize, joints: usize) -> Result<(), DataError> {
    for (field, v) in [("channels", channels), ("frames", frames), ("joints", joints)] {
        if v == 0 {
            return Err(DataError::Schema {
                field: field.into(),
                what: "must be positive".into(),
            });
        }
    }
    Ok(())
}

impl From<MotionSample> for SampleRepr {
    fn from(s: MotionSample) -> SampleRepr {
        SampleRepr {
            skeleton: s.skeleton.clone(),
            channels: s.channels(),
            frames: s.frames(),
            joints: s.joints(),
            label: s.class,
            provenance: s.provenance.clone(),
            data: rows_from_tensor(&s.data),
        }
    }
}

impl TryFrom<SampleRepr> for MotionSample {
    type Error = DataError;

    fn try_from(r: SampleRepr) -> Result<MotionSample, DataError> {
        check_counts(r.channels, r.frames, r.joints)?;
        let data = tensor_from_rows(&r.data, r.channels, r.frames, r.joints)?;
        Ok(MotionSample {
            data,
            class: r.label,
            skeleton: r.skeleton,
            provenance: r.provenance,
        })
    }
}

/// Writes a sequence as JSON. Floats serialize in shortest-round-trip
/// decimal, so import recovers them exactly.
pub fn export_sequence(sample: &MotionSample, path: &Path) -> Result<(), DataError> {
    if sample.frames() == 0 {
        return Err(DataError::Schema {
            field: "frames".into(),
            what: "sequence has zero frames, nothing to export".into(),
        });
    }
    if !sample.data.data().iter().all(|v| v.is_finite()) {
        return Err(DataError::Schema {
            field: "data".into(),
            what: "sequence holds non-finite values".into(),
        });
    }
    let doc = SequenceJson {
        skeleton: sample.skeleton.clone(),
        channels: sample.channels(),
        frames: sample.frames(),
        joints: sample.joints(),
        label: sample.class,
        data: rows_from_tensor(&sample.data),
    };
    let mut text = serde_json::to_string(&doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads a sequence written by [`export_sequence`]. The joint count must
/// match the named skeleton's bundled layout when one exists.
pub fn import_sequence(path: &Path) -> Result<MotionSample, DataError> {
    let text = fs::read_to_string(path)?;
    let doc: SequenceJson = serde_json::from_str(&text)?;
    check_counts(doc.channels, doc.frames, doc.joints)?;
    if let Ok(spec) = bundled_skeleton(&doc.skeleton) {
        let expect = spec.joint_names.len();
        if doc.joints != expect {
            return Err(DataError::Schema {
                field: "joints".into(),
                what: format!(
                    "skeleton `{}` has {expect} joints, file declares {}",
                    doc.skeleton, doc.joints
                ),
            });
        }
    }
    let data = tensor_from_rows(&doc.data, doc.channels, doc.frames, doc.joints)?;
    Ok(MotionSample {
        data,
        class: doc.label,
        skeleton: doc.skeleton,
        provenance: path.display().to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub split: Split,
    pub sample: MotionSample,
}

/// A labeled dataset: uniform-shape samples with split tags, the class
/// histogram, and the normalization they carry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub skeleton: String,
    pub channels: usize,
    pub frames: usize,
    pub num_classes: usize,
    pub histogram: Vec<usize>,
    pub normalization: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthMotionConfig>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Builds a manifest from tagged samples, computing the histogram.
    pub fn from_entries(
        normalization: impl Into<String>,
        synth: Option<SynthMotionConfig>,
        entries: Vec<ManifestEntry>,
    ) -> Result<Self, DataError> {
        let first = entries
            .first()
            .ok_or_else(|| DataError::Manifest("no samples".into()))?;
        let (skeleton, channels, frames) = (
            first.sample.skeleton.clone(),
            first.sample.channels(),
            first.sample.frames(),
        );
        let num_classes = entries.iter().map(|e| e.sample.class).max().unwrap() + 1;
        let mut histogram = vec![0usize; num_classes];
        for e in &entries {
            histogram[e.sample.class] += 1;
        }
        let manifest = DatasetManifest {
            skeleton,
            channels,
            frames,
            num_classes,
            histogram,
            normalization: normalization.into(),
            synth,
            entries,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.num_classes == 0 {
            return Err(DataError::Manifest("num_classes is zero".into()));
        }
        if self.histogram.len() != self.num_classes {
            return Err(DataError::Manifest(format!(
                "histogram has {} bins for {} classes",
                self.histogram.len(),
                self.num_classes
            )));
        }
        let mut counts = vec![0usize; self.num_classes];
        for (i, e) in self.entries.iter().enumerate() {
            let s = &e.sample;
            if s.class >= self.num_classes {
                return Err(DataError::Manifest(format!(
                    "sample {i} has class {} outside 0..{}",
                    s.class, self.num_classes
                )));
            }
            if s.skeleton != self.skeleton
                || s.channels() != self.channels
                || s.frames() != self.frames
            {
                return Err(DataError::Manifest(format!(
                    "sample {i} ({}, [{}, {}, {}]) does not match the manifest layout",
                    s.skeleton,
                    s.channels(),
                    s.frames(),
                    s.joints()
                )));
            }
            counts[s.class] += 1;
        }
        if counts != self.histogram {
            return Err(DataError::Manifest(format!(
                "histogram {:?} does not match contents {:?}",
                self.histogram, counts
            )));
        }
        if let Some(missing) = counts.iter().position(|&c| c == 0) {
            return Err(DataError::Manifest(format!(
                "class ids must be contiguous from 0, class {missing} has no samples"
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Samples carrying the given split tag; all samples when `None`.
    pub fn samples(&self, split: Option<Split>) -> impl Iterator<Item = &MotionSample> {
        self.entries
            .iter()
            .filter(move |e| split.is_none_or(|s| e.split == s))
            .map(|e| &e.sample)
    }

    /// Copies a split into a training batch source at the target precision.
    pub fn to_dataset<T: Real>(&self, split: Option<Split>) -> InMemoryDataset<T> {
        let joints = self.entries[0].sample.joints();
        let mut out = InMemoryDataset::new([self.channels, self.frames, joints]);
        for s in self.samples(split) {
            let values = s.data.data().iter().map(|&v| T::from_f64(v)).collect();
            out.push(values, s.class);
        }
        out
    }
}

/// Remaps sparse class ids to a dense 0..k range, in ascending original
/// order. Returns the original id for each new id.
pub fn compact_class_ids(samples: &mut [MotionSample]) -> Vec<usize> {
    let mut seen: Vec<usize> = samples.iter().map(|s| s.class).collect();
    seen.sort_unstable();
    seen.dedup();
    for s in samples.iter_mut() {
        s.class = seen.binary_search(&s.class).expect("id is in the seen list");
    }
    seen
}
