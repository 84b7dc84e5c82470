//! Run configuration: one JSON file with `train`, `model`, and `data`
//! blocks, dotted-path overrides from the command line, and the shared
//! plumbing for worker threads and config snapshots.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use kforge_core::graph::PyramidTable;
use kforge_core::{GraphPyramid, ModelConfig, SynthMotionConfig, TrainConfig};

/// Where training samples come from: a synthetic recipe generated on
/// the fly, or a dataset manifest saved on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSpec {
    Synth(SynthMotionConfig),
    Manifest(std::path::PathBuf),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub data: DataSpec,
}

/// Loads a run config, applies `--set` overrides and the `--seed` /
/// `--steps` shorthands, and validates the result. Nothing is written
/// anywhere, so a rejected config leaves no trace.
pub fn load_spec(
    path: &Path,
    overrides: &[String],
    seed: Option<u64>,
    steps: Option<u64>,
) -> Result<RunSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    for pair in overrides {
        apply_override(&mut value, pair)?;
    }
    let train = value
        .get_mut("train")
        .and_then(|v| v.as_object_mut())
        .ok_or_else(|| anyhow::anyhow!("config must carry a `train` object"))?;
    if let Some(seed) = seed {
        train.insert("seed".to_string(), seed.into());
    }
    if let Some(steps) = steps {
        train.insert("generator_steps".to_string(), steps.into());
    }
    let spec: RunSpec = serde_json::from_value(value)
        .with_context(|| format!("config {} schema", path.display()))?;
    spec.train.validate()?;
    spec.model.validate()?;
    Ok(spec)
}

/// Applies one `a.b.c=VALUE` override. Intermediate segments must
/// already exist; the final key may be inserted so defaulted fields
/// stay settable, and typos there are caught by the schema parse.
fn apply_override(root: &mut serde_json::Value, pair: &str) -> Result<()> {
    let (path, raw) = pair
        .split_once('=')
        .with_context(|| format!("override `{pair}` must look like key.path=value"))?;
    let value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    let (last, parents) = segments.split_last().expect("split always yields one segment");
    let mut cursor = &mut *root;
    for (i, segment) in parents.iter().enumerate() {
        let map = cursor.as_object_mut().with_context(|| {
            format!("config key `{}` is not an object", segments[..i].join("."))
        })?;
        cursor = match map.get_mut(*segment) {
            Some(v) => v,
            None => bail!("unknown config key `{path}`"),
        };
    }
    let map = cursor.as_object_mut().with_context(|| {
        format!("config key `{}` is not an object", parents.join("."))
    })?;
    map.insert((*last).to_string(), value);
    Ok(())
}

/// Resolves a pyramid reference: a bundled name first, else a path to
/// a pyramid table JSON file.
pub fn resolve_pyramid(spec: &str) -> Result<Arc<GraphPyramid>> {
    if let Ok(pyramid) = GraphPyramid::bundled(spec) {
        return Ok(Arc::new(pyramid));
    }
    let text = fs::read_to_string(spec)
        .with_context(|| format!("pyramid `{spec}` is not bundled and not a readable file"))?;
    let table: PyramidTable =
        serde_json::from_str(&text).with_context(|| format!("parsing pyramid table {spec}"))?;
    Ok(Arc::new(GraphPyramid::from_table(&table)?))
}

/// Worker thread count for file-level parallelism: 1 in deterministic
/// mode, else KFORGE_THREADS, else 1. Numerics are single-threaded
/// regardless.
pub fn worker_threads(deterministic: bool) -> usize {
    if deterministic {
        return 1;
    }
    std::env::var("KFORGE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Maps `f` over the items on up to `threads` scoped threads, keeping
/// output order equal to input order.
pub fn parallel_map<I, O, F>(items: Vec<I>, threads: usize, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync,
{
    let n = items.len();
    if threads <= 1 || n <= 1 {
        return items.into_iter().map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut slots: Vec<Option<I>> = items.into_iter().map(Some).collect();
    let mut out: Vec<Option<O>> = std::iter::repeat_with(|| None).take(n).collect();
    let f = &f;
    std::thread::scope(|scope| {
        for (ins, outs) in slots.chunks_mut(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (slot, sink) in ins.iter_mut().zip(outs.iter_mut()) {
                    *sink = Some(f(slot.take().expect("each item taken once")));
                }
            });
        }
    });
    out.into_iter()
        .map(|o| o.expect("worker filled every slot"))
        .collect()
}

/// Writes a pretty-printed JSON value with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> serde_json::Value {
        serde_json::json!({
            "train": {"generator_steps": 4, "batch": 4},
            "model": {
                "pyramid": "h36m15",
                "frames": 16,
                "out_channels": 2,
                "num_classes": 2,
                "latent_dim": 8,
                "mapping_depth": 1,
                "embed_dim": 4,
                "channels": [8, 6],
                "temporal_kernel": 3
            },
            "data": {"synth": {
                "skeleton": "h36m15",
                "channels": 2,
                "frames": 16,
                "per_class": 4,
                "classes": [
                    {"freq_lo": 1.0, "freq_hi": 2.0, "amplitude": 1.0},
                    {"freq_lo": 4.0, "freq_hi": 5.0, "amplitude": 1.0}
                ],
                "noise": 0.02,
                "eval_stride": 4,
                "seed": 3
            }}
        })
    }

    fn write_config(dir: &Path, value: &serde_json::Value) -> std::path::PathBuf {
        let path = dir.join("run.json");
        fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
        path
    }

    #[test]
    fn overrides_rewrite_existing_and_defaulted_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), &base_config());
        let spec = load_spec(
            &path,
            &[
                "train.batch=6".to_string(),
                "train.n_critic=2".to_string(),
                "model.temporal_kernel=5".to_string(),
                "data.synth.seed=9".to_string(),
            ],
            Some(11),
            Some(2),
        )
        .unwrap();
        assert_eq!(spec.train.batch, 6);
        assert_eq!(spec.train.n_critic, 2);
        assert_eq!(spec.train.seed, 11);
        assert_eq!(spec.train.generator_steps, 2);
        assert_eq!(spec.model.temporal_kernel, 5);
        match spec.data {
            DataSpec::Synth(cfg) => assert_eq!(cfg.seed, 9),
            DataSpec::Manifest(_) => panic!("expected synth data"),
        }
    }

    #[test]
    fn misspelled_keys_are_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), &base_config());
        let err = load_spec(&path, &["train.batchh=8".to_string()], None, None)
            .unwrap_err()
            .to_string();
        assert!(format!("{err:#}").contains("schema"), "{err}");
        let err = load_spec(&path, &["trainn.batch=8".to_string()], None, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown config key `trainn.batch`"), "{err}");
        let err = load_spec(&path, &["train.batch".to_string()], None, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("key.path=value"), "{err}");
    }

    #[test]
    fn override_values_parse_as_json_with_string_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config();
        cfg["train"]["dataset"] = serde_json::Value::String(String::new());
        let path = write_config(dir.path(), &cfg);
        let spec = load_spec(
            &path,
            &[
                "train.lambda=2.5".to_string(),
                "train.dataset=walks".to_string(),
                "model.channels=[12,6]".to_string(),
            ],
            None,
            None,
        )
        .unwrap();
        assert_eq!(spec.train.lambda, 2.5);
        assert_eq!(spec.train.dataset, "walks");
        assert_eq!(spec.model.channels, vec![12, 6]);
    }

    #[test]
    fn thread_cap_reads_env_and_deterministic_forces_one() {
        // Runs in one test so the env var never races a sibling test.
        std::env::remove_var("KFORGE_THREADS");
        assert_eq!(worker_threads(false), 1);
        std::env::set_var("KFORGE_THREADS", "3");
        assert_eq!(worker_threads(false), 3);
        assert_eq!(worker_threads(true), 1);
        std::env::set_var("KFORGE_THREADS", "zero");
        assert_eq!(worker_threads(false), 1);
        std::env::remove_var("KFORGE_THREADS");
    }

    #[test]
    fn parallel_map_keeps_input_order() {
        let items: Vec<usize> = (0..23).collect();
        let single = parallel_map(items.clone(), 1, |x| x * x);
        let multi = parallel_map(items, 4, |x| x * x);
        assert_eq!(single, multi);
        assert_eq!(multi[22], 484);
        assert_eq!(parallel_map(Vec::<usize>::new(), 4, |x| x), Vec::<usize>::new());
    }
}
