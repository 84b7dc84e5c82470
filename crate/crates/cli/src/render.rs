//! `kforge render`: draw a sequence JSON file as an SVG frame strip.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use kforge_core::data::{import_sequence, render_svg};

use crate::config;

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Sequence JSON produced by `generate` or exported from a dataset.
    #[arg(long)]
    pub input: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
    /// Draw every stride-th frame.
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
}

pub fn run(args: &RenderArgs) -> Result<()> {
    let sample = import_sequence(&args.input)
        .with_context(|| format!("importing {}", args.input.display()))?;
    config::write_json(
        &PathBuf::from(format!("{}.config.json", args.out.display())),
        &serde_json::json!({
            "command": "render",
            "input": args.input,
            "out": args.out,
            "stride": args.stride,
        }),
    )?;
    render_svg(&sample, &args.out, args.stride)?;
    println!(
        "rendered {} ({} frames, stride {}) to {}",
        args.input.display(),
        sample.frames(),
        args.stride,
        args.out.display()
    );
    Ok(())
}
