//! Wireframe strip rendering of motion sequences as SVG 1.1.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{bundled_skeleton, DataError, MotionSample};

const PANEL_W: f64 = 180.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 14.0;
/// Oblique projection shear applied to the depth axis of 3-D samples.
const DEPTH_SHEAR: f64 = 0.35;

/// Renders every `stride`-th frame as a joint-and-bone wireframe panel,
/// resolving bones from the sample's bundled skeleton.
pub fn render_svg(sample: &MotionSample, path: &Path, stride: usize) -> Result<(), DataError> {
    let spec = bundled_skeleton(&sample.skeleton)?;
    render_svg_with_edges(sample, &spec.edges, path, stride)
}

/// As [`render_svg`] with explicit bone edges.
pub fn render_svg_with_edges(
    sample: &MotionSample,
    edges: &[(usize, usize)],
    path: &Path,
    stride: usize,
) -> Result<(), DataError> {
    let svg = svg_strip(sample, edges, stride)?;
    fs::write(path, svg)?;
    Ok(())
}

/// Projects a frame to 2-D: planar samples draw as stored, 3-D samples
/// through an oblique shear. SVG grows downward, so y flips.
fn project(sample: &MotionSample, t: usize, j: usize) -> (f64, f64) {
    let x = sample.value(0, t, j);
    let y = sample.value(1, t, j);
    if sample.channels() == 2 {
        (x, -y)
    } else {
        let z = sample.value(2, t, j);
        (x + DEPTH_SHEAR * z, -(y + DEPTH_SHEAR * z))
    }
}

/// Builds the SVG document. Output bytes are a pure function of the
/// inputs: fixed iteration order, fixed decimal formatting.
pub fn svg_strip(
    sample: &MotionSample,
    edges: &[(usize, usize)],
    stride: usize,
) -> Result<String, DataError> {
    if stride == 0 {
        return Err(DataError::Config("stride must be at least 1".into()));
    }
    let (t, n, c) = (sample.frames(), sample.joints(), sample.channels());
    if t == 0 {
        return Err(DataError::Config("cannot render a zero-frame sequence".into()));
    }
    if c < 2 || c > 3 {
        return Err(DataError::Config(format!(
            "rendering expects 2 or 3 channels, sample has {c}"
        )));
    }
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(DataError::Config(format!(
                "edge ({a}, {b}) is out of range for {n} joints"
            )));
        }
    }

    let frames: Vec<usize> = (0..t).step_by(stride).collect();
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &f in &frames {
        for j in 0..n {
            let (x, y) = project(sample, f, j);
            min = (min.0.min(x), min.1.min(y));
            max = (max.0.max(x), max.1.max(y));
        }
    }
    let extent = |lo: f64, hi: f64| if hi - lo > 1e-9 { hi - lo } else { 1.0 };
    let (dx, dy) = (extent(min.0, max.0), extent(min.1, max.1));
    let inner = (PANEL_W - 2.0 * MARGIN, PANEL_H - 2.0 * MARGIN);
    let scale = (inner.0 / dx).min(inner.1 / dy);
    let center = (
        (inner.0 - dx * scale) / 2.0 + MARGIN,
        (inner.1 - dy * scale) / 2.0 + MARGIN,
    );

    let width = PANEL_W * frames.len() as f64;
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width:.0}\" height=\"{PANEL_H:.0}\" \
         viewBox=\"0 0 {width:.0} {PANEL_H:.0}\">\n"
    );
    for (panel, &f) in frames.iter().enumerate() {
        let ox = panel as f64 * PANEL_W;
        let place = |j: usize| {
            let (x, y) = project(sample, f, j);
            (
                ox + center.0 + (x - min.0) * scale,
                center.1 + (y - min.1) * scale,
            )
        };
        let _ = write!(svg, "<g class=\"frame\">\n");
        let _ = write!(
            svg,
            "<rect x=\"{:.3}\" y=\"1\" width=\"{:.3}\" height=\"{:.3}\" \
             fill=\"none\" stroke=\"#ccc\" stroke-width=\"1\"/>\n",
            ox + 1.0,
            PANEL_W - 2.0,
            PANEL_H - 2.0
        );
        let _ = write!(
            svg,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" \
             font-size=\"9\" fill=\"#888\">t={f}</text>\n",
            ox + 5.0,
            PANEL_H - 6.0
        );
        for &(a, b) in edges {
            let (xa, ya) = place(a);
            let (xb, yb) = place(b);
            let _ = write!(
                svg,
                "<line x1=\"{xa:.3}\" y1=\"{ya:.3}\" x2=\"{xb:.3}\" y2=\"{yb:.3}\" \
                 stroke=\"#456\" stroke-width=\"1.5\"/>\n"
            );
        }
        for j in 0..n {
            let (x, y) = place(j);
            let _ = write!(
                svg,
                "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2.2\" fill=\"#c33\"/>\n"
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
