//! Parser for the NTU-style skeleton text layout.

use std::fs;
use std::path::Path;

use crate::tensor::Tensor;

use super::{DataError, MotionSample};

/// Joint count the text layout carries per body.
pub const LAYOUT_JOINTS: usize = 25;

const SKELETON: &str = "ntu25";

struct Cursor<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines(),
            line_no: 0,
        }
    }

    /// Next non-blank line, or None at end of input.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for line in self.lines.by_ref() {
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Some((self.line_no, line.trim()));
            }
        }
        None
    }
}

/// Action class from a recording name: the last `A<digits>` tag, 1-based
/// in the name, 0-based out. `S001C002P003R002A043` gives 42.
pub fn class_from_name(name: &str) -> Option<usize> {
    let bytes = name.as_bytes();
    let mut found = None;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'A' {
            let start = i + 1;
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end > start {
                if let Ok(v) = name[start..end].parse::<usize>() {
                    found = v.checked_sub(1);
                }
                i = end;
                continue;
            }
        }
        i += 1;
    }
    found
}

/// Parses a skeleton recording file. The class id comes from the file
/// name's action tag; bodies become independent samples.
pub fn parse_skeleton_file(path: &Path) -> Result<Vec<MotionSample>, DataError> {
    let text = fs::read_to_string(path)?;
    parse_skeleton_text(&text, &path.display().to_string())
}

/// Parses the text layout: frame count, then per frame a body count and
/// per body a metadata line, a joint count line reading 25, and one line
/// per joint whose first three fields are the x y z floats.
pub fn parse_skeleton_text(text: &str, provenance: &str) -> Result<Vec<MotionSample>, DataError> {
    let class = class_from_name(
        provenance
            .rsplit(['/', '\\'])
            .next()
            .unwrap_or(provenance),
    )
    .unwrap_or(0);
    let mut cur = Cursor::new(text);

    let frames: usize = match cur.next() {
        Some((line, s)) => s.parse().map_err(|_| DataError::Header {
            line,
            what: format!("frame count is not a number: `{s}`"),
        })?,
        None => {
            return Err(DataError::Header {
                line: 1,
                what: "empty file, expected a frame count".into(),
            })
        }
    };

    // Body slot -> per-frame joint positions, [x, y, z] per joint.
    let mut slots: Vec<Vec<Vec<[f64; 3]>>> = Vec::new();
    for frame in 0..frames {
        let bodies: usize = match cur.next() {
            Some((line, s)) => s.parse().map_err(|_| DataError::Frame {
                frame,
                line,
                what: format!("body count is not a number: `{s}`"),
            })?,
            None => {
                return Err(DataError::Truncated {
                    frame,
                    expected: "a body count line".into(),
                })
            }
        };
        for body in 0..bodies {
            if cur.next().is_none() {
                return Err(DataError::Truncated {
                    frame,
                    expected: format!("the metadata line of body {body}"),
                });
            }
            let joints: usize = match cur.next() {
                Some((line, s)) => s.parse().map_err(|_| DataError::Frame {
                    frame,
                    line,
                    what: format!("joint count is not a number: `{s}`"),
                })?,
                None => {
                    return Err(DataError::Truncated {
                        frame,
                        expected: format!("the joint count line of body {body}"),
                    })
                }
            };
            if joints != LAYOUT_JOINTS {
                let line = cur.line_no;
                return Err(DataError::JointCount {
                    frame,
                    line,
                    got: joints,
                });
            }
            let mut pose = Vec::with_capacity(LAYOUT_JOINTS);
            for joint in 0..LAYOUT_JOINTS {
                let (line, s) = cur.next().ok_or_else(|| DataError::Truncated {
                    frame,
                    expected: format!("joint line {joint} of body {body}"),
                })?;
                let fields: Vec<&str> = s.split_whitespace().collect();
                if fields.len() < 3 {
                    return Err(DataError::Frame {
                        frame,
                        line,
                        what: format!(
                            "joint line has {} fields, expected at least 3",
                            fields.len()
                        ),
                    });
                }
                let mut xyz = [0.0f64; 3];
                for (axis, slot) in xyz.iter_mut().enumerate() {
                    *slot = fields[axis].parse().map_err(|_| DataError::Frame {
                        frame,
                        line,
                        what: format!("unreadable coordinate `{}`", fields[axis]),
                    })?;
                    if !slot.is_finite() {
                        return Err(DataError::Frame {
                            frame,
                            line,
                            what: format!("non-finite coordinate `{}`", fields[axis]),
                        });
                    }
                }
                pose.push(xyz);
            }
            if slots.len() <= body {
                slots.resize_with(body + 1, Vec::new);
            }
            slots[body].push(pose);
        }
    }

    let mut samples = Vec::with_capacity(slots.len());
    for (slot, poses) in slots.into_iter().enumerate() {
        let t = poses.len();
        let mut data = vec![0.0; 3 * t * LAYOUT_JOINTS];
        for (frame, pose) in poses.iter().enumerate() {
            for (j, xyz) in pose.iter().enumerate() {
                for (c, v) in xyz.iter().enumerate() {
                    data[(c * t + frame) * LAYOUT_JOINTS + j] = *v;
                }
            }
        }
        samples.push(MotionSample {
            data: Tensor::from_vec(data, &[3, t, LAYOUT_JOINTS]),
            class,
            skeleton: SKELETON.into(),
            provenance: format!("{provenance}#body{slot}"),
        });
    }
    Ok(samples)
}
