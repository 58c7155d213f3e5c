//! Plain-text companions to the binary formats: a one-frame-per-line global
//! coordinate dump for inspection, and a per-joint trajectory CSV.

use crate::error::{Error, Result};
use crate::motion::{forward_kinematics, MotionSequence, Skeleton, JOINT_NAMES};

/// One frame per line: comma-separated global joint coordinates
/// (x0,y0,z0,x1,...). Floats use shortest round-trip formatting.
pub fn frames_to_text(skeleton: &Skeleton<f64>, seq: &MotionSequence<f64>) -> Result<String> {
    let mut out = String::new();
    for frame in &seq.frames {
        let pos = forward_kinematics(skeleton, frame, seq.body_scale)?;
        let mut first = true;
        for p in pos {
            for c in p {
                if !first {
                    out.push(',');
                }
                out.push_str(&format!("{c}"));
                first = false;
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Trajectory CSV: `frame, joint_name, x, y, z` rows for all joints, frames
/// 1-indexed.
pub fn trajectory_csv(skeleton: &Skeleton<f64>, seq: &MotionSequence<f64>) -> Result<String> {
    let mut out = String::from("frame,joint_name,x,y,z\n");
    for (i, frame) in seq.frames.iter().enumerate() {
        let pos = forward_kinematics(skeleton, frame, seq.body_scale)?;
        for (j, p) in pos.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                JOINT_NAMES[j],
                p[0],
                p[1],
                p[2]
            ));
        }
    }
    Ok(out)
}

/// Parse the frame text format back into global positions (for tests and
/// tooling; it is not a full inverse of the motion).
pub fn parse_frames_text(text: &str) -> Result<Vec<Vec<[f64; 3]>>> {
    let mut frames = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: bad float {s:?}: {e}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() % 3 != 0 {
            return Err(Error::Format(format!(
                "line {}: expected a multiple of 3 values, got {}",
                lineno + 1,
                vals.len()
            )));
        }
        frames.push(vals.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
    }
    Ok(frames)
}
