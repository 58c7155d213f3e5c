//! Keyjoint trajectories: the 19-column low-dimensional motion representation.
//!
//! Column layout (fixed): six keyjoints ordered as
//! `pelvis, head, left_hand, right_hand, left_foot, right_foot`, three global
//! coordinates each (columns `3k..3k+3`), then the continuous root yaw in
//! column 18.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::motion::pose::{continuous_yaw, forward_kinematics, MotionSequence};
use crate::motion::skeleton::{Skeleton, KEYJOINT_COUNT};
use crate::num::Real;
use crate::vec3::{self, Vec3};

/// Total feature width of a keyjoint trajectory row.
pub const KEYJOINT_DIM: usize = 3 * KEYJOINT_COUNT + 1;
/// Column holding the root yaw.
pub const YAW_COL: usize = KEYJOINT_DIM - 1;

/// First column of keyjoint `k`'s position triple.
pub const fn keyjoint_col(k: usize) -> usize {
    3 * k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateMode {
    /// Positions in world coordinates.
    Global,
    /// Non-root keyjoints in the pelvis's yaw-aligned frame; pelvis columns
    /// keep the global position and the yaw column is unchanged.
    RootRelative,
}

impl CoordinateMode {
    pub fn name(self) -> &'static str {
        match self {
            CoordinateMode::Global => "GLOBAL",
            CoordinateMode::RootRelative => "ROOT_RELATIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyjointTrajectory<T: Real> {
    /// N x 19 feature matrix.
    pub frames: Array2<T>,
    pub mode: CoordinateMode,
}

impl<T: Real> KeyjointTrajectory<T> {
    pub fn new(frames: Array2<T>, mode: CoordinateMode) -> Result<Self> {
        if frames.ncols() != KEYJOINT_DIM {
            return Err(Error::ShapeMismatch {
                context: "keyjoint trajectory",
                expected: format!("{KEYJOINT_DIM} columns"),
                got: format!("{}", frames.ncols()),
            });
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "keyjoint trajectory",
                detail: String::new(),
            });
        }
        Ok(KeyjointTrajectory { frames, mode })
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    /// Position triple of keyjoint `k` at frame `n`.
    pub fn position(&self, n: usize, k: usize) -> Vec3<T> {
        let c = keyjoint_col(k);
        [
            self.frames[(n, c)],
            self.frames[(n, c + 1)],
            self.frames[(n, c + 2)],
        ]
    }

    pub fn set_position(&mut self, n: usize, k: usize, p: Vec3<T>) {
        let c = keyjoint_col(k);
        self.frames[(n, c)] = p[0];
        self.frames[(n, c + 1)] = p[1];
        self.frames[(n, c + 2)] = p[2];
    }

    pub fn yaw(&self, n: usize) -> T {
        self.frames[(n, YAW_COL)]
    }
}

/// Global keyjoint trajectory of a motion sequence: forward-kinematics
/// positions of the six keyjoints plus the continuous root yaw.
pub fn extract_keyjoints<T: Real>(
    skeleton: &Skeleton<T>,
    seq: &MotionSequence<T>,
) -> Result<KeyjointTrajectory<T>> {
    seq.validate()?;
    let n = seq.len();
    let yaw = continuous_yaw(&seq.frames);
    let mut m = Array2::from_elem((n, KEYJOINT_DIM), T::zero());
    for (i, frame) in seq.frames.iter().enumerate() {
        let pos = forward_kinematics(skeleton, frame, seq.body_scale)?;
        for (k, &j) in skeleton.keyjoint_indices.iter().enumerate() {
            let c = keyjoint_col(k);
            m[(i, c)] = pos[j][0];
            m[(i, c + 1)] = pos[j][1];
            m[(i, c + 2)] = pos[j][2];
        }
        m[(i, YAW_COL)] = yaw[i];
    }
    KeyjointTrajectory::new(m, CoordinateMode::Global)
}

/// Express non-root keyjoints in the pelvis's yaw-aligned frame.
///
/// Pelvis columns and the yaw column pass through bitwise, so the transform
/// is invertible given the same pelvis data.
pub fn to_root_relative<T: Real>(c: &KeyjointTrajectory<T>) -> Result<KeyjointTrajectory<T>> {
    if c.mode != CoordinateMode::Global {
        return Err(Error::ModeMismatch {
            expected: "GLOBAL",
            got: c.mode.name(),
            hint: "trajectory is already root-relative",
        });
    }
    let mut out = c.frames.clone();
    for n in 0..c.len() {
        let pelvis = c.position(n, 0);
        let yaw = c.yaw(n);
        for k in 1..KEYJOINT_COUNT {
            let rel = vec3::rotate_y_inv(vec3::sub(c.position(n, k), pelvis), yaw);
            let col = keyjoint_col(k);
            out[(n, col)] = rel[0];
            out[(n, col + 1)] = rel[1];
            out[(n, col + 2)] = rel[2];
        }
    }
    KeyjointTrajectory::new(out, CoordinateMode::RootRelative)
}

/// Inverse of [`to_root_relative`].
pub fn to_global<T: Real>(c: &KeyjointTrajectory<T>) -> Result<KeyjointTrajectory<T>> {
    if c.mode != CoordinateMode::RootRelative {
        return Err(Error::ModeMismatch {
            expected: "ROOT_RELATIVE",
            got: c.mode.name(),
            hint: "trajectory is already global",
        });
    }
    let mut out = c.frames.clone();
    for n in 0..c.len() {
        let pelvis = c.position(n, 0);
        let yaw = c.yaw(n);
        for k in 1..KEYJOINT_COUNT {
            let glob = vec3::add(pelvis, vec3::rotate_y(c.position(n, k), yaw));
            let col = keyjoint_col(k);
            out[(n, col)] = glob[0];
            out[(n, col + 1)] = glob[1];
            out[(n, col + 2)] = glob[2];
        }
    }
    KeyjointTrajectory::new(out, CoordinateMode::Global)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::pose::PoseFrame;
    use std::f64::consts::PI;

    fn standing_sequence(n: usize) -> (Skeleton<f64>, MotionSequence<f64>) {
        let s = Skeleton::canonical();
        let h = s.rest_pelvis_height();
        let frames = (0..n)
            .map(|_| PoseFrame::rest(&s, [0.0, h, 0.0], 0.0))
            .collect();
        let seq = MotionSequence {
            skeleton_id: s.id,
            fps: 20.0,
            frames,
            action_label: 0,
            body_scale: 1.0,
        };
        (s, seq)
    }

    #[test]
    fn standing_pelvis_columns_hold_rest_height() {
        let (s, seq) = standing_sequence(4);
        let c = extract_keyjoints(&s, &seq).unwrap();
        assert_eq!(c.mode, CoordinateMode::Global);
        for n in 0..4 {
            let p = c.position(n, 0);
            assert_eq!(p, [0.0, 0.90, 0.0]);
        }
    }

    #[test]
    fn translation_shifts_positions_not_yaw() {
        let (s, mut seq) = standing_sequence(4);
        let c0 = extract_keyjoints(&s, &seq).unwrap();
        for f in seq.frames.iter_mut() {
            f.root_position = vec3::add(f.root_position, [0.5, 0.1, -2.0]);
        }
        let c1 = extract_keyjoints(&s, &seq).unwrap();
        for n in 0..4 {
            for k in 0..KEYJOINT_COUNT {
                let a = c0.position(n, k);
                let b = c1.position(n, k);
                assert!((b[0] - (a[0] + 0.5)).abs() < 1e-12);
                assert!((b[1] - (a[1] + 0.1)).abs() < 1e-12);
                assert!((b[2] - (a[2] - 2.0)).abs() < 1e-12);
            }
            assert_eq!(c1.yaw(n), c0.yaw(n));
        }
    }

    #[test]
    fn yaw_column_is_bitwise_passthrough() {
        let (s, mut seq) = standing_sequence(6);
        for (i, f) in seq.frames.iter_mut().enumerate() {
            f.root_yaw = -1.0 + 0.37 * i as f64;
        }
        let c = extract_keyjoints(&s, &seq).unwrap();
        for (i, f) in seq.frames.iter().enumerate() {
            assert_eq!(c.yaw(i).to_bits(), f.root_yaw.to_bits());
        }
    }

    #[test]
    fn root_relative_with_zero_yaw_is_difference() {
        let (s, seq) = standing_sequence(3);
        let c = extract_keyjoints(&s, &seq).unwrap();
        let r = to_root_relative(&c).unwrap();
        for k in 1..KEYJOINT_COUNT {
            let g = c.position(0, k);
            let p = c.position(0, 0);
            let rel = r.position(0, k);
            for d in 0..3 {
                assert!((rel[d] - (g[d] - p[d])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quarter_yaw_rotates_relative_coordinates() {
        let (s, mut seq) = standing_sequence(2);
        for f in seq.frames.iter_mut() {
            f.root_yaw = PI / 2.0;
        }
        // Hand 1 m ahead of the pelvis in world space (+z is ahead at yaw 0,
        // but at yaw pi/2 "ahead" is +x).
        let c = extract_keyjoints(&s, &seq).unwrap();
        let mut c2 = c.clone();
        let pelvis = c.position(0, 0);
        c2.set_position(0, 2, vec3::add(pelvis, [1.0, 0.0, 0.0]));
        let r = to_root_relative(&c2).unwrap();
        let rel = r.position(0, 2);
        // World +x expressed in a frame rotated by pi/2 becomes +z.
        assert!(rel[0].abs() < 1e-12);
        assert!((rel[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_global_relative() {
        let (s, mut seq) = standing_sequence(5);
        for (i, f) in seq.frames.iter_mut().enumerate() {
            f.root_yaw = 0.3 * i as f64 - 0.7;
            f.root_position = [0.1 * i as f64, 0.9, -0.2 * i as f64];
        }
        let c = extract_keyjoints(&s, &seq).unwrap();
        let back = to_global(&to_root_relative(&c).unwrap()).unwrap();
        for (a, b) in c.frames.iter().zip(back.frames.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_mismatch_rejected() {
        let (s, seq) = standing_sequence(3);
        let c = extract_keyjoints(&s, &seq).unwrap();
        let r = to_root_relative(&c).unwrap();
        assert!(to_root_relative(&r).is_err());
        assert!(to_global(&c).is_err());
    }
}
