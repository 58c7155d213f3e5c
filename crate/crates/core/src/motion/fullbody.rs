//! Full-body motion representation: the 51-column matrix used by stage 2.
//!
//! Column layout (fixed):
//!   0..3   root (pelvis) global position
//!   3      continuous root yaw
//!   4..49  root-relative positions of joints 1..15 in skeleton order,
//!          expressed in the root's yaw-aligned frame (3 columns per joint;
//!          joint j occupies columns 4+3*(j-1) .. 4+3*j)
//!   49..51 foot contact flags (left, right) in [0, 1]
//!
//! The keyjoint sub-block (root position, yaw, and the five non-root
//! keyjoints' relative positions) is exactly the root-relative keyjoint
//! trajectory; see [`X_KEYJOINT_COLS`].

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::motion::keyjoint::KEYJOINT_DIM;
use crate::motion::pose::{continuous_yaw, forward_kinematics, MotionSequence, PoseFrame};
use crate::motion::skeleton::{
    Skeleton, CONTACT_HEIGHT_M, CONTACT_SPEED_M_PER_FRAME, JOINT_COUNT,
};
use crate::num::Real;
use crate::vec3::{self, wrap_angle, Vec3};

/// Total feature width of a full-body row.
pub const FULLBODY_DIM: usize = 3 + 1 + 3 * (JOINT_COUNT - 1) + 2;
/// Yaw column index.
pub const X_YAW_COL: usize = 3;
/// First foot-contact column.
pub const X_CONTACT_COL: usize = FULLBODY_DIM - 2;

/// First column of joint `j`'s relative position triple (j >= 1).
pub const fn joint_col(j: usize) -> usize {
    4 + 3 * (j - 1)
}

/// For each of the 19 keyjoint-trajectory columns, the full-body column
/// holding the same quantity (root-relative convention).
pub const X_KEYJOINT_COLS: [usize; KEYJOINT_DIM] = [
    0, 1, 2, // pelvis global position
    10, 11, 12, // head (joint 3)
    19, 20, 21, // left hand (joint 6)
    28, 29, 30, // right hand (joint 9)
    37, 38, 39, // left foot (joint 12)
    46, 47, 48, // right foot (joint 15)
    3,  // yaw
];

#[derive(Debug, Clone, PartialEq)]
pub struct FullBodyRepr<T: Real> {
    /// N x 51 feature matrix.
    pub frames: Array2<T>,
    pub skeleton_id: u32,
    pub fps: T,
    pub action_label: u32,
    pub body_scale: T,
}

impl<T: Real> FullBodyRepr<T> {
    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.ncols() != FULLBODY_DIM {
            return Err(Error::ShapeMismatch {
                context: "full-body representation",
                expected: format!("{FULLBODY_DIM} columns"),
                got: format!("{}", self.frames.ncols()),
            });
        }
        if self.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "full-body representation",
                detail: String::new(),
            });
        }
        for n in 0..self.len() {
            for c in [X_CONTACT_COL, X_CONTACT_COL + 1] {
                let v = self.frames[(n, c)];
                if v < T::zero() || v > T::one() {
                    return Err(Error::InvalidArgument {
                        context: "full-body representation",
                        reason: format!("contact flag {v} at frame {n} outside [0, 1]"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Foot contact per frame: grounded (below the height threshold) and not
/// moving horizontally faster than the skating threshold. The last frame
/// reuses the displacement into it.
fn contact_flags<T: Real>(foot_positions: &[Vec3<T>]) -> Vec<T> {
    let n = foot_positions.len();
    let h_thresh = T::from_f64(CONTACT_HEIGHT_M);
    let v_thresh = T::from_f64(CONTACT_SPEED_M_PER_FRAME);
    let horiz = |a: Vec3<T>, b: Vec3<T>| {
        let dx = a[0] - b[0];
        let dz = a[2] - b[2];
        (dx * dx + dz * dz).sqrt()
    };
    (0..n)
        .map(|i| {
            let disp = if i + 1 < n {
                horiz(foot_positions[i + 1], foot_positions[i])
            } else {
                horiz(foot_positions[i], foot_positions[i - 1])
            };
            if foot_positions[i][1] < h_thresh && disp < v_thresh {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Encode a motion sequence into the 51-column full-body representation.
pub fn encode_fullbody<T: Real>(
    skeleton: &Skeleton<T>,
    seq: &MotionSequence<T>,
) -> Result<FullBodyRepr<T>> {
    seq.validate()?;
    if seq.skeleton_id != skeleton.id {
        return Err(Error::InvalidArgument {
            context: "encode_fullbody",
            reason: format!(
                "sequence skeleton id {} does not match skeleton {}",
                seq.skeleton_id, skeleton.id
            ),
        });
    }
    let n = seq.len();
    let yaw = continuous_yaw(&seq.frames);
    let mut m = Array2::from_elem((n, FULLBODY_DIM), T::zero());
    let mut feet = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for (i, frame) in seq.frames.iter().enumerate() {
        let pos = forward_kinematics(skeleton, frame, seq.body_scale)?;
        m[(i, 0)] = frame.root_position[0];
        m[(i, 1)] = frame.root_position[1];
        m[(i, 2)] = frame.root_position[2];
        m[(i, X_YAW_COL)] = yaw[i];
        for j in 1..JOINT_COUNT {
            // Same arithmetic as `to_root_relative` on FK output, so the
            // keyjoint sub-block matches the converted trajectory bitwise.
            let rel = vec3::rotate_y_inv(vec3::sub(pos[j], frame.root_position), yaw[i]);
            let c = joint_col(j);
            m[(i, c)] = rel[0];
            m[(i, c + 1)] = rel[1];
            m[(i, c + 2)] = rel[2];
        }
        for (f, &joint) in skeleton.foot_indices.iter().enumerate() {
            feet[f].push(pos[joint]);
        }
    }
    for (f, track) in feet.iter().enumerate() {
        let flags = contact_flags(track);
        for (i, &flag) in flags.iter().enumerate() {
            m[(i, X_CONTACT_COL + f)] = flag;
        }
    }
    Ok(FullBodyRepr {
        frames: m,
        skeleton_id: seq.skeleton_id,
        fps: seq.fps,
        action_label: seq.action_label,
        body_scale: seq.body_scale,
    })
}

/// Decode a full-body representation back into a motion sequence.
///
/// Global joint positions of `decode(encode(seq))` match `seq` within 1e-9 m.
pub fn decode_fullbody<T: Real>(
    repr: &FullBodyRepr<T>,
    skeleton: &Skeleton<T>,
) -> Result<MotionSequence<T>> {
    repr.validate()?;
    if repr.skeleton_id != skeleton.id {
        return Err(Error::InvalidArgument {
            context: "decode_fullbody",
            reason: format!(
                "representation skeleton id {} does not match skeleton {}",
                repr.skeleton_id, skeleton.id
            ),
        });
    }
    let n = repr.len();
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let root = [repr.frames[(i, 0)], repr.frames[(i, 1)], repr.frames[(i, 2)]];
        let yaw = wrap_angle(repr.frames[(i, X_YAW_COL)]);
        let rel = |j: usize| -> Vec3<T> {
            if j == 0 {
                [T::zero(); 3]
            } else {
                let c = joint_col(j);
                [
                    repr.frames[(i, c)],
                    repr.frames[(i, c + 1)],
                    repr.frames[(i, c + 2)],
                ]
            }
        };
        let mut local = Vec::with_capacity(JOINT_COUNT - 1);
        for j in 1..JOINT_COUNT {
            let d = vec3::sub(rel(j), rel(skeleton.parent[j]));
            local.push(vec3::scale(d, T::one() / repr.body_scale));
        }
        frames.push(PoseFrame {
            root_position: root,
            root_yaw: yaw,
            local_offsets: local,
        });
    }
    let seq = MotionSequence {
        skeleton_id: repr.skeleton_id,
        fps: repr.fps,
        frames,
        action_label: repr.action_label,
        body_scale: repr.body_scale,
    };
    seq.validate()?;
    Ok(seq)
}
