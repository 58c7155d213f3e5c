//! Pose frames, motion sequences, and forward kinematics.

use crate::error::{Error, Result};
use crate::motion::skeleton::Skeleton;
use crate::num::Real;
use crate::vec3::{self, Vec3};

/// One frame of motion: global root transform plus per-joint offsets from
/// the parent joint, expressed in the root's yaw-aligned frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame<T: Real> {
    pub root_position: Vec3<T>,
    /// Rotation about y, radians, wrapped to (-pi, pi].
    pub root_yaw: T,
    /// One offset per non-root joint, in skeleton joint order.
    pub local_offsets: Vec<Vec3<T>>,
}

impl<T: Real> PoseFrame<T> {
    /// Identity rest pose at the given root position.
    pub fn rest(skeleton: &Skeleton<T>, root_position: Vec3<T>, root_yaw: T) -> Self {
        PoseFrame {
            root_position,
            root_yaw,
            local_offsets: skeleton.offset[1..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        vec3::is_finite(self.root_position)
            && self.root_yaw.is_finite()
            && self.local_offsets.iter().all(|o| vec3::is_finite(*o))
    }
}

/// An ordered sequence of pose frames for one skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence<T: Real> {
    pub skeleton_id: u32,
    /// Frames per second; the project-wide data rate is 20.
    pub fps: T,
    pub frames: Vec<PoseFrame<T>>,
    pub action_label: u32,
    /// Unitless multiplier on skeleton offsets, in [0.5, 1.5].
    pub body_scale: T,
}

impl<T: Real> MotionSequence<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::InvalidArgument {
                context: "motion sequence",
                reason: format!("need at least 2 frames, got {}", self.frames.len()),
            });
        }
        if !(self.fps > T::zero()) {
            return Err(Error::InvalidArgument {
                context: "motion sequence",
                reason: "fps must be positive".into(),
            });
        }
        let lo = T::from_f64(0.5);
        let hi = T::from_f64(1.5);
        if !(self.body_scale >= lo && self.body_scale <= hi) {
            return Err(Error::InvalidArgument {
                context: "motion sequence",
                reason: format!("body_scale {} outside [0.5, 1.5]", self.body_scale),
            });
        }
        for (i, f) in self.frames.iter().enumerate() {
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    context: "motion sequence",
                    detail: format!("frame {i}"),
                });
            }
        }
        Ok(())
    }
}

/// Global joint positions for one frame.
///
/// The root lands exactly on `frame.root_position`; every other joint is the
/// root position plus the yaw-rotated, scale-multiplied accumulated offsets
/// along its parent chain.
pub fn forward_kinematics<T: Real>(
    skeleton: &Skeleton<T>,
    frame: &PoseFrame<T>,
    body_scale: T,
) -> Result<Vec<Vec3<T>>> {
    if !frame.is_finite() || !body_scale.is_finite() {
        return Err(Error::NonFinite {
            context: "forward kinematics input",
            detail: String::new(),
        });
    }
    let n = skeleton.joint_count();
    if frame.local_offsets.len() != n - 1 {
        return Err(Error::ShapeMismatch {
            context: "forward kinematics",
            expected: format!("{} local offsets", n - 1),
            got: format!("{}", frame.local_offsets.len()),
        });
    }
    let mut acc = vec![[T::zero(); 3]; n];
    for j in 1..n {
        acc[j] = vec3::add(
            acc[skeleton.parent[j]],
            vec3::scale(frame.local_offsets[j - 1], body_scale),
        );
    }
    let mut out = Vec::with_capacity(n);
    out.push(frame.root_position);
    for item in acc.iter().take(n).skip(1) {
        out.push(vec3::add(
            frame.root_position,
            vec3::rotate_y(*item, frame.root_yaw),
        ));
    }
    Ok(out)
}

/// Continuous yaw track for a sequence: equals each frame's wrapped yaw plus
/// an integer number of full turns so consecutive values never jump by more
/// than pi. Sequences that never cross the +-pi seam pass through unchanged.
pub fn continuous_yaw<T: Real>(frames: &[PoseFrame<T>]) -> Vec<T> {
    let pi = T::from_f64(std::f64::consts::PI);
    let tau = T::from_f64(std::f64::consts::TAU);
    let mut turns: i64 = 0;
    let mut out = Vec::with_capacity(frames.len());
    let mut prev = T::zero();
    for (i, f) in frames.iter().enumerate() {
        if i > 0 {
            let diff = f.root_yaw - prev;
            if diff > pi {
                turns -= 1;
            } else if diff < -pi {
                turns += 1;
            }
        }
        prev = f.root_yaw;
        if turns == 0 {
            out.push(f.root_yaw);
        } else {
            out.push(f.root_yaw + tau * T::from_f64(turns as f64));
        }
    }
    out
}
