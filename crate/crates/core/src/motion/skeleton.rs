//! Fixed 16-joint humanoid skeleton.
//!
//! Joint order is topological (parent before child). The root is the pelvis;
//! all other joints carry a rest offset from their parent, expressed in the
//! root's yaw-aligned frame with y up. Six keyjoints (pelvis, head, hands,
//! feet) form the low-dimensional trajectory representation.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::vec3::{self, Vec3};

pub const JOINT_COUNT: usize = 16;
pub const KEYJOINT_COUNT: usize = 6;

/// Height of a grounded foot below which it is considered in contact, meters.
pub const CONTACT_HEIGHT_M: f64 = 0.05;
/// Horizontal displacement per frame above which a grounded foot is skating,
/// meters per frame.
pub const CONTACT_SPEED_M_PER_FRAME: f64 = 0.01;

/// Canonical joint indices.
pub mod joints {
    pub const PELVIS: usize = 0;
    pub const SPINE_LOWER: usize = 1;
    pub const SPINE_UPPER: usize = 2;
    pub const HEAD: usize = 3;
    pub const L_SHOULDER: usize = 4;
    pub const L_ELBOW: usize = 5;
    pub const L_HAND: usize = 6;
    pub const R_SHOULDER: usize = 7;
    pub const R_ELBOW: usize = 8;
    pub const R_HAND: usize = 9;
    pub const L_HIP: usize = 10;
    pub const L_KNEE: usize = 11;
    pub const L_FOOT: usize = 12;
    pub const R_HIP: usize = 13;
    pub const R_KNEE: usize = 14;
    pub const R_FOOT: usize = 15;
}

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "pelvis",
    "spine_lower",
    "spine_upper",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_hand",
    "right_shoulder",
    "right_elbow",
    "right_hand",
    "left_hip",
    "left_knee",
    "left_foot",
    "right_hip",
    "right_knee",
    "right_foot",
];

/// Keyjoint order used by every 19-column trajectory matrix.
pub const KEYJOINT_NAMES: [&str; KEYJOINT_COUNT] = [
    "pelvis",
    "head",
    "left_hand",
    "right_hand",
    "left_foot",
    "right_foot",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton<T: Real> {
    pub id: u32,
    /// Parent index per joint; the root points at itself.
    pub parent: Vec<usize>,
    /// Rest offset from parent per joint, meters; zero for the root.
    pub offset: Vec<Vec3<T>>,
    pub keyjoint_indices: [usize; KEYJOINT_COUNT],
    pub foot_indices: [usize; 2],
}

impl<T: Real> Skeleton<T> {
    /// The canonical 16-joint humanoid used across the project.
    ///
    /// Standing rest pose: pelvis at 0.90 m, feet exactly on the ground,
    /// hands hanging at 0.81 m, head at 1.55 m.
    pub fn canonical() -> Self {
        use joints::*;
        let mut parent = vec![0usize; JOINT_COUNT];
        let mut offset = vec![[0.0f64; 3]; JOINT_COUNT];
        let mut set = |j: usize, p: usize, o: [f64; 3]| {
            parent[j] = p;
            offset[j] = o;
        };
        set(PELVIS, PELVIS, [0.0, 0.0, 0.0]);
        set(SPINE_LOWER, PELVIS, [0.0, 0.20, 0.0]);
        set(SPINE_UPPER, SPINE_LOWER, [0.0, 0.20, 0.0]);
        set(HEAD, SPINE_UPPER, [0.0, 0.25, 0.0]);
        set(L_SHOULDER, SPINE_UPPER, [0.20, 0.05, 0.0]);
        set(L_ELBOW, L_SHOULDER, [0.0, -0.28, 0.0]);
        set(L_HAND, L_ELBOW, [0.0, -0.26, 0.0]);
        set(R_SHOULDER, SPINE_UPPER, [-0.20, 0.05, 0.0]);
        set(R_ELBOW, R_SHOULDER, [0.0, -0.28, 0.0]);
        set(R_HAND, R_ELBOW, [0.0, -0.26, 0.0]);
        set(L_HIP, PELVIS, [0.10, -0.05, 0.0]);
        set(L_KNEE, L_HIP, [0.0, -0.40, 0.0]);
        set(L_FOOT, L_KNEE, [0.0, -0.45, 0.0]);
        set(R_HIP, PELVIS, [-0.10, -0.05, 0.0]);
        set(R_KNEE, R_HIP, [0.0, -0.40, 0.0]);
        set(R_FOOT, R_KNEE, [0.0, -0.45, 0.0]);

        let skeleton = Skeleton {
            id: 1,
            parent,
            offset: offset
                .into_iter()
                .map(|o| [T::from_f64(o[0]), T::from_f64(o[1]), T::from_f64(o[2])])
                .collect(),
            keyjoint_indices: [PELVIS, HEAD, L_HAND, R_HAND, L_FOOT, R_FOOT],
            foot_indices: [L_FOOT, R_FOOT],
        };
        skeleton.validate().expect("canonical skeleton is valid");
        skeleton
    }

    pub fn joint_count(&self) -> usize {
        self.parent.len()
    }

    /// Rest pelvis height above ground (feet at rest define the ground).
    pub fn rest_pelvis_height(&self) -> T {
        let rest = self.rest_accumulated();
        -rest[self.foot_indices[0]][1]
    }

    /// Accumulated rest offsets from the root per joint.
    pub fn rest_accumulated(&self) -> Vec<Vec3<T>> {
        let mut acc = vec![[T::zero(); 3]; self.joint_count()];
        for j in 1..self.joint_count() {
            acc[j] = vec3::add(acc[self.parent[j]], self.offset[j]);
        }
        acc
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.parent.len();
        if n != self.offset.len() {
            return Err(Error::ShapeMismatch {
                context: "skeleton",
                expected: format!("{n} offsets"),
                got: format!("{}", self.offset.len()),
            });
        }
        let mut roots = 0usize;
        for (j, &p) in self.parent.iter().enumerate() {
            if p == j {
                roots += 1;
            } else if p >= j {
                return Err(Error::InvalidArgument {
                    context: "skeleton",
                    reason: format!("parent[{j}]={p} is not topologically ordered"),
                });
            }
        }
        if roots != 1 || self.parent[0] != 0 {
            return Err(Error::InvalidArgument {
                context: "skeleton",
                reason: format!("expected a single root at index 0, found {roots} roots"),
            });
        }
        let mut seen = vec![false; n];
        for &k in &self.keyjoint_indices {
            if k >= n || seen[k] {
                return Err(Error::InvalidArgument {
                    context: "skeleton",
                    reason: format!("keyjoint index {k} out of range or duplicated"),
                });
            }
            seen[k] = true;
        }
        if !seen[0] {
            return Err(Error::InvalidArgument {
                context: "skeleton",
                reason: "keyjoints must include the root".into(),
            });
        }
        for (j, o) in self.offset.iter().enumerate() {
            if !vec3::is_finite(*o) {
                return Err(Error::NonFinite {
                    context: "skeleton offset",
                    detail: format!("joint {j}"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_is_16_joints_with_grounded_feet() {
        let s: Skeleton<f64> = Skeleton::canonical();
        assert_eq!(s.joint_count(), JOINT_COUNT);
        assert_eq!(s.rest_pelvis_height(), 0.90);
        let acc = s.rest_accumulated();
        assert_eq!(acc[joints::L_FOOT][1], -0.90);
        assert_eq!(acc[joints::R_FOOT][1], -0.90);
        assert_eq!(acc[joints::HEAD][1], 0.65);
    }

    #[test]
    fn rejects_cyclic_parent() {
        let mut s: Skeleton<f64> = Skeleton::canonical();
        s.parent[2] = 5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_duplicate_keyjoints() {
        let mut s: Skeleton<f64> = Skeleton::canonical();
        s.keyjoint_indices[1] = 0;
        assert!(s.validate().is_err());
    }
}
