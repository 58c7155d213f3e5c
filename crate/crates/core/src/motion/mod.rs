//! Skeleton, pose, and motion representations shared by both stages.

pub mod fullbody;
pub mod keyjoint;
pub mod pose;
pub mod skeleton;

pub use fullbody::{
    decode_fullbody, encode_fullbody, joint_col, FullBodyRepr, FULLBODY_DIM, X_CONTACT_COL,
    X_KEYJOINT_COLS, X_YAW_COL,
};
pub use keyjoint::{
    extract_keyjoints, keyjoint_col, to_global, to_root_relative, CoordinateMode,
    KeyjointTrajectory, KEYJOINT_DIM, YAW_COL,
};
pub use pose::{continuous_yaw, forward_kinematics, MotionSequence, PoseFrame};
pub use skeleton::{
    joints, Skeleton, CONTACT_HEIGHT_M, CONTACT_SPEED_M_PER_FRAME, JOINT_COUNT, JOINT_NAMES,
    KEYJOINT_COUNT, KEYJOINT_NAMES,
};
