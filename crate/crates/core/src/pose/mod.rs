//! Pose representations: quaternion and exponential-map algebra, Z-X-Y Euler
//! angles, skeletons with forward kinematics, and pose sequences.

mod euler;
mod quaternion;
mod sequence;
mod skeleton;

pub use euler::{euler_to_rotmat, rotmat_to_euler, wrap_angle, EulerTriple, EULER_ORDER};
pub use quaternion::{
    expmap_to_quat, quat_conjugate, quat_multiply, quat_rotate_vector, quat_to_expmap, quat_to_rotmat, ExpMapVector,
    Quaternion, RotationMatrix, UNIT_TOLERANCE,
};
pub use sequence::{
    expmap_matrix_to_euler, expmap_row_to_euler, PoseSequence, Representation, BENCHMARK_ANGLE_DIMS,
    BENCHMARK_POSITION_DIMS,
};
pub use skeleton::{center_and_normalize, forward_kinematics, forward_kinematics_with, Joint, RootRotation, Skeleton};
