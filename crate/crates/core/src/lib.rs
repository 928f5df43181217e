//! Kinematics, pose validation and the command-link codec for a desk-scale
//! five-joint arm.

pub mod batch;
pub mod config;
pub mod kinematics;
pub mod protocol;
mod transform;
pub mod workspace;

pub use kinematics::{
    fk_full, fk_position, ik_solve, roundtrip_validate, Angle, IkError, IkSolution, JointAngles,
    LinkLengths, ToolPosition, Transform4,
};
pub use workspace::{JointLimits, Scene, ValidityReport, Violation, ViolationKind};
