//! Collision checking for long slender manipulator links in Euclidean
//! distance fields.

pub mod bench;
pub mod cli;
pub mod collision;
pub mod field;
pub mod geometry;
pub mod kinematics;
