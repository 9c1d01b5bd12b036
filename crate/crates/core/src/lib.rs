//! Sidewalk navigation stack.
//!
//! A robot moves between waypoints either by imitating pedestrian groups
//! heading the same way ("group surfing") or, when nobody suitable is in
//! view, by following the curb detected in a 3D point cloud. Every subgoal
//! goes through a socially-aware local collision-avoidance policy. The crate
//! also contains the deterministic 2D simulator and the path-similarity
//! evaluation used to compare robot, pedestrian and shortest paths.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod avoidance;
pub mod config;
pub mod curb;
pub mod evaluation;
pub mod geometry;
pub mod mission;
pub mod scenario;
pub mod surfing;
pub mod tracking;
pub mod world;

pub use geometry::{Point2, Point3, Vec2};
