//! Language-conditioned path planning toolkit.
//!
//! The crate bundles everything needed to study collision checking that can
//! be modulated by a language prompt: an analytic scene/robot collision
//! oracle, two motion planners (sampling-based and sequential-convex), a
//! synthetic dataset generator, a small trainable collision-prediction
//! network, and an evaluation harness that scores the learned model against
//! the oracle.
//!
//! Core numeric code is generic over the scalar type (see [`num::Real`]);
//! the aliases below fix the concrete types used throughout the toolkit:
//! world geometry in `f64`, network weights in `f32`.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod math;
pub mod model;
pub mod num;
pub mod planner;
pub mod qp;
pub mod rng;
pub mod scene;
pub mod tensor;

/// World-space vector, meters.
pub type Vec3 = math::Vec3<f64>;
/// World-space rotation.
pub type Mat3 = math::Mat3<f64>;
/// Rigid transform (rotation + translation).
pub type Iso3 = math::Iso3<f64>;
/// Unit quaternion used for object orientations.
pub type Quat = math::Quat<f64>;
/// Convex collision primitive with `f64` dimensions.
pub type Primitive = geometry::Primitive<f64>;
/// Object/robot pose.
pub type Pose = geometry::Pose<f64>;
/// Kinematic chain with capsule link geometry.
pub type RobotModel = geometry::RobotModel<f64>;
/// Network activation/parameter tensor (row-major `f32`).
pub type Tensor = tensor::Tensor<f32>;
/// The trained collision-prediction network at inference precision.
pub type CollisionModel = model::CollisionModel<f32>;
