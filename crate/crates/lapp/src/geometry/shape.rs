//! Convex collision primitives and their world-space (posed) forms.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Quat, Vec3};
use crate::num::Real;

use super::GeometryError;

/// Convex primitive in its local frame.
///
/// * `Sphere` — centered at the origin.
/// * `Capsule` — segment along the local Z axis, `[-half_len, +half_len]`,
///   swept by `radius`.
/// * `Box` — axis-aligned with the given half-extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dims", rename_all = "snake_case")]
pub enum Primitive<S> {
    Sphere { radius: S },
    Capsule { radius: S, half_len: S },
    Box { half_extents: Vec3<S> },
}

impl<S: Real> Primitive<S> {
    /// All dimensions must be strictly positive.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = match *self {
            Primitive::Sphere { radius } => radius > S::zero(),
            Primitive::Capsule { radius, half_len } => radius > S::zero() && half_len > S::zero(),
            Primitive::Box { half_extents } => half_extents.min_component() > S::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidDimensions)
        }
    }

    /// Radius of a bounding sphere in the local frame.
    pub fn bounding_radius(&self) -> S {
        match *self {
            Primitive::Sphere { radius } => radius,
            Primitive::Capsule { radius, half_len } => radius + half_len,
            Primitive::Box { half_extents } => half_extents.norm(),
        }
    }

    /// Largest half-extent of the top-down (XY) footprint, assuming yaw-only
    /// orientation.
    pub fn footprint_radius(&self) -> S {
        match *self {
            Primitive::Sphere { radius } => radius,
            Primitive::Capsule { radius, half_len } => radius + half_len,
            Primitive::Box { half_extents } => (half_extents.x * half_extents.x
                + half_extents.y * half_extents.y)
                .sqrt(),
        }
    }
}

/// Position plus orientation of a primitive in the world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<S> {
    pub pos: Vec3<S>,
    pub orient: Quat<S>,
}

impl<S: Real> Pose<S> {
    pub fn identity() -> Self {
        Self {
            pos: Vec3::zero(),
            orient: Quat::identity(),
        }
    }

    pub fn at(pos: Vec3<S>) -> Self {
        Self {
            pos,
            orient: Quat::identity(),
        }
    }

    pub fn with_yaw(pos: Vec3<S>, yaw: S) -> Self {
        Self {
            pos,
            orient: Quat::from_yaw(yaw),
        }
    }
}

/// A primitive resolved into world coordinates. All distance queries operate
/// on this form; it is also what forward kinematics produces for robot links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorldShape<S> {
    Sphere {
        center: Vec3<S>,
        radius: S,
    },
    Capsule {
        a: Vec3<S>,
        b: Vec3<S>,
        radius: S,
    },
    Box {
        center: Vec3<S>,
        /// world-from-local rotation
        rot: Mat3<S>,
        half: Vec3<S>,
    },
}

impl<S: Real> WorldShape<S> {
    pub fn from_posed(prim: &Primitive<S>, pose: &Pose<S>) -> Self {
        let rot = pose.orient.to_mat3();
        match *prim {
            Primitive::Sphere { radius } => WorldShape::Sphere {
                center: pose.pos,
                radius,
            },
            Primitive::Capsule { radius, half_len } => {
                let axis = rot.mul_vec(Vec3::new(S::zero(), S::zero(), half_len));
                WorldShape::Capsule {
                    a: pose.pos - axis,
                    b: pose.pos + axis,
                    radius,
                }
            }
            Primitive::Box { half_extents } => WorldShape::Box {
                center: pose.pos,
                rot,
                half: half_extents,
            },
        }
    }

    /// Sphere-swept decomposition: the core set (point, segment, or box) and
    /// the sweep radius. Distance between two shapes is the core distance
    /// minus the two radii.
    pub fn sweep_radius(&self) -> S {
        match *self {
            WorldShape::Sphere { radius, .. } | WorldShape::Capsule { radius, .. } => radius,
            WorldShape::Box { .. } => S::zero(),
        }
    }
}
