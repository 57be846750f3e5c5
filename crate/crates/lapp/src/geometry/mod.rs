//! Forward kinematics and the analytic ground-truth collision oracle:
//! unconditional `C(o, s)` and language-masked `C(o, s, l)`.

mod distance;
mod robot;
mod shape;

pub use distance::{distance, distance_witness, Witness};
pub use robot::{JointSpec, JointState, LinkCapsule, PosedLink, RobotModel};
pub use shape::{Pose, Primitive, WorldShape};

use thiserror::Error;

use crate::scene::{CollidableSet, Scene};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("configuration has {got} joints, robot expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("primitive dimensions must be strictly positive")]
    InvalidDimensions,
    #[error("invalid robot model: {0}")]
    InvalidRobot(&'static str),
    #[error("unknown robot preset `{0}`")]
    UnknownPreset(String),
    #[error("mask references unknown object id {0}")]
    UnknownObjectId(u32),
}

/// Witness object id reported when the minimum is a workspace-bound
/// violation rather than an object contact.
pub const WORKSPACE_ID: u32 = u32::MAX;

/// Outcome of a collision query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionResult {
    pub colliding: bool,
    /// Signed distance of the closest checked pair, meters.
    pub min_distance: f64,
    /// `(link index, object id)` achieving the minimum; `None` for an empty
    /// scene inside workspace bounds.
    pub witness: Option<(usize, u32)>,
}

/// Clearance of a link capsule to the workspace box walls (negative once the
/// swept capsule pokes outside). The table surface is the z lower bound.
fn workspace_clearance(shape: &WorldShape<f64>, lo: crate::Vec3, hi: crate::Vec3) -> f64 {
    let (a, b, r) = match *shape {
        WorldShape::Capsule { a, b, radius } => (a, b, radius),
        WorldShape::Sphere { center, radius } => (center, center, radius),
        WorldShape::Box { center, .. } => (center, center, 0.0),
    };
    let mut clear = f64::INFINITY;
    for (pa, pb, l, h) in [
        (a.x, b.x, lo.x, hi.x),
        (a.y, b.y, lo.y, hi.y),
        (a.z, b.z, lo.z, hi.z),
    ] {
        clear = clear.min(pa.min(pb) - l - r).min(h - pa.max(pb) - r);
    }
    clear
}

/// Unconditional collision check `C(o, s)`: true iff any link touches any
/// object or exits the workspace bounds.
pub fn collide(scene: &Scene, robot: &RobotModel<f64>, q: &[f64]) -> Result<CollisionResult, GeometryError> {
    collide_masked(scene, robot, q, &CollidableSet::empty())
}

/// Language-masked collision check `C(o, s, l)`: identical to [`collide`] on
/// the scene with the masked objects removed. Workspace bounds are never
/// maskable.
pub fn collide_masked(
    scene: &Scene,
    robot: &RobotModel<f64>,
    q: &[f64],
    mask: &CollidableSet,
) -> Result<CollisionResult, GeometryError> {
    for &id in mask.ids() {
        if scene.object(id).is_none() {
            return Err(GeometryError::UnknownObjectId(id));
        }
    }
    let links = robot.link_capsules(q)?;

    let mut min_d = f64::INFINITY;
    let mut witness = None;
    for link in &links {
        let clear = workspace_clearance(&link.shape, scene.workspace.lo, scene.workspace.hi);
        if clear < min_d {
            min_d = clear;
            witness = Some((link.link, WORKSPACE_ID));
        }
        for obj in &scene.objects {
            if mask.contains(obj.id) {
                continue;
            }
            let d = distance(&link.shape, &obj.world_shape());
            if d < min_d {
                min_d = d;
                witness = Some((link.link, obj.id));
            }
        }
    }
    Ok(CollisionResult {
        colliding: min_d <= 0.0,
        min_distance: min_d,
        witness,
    })
}

/// Minimum signed link-object distance over non-masked objects, plus its
/// gradient with respect to the configuration.
///
/// Workspace bounds are excluded here: with no (unmasked) objects the result
/// is the `+inf` sentinel with a zero gradient. The gradient uses the
/// witness-point method on the active pair (ties broken by smallest
/// `(link, object id)`), falling back to central finite differences when the
/// minimum is degenerate.
pub fn min_signed_distance(
    scene: &Scene,
    robot: &RobotModel<f64>,
    q: &[f64],
    mask: &CollidableSet,
) -> Result<(f64, Vec<f64>), GeometryError> {
    for &id in mask.ids() {
        if scene.object(id).is_none() {
            return Err(GeometryError::UnknownObjectId(id));
        }
    }
    let frames = robot.joint_frames(q)?;
    let links = robot.link_capsules_from_frames(&frames);

    let mut best: Option<(f64, usize, u32, Witness<f64>)> = None;
    let mut second = f64::INFINITY;
    for link in &links {
        for obj in &scene.objects {
            if mask.contains(obj.id) {
                continue;
            }
            let w = distance_witness(&link.shape, &obj.world_shape());
            match &best {
                Some((d, ..)) if w.dist >= *d => {
                    if w.dist < second {
                        second = w.dist;
                    }
                }
                _ => {
                    if let Some((d, ..)) = &best {
                        second = *d;
                    }
                    best = Some((w.dist, link.link, obj.id, w));
                }
            }
        }
    }

    let Some((d, link, _obj, w)) = best else {
        return Ok((f64::INFINITY, vec![0.0; robot.dof()]));
    };

    let near_tie = second - d < 1e-9;
    if w.degenerate || near_tie {
        // central finite differences of the min-distance field
        let h = 1e-5;
        let mut grad = vec![0.0; robot.dof()];
        let mut qp = q.to_vec();
        for (j, g) in grad.iter_mut().enumerate() {
            qp[j] = q[j] + h;
            let dp = min_only(scene, robot, &qp, mask)?;
            qp[j] = q[j] - h;
            let dm = min_only(scene, robot, &qp, mask)?;
            qp[j] = q[j];
            *g = (dp - dm) / (2.0 * h);
        }
        return Ok((d, grad));
    }

    let jac = robot.point_jacobian(&frames, link, w.on_a);
    let grad = jac.iter().map(|col| w.normal.dot(*col)).collect();
    Ok((d, grad))
}

fn min_only(
    scene: &Scene,
    robot: &RobotModel<f64>,
    q: &[f64],
    mask: &CollidableSet,
) -> Result<f64, GeometryError> {
    let links = robot.link_capsules(q)?;
    let mut min_d = f64::INFINITY;
    for link in &links {
        for obj in &scene.objects {
            if mask.contains(obj.id) {
                continue;
            }
            min_d = min_d.min(distance(&link.shape, &obj.world_shape()));
        }
    }
    Ok(min_d)
}
