//! Serial-chain kinematics with capsule link geometry.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::math::{Iso3, Mat3, Vec3};
use crate::num::Real;
use crate::rng::Rng;

use super::shape::WorldShape;
use super::GeometryError;

/// One revolute joint: rotation about `axis` applied after the fixed
/// `parent_offset` transform from the previous joint frame.
#[derive(Debug, Clone)]
pub struct JointSpec<S> {
    pub axis: Vec3<S>,
    pub parent_offset: Iso3<S>,
    /// (low, high) position limits in radians, low < high.
    pub limits: (S, S),
}

/// Capsule rigidly attached to a joint frame.
#[derive(Debug, Clone)]
pub struct LinkCapsule<S> {
    pub joint: usize,
    pub a: Vec3<S>,
    pub b: Vec3<S>,
    pub radius: S,
}

/// Kinematic chain plus collision geometry.
#[derive(Debug, Clone)]
pub struct RobotModel<S> {
    pub name: String,
    pub base: Iso3<S>,
    pub joints: Vec<JointSpec<S>>,
    pub links: Vec<LinkCapsule<S>>,
}

/// Configuration vector, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState(pub Vec<f64>);

/// A link capsule resolved into the world frame.
#[derive(Debug, Clone, Copy)]
pub struct PosedLink<S> {
    pub link: usize,
    pub shape: WorldShape<S>,
}

impl<S: Real> RobotModel<S> {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.links.is_empty() {
            return Err(GeometryError::InvalidRobot("no link capsules"));
        }
        for j in &self.joints {
            if j.limits.0 >= j.limits.1 {
                return Err(GeometryError::InvalidRobot("joint limits not well-ordered"));
            }
        }
        for l in &self.links {
            if l.joint >= self.joints.len() {
                return Err(GeometryError::InvalidRobot("link attached to unknown joint"));
            }
        }
        Ok(())
    }

    /// World frame of every joint at configuration `q`.
    pub fn joint_frames(&self, q: &[S]) -> Result<Vec<Iso3<S>>, GeometryError> {
        if q.len() != self.dof() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        let mut frames = Vec::with_capacity(self.joints.len());
        let mut cur = self.base;
        for (spec, &qi) in self.joints.iter().zip(q) {
            let spin = Iso3::new(Mat3::from_axis_angle(spec.axis, qi), Vec3::zero());
            cur = cur.compose(spec.parent_offset).compose(spin);
            frames.push(cur);
        }
        Ok(frames)
    }

    /// Forward kinematics: every link capsule posed in the world frame.
    pub fn link_capsules(&self, q: &[S]) -> Result<Vec<PosedLink<S>>, GeometryError> {
        let frames = self.joint_frames(q)?;
        Ok(self.link_capsules_from_frames(&frames))
    }

    pub fn link_capsules_from_frames(&self, frames: &[Iso3<S>]) -> Vec<PosedLink<S>> {
        self.links
            .iter()
            .enumerate()
            .map(|(i, l)| PosedLink {
                link: i,
                shape: WorldShape::Capsule {
                    a: frames[l.joint].transform_point(l.a),
                    b: frames[l.joint].transform_point(l.b),
                    radius: l.radius,
                },
            })
            .collect()
    }

    /// End-effector: tip of the last link capsule.
    pub fn end_effector(&self, q: &[S]) -> Result<Vec3<S>, GeometryError> {
        let frames = self.joint_frames(q)?;
        let last = self.links.last().expect("validated robot has links");
        Ok(frames[last.joint].transform_point(last.b))
    }

    /// Velocity of a world point rigidly attached to `link` per unit joint
    /// velocity: column `j` is `axis_j x (p - origin_j)` for joints at or
    /// before the link's joint, zero after.
    pub fn point_jacobian(&self, frames: &[Iso3<S>], link: usize, p: Vec3<S>) -> Vec<Vec3<S>> {
        let attached = self.links[link].joint;
        let mut cols = Vec::with_capacity(self.joints.len());
        for (j, spec) in self.joints.iter().enumerate() {
            if j <= attached {
                let axis_world = frames[j].transform_vector(spec.axis);
                cols.push(axis_world.cross(p - frames[j].trans));
            } else {
                cols.push(Vec3::zero());
            }
        }
        cols
    }

    pub fn limits(&self) -> Vec<(f64, f64)> {
        self.joints
            .iter()
            .map(|j| (j.limits.0.to_f64v(), j.limits.1.to_f64v()))
            .collect()
    }

    pub fn in_limits(&self, q: &[S]) -> bool {
        q.len() == self.dof()
            && self
                .joints
                .iter()
                .zip(q)
                .all(|(j, &qi)| qi >= j.limits.0 && qi <= j.limits.1)
    }

    /// Uniform configuration sample within limits.
    pub fn sample_q(&self, rng: &mut Rng) -> Vec<S> {
        self.joints
            .iter()
            .map(|j| {
                let u: f64 = rng.gen_range(0.0..1.0);
                j.limits.0 + (j.limits.1 - j.limits.0) * S::of(u)
            })
            .collect()
    }

    /// Planar 3-DOF preset: all axes vertical, links along local X, operating
    /// in the plane z = 0.07 m. Reach 0.75 m.
    pub fn planar_three() -> Self {
        let z = Vec3::new(S::zero(), S::zero(), S::one());
        let seg =
            |x: f64| Iso3::new(Mat3::identity(), Vec3::of(x, 0.0, 0.0));
        let link = |joint: usize, len: f64, r: f64| LinkCapsule {
            joint,
            a: Vec3::zero(),
            b: Vec3::of(len, 0.0, 0.0),
            radius: S::of(r),
        };
        RobotModel {
            name: "planar3".into(),
            base: Iso3::new(Mat3::identity(), Vec3::of(0.0, 0.0, 0.07)),
            joints: vec![
                JointSpec {
                    axis: z,
                    parent_offset: Iso3::identity(),
                    limits: (S::of(-std::f64::consts::PI), S::of(std::f64::consts::PI)),
                },
                JointSpec {
                    axis: z,
                    parent_offset: seg(0.30),
                    limits: (S::of(-2.7), S::of(2.7)),
                },
                JointSpec {
                    axis: z,
                    parent_offset: seg(0.25),
                    limits: (S::of(-2.7), S::of(2.7)),
                },
            ],
            links: vec![link(0, 0.30, 0.035), link(1, 0.25, 0.032), link(2, 0.20, 0.030)],
        }
    }

    /// 7-DOF serial chain preset with alternating vertical/lateral axes.
    /// Stand-in dimensions; not calibrated to any specific arm.
    pub fn seven_dof() -> Self {
        let z = Vec3::new(S::zero(), S::zero(), S::one());
        let y = Vec3::new(S::zero(), S::one(), S::zero());
        let up = |dz: f64| Iso3::new(Mat3::identity(), Vec3::of(0.0, 0.0, dz));
        let lim = |l: f64, h: f64| (S::of(l), S::of(h));
        let vlink = |joint: usize, len: f64, r: f64| LinkCapsule {
            joint,
            a: Vec3::zero(),
            b: Vec3::of(0.0, 0.0, len),
            radius: S::of(r),
        };
        RobotModel {
            name: "seven_dof".into(),
            base: Iso3::identity(),
            joints: vec![
                JointSpec { axis: z, parent_offset: up(0.16), limits: lim(-3.1, 3.1) },
                JointSpec { axis: y, parent_offset: up(0.12), limits: lim(-2.0, 2.0) },
                JointSpec { axis: z, parent_offset: up(0.20), limits: lim(-3.1, 3.1) },
                JointSpec { axis: y, parent_offset: up(0.13), limits: lim(-2.2, 2.2) },
                JointSpec { axis: z, parent_offset: up(0.18), limits: lim(-3.1, 3.1) },
                JointSpec { axis: y, parent_offset: up(0.11), limits: lim(-2.0, 2.0) },
                JointSpec { axis: z, parent_offset: up(0.09), limits: lim(-3.1, 3.1) },
            ],
            links: vec![
                vlink(0, 0.12, 0.055),
                vlink(1, 0.20, 0.050),
                vlink(2, 0.13, 0.048),
                vlink(3, 0.18, 0.045),
                vlink(4, 0.11, 0.042),
                vlink(5, 0.09, 0.040),
                vlink(6, 0.07, 0.035),
            ],
        }
    }

    /// Look up a preset by name.
    pub fn preset(name: &str) -> Result<Self, GeometryError> {
        match name {
            "planar3" => Ok(Self::planar_three()),
            "seven_dof" => Ok(Self::seven_dof()),
            _ => Err(GeometryError::UnknownPreset(name.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_zero_config_points_along_x() {
        let r = RobotModel::<f64>::planar_three();
        let ee = r.end_effector(&[0.0, 0.0, 0.0]).unwrap();
        assert!((ee.x - 0.75).abs() < 1e-12);
        assert!(ee.y.abs() < 1e-12);
        let caps = r.link_capsules(&[0.0, 0.0, 0.0]).unwrap();
        for c in &caps {
            if let WorldShape::Capsule { a, b, .. } = c.shape {
                assert!(a.y.abs() < 1e-12 && b.y.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn planar_quarter_turn() {
        let r = RobotModel::<f64>::planar_three();
        let ee = r.end_effector(&[std::f64::consts::FRAC_PI_2, 0.0, 0.0]).unwrap();
        assert!(ee.x.abs() < 1e-12, "x = {}", ee.x);
        assert!((ee.y - 0.75).abs() < 1e-12, "y = {}", ee.y);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let r = RobotModel::<f64>::planar_three();
        assert!(matches!(
            r.joint_frames(&[0.0, 0.0]),
            Err(GeometryError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn presets_validate() {
        RobotModel::<f64>::planar_three().validate().unwrap();
        RobotModel::<f64>::seven_dof().validate().unwrap();
    }

    #[test]
    fn inter_link_distances_configuration_independent() {
        // Rigid-body invariant: distances between consecutive link midpoints
        // along the chain do not depend on q.
        let r = RobotModel::<f64>::seven_dof();
        let mut rng = crate::rng::stream_rng(11, 0);
        let probe = |q: &[f64]| -> Vec<f64> {
            let caps = r.link_capsules(q).unwrap();
            caps.windows(2)
                .map(|w| match (w[0].shape, w[1].shape) {
                    (
                        WorldShape::Capsule { a: a0, b: b0, .. },
                        WorldShape::Capsule { a: a1, b: b1, .. },
                    ) => ((a0 + b0) * 0.5 - (a1 + b1) * 0.5).norm(),
                    _ => unreachable!(),
                })
                .collect()
        };
        let base = probe(&vec![0.0; 7]);
        for _ in 0..10 {
            let q = r.sample_q(&mut rng);
            for (a, b) in base.iter().zip(probe(&q)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
