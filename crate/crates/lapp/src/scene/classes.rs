//! Procedural object class families: each class names a primitive kind plus
//! a dimension distribution. Eight classes are used for training scenes and
//! five are held out for generalization evaluation.

use rand::Rng as _;

use crate::geometry::{Pose, Primitive};
use crate::math::{Quat, Vec3};
use crate::rng::Rng;

/// Dimension ranges for one class family. Capsules are split by resting
/// orientation: vertical capsules stand on the table, horizontal ones lie on
/// it with a random yaw.
#[derive(Debug, Clone)]
pub enum ClassShape {
    Sphere { r: (f64, f64) },
    VerticalCapsule { r: (f64, f64), hl: (f64, f64) },
    HorizontalCapsule { r: (f64, f64), hl: (f64, f64) },
    Box { hx: (f64, f64), hy: (f64, f64), hz: (f64, f64) },
}

#[derive(Debug, Clone)]
pub struct ClassSpec {
    pub name: String,
    pub held_out: bool,
    pub shape: ClassShape,
}

/// The configured class vocabulary, in channel order.
#[derive(Debug, Clone)]
pub struct ClassTable {
    pub classes: Vec<ClassSpec>,
}

fn draw(rng: &mut Rng, range: (f64, f64), window: (f64, f64)) -> f64 {
    let span = range.1 - range.0;
    let lo = range.0 + span * window.0;
    let hi = range.0 + span * window.1;
    rng.gen_range(lo..=hi)
}

impl ClassTable {
    /// Desk-scale default: 8 training classes, 5 held-out classes.
    pub fn default_desk() -> Self {
        use ClassShape::*;
        let t = |name: &str, shape: ClassShape| ClassSpec {
            name: name.to_string(),
            held_out: false,
            shape,
        };
        let h = |name: &str, shape: ClassShape| ClassSpec {
            name: name.to_string(),
            held_out: true,
            shape,
        };
        ClassTable {
            classes: vec![
                t("box", Box { hx: (0.045, 0.075), hy: (0.045, 0.075), hz: (0.06, 0.10) }),
                t("tall-box", Box { hx: (0.030, 0.050), hy: (0.030, 0.050), hz: (0.12, 0.18) }),
                t("flat-box", Box { hx: (0.065, 0.105), hy: (0.065, 0.105), hz: (0.050, 0.065) }),
                t("plate-box", Box { hx: (0.080, 0.120), hy: (0.030, 0.050), hz: (0.050, 0.080) }),
                t("sphere", Sphere { r: (0.055, 0.085) }),
                t("small-sphere", Sphere { r: (0.042, 0.055) }),
                t("capsule", VerticalCapsule { r: (0.040, 0.060), hl: (0.050, 0.090) }),
                t("long-capsule", HorizontalCapsule { r: (0.048, 0.065), hl: (0.070, 0.120) }),
                h("crate-box", Box { hx: (0.055, 0.085), hy: (0.055, 0.085), hz: (0.09, 0.13) }),
                h("slab-box", Box { hx: (0.090, 0.130), hy: (0.040, 0.060), hz: (0.06, 0.09) }),
                h("orb-sphere", Sphere { r: (0.060, 0.090) }),
                h("rod-capsule", HorizontalCapsule { r: (0.042, 0.055), hl: (0.090, 0.140) }),
                h("stub-capsule", VerticalCapsule { r: (0.050, 0.070), hl: (0.030, 0.060) }),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn names(&self, held_out: bool) -> Vec<String> {
        self.classes
            .iter()
            .filter(|c| c.held_out == held_out)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn train_names(&self) -> Vec<String> {
        self.names(false)
    }

    pub fn held_out_names(&self) -> Vec<String> {
        self.names(true)
    }

    /// Sample a primitive plus its resting pose contribution (z height and
    /// yaw) for a class. `window` restricts every dimension range to a
    /// sub-interval expressed in fractions of the full range; training draws
    /// use the lower window, "unseen object" evaluation draws the upper one.
    pub fn sample_instance(
        &self,
        spec: &ClassSpec,
        rng: &mut Rng,
        window: (f64, f64),
    ) -> (Primitive<f64>, f64, Quat<f64>) {
        match spec.shape {
            ClassShape::Sphere { r } => {
                let radius = draw(rng, r, window);
                (Primitive::Sphere { radius }, radius, Quat::identity())
            }
            ClassShape::VerticalCapsule { r, hl } => {
                let radius = draw(rng, r, window);
                let half_len = draw(rng, hl, window);
                (
                    Primitive::Capsule { radius, half_len },
                    half_len + radius,
                    Quat::identity(),
                )
            }
            ClassShape::HorizontalCapsule { r, hl } => {
                let radius = draw(rng, r, window);
                let half_len = draw(rng, hl, window);
                let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                // tip the local z axis into the table plane, then yaw
                let tip = Quat::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), std::f64::consts::FRAC_PI_2);
                let q = compose_quat(Quat::from_yaw(yaw), tip);
                (Primitive::Capsule { radius, half_len }, radius, q)
            }
            ClassShape::Box { hx, hy, hz } => {
                let half = Vec3::new(draw(rng, hx, window), draw(rng, hy, window), draw(rng, hz, window));
                let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                (
                    Primitive::Box { half_extents: half },
                    half.z,
                    Quat::from_yaw(yaw),
                )
            }
        }
    }
}

fn compose_quat(a: Quat<f64>, b: Quat<f64>) -> Quat<f64> {
    Quat {
        w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    }
}

/// Resting pose for a sampled instance.
pub fn resting_pose(pos_xy: (f64, f64), rest_z: f64, orient: Quat<f64>) -> Pose<f64> {
    Pose {
        pos: Vec3::new(pos_xy.0, pos_xy.1, rest_z),
        orient,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WorldShape;
    use crate::rng::stream_rng;

    #[test]
    fn default_table_split_sizes() {
        let t = ClassTable::default_desk();
        assert_eq!(t.train_names().len(), 8);
        assert_eq!(t.held_out_names().len(), 5);
        assert!(t.get("box").is_some());
        assert!(t.get("crate-box").unwrap().held_out);
    }

    #[test]
    fn horizontal_capsule_lies_in_plane() {
        let t = ClassTable::default_desk();
        let spec = t.get("long-capsule").unwrap();
        let mut rng = stream_rng(3, 0);
        let (prim, rest_z, orient) = t.sample_instance(spec, &mut rng, (0.0, 1.0));
        let pose = resting_pose((0.2, 0.1), rest_z, orient);
        if let WorldShape::Capsule { a, b, .. } = WorldShape::from_posed(&prim, &pose) {
            assert!((a.z - b.z).abs() < 1e-12, "axis should be horizontal");
            assert!((a.z - rest_z).abs() < 1e-12);
        } else {
            panic!("expected capsule");
        }
    }

    #[test]
    fn dimension_window_restricts_draws() {
        let t = ClassTable::default_desk();
        let spec = t.get("sphere").unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let (prim, _, _) = t.sample_instance(spec, &mut rng, (0.0, 0.7));
            if let Primitive::Sphere { radius } = prim {
                assert!(radius <= 0.055 + 0.7 * (0.085 - 0.055) + 1e-12);
            }
        }
    }
}
