//! Rejection-sampled procedural scenes.

use rand::Rng as _;

use crate::geometry::{distance, WorldShape};
use crate::rng::stream_rng;
use crate::Vec3;

use super::classes::{resting_pose, ClassTable};
use super::{Aabb, Color, ObjectInstance, Scene, SceneError};

const SCENE_STREAM: u64 = 0x5ce4e;

/// Scene sampler configuration. Objects are rejection-sampled until no pair
/// interpenetrates; a keep-out capsule around the robot mount stays clear so
/// the base link is never buried inside an object.
#[derive(Debug, Clone)]
pub struct SceneSampler {
    pub table: ClassTable,
    pub workspace: Aabb,
    /// Fraction window of each class dimension range to draw from.
    pub dim_window: (f64, f64),
    /// Minimum pairwise surface gap between placed objects, meters.
    pub min_gap: f64,
    /// Clearance around the robot mount.
    pub base_keepout: Option<WorldShape<f64>>,
    /// Margin between object footprints and the workspace walls.
    pub wall_margin: f64,
    /// Placement attempts per object before giving up.
    pub max_attempts: usize,
}

impl Default for SceneSampler {
    fn default() -> Self {
        SceneSampler {
            table: ClassTable::default_desk(),
            workspace: Aabb::desk(),
            dim_window: (0.0, 0.7),
            min_gap: 0.005,
            base_keepout: Some(WorldShape::Capsule {
                a: Vec3::new(0.0, 0.0, 0.0),
                b: Vec3::new(0.0, 0.0, 0.25),
                radius: 0.075,
            }),
            wall_margin: 0.02,
            max_attempts: 300,
        }
    }
}

impl SceneSampler {
    /// Deterministic scene draw: identical `(seed, pool, range)` inputs give
    /// byte-identical scenes.
    pub fn sample(
        &self,
        seed: u64,
        class_pool: &[String],
        n_objects_range: (usize, usize),
    ) -> Result<Scene, SceneError> {
        if class_pool.is_empty() {
            return Err(SceneError::EmptyClassPool);
        }
        for name in class_pool {
            if self.table.get(name).is_none() {
                return Err(SceneError::UnknownClass(name.clone()));
            }
        }
        let (lo, hi) = n_objects_range;
        if lo < 1 || hi > 8 || lo > hi {
            return Err(SceneError::InvalidObjectRange);
        }

        let mut rng = stream_rng(seed, SCENE_STREAM);
        let n = rng.gen_range(lo..=hi);
        let mut objects: Vec<ObjectInstance> = Vec::with_capacity(n);

        for id in 0..n as u32 {
            let mut placed = false;
            for _ in 0..self.max_attempts {
                let spec = self.table.get(&class_pool[rng.gen_range(0..class_pool.len())]).unwrap();
                let color = Color::ALL[rng.gen_range(0..Color::ALL.len())];
                let (prim, rest_z, orient) = self.table.sample_instance(spec, &mut rng, self.dim_window);
                let fp = prim.footprint_radius() + self.wall_margin;
                let (wlo, whi) = (self.workspace.lo, self.workspace.hi);
                if whi.x - wlo.x <= 2.0 * fp || whi.y - wlo.y <= 2.0 * fp {
                    continue;
                }
                let x = rng.gen_range(wlo.x + fp..whi.x - fp);
                let y = rng.gen_range(wlo.y + fp..whi.y - fp);
                let candidate = ObjectInstance {
                    id,
                    class_name: spec.name.clone(),
                    color,
                    primitive: prim,
                    pose: resting_pose((x, y), rest_z, orient),
                };
                let shape = candidate.world_shape();
                let clear_of_objects = objects
                    .iter()
                    .all(|o| distance(&shape, &o.world_shape()) > self.min_gap);
                let clear_of_base = self
                    .base_keepout
                    .as_ref()
                    .map_or(true, |k| distance(&shape, k) > 0.0);
                if clear_of_objects && clear_of_base {
                    objects.push(candidate);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(SceneError::WorkspaceTooCrowded {
                    attempts: self.max_attempts,
                });
            }
        }

        Ok(Scene {
            seed,
            workspace: self.workspace,
            objects,
        })
    }
}

/// Sample a scene with the desk-scale defaults.
pub fn sample_scene(
    rng_seed: u64,
    class_pool: &[String],
    n_objects_range: (usize, usize),
) -> Result<Scene, SceneError> {
    SceneSampler::default().sample(rng_seed, class_pool, n_objects_range)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn forced_count_is_respected() {
        let s = sample_scene(7, &pool(&["box", "sphere"]), (2, 2)).unwrap();
        assert_eq!(s.objects.len(), 2);
        s.validate().unwrap();
    }

    #[test]
    fn same_seed_same_scene() {
        let a = sample_scene(123, &pool(&["box", "sphere", "capsule"]), (2, 5)).unwrap();
        let b = sample_scene(123, &pool(&["box", "sphere", "capsule"]), (2, 5)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(matches!(sample_scene(1, &[], (2, 3)), Err(SceneError::EmptyClassPool)));
    }

    #[test]
    fn bad_range_rejected() {
        let p = pool(&["box"]);
        assert!(matches!(sample_scene(1, &p, (0, 2)), Err(SceneError::InvalidObjectRange)));
        assert!(matches!(sample_scene(1, &p, (2, 9)), Err(SceneError::InvalidObjectRange)));
        assert!(matches!(sample_scene(1, &p, (4, 2)), Err(SceneError::InvalidObjectRange)));
    }

    #[test]
    fn generated_objects_never_interpenetrate() {
        let p = pool(&["box", "tall-box", "sphere", "long-capsule", "capsule"]);
        for seed in 0..40u64 {
            let s = sample_scene(seed, &p, (2, 5)).unwrap();
            for i in 0..s.objects.len() {
                for j in (i + 1)..s.objects.len() {
                    let d = distance(&s.objects[i].world_shape(), &s.objects[j].world_shape());
                    assert!(d > 0.0, "seed {seed}: pair ({i},{j}) d={d}");
                }
            }
        }
    }
}
