//! Scene representation, procedural scene sampling, prompt resolution, and
//! rasterized observations.

mod classes;
mod prompt;
mod raster;
mod sample;

pub use classes::{ClassShape, ClassSpec, ClassTable};
pub use prompt::{resolve_prompt, AliasTable, LanguagePrompt, Vocabulary};
pub use raster::{rasterize, ObservationGrid};
pub use sample::{sample_scene, SceneSampler};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose, Primitive, WorldShape};
use crate::Vec3;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("class pool is empty")]
    EmptyClassPool,
    #[error("unknown object class `{0}`")]
    UnknownClass(String),
    #[error("object count range must lie within [1, 8] and be non-empty")]
    InvalidObjectRange,
    #[error("workspace too crowded: gave up after {attempts} placement attempts")]
    WorkspaceTooCrowded { attempts: usize },
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("prompt exceeds {max} tokens")]
    PromptTooLong { max: usize },
    #[error("duplicate object id {0}")]
    DuplicateObjectId(u32),
}

/// The eight object colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Yellow,
    Blue,
    Purple,
    Pink,
    Gray,
    Black,
    White,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Yellow,
        Color::Blue,
        Color::Purple,
        Color::Pink,
        Color::Gray,
        Color::Black,
        Color::White,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Pink => "pink",
            Color::Gray => "gray",
            Color::Black => "black",
            Color::White => "white",
        }
    }

    pub fn from_name(s: &str) -> Option<Color> {
        Color::ALL.iter().copied().find(|c| c.name() == s)
    }

    pub fn index(self) -> usize {
        Color::ALL.iter().position(|c| *c == self).unwrap()
    }
}

/// Axis-aligned workspace bounds, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    pub fn desk() -> Self {
        Aabb {
            lo: Vec3::new(-0.85, -0.85, 0.0),
            hi: Vec3::new(0.85, 0.85, 0.5),
        }
    }
}

/// One labeled, colored, posed primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u32,
    #[serde(rename = "class")]
    pub class_name: String,
    pub color: Color,
    pub primitive: Primitive<f64>,
    pub pose: Pose<f64>,
}

impl ObjectInstance {
    pub fn world_shape(&self) -> WorldShape<f64> {
        WorldShape::from_posed(&self.primitive, &self.pose)
    }
}

/// Immutable set of objects plus workspace bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub seed: u64,
    pub workspace: Aabb,
    pub objects: Vec<ObjectInstance>,
}

impl Scene {
    pub fn empty(seed: u64) -> Self {
        Scene {
            seed,
            workspace: Aabb::desk(),
            objects: Vec::new(),
        }
    }

    pub fn object(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn ids(&self) -> BTreeSet<u32> {
        self.objects.iter().map(|o| o.id).collect()
    }

    /// Object ids must be unique and all primitive dimensions positive.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut seen = BTreeSet::new();
        for o in &self.objects {
            if !seen.insert(o.id) {
                return Err(SceneError::DuplicateObjectId(o.id));
            }
            o.primitive
                .validate()
                .map_err(|_| SceneError::UnknownClass(o.class_name.clone()))?;
        }
        Ok(())
    }
}

/// Resolved set of object ids a prompt permits the robot to touch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollidableSet(BTreeSet<u32>);

impl CollidableSet {
    pub fn empty() -> Self {
        CollidableSet(BTreeSet::new())
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        CollidableSet(ids.into_iter().collect())
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.contains(&id)
    }

    pub fn insert(&mut self, id: u32) {
        self.0.insert(id);
    }

    pub fn ids(&self) -> impl Iterator<Item = &u32> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &CollidableSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.0.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_json_round_trip_is_bit_exact() {
        let sampler = SceneSampler::default();
        let scene = sampler
            .sample(42, &["box".into(), "sphere".into(), "long-capsule".into()], (2, 5))
            .unwrap();
        let text = serde_json::to_string(&scene).unwrap();
        let back: Scene = serde_json::from_str(&text).unwrap();
        assert_eq!(scene, back);
        let again = serde_json::to_string(&back).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut scene = Scene::empty(0);
        let obj = ObjectInstance {
            id: 1,
            class_name: "box".into(),
            color: Color::Red,
            primitive: Primitive::Sphere { radius: 0.05 },
            pose: Pose::at(Vec3::new(0.3, 0.3, 0.05)),
        };
        scene.objects.push(obj.clone());
        scene.objects.push(obj);
        assert!(matches!(scene.validate(), Err(SceneError::DuplicateObjectId(1))));
    }
}
