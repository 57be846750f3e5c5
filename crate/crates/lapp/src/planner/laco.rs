//! Adapter exposing the learned collision model as a planner query: binary
//! decisions threshold the collision probability at 0.5, and the surrogate
//! signed distance `0.5 - p` provides finite-difference gradients for the
//! trajectory optimizer.

use crate::model::{sparse_patches, CollisionModel, ModelError, SparseObs};
use crate::scene::{rasterize, ClassTable, LanguagePrompt, Scene};

use super::CollisionQuery;

pub struct LacoQuery<'a> {
    model: &'a CollisionModel<f32>,
    obs: SparseObs,
    prompt: Vec<u16>,
    /// Central-difference step for surrogate gradients, radians.
    pub fd_step: f64,
}

impl<'a> LacoQuery<'a> {
    /// Rasterize the scene once at the model's resolution and fix the
    /// prompt; per-configuration queries then reuse the observation tokens.
    pub fn new(
        model: &'a CollisionModel<f32>,
        scene: &Scene,
        table: &ClassTable,
        prompt: &LanguagePrompt,
    ) -> Result<Self, ModelError> {
        let cfg = &model.config;
        let grid = rasterize(scene, table, cfg.obs_h, cfg.obs_w);
        if grid.channels != cfg.obs_channels {
            return Err(ModelError::ShapeMismatch(
                "class table channel count differs from the model".into(),
            ));
        }
        let obs = sparse_patches(&grid, cfg.patch);
        // fail now if the prompt cannot fit the model's slots
        crate::model::pad_prompt(&prompt.tokens, cfg.prompt_len, cfg.pad_id)
            .ok_or_else(|| ModelError::ShapeMismatch("prompt too long for model".into()))?;
        Ok(LacoQuery {
            model,
            obs,
            prompt: prompt.tokens.clone(),
            fd_step: 1e-3,
        })
    }

    /// Language-conditioned collision probability at `q`.
    pub fn probability(&self, q: &[f64]) -> f64 {
        self.model
            .forward_prepared(&self.obs, q, &self.prompt)
            .expect("query inputs validated at construction")
            .0
    }
}

impl CollisionQuery for LacoQuery<'_> {
    fn colliding(&self, q: &[f64]) -> bool {
        self.probability(q) > 0.5
    }

    fn distance_and_grad(&self, q: &[f64]) -> Option<(f64, Vec<f64>)> {
        let p = self.probability(q);
        let d = 0.5 - p;
        let mut grad = vec![0.0; q.len()];
        let mut qp = q.to_vec();
        for (j, g) in grad.iter_mut().enumerate() {
            qp[j] = q[j] + self.fd_step;
            let ph = self.probability(&qp);
            qp[j] = q[j] - self.fd_step;
            let pl = self.probability(&qp);
            qp[j] = q[j];
            *g = -(ph - pl) / (2.0 * self.fd_step);
        }
        Some((d, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::scene::AliasTable;

    #[test]
    fn threshold_semantics_at_half() {
        // an untrained model emits exactly 0.5, which is "not colliding"
        let table = ClassTable::default_desk();
        let channels = table.len() + 8;
        let cfg = ModelConfig::tiny(channels, 3, vec![(-3.0, 3.0); 3], 30, 29);
        let model = CollisionModel::<f32>::new(cfg, 1).unwrap();
        let mut scene = Scene::empty(0);
        scene.workspace = crate::scene::Aabb::desk();
        let vocab = crate::scene::Vocabulary::for_scene(&scene, &AliasTable::empty());
        let prompt = LanguagePrompt::tokenize("", &vocab).unwrap();
        let q = LacoQuery::new(&model, &scene, &table, &prompt).unwrap();
        assert!(!q.colliding(&[0.0, 0.0, 0.0]));
        let (d, g) = q.distance_and_grad(&[0.0, 0.0, 0.0]).unwrap();
        assert!((d - 0.0).abs() < 1e-6);
        assert_eq!(g.len(), 3);
    }
}
