//! The learned language-conditioned collision function: tokenizers for
//! observation, prompt, and state; a small transformer; and two prediction
//! heads (language-conditioned and unconditional). Trained from scratch with
//! hand-written reverse-mode gradients.

mod adam;
mod checkpoint;
mod input;
mod layers;
mod loss;
mod net;
mod train;

pub use adam::Adam;
pub use checkpoint::{load_model, save_model, CheckpointExtras};
pub use input::{pad_prompt, sparse_patches, state_features, ModelSample, SampleSet, SparseObs};
pub use loss::{bce, loss_pair};
pub use net::{CollisionModel, ForwardCache};
pub use train::{train, LogRow, TrainConfig, TrainOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in parameter block `{block}` at step {step}")]
    NonFinite { block: String, step: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Architecture hyperparameters. The desk defaults keep training to minutes
/// on one core; the sizes from the original large-scale configuration are
/// available through [`ModelConfig::paper_scale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub obs_h: usize,
    pub obs_w: usize,
    pub obs_channels: usize,
    /// Patch edge length in cells.
    pub patch: usize,
    pub dof: usize,
    /// Joint limits, used to normalize state features.
    pub limits: Vec<(f64, f64)>,
    pub vocab: usize,
    pub pad_id: u16,
    /// Fixed number of prompt token slots (padded).
    pub prompt_len: usize,
    /// Token dimension.
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_hidden: usize,
    pub state_hidden: [usize; 3],
    pub head_hidden: [usize; 2],
}

impl ModelConfig {
    pub fn desk(obs_channels: usize, dof: usize, limits: Vec<(f64, f64)>, vocab: usize, pad_id: u16) -> Self {
        ModelConfig {
            obs_h: 64,
            obs_w: 64,
            obs_channels,
            patch: 8,
            dof,
            limits,
            vocab,
            pad_id,
            prompt_len: 12,
            dim: 64,
            layers: 2,
            heads: 4,
            ffn_hidden: 256,
            state_hidden: [256, 256, 256],
            head_hidden: [64, 32],
        }
    }

    /// Tiny configuration for gradient checking.
    pub fn tiny(obs_channels: usize, dof: usize, limits: Vec<(f64, f64)>, vocab: usize, pad_id: u16) -> Self {
        ModelConfig {
            obs_h: 16,
            obs_w: 16,
            obs_channels,
            patch: 8,
            dof,
            limits,
            vocab,
            pad_id,
            prompt_len: 4,
            dim: 16,
            layers: 1,
            heads: 2,
            ffn_hidden: 32,
            state_hidden: [32, 32, 32],
            head_hidden: [16, 8],
        }
    }

    /// The large-scale reference configuration (token dim 768, 16 heads,
    /// state MLP 3x4096, heads (512, 256)). Not intended for desk training.
    pub fn paper_scale(obs_channels: usize, dof: usize, limits: Vec<(f64, f64)>, vocab: usize, pad_id: u16) -> Self {
        ModelConfig {
            obs_h: 64,
            obs_w: 64,
            obs_channels,
            patch: 8,
            dof,
            limits,
            vocab,
            pad_id,
            prompt_len: 12,
            dim: 768,
            layers: 4,
            heads: 16,
            ffn_hidden: 3072,
            state_hidden: [4096, 4096, 4096],
            head_hidden: [512, 256],
        }
    }

    pub fn n_patches(&self) -> usize {
        (self.obs_h / self.patch) * (self.obs_w / self.patch)
    }

    pub fn patch_dim(&self) -> usize {
        self.patch * self.patch * self.obs_channels
    }

    /// Total sequence length: visual tokens, prompt slots, one state token.
    pub fn n_tokens(&self) -> usize {
        self.n_patches() + self.prompt_len + 1
    }

    pub fn state_in(&self) -> usize {
        3 * self.dof
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.obs_h % self.patch != 0 || self.obs_w % self.patch != 0 {
            return Err(ModelError::ShapeMismatch(
                "observation resolution must be a multiple of the patch size".into(),
            ));
        }
        if self.dim % self.heads != 0 {
            return Err(ModelError::ShapeMismatch(
                "token dimension must divide evenly among heads".into(),
            ));
        }
        if self.limits.len() != self.dof {
            return Err(ModelError::ShapeMismatch("limits/dof mismatch".into()));
        }
        Ok(())
    }
}
