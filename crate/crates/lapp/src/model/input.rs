//! Input preparation: sparse patch extraction from observation grids, state
//! featurization, and prompt padding.

use crate::scene::ObservationGrid;

/// Nonzero observation cells grouped for the patch embedder: each entry is
/// `(patch token index, column within the patch weight matrix, value)`.
/// Observation grids are sparse (a few objects on an empty table), so the
/// patch embedding runs over nonzeros only.
#[derive(Debug, Clone, Default)]
pub struct SparseObs {
    pub entries: Vec<(u32, u32, f32)>,
}

/// Extract nonzero cells of `grid` into patch/column coordinates for a
/// `patch x patch` tiling.
pub fn sparse_patches(grid: &ObservationGrid, patch: usize) -> SparseObs {
    assert_eq!(grid.h % patch, 0);
    assert_eq!(grid.w % patch, 0);
    let patches_x = grid.w / patch;
    let c = grid.channels;
    let mut entries = Vec::new();
    for y in 0..grid.h {
        for x in 0..grid.w {
            for ch in 0..c {
                let v = grid.at(y, x, ch);
                if v != 0.0 {
                    let p = (y / patch) * patches_x + (x / patch);
                    let col = ((y % patch) * patch + (x % patch)) * c + ch;
                    entries.push((p as u32, col as u32, v));
                }
            }
        }
    }
    SparseObs { entries }
}

/// Joint-state features fed to the state tokenizer: per joint, the position
/// normalized to [-1, 1] by its limits plus sine and cosine.
pub fn state_features(q: &[f64], limits: &[(f64, f64)]) -> Vec<f32> {
    assert_eq!(q.len(), limits.len());
    let mut out = Vec::with_capacity(3 * q.len());
    for (qi, (lo, hi)) in q.iter().zip(limits) {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        out.push(((qi - mid) / half) as f32);
        out.push(qi.sin() as f32);
        out.push(qi.cos() as f32);
    }
    out
}

/// Pad or reject a prompt token sequence for the model's fixed prompt slots.
pub fn pad_prompt(tokens: &[u16], prompt_len: usize, pad_id: u16) -> Option<Vec<u16>> {
    if tokens.len() > prompt_len {
        return None;
    }
    let mut out = tokens.to_vec();
    out.resize(prompt_len, pad_id);
    Some(out)
}

/// One training/evaluation sample in model-ready form.
#[derive(Debug, Clone)]
pub struct ModelSample {
    /// Index into the observation pool.
    pub obs_idx: u32,
    pub state: Vec<f32>,
    /// Padded prompt ids, length = config.prompt_len.
    pub prompt: Vec<u16>,
    /// Language-conditioned label (undesired contact).
    pub y_l: f32,
    /// Unconditional label (any contact).
    pub y: f32,
}

/// In-memory dataset view used by the training loop and batched evaluation.
#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub observations: Vec<SparseObs>,
    pub samples: Vec<ModelSample>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{rasterize, ClassTable, Scene};

    #[test]
    fn empty_grid_has_no_entries() {
        let g = rasterize(&Scene::empty(0), &ClassTable::default_desk(), 16, 16);
        assert!(sparse_patches(&g, 8).entries.is_empty());
    }

    #[test]
    fn state_features_shape_and_range() {
        let f = state_features(&[0.5, -0.25], &[(-1.0, 1.0), (-2.0, 2.0)]);
        assert_eq!(f.len(), 6);
        assert!((f[0] - 0.5).abs() < 1e-6);
        assert!(f.iter().all(|v| v.abs() <= 1.0 + 1e-6));
    }

    #[test]
    fn prompt_padding() {
        assert_eq!(pad_prompt(&[3, 4], 4, 9).unwrap(), vec![3, 4, 9, 9]);
        assert!(pad_prompt(&[1; 5], 4, 9).is_none());
    }
}
