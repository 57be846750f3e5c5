//! The assembled network: patch/prompt/state tokenizers, transformer
//! encoder, mean pooling, and the two prediction heads.

use crate::num::Real;
use crate::rng::{stream_rng, Rng};
use crate::scene::ObservationGrid;
use crate::tensor::{debug_check_slice, Tensor};

use super::input::{pad_prompt, sparse_patches, state_features, ModelSample, SparseObs};
use super::layers::{relu_backward, relu_forward, Attention, AttentionCache, LayerNorm, LayerNormCache, Linear};
use super::{ModelConfig, ModelError};

struct Block<S> {
    ln1: LayerNorm<S>,
    attn: Attention<S>,
    ln2: LayerNorm<S>,
    fc1: Linear<S>,
    fc2: Linear<S>,
}

struct BlockCache<S> {
    ln1: LayerNormCache<S>,
    attn: AttentionCache<S>,
    ln2: LayerNormCache<S>,
    ln2_out: Vec<S>,
    h_post: Vec<S>,
    relu_mask: Vec<bool>,
}

struct Head<S> {
    l1: Linear<S>,
    l2: Linear<S>,
    l3: Linear<S>,
}

struct HeadCache<S> {
    h0: Vec<S>,
    m0: Vec<bool>,
    h1: Vec<S>,
    m1: Vec<bool>,
}

impl<S: Real> Head<S> {
    fn new(d: usize, hidden: [usize; 2], rng: &mut Rng) -> Self {
        Head {
            l1: Linear::new(d, hidden[0], rng),
            l2: Linear::new(hidden[0], hidden[1], rng),
            // zero output layer: an untrained head emits logit 0 (p = 0.5)
            l3: Linear::new_zeroed(hidden[1], 1),
        }
    }

    fn forward(&self, pooled: &[S], b: usize) -> (Vec<S>, HeadCache<S>) {
        let mut h0 = Vec::new();
        self.l1.forward(pooled, b, &mut h0);
        let m0 = relu_forward(&mut h0);
        let mut h1 = Vec::new();
        self.l2.forward(&h0, b, &mut h1);
        let m1 = relu_forward(&mut h1);
        let mut logits = Vec::new();
        self.l3.forward(&h1, b, &mut logits);
        (logits, HeadCache { h0, m0, h1, m1 })
    }

    fn backward(&mut self, cache: &HeadCache<S>, pooled: &[S], dlogits: &[S], b: usize, dpooled: &mut [S]) {
        let mut dh1 = Vec::new();
        self.l3.backward(&cache.h1, dlogits, b, Some(&mut dh1));
        relu_backward(&mut dh1, &cache.m1);
        let mut dh0 = Vec::new();
        self.l2.backward(&cache.h0, &dh1, b, Some(&mut dh0));
        relu_backward(&mut dh0, &cache.m0);
        let mut dp = Vec::new();
        self.l1.backward(pooled, &dh0, b, Some(&mut dp));
        for (o, v) in dpooled.iter_mut().zip(&dp) {
            *o += *v;
        }
    }
}

/// Per-batch activations retained for the backward pass.
pub struct ForwardCache<S> {
    batch: usize,
    state_feats: Vec<S>,
    state_acts: Vec<(Vec<S>, Vec<bool>)>,
    blocks: Vec<BlockCache<S>>,
    ln_f: LayerNormCache<S>,
    pooled: Vec<S>,
    head_lang: HeadCache<S>,
    head_uncond: HeadCache<S>,
    /// sigmoid outputs per sample: (p_lang, p_uncond)
    pub probs: Vec<(S, S)>,
    /// raw logits per sample
    pub logits: Vec<(S, S)>,
}

/// Language-conditioned collision predictor.
pub struct CollisionModel<S> {
    pub config: ModelConfig,
    pub(super) patch_w: Tensor<S>,
    pub(super) patch_b: Tensor<S>,
    pub(super) g_patch_w: Tensor<S>,
    pub(super) g_patch_b: Tensor<S>,
    pub(super) pos: Tensor<S>,
    pub(super) g_pos: Tensor<S>,
    pub(super) tok: Tensor<S>,
    pub(super) g_tok: Tensor<S>,
    state_mlp: Vec<Linear<S>>,
    blocks: Vec<Block<S>>,
    ln_f: LayerNorm<S>,
    head_lang: Head<S>,
    head_uncond: Head<S>,
}

fn sigmoid<S: Real>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

impl<S: Real> CollisionModel<S> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = stream_rng(seed, 0x0de1);
        let d = config.dim;
        let pdim = config.patch_dim();
        let sin = config.state_in();
        let [s0, s1, s2] = config.state_hidden;
        let state_mlp = vec![
            Linear::new(sin, s0, &mut rng),
            Linear::new(s0, s1, &mut rng),
            Linear::new(s1, s2, &mut rng),
            Linear::new(s2, d, &mut rng),
        ];
        let blocks = (0..config.layers)
            .map(|_| Block {
                ln1: LayerNorm::new(d),
                attn: Attention::new(d, config.heads, &mut rng),
                ln2: LayerNorm::new(d),
                fc1: Linear::new(d, config.ffn_hidden, &mut rng),
                fc2: Linear::new(config.ffn_hidden, d, &mut rng),
            })
            .collect();
        let model = CollisionModel {
            patch_w: Tensor::randn(&[pdim, d], 0.02, &mut rng),
            patch_b: Tensor::zeros(&[d]),
            g_patch_w: Tensor::zeros(&[pdim, d]),
            g_patch_b: Tensor::zeros(&[d]),
            pos: Tensor::randn(&[config.n_tokens(), d], 0.02, &mut rng),
            g_pos: Tensor::zeros(&[config.n_tokens(), d]),
            tok: Tensor::randn(&[config.vocab, d], 0.02, &mut rng),
            g_tok: Tensor::zeros(&[config.vocab, d]),
            state_mlp,
            blocks,
            ln_f: LayerNorm::new(d),
            head_lang: Head::new(d, config.head_hidden, &mut rng),
            head_uncond: Head::new(d, config.head_hidden, &mut rng),
            config,
        };
        Ok(model)
    }

    /// Total trainable parameter count.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        let mut probe = |_: &str, w: &Tensor<S>| n += w.len();
        self.visit_params(&mut probe);
        n
    }

    /// Visit every parameter block in a fixed order.
    pub fn visit_params(&self, f: &mut dyn FnMut(&str, &Tensor<S>)) {
        f("patch_embed.w", &self.patch_w);
        f("patch_embed.b", &self.patch_b);
        f("pos_embed", &self.pos);
        f("tok_embed", &self.tok);
        for (i, l) in self.state_mlp.iter().enumerate() {
            f(&format!("state_mlp.{i}.w"), &l.w);
            f(&format!("state_mlp.{i}.b"), &l.b);
        }
        for (i, b) in self.blocks.iter().enumerate() {
            f(&format!("block{i}.ln1.g"), &b.ln1.g);
            f(&format!("block{i}.ln1.b"), &b.ln1.b);
            f(&format!("block{i}.attn.qkv.w"), &b.attn.wqkv.w);
            f(&format!("block{i}.attn.qkv.b"), &b.attn.wqkv.b);
            f(&format!("block{i}.attn.out.w"), &b.attn.wo.w);
            f(&format!("block{i}.attn.out.b"), &b.attn.wo.b);
            f(&format!("block{i}.ln2.g"), &b.ln2.g);
            f(&format!("block{i}.ln2.b"), &b.ln2.b);
            f(&format!("block{i}.mlp.fc1.w"), &b.fc1.w);
            f(&format!("block{i}.mlp.fc1.b"), &b.fc1.b);
            f(&format!("block{i}.mlp.fc2.w"), &b.fc2.w);
            f(&format!("block{i}.mlp.fc2.b"), &b.fc2.b);
        }
        f("ln_f.g", &self.ln_f.g);
        f("ln_f.b", &self.ln_f.b);
        for (name, h) in [("head_lang", &self.head_lang), ("head_uncond", &self.head_uncond)] {
            f(&format!("{name}.l1.w"), &h.l1.w);
            f(&format!("{name}.l1.b"), &h.l1.b);
            f(&format!("{name}.l2.w"), &h.l2.w);
            f(&format!("{name}.l2.b"), &h.l2.b);
            f(&format!("{name}.l3.w"), &h.l3.w);
            f(&format!("{name}.l3.b"), &h.l3.b);
        }
    }

    /// Visit every `(parameter, gradient)` pair mutably, in the same order
    /// as [`visit_params`].
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<S>, &mut Tensor<S>)) {
        f("patch_embed.w", &mut self.patch_w, &mut self.g_patch_w);
        f("patch_embed.b", &mut self.patch_b, &mut self.g_patch_b);
        f("pos_embed", &mut self.pos, &mut self.g_pos);
        f("tok_embed", &mut self.tok, &mut self.g_tok);
        for (i, l) in self.state_mlp.iter_mut().enumerate() {
            f(&format!("state_mlp.{i}.w"), &mut l.w, &mut l.gw);
            f(&format!("state_mlp.{i}.b"), &mut l.b, &mut l.gb);
        }
        for (i, b) in self.blocks.iter_mut().enumerate() {
            f(&format!("block{i}.ln1.g"), &mut b.ln1.g, &mut b.ln1.gg);
            f(&format!("block{i}.ln1.b"), &mut b.ln1.b, &mut b.ln1.gb);
            f(&format!("block{i}.attn.qkv.w"), &mut b.attn.wqkv.w, &mut b.attn.wqkv.gw);
            f(&format!("block{i}.attn.qkv.b"), &mut b.attn.wqkv.b, &mut b.attn.wqkv.gb);
            f(&format!("block{i}.attn.out.w"), &mut b.attn.wo.w, &mut b.attn.wo.gw);
            f(&format!("block{i}.attn.out.b"), &mut b.attn.wo.b, &mut b.attn.wo.gb);
            f(&format!("block{i}.ln2.g"), &mut b.ln2.g, &mut b.ln2.gg);
            f(&format!("block{i}.ln2.b"), &mut b.ln2.b, &mut b.ln2.gb);
            f(&format!("block{i}.mlp.fc1.w"), &mut b.fc1.w, &mut b.fc1.gw);
            f(&format!("block{i}.mlp.fc1.b"), &mut b.fc1.b, &mut b.fc1.gb);
            f(&format!("block{i}.mlp.fc2.w"), &mut b.fc2.w, &mut b.fc2.gw);
            f(&format!("block{i}.mlp.fc2.b"), &mut b.fc2.b, &mut b.fc2.gb);
        }
        f("ln_f.g", &mut self.ln_f.g, &mut self.ln_f.gg);
        f("ln_f.b", &mut self.ln_f.b, &mut self.ln_f.gb);
        let lang = &mut self.head_lang;
        f("head_lang.l1.w", &mut lang.l1.w, &mut lang.l1.gw);
        f("head_lang.l1.b", &mut lang.l1.b, &mut lang.l1.gb);
        f("head_lang.l2.w", &mut lang.l2.w, &mut lang.l2.gw);
        f("head_lang.l2.b", &mut lang.l2.b, &mut lang.l2.gb);
        f("head_lang.l3.w", &mut lang.l3.w, &mut lang.l3.gw);
        f("head_lang.l3.b", &mut lang.l3.b, &mut lang.l3.gb);
        let unc = &mut self.head_uncond;
        f("head_uncond.l1.w", &mut unc.l1.w, &mut unc.l1.gw);
        f("head_uncond.l1.b", &mut unc.l1.b, &mut unc.l1.gb);
        f("head_uncond.l2.w", &mut unc.l2.w, &mut unc.l2.gw);
        f("head_uncond.l2.b", &mut unc.l2.b, &mut unc.l2.gb);
        f("head_uncond.l3.w", &mut unc.l3.w, &mut unc.l3.gw);
        f("head_uncond.l3.b", &mut unc.l3.b, &mut unc.l3.gb);
    }

    pub fn zero_grads(&mut self) {
        self.visit_params_mut(&mut |_, _, g| g.zero_());
    }

    /// Batched inference/training forward pass. Sequence per sample:
    /// visual patch tokens, padded prompt tokens, one state token; mean
    /// pooling over transformer outputs feeds both heads.
    pub fn forward_batch(
        &self,
        observations: &[SparseObs],
        samples: &[&ModelSample],
    ) -> Result<ForwardCache<S>, ModelError> {
        let b = samples.len();
        let cfg = &self.config;
        let (t, d, np) = (cfg.n_tokens(), cfg.dim, cfg.n_patches());
        for s in samples {
            if s.prompt.len() != cfg.prompt_len {
                return Err(ModelError::ShapeMismatch("prompt slot count".into()));
            }
            if s.state.len() != cfg.state_in() {
                return Err(ModelError::ShapeMismatch("state feature length".into()));
            }
            if s.obs_idx as usize >= observations.len() {
                return Err(ModelError::ShapeMismatch("observation index".into()));
            }
        }

        let mut x = vec![S::zero(); b * t * d];

        // visual tokens: bias plus sparse patch embedding
        for bi in 0..b {
            for p in 0..np {
                let at = (bi * t + p) * d;
                for i in 0..d {
                    x[at + i] = self.patch_b.data[i];
                }
            }
            for &(p, col, v) in &observations[samples[bi].obs_idx as usize].entries {
                let at = (bi * t + p as usize) * d;
                let wr = col as usize * d;
                let vv = S::of(v as f64);
                for i in 0..d {
                    x[at + i] += self.patch_w.data[wr + i] * vv;
                }
            }
        }
        // prompt tokens
        for (bi, s) in samples.iter().enumerate() {
            for (i, &id) in s.prompt.iter().enumerate() {
                if id as usize >= cfg.vocab {
                    return Err(ModelError::ShapeMismatch("token id out of vocabulary".into()));
                }
                let at = (bi * t + np + i) * d;
                x[at..at + d].copy_from_slice(&self.tok.data[id as usize * d..(id as usize + 1) * d]);
            }
        }
        // state token through the three-hidden-layer MLP
        let mut feats = vec![S::zero(); b * cfg.state_in()];
        for (bi, s) in samples.iter().enumerate() {
            for (i, &v) in s.state.iter().enumerate() {
                feats[bi * cfg.state_in() + i] = S::of(v as f64);
            }
        }
        let mut state_acts: Vec<(Vec<S>, Vec<bool>)> = Vec::with_capacity(4);
        let mut cur = feats.clone();
        for (li, lin) in self.state_mlp.iter().enumerate() {
            let mut out = Vec::new();
            lin.forward(&cur, b, &mut out);
            let mask = if li + 1 < self.state_mlp.len() {
                relu_forward(&mut out)
            } else {
                Vec::new()
            };
            state_acts.push((out.clone(), mask));
            cur = out;
        }
        for bi in 0..b {
            let at = (bi * t + np + cfg.prompt_len) * d;
            x[at..at + d].copy_from_slice(&cur[bi * d..(bi + 1) * d]);
        }
        // positional embeddings
        for bi in 0..b {
            for ti in 0..t {
                let at = (bi * t + ti) * d;
                for i in 0..d {
                    x[at + i] += self.pos.data[ti * d + i];
                }
            }
        }
        debug_check_slice(&x, "embeddings");

        // transformer blocks (pre-norm residual)
        let rows = b * t;
        let mut block_caches = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let mut ln1_out = Vec::new();
            let ln1 = blk.ln1.forward(&x, rows, &mut ln1_out);
            let mut attn_out = Vec::new();
            let attn = blk.attn.forward(&ln1_out, b, t, &mut attn_out);
            for i in 0..x.len() {
                x[i] += attn_out[i];
            }
            let mut ln2_out = Vec::new();
            let ln2 = blk.ln2.forward(&x, rows, &mut ln2_out);
            let mut h = Vec::new();
            blk.fc1.forward(&ln2_out, rows, &mut h);
            let relu_mask = relu_forward(&mut h);
            let mut m = Vec::new();
            blk.fc2.forward(&h, rows, &mut m);
            for i in 0..x.len() {
                x[i] += m[i];
            }
            debug_check_slice(&x, "block.out");
            block_caches.push(BlockCache {
                ln1,
                attn,
                ln2,
                ln2_out,
                h_post: h,
                relu_mask,
            });
        }

        let mut ln_f_out = Vec::new();
        let ln_f = self.ln_f.forward(&x, rows, &mut ln_f_out);
        // mean pool over tokens
        let inv_t = S::one() / S::of(t as f64);
        let mut pooled = vec![S::zero(); b * d];
        for bi in 0..b {
            for ti in 0..t {
                let at = (bi * t + ti) * d;
                for i in 0..d {
                    pooled[bi * d + i] += ln_f_out[at + i] * inv_t;
                }
            }
        }

        let (lang_logits, head_lang) = self.head_lang.forward(&pooled, b);
        let (unc_logits, head_uncond) = self.head_uncond.forward(&pooled, b);
        let logits: Vec<(S, S)> = lang_logits
            .iter()
            .zip(&unc_logits)
            .map(|(&a, &c)| (a, c))
            .collect();
        let probs = logits.iter().map(|&(a, c)| (sigmoid(a), sigmoid(c))).collect();

        Ok(ForwardCache {
            batch: b,
            state_feats: feats,
            state_acts,
            blocks: block_caches,
            ln_f,
            pooled,
            head_lang,
            head_uncond,
            probs,
            logits,
        })
    }

    /// Reverse-mode pass. `dlogits` carries the loss gradient on the two
    /// head logits per sample; parameter gradients accumulate into the
    /// model's grad tensors.
    pub fn backward_batch(
        &mut self,
        observations: &[SparseObs],
        samples: &[&ModelSample],
        cache: &ForwardCache<S>,
        dlogits: &[(S, S)],
    ) {
        let cfg = self.config.clone();
        let b = cache.batch;
        let (t, d, np) = (cfg.n_tokens(), cfg.dim, cfg.n_patches());
        let rows = b * t;
        assert_eq!(dlogits.len(), b);

        let dlang: Vec<S> = dlogits.iter().map(|&(a, _)| a).collect();
        let dunc: Vec<S> = dlogits.iter().map(|&(_, c)| c).collect();
        let mut dpooled = vec![S::zero(); b * d];
        self.head_lang
            .backward(&cache.head_lang, &cache.pooled, &dlang, b, &mut dpooled);
        self.head_uncond
            .backward(&cache.head_uncond, &cache.pooled, &dunc, b, &mut dpooled);

        // un-pool then final layer norm
        let inv_t = S::one() / S::of(t as f64);
        let mut dln_f_out = vec![S::zero(); rows * d];
        for bi in 0..b {
            for ti in 0..t {
                let at = (bi * t + ti) * d;
                for i in 0..d {
                    dln_f_out[at + i] = dpooled[bi * d + i] * inv_t;
                }
            }
        }
        let mut dx = Vec::new();
        self.ln_f.backward(&cache.ln_f, &dln_f_out, rows, &mut dx);

        // blocks in reverse
        for (blk, bc) in self.blocks.iter_mut().zip(&cache.blocks).rev() {
            // mlp branch: x_out = x_mid + fc2(relu(fc1(ln2(x_mid))))
            let mut dm = dx.clone();
            let mut dh = Vec::new();
            blk.fc2.backward(&bc.h_post, &dm, rows, Some(&mut dh));
            relu_backward(&mut dh, &bc.relu_mask);
            let mut dln2_out = Vec::new();
            blk.fc1.backward(&bc.ln2_out, &dh, rows, Some(&mut dln2_out));
            let mut dx_mid_branch = Vec::new();
            blk.ln2.backward(&bc.ln2, &dln2_out, rows, &mut dx_mid_branch);
            for i in 0..dx.len() {
                dx[i] += dx_mid_branch[i];
            }
            // attention branch: x_mid = x_in + attn(ln1(x_in))
            dm.copy_from_slice(&dx);
            let mut dln1_out = Vec::new();
            blk.attn.backward(&bc.attn, &dm, b, t, &mut dln1_out);
            let mut dx_in_branch = Vec::new();
            blk.ln1.backward(&bc.ln1, &dln1_out, rows, &mut dx_in_branch);
            for i in 0..dx.len() {
                dx[i] += dx_in_branch[i];
            }
        }

        // embedding-level gradients
        for bi in 0..b {
            for ti in 0..t {
                let at = (bi * t + ti) * d;
                for i in 0..d {
                    self.g_pos.data[ti * d + i] += dx[at + i];
                }
            }
        }
        // patch embedding (sparse) and its bias over all patch tokens
        for (bi, s) in samples.iter().enumerate() {
            for p in 0..np {
                let at = (bi * t + p) * d;
                for i in 0..d {
                    self.g_patch_b.data[i] += dx[at + i];
                }
            }
            for &(p, col, v) in &observations[s.obs_idx as usize].entries {
                let at = (bi * t + p as usize) * d;
                let wr = col as usize * d;
                let vv = S::of(v as f64);
                for i in 0..d {
                    self.g_patch_w.data[wr + i] += dx[at + i] * vv;
                }
            }
        }
        // prompt embeddings
        for (bi, s) in samples.iter().enumerate() {
            for (i, &id) in s.prompt.iter().enumerate() {
                let at = (bi * t + np + i) * d;
                let gr = id as usize * d;
                for k in 0..d {
                    self.g_tok.data[gr + k] += dx[at + k];
                }
            }
        }
        // state tokenizer
        let mut dstate = vec![S::zero(); b * d];
        for bi in 0..b {
            let at = (bi * t + np + cfg.prompt_len) * d;
            dstate[bi * d..(bi + 1) * d].copy_from_slice(&dx[at..at + d]);
        }
        let mut grad = dstate;
        for li in (0..self.state_mlp.len()).rev() {
            let input: &[S] = if li == 0 {
                &cache.state_feats
            } else {
                &cache.state_acts[li - 1].0
            };
            let mut dinput = Vec::new();
            let want_dx = li > 0;
            self.state_mlp[li].backward(input, &grad, b, want_dx.then_some(&mut dinput));
            if want_dx {
                relu_backward(&mut dinput, &cache.state_acts[li - 1].1);
                grad = dinput;
            }
        }
    }

    /// Single-sample convenience forward over a rasterized observation.
    pub fn forward(
        &self,
        grid: &ObservationGrid,
        q: &[f64],
        prompt_tokens: &[u16],
    ) -> Result<(f64, f64), ModelError> {
        if grid.h != self.config.obs_h
            || grid.w != self.config.obs_w
            || grid.channels != self.config.obs_channels
        {
            return Err(ModelError::ShapeMismatch("observation resolution".into()));
        }
        let obs = sparse_patches(grid, self.config.patch);
        self.forward_prepared(&obs, q, prompt_tokens)
    }

    /// Forward over a pre-extracted sparse observation (used by the planner
    /// adapter, which reuses one observation across many configurations).
    pub fn forward_prepared(
        &self,
        obs: &SparseObs,
        q: &[f64],
        prompt_tokens: &[u16],
    ) -> Result<(f64, f64), ModelError> {
        if q.len() != self.config.dof {
            return Err(ModelError::ShapeMismatch("configuration length".into()));
        }
        let prompt = pad_prompt(prompt_tokens, self.config.prompt_len, self.config.pad_id)
            .ok_or_else(|| ModelError::ShapeMismatch("prompt too long".into()))?;
        let sample = ModelSample {
            obs_idx: 0,
            state: state_features(q, &self.config.limits),
            prompt,
            y_l: 0.0,
            y: 0.0,
        };
        let cache = self.forward_batch(std::slice::from_ref(obs), &[&sample])?;
        let (pl, pu) = cache.probs[0];
        Ok((pl.to_f64v(), pu.to_f64v()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{rasterize, ClassTable, Scene};

    fn tiny_model() -> CollisionModel<f64> {
        let cfg = ModelConfig::tiny(21, 3, vec![(-3.0, 3.0); 3], 24, 23);
        CollisionModel::new(cfg, 7).unwrap()
    }

    #[test]
    fn untrained_heads_emit_exactly_half() {
        let model = tiny_model();
        let scene = Scene::empty(0);
        let grid = rasterize(&scene, &ClassTable::default_desk(), 16, 16);
        let (pl, pu) = model.forward(&grid, &[0.1, -0.4, 0.8], &[1, 2]).unwrap();
        assert_eq!(pl, 0.5);
        assert_eq!(pu, 0.5);
    }

    #[test]
    fn forward_is_pure_across_states() {
        let model = tiny_model();
        let grid = rasterize(&Scene::empty(0), &ClassTable::default_desk(), 16, 16);
        let obs = sparse_patches(&grid, 8);
        let a1 = model.forward_prepared(&obs, &[0.1, 0.2, 0.3], &[1]).unwrap();
        let _ = model.forward_prepared(&obs, &[-1.0, 0.5, 0.0], &[1]).unwrap();
        let a2 = model.forward_prepared(&obs, &[0.1, 0.2, 0.3], &[1]).unwrap();
        assert_eq!(a1, a2);
    }

    #[test]
    fn prompt_too_long_rejected() {
        let model = tiny_model();
        let grid = rasterize(&Scene::empty(0), &ClassTable::default_desk(), 16, 16);
        let err = model.forward(&grid, &[0.0; 3], &[1; 9]).unwrap_err();
        assert!(matches!(err, ModelError::ShapeMismatch(_)));
    }

    #[test]
    fn parameter_count_is_positive_and_stable() {
        let m = tiny_model();
        assert!(m.param_count() > 1000);
        assert_eq!(m.param_count(), m.param_count());
    }
}
