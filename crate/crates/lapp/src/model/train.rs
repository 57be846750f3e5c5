//! Training loop: cosine-decayed learning rate, per-step derived batch RNG
//! (so resumed runs replay the identical batch stream), CSV logging, and
//! periodic checkpoints.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng as _;

use crate::num::Real;
use crate::rng::stream_rng;

use super::adam::Adam;
use super::checkpoint::{save_model, CheckpointExtras};
use super::input::SampleSet;
use super::loss::loss_pair;
use super::net::CollisionModel;
use super::ModelError;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub peak_lr: f64,
    pub floor_lr: f64,
    pub seed: u64,
    pub log_every: usize,
    pub val_every: usize,
    pub checkpoint_every: usize,
    /// Validation subset size per periodic evaluation.
    pub val_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 20_000,
            batch: 32,
            peak_lr: 3e-4,
            floor_lr: 1e-6,
            seed: 0,
            log_every: 200,
            val_every: 2_000,
            checkpoint_every: 10_000,
            val_cap: 2_048,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.steps == 0 || self.batch == 0 {
            return Err(ModelError::ShapeMismatch("steps/batch must be positive".into()));
        }
        if self.floor_lr >= self.peak_lr {
            return Err(ModelError::ShapeMismatch(
                "learning-rate floor must be below the peak".into(),
            ));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        let p = step as f64 / self.steps.max(1) as f64;
        self.floor_lr + 0.5 * (self.peak_lr - self.floor_lr) * (1.0 + (std::f64::consts::PI * p).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub acc_lang: f64,
    pub acc_uncond: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub train_log: Vec<LogRow>,
    pub val_log: Vec<LogRow>,
    pub final_step: usize,
}

fn eval_set<S: Real>(
    model: &CollisionModel<S>,
    data: &SampleSet,
    cap: usize,
    batch: usize,
) -> Result<(f64, f64, f64), ModelError> {
    let n = data.len().min(cap);
    let mut loss = 0.0;
    let mut hit_l = 0usize;
    let mut hit_u = 0usize;
    let mut done = 0;
    while done < n {
        let take = batch.min(n - done);
        let refs: Vec<_> = (done..done + take).map(|i| &data.samples[i]).collect();
        let cache = model.forward_batch(&data.observations, &refs)?;
        for (i, &(pl, pu)) in cache.probs.iter().enumerate() {
            let s = refs[i];
            loss += loss_pair(pl.to_f64v(), pu.to_f64v(), s.y_l as f64, s.y as f64);
            if (pl.to_f64v() > 0.5) == (s.y_l > 0.5) {
                hit_l += 1;
            }
            if (pu.to_f64v() > 0.5) == (s.y > 0.5) {
                hit_u += 1;
            }
        }
        done += take;
    }
    Ok((loss / n as f64, hit_l as f64 / n as f64, hit_u as f64 / n as f64))
}

/// Run (or resume) training. Returns the in-memory log; when `out_dir` is
/// set, writes `train_log.csv`, `val_log.csv`, and periodic checkpoints
/// (`model.ckpt` holds the final weights plus optimizer state).
pub fn train<S: Real>(
    model: &mut CollisionModel<S>,
    data: &SampleSet,
    val: &SampleSet,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    resume: Option<CheckpointExtras<S>>,
) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::ShapeMismatch("empty training set".into()));
    }
    let (mut adam, start_step) = match resume {
        Some(extras) => (extras.adam, extras.step as usize),
        None => (Adam::new(model), 0),
    };

    let mut train_log = Vec::new();
    let mut val_log = Vec::new();
    let mut win_loss = 0.0;
    let mut win_hit_l = 0usize;
    let mut win_hit_u = 0usize;
    let mut win_n = 0usize;

    let mut csv: Option<fs::File> = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut f = fs::File::create(dir.join("train_log.csv"))?;
            writeln!(f, "step,lr,loss,acc_lang,acc_uncond")?;
            Some(f)
        }
        None => None,
    };

    for step in start_step..cfg.steps {
        let lr = cfg.lr_at(step);
        let mut rng = stream_rng(cfg.seed, 0xba7c4 ^ step as u64);
        let refs: Vec<&super::input::ModelSample> = (0..cfg.batch)
            .map(|_| &data.samples[rng.gen_range(0..data.len())])
            .collect();

        let cache = model.forward_batch(&data.observations, &refs)?;
        let inv_b = 1.0 / cfg.batch as f64;
        let mut dlogits = Vec::with_capacity(cfg.batch);
        for (i, &(pl, pu)) in cache.probs.iter().enumerate() {
            let s = refs[i];
            win_loss += loss_pair(pl.to_f64v(), pu.to_f64v(), s.y_l as f64, s.y as f64);
            if (pl.to_f64v() > 0.5) == (s.y_l > 0.5) {
                win_hit_l += 1;
            }
            if (pu.to_f64v() > 0.5) == (s.y > 0.5) {
                win_hit_u += 1;
            }
            win_n += 1;
            dlogits.push((
                S::of((pl.to_f64v() - s.y_l as f64) * inv_b),
                S::of((pu.to_f64v() - s.y as f64) * inv_b),
            ));
        }
        model.zero_grads();
        model.backward_batch(&data.observations, &refs, &cache, &dlogits);

        // gradient sanity: abort with the offending block on NaN/Inf
        let mut bad: Option<String> = None;
        model.visit_params_mut(&mut |name, _, g| {
            if bad.is_none() && !g.data.iter().all(|v| v.is_finite()) {
                bad = Some(name.to_string());
            }
        });
        if let Some(block) = bad {
            return Err(ModelError::NonFinite { block, step });
        }

        adam.step(model, lr);

        if (step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps {
            let row = LogRow {
                step: step + 1,
                lr,
                loss: win_loss / win_n.max(1) as f64,
                acc_lang: win_hit_l as f64 / win_n.max(1) as f64,
                acc_uncond: win_hit_u as f64 / win_n.max(1) as f64,
            };
            if let Some(f) = csv.as_mut() {
                writeln!(
                    f,
                    "{},{:.8e},{:.6},{:.4},{:.4}",
                    row.step, row.lr, row.loss, row.acc_lang, row.acc_uncond
                )?;
            }
            train_log.push(row);
            win_loss = 0.0;
            win_hit_l = 0;
            win_hit_u = 0;
            win_n = 0;
        }

        if !val.is_empty() && ((step + 1) % cfg.val_every == 0 || step + 1 == cfg.steps) {
            let (l, al, au) = eval_set(model, val, cfg.val_cap, cfg.batch)?;
            val_log.push(LogRow {
                step: step + 1,
                lr,
                loss: l,
                acc_lang: al,
                acc_uncond: au,
            });
        }

        if let Some(dir) = out_dir {
            if (step + 1) % cfg.checkpoint_every == 0 && step + 1 < cfg.steps {
                let extras = CheckpointExtras {
                    adam: adam.clone(),
                    step: (step + 1) as u64,
                };
                save_model(&dir.join("model.ckpt"), model, Some(&extras))?;
            }
        }
    }

    if let Some(dir) = out_dir {
        let extras = CheckpointExtras {
            adam: adam.clone(),
            step: cfg.steps as u64,
        };
        save_model(&dir.join("model.ckpt"), model, Some(&extras))?;
        let mut f = fs::File::create(dir.join("val_log.csv"))?;
        writeln!(f, "step,lr,loss,acc_lang,acc_uncond")?;
        for r in &val_log {
            writeln!(
                f,
                "{},{:.8e},{:.6},{:.4},{:.4}",
                r.step, r.lr, r.loss, r.acc_lang, r.acc_uncond
            )?;
        }
    }

    Ok(TrainOutcome {
        train_log,
        val_log,
        final_step: cfg.steps,
    })
}
