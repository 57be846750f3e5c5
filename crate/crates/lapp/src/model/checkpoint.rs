//! Versioned binary checkpoints: header with magic, format version, element
//! type, and a SHA-256 checksum over the body; the body carries the model
//! config, a named parameter-block table, and optional optimizer state for
//! resuming.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::num::Real;
use crate::tensor::Tensor;

use super::adam::Adam;
use super::net::CollisionModel;
use super::{ModelConfig, ModelError};

const MAGIC: &[u8; 4] = b"LACO";
const VERSION: u32 = 1;

/// Optimizer state stored alongside the weights so training can resume.
#[derive(Debug, Clone)]
pub struct CheckpointExtras<S> {
    pub adam: Adam<S>,
    pub step: u64,
}

fn push_tensor<S: Real>(body: &mut Vec<u8>, name: &str, t: &Tensor<S>) {
    body.extend_from_slice(&(name.len() as u16).to_le_bytes());
    body.extend_from_slice(name.as_bytes());
    body.push(t.shape.len() as u8);
    for &d in &t.shape {
        body.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in &t.data {
        if S::DTYPE_TAG == 4 {
            body.extend_from_slice(&(v.to_f64v() as f32).to_le_bytes());
        } else {
            body.extend_from_slice(&v.to_f64v().to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.at + n > self.buf.len() {
            return Err(ModelError::Checkpoint("corrupt checkpoint: truncated".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor<S: Real>(&mut self, expect_name: &str) -> Result<Tensor<S>, ModelError> {
        let name_len = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(name_len)?)
            .map_err(|_| ModelError::Checkpoint("corrupt checkpoint: bad block name".into()))?;
        if name != expect_name {
            return Err(ModelError::Checkpoint(format!(
                "parameter block mismatch: found `{name}`, expected `{expect_name}`"
            )));
        }
        let ndim = self.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(self.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let elem = S::DTYPE_TAG as usize;
        let raw = self.take(n * elem)?;
        let mut data = Vec::with_capacity(n);
        for chunk in raw.chunks_exact(elem) {
            let v = if elem == 4 {
                f32::from_le_bytes(chunk.try_into().unwrap()) as f64
            } else {
                f64::from_le_bytes(chunk.try_into().unwrap())
            };
            data.push(S::of(v));
        }
        Ok(Tensor { shape, data })
    }
}

/// Serialize a model (optionally with optimizer state). Byte output is a
/// pure function of inputs, so repeated saves are identical.
pub fn save_model<S: Real>(
    path: &Path,
    model: &CollisionModel<S>,
    extras: Option<&CheckpointExtras<S>>,
) -> Result<(), ModelError> {
    let mut body: Vec<u8> = Vec::new();
    let config_json = serde_json::to_vec(&model.config)
        .map_err(|e| ModelError::Checkpoint(format!("config serialization: {e}")))?;
    body.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    body.extend_from_slice(&config_json);

    let mut names: Vec<String> = Vec::new();
    model.visit_params(&mut |name, _| names.push(name.to_string()));
    body.extend_from_slice(&(names.len() as u32).to_le_bytes());
    model.visit_params(&mut |name, t| push_tensor(&mut body, name, t));

    match extras {
        Some(e) => {
            body.push(1);
            body.extend_from_slice(&e.adam.t.to_le_bytes());
            body.extend_from_slice(&e.step.to_le_bytes());
            for (name, t) in names.iter().zip(&e.adam.m) {
                push_tensor(&mut body, name, t);
            }
            for (name, t) in names.iter().zip(&e.adam.v) {
                push_tensor(&mut body, name, t);
            }
        }
        None => body.push(0),
    }

    let digest = Sha256::digest(&body);
    let mut out = Vec::with_capacity(body.len() + 52);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(S::DTYPE_TAG);
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&digest);
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);

    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

/// Load a checkpoint, verifying magic, version, element type, length, and
/// checksum before touching the payload.
pub fn load_model<S: Real>(
    path: &Path,
) -> Result<(CollisionModel<S>, Option<CheckpointExtras<S>>), ModelError> {
    let mut raw = Vec::new();
    fs::File::open(path)?.read_to_end(&mut raw)?;
    if raw.len() < 52 {
        return Err(ModelError::Checkpoint("corrupt checkpoint: too short".into()));
    }
    if &raw[0..4] != MAGIC {
        return Err(ModelError::Checkpoint("not a model checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(raw[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported checkpoint format version {version} (expected {VERSION})"
        )));
    }
    if raw[8] != S::DTYPE_TAG {
        return Err(ModelError::Checkpoint(format!(
            "element type tag {} does not match requested precision",
            raw[8]
        )));
    }
    let digest_stored = &raw[12..44];
    let body_len = u64::from_le_bytes(raw[44..52].try_into().unwrap()) as usize;
    let body = &raw[52..];
    if body.len() != body_len {
        return Err(ModelError::Checkpoint("corrupt checkpoint: truncated".into()));
    }
    let digest = Sha256::digest(body);
    if digest.as_slice() != digest_stored {
        return Err(ModelError::Checkpoint("corrupt checkpoint: checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, at: 0 };
    let cfg_len = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(cfg_len)?)
        .map_err(|e| ModelError::Checkpoint(format!("config parse: {e}")))?;
    let n_blocks = r.u32()? as usize;

    let mut model = CollisionModel::<S>::new(config, 0)?;
    let mut names: Vec<String> = Vec::new();
    model.visit_params(&mut |name, _| names.push(name.to_string()));
    if names.len() != n_blocks {
        return Err(ModelError::Checkpoint(format!(
            "block count {n_blocks} does not match architecture ({})",
            names.len()
        )));
    }
    let mut loaded: Vec<Tensor<S>> = Vec::with_capacity(n_blocks);
    for name in &names {
        loaded.push(r.tensor(name)?);
    }
    let mut idx = 0;
    let mut shape_err = None;
    model.visit_params_mut(&mut |name, w, _| {
        let t = &loaded[idx];
        if t.shape != w.shape {
            shape_err = Some(name.to_string());
        } else {
            w.data.copy_from_slice(&t.data);
        }
        idx += 1;
    });
    if let Some(name) = shape_err {
        return Err(ModelError::Checkpoint(format!("shape mismatch in block `{name}`")));
    }

    let extras = match r.u8()? {
        0 => None,
        _ => {
            let t = r.u64()?;
            let step = r.u64()?;
            let mut adam = Adam::new(&model);
            adam.t = t;
            for (name, slot) in names.iter().zip(&mut adam.m) {
                *slot = r.tensor(name)?;
            }
            for (name, slot) in names.iter().zip(&mut adam.v) {
                *slot = r.tensor(name)?;
            }
            Some(CheckpointExtras { adam, step })
        }
    };
    Ok((model, extras))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::input::{sparse_patches, ModelSample};
    use crate::scene::{rasterize, ClassTable, Scene};

    fn tiny() -> CollisionModel<f32> {
        CollisionModel::new(
            super::super::ModelConfig::tiny(21, 3, vec![(-3.0, 3.0); 3], 24, 23),
            9,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let model = tiny();
        save_model(&path, &model, None).unwrap();
        let (loaded, extras) = load_model::<f32>(&path).unwrap();
        assert!(extras.is_none());

        let grid = rasterize(&Scene::empty(0), &ClassTable::default_desk(), 16, 16);
        let obs = sparse_patches(&grid, 8);
        let s = ModelSample {
            obs_idx: 0,
            state: vec![0.1; 9],
            prompt: vec![1, 23, 23, 23],
            y_l: 0.0,
            y: 0.0,
        };
        let a = model.forward_batch(std::slice::from_ref(&obs), &[&s]).unwrap();
        let b = loaded.forward_batch(std::slice::from_ref(&obs), &[&s]).unwrap();
        assert_eq!(a.logits, b.logits);

        // repeated saves are byte-identical
        let path2 = dir.path().join("m2.ckpt");
        save_model(&path2, &model, None).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_model(&path, &tiny(), None).unwrap();
        let raw = fs::read(&path).unwrap();
        fs::write(&path, &raw[..raw.len() - 7]).unwrap();
        let err = load_model::<f32>(&path).unwrap_err();
        assert!(matches!(err, ModelError::Checkpoint(m) if m.contains("truncated")));
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_model(&path, &tiny(), None).unwrap();
        let mut raw = fs::read(&path).unwrap();
        let at = raw.len() - 5;
        raw[at] ^= 0x40;
        fs::write(&path, &raw).unwrap();
        let err = load_model::<f32>(&path).unwrap_err();
        assert!(matches!(err, ModelError::Checkpoint(m) if m.contains("checksum")));
    }

    #[test]
    fn wrong_precision_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_model(&path, &tiny(), None).unwrap();
        assert!(load_model::<f64>(&path).is_err());
    }
}
