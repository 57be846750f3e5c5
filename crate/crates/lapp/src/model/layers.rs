//! Network building blocks with explicit forward/backward passes.

use crate::num::{gemm, Real};
use crate::rng::Rng;
use crate::tensor::{debug_check_slice, Tensor};

/// Dense layer `y = x @ w + b`, weights stored `[in, out]` row-major.
#[derive(Debug, Clone)]
pub struct Linear<S> {
    pub w: Tensor<S>,
    pub b: Tensor<S>,
    pub gw: Tensor<S>,
    pub gb: Tensor<S>,
    pub d_in: usize,
    pub d_out: usize,
}

impl<S: Real> Linear<S> {
    pub fn new(d_in: usize, d_out: usize, rng: &mut Rng) -> Self {
        let std = (1.0 / d_in as f64).sqrt();
        Linear {
            w: Tensor::randn(&[d_in, d_out], std, rng),
            b: Tensor::zeros(&[d_out]),
            gw: Tensor::zeros(&[d_in, d_out]),
            gb: Tensor::zeros(&[d_out]),
            d_in,
            d_out,
        }
    }

    /// Zero-initialized layer (used for head outputs so an untrained model
    /// predicts probability one half exactly).
    pub fn new_zeroed(d_in: usize, d_out: usize) -> Self {
        Linear {
            w: Tensor::zeros(&[d_in, d_out]),
            b: Tensor::zeros(&[d_out]),
            gw: Tensor::zeros(&[d_in, d_out]),
            gb: Tensor::zeros(&[d_out]),
            d_in,
            d_out,
        }
    }

    pub fn forward(&self, x: &[S], rows: usize, y: &mut Vec<S>) {
        y.resize(rows * self.d_out, S::zero());
        for r in 0..rows {
            y[r * self.d_out..(r + 1) * self.d_out].copy_from_slice(&self.b.data);
        }
        if rows > 0 {
            gemm(
                false,
                false,
                rows,
                self.d_in,
                self.d_out,
                S::one(),
                x,
                &self.w.data,
                S::one(),
                y,
            );
        }
        debug_check_slice(y, "linear.forward");
    }

    /// Accumulates weight gradients; writes input gradients into `dx` when
    /// provided.
    pub fn backward(&mut self, x: &[S], dy: &[S], rows: usize, dx: Option<&mut Vec<S>>) {
        if rows == 0 {
            return;
        }
        gemm(
            true,
            false,
            self.d_in,
            rows,
            self.d_out,
            S::one(),
            x,
            dy,
            S::one(),
            &mut self.gw.data,
        );
        for r in 0..rows {
            for o in 0..self.d_out {
                self.gb.data[o] += dy[r * self.d_out + o];
            }
        }
        if let Some(dx) = dx {
            dx.resize(rows * self.d_in, S::zero());
            gemm(
                false,
                true,
                rows,
                self.d_out,
                self.d_in,
                S::one(),
                dy,
                &self.w.data,
                S::zero(),
                dx,
            );
        }
    }
}

/// ReLU with cached input sign.
pub fn relu_forward<S: Real>(x: &mut [S]) -> Vec<bool> {
    let mut mask = Vec::with_capacity(x.len());
    for v in x.iter_mut() {
        let on = *v > S::zero();
        mask.push(on);
        if !on {
            *v = S::zero();
        }
    }
    mask
}

pub fn relu_backward<S: Real>(dy: &mut [S], mask: &[bool]) {
    for (v, &on) in dy.iter_mut().zip(mask) {
        if !on {
            *v = S::zero();
        }
    }
}

/// Per-row layer normalization.
#[derive(Debug, Clone)]
pub struct LayerNorm<S> {
    pub g: Tensor<S>,
    pub b: Tensor<S>,
    pub gg: Tensor<S>,
    pub gb: Tensor<S>,
    pub dim: usize,
}

pub struct LayerNormCache<S> {
    /// normalized inputs, same shape as x
    pub xhat: Vec<S>,
    pub rstd: Vec<S>,
}

impl<S: Real> LayerNorm<S> {
    pub fn new(dim: usize) -> Self {
        let mut g = Tensor::zeros(&[dim]);
        g.fill(S::one());
        LayerNorm {
            g,
            b: Tensor::zeros(&[dim]),
            gg: Tensor::zeros(&[dim]),
            gb: Tensor::zeros(&[dim]),
            dim,
        }
    }

    pub fn forward(&self, x: &[S], rows: usize, y: &mut Vec<S>) -> LayerNormCache<S> {
        let d = self.dim;
        let eps = S::of(1e-5);
        y.resize(rows * d, S::zero());
        let mut xhat = vec![S::zero(); rows * d];
        let mut rstd = vec![S::zero(); rows];
        let inv_d = S::one() / S::of(d as f64);
        for r in 0..rows {
            let row = &x[r * d..(r + 1) * d];
            let mean = row.iter().copied().sum::<S>() * inv_d;
            let var = row
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<S>()
                * inv_d;
            let rs = S::one() / (var + eps).sqrt();
            rstd[r] = rs;
            for i in 0..d {
                let xh = (row[i] - mean) * rs;
                xhat[r * d + i] = xh;
                y[r * d + i] = xh * self.g.data[i] + self.b.data[i];
            }
        }
        debug_check_slice(y, "layernorm.forward");
        LayerNormCache { xhat, rstd }
    }

    pub fn backward(&mut self, cache: &LayerNormCache<S>, dy: &[S], rows: usize, dx: &mut Vec<S>) {
        let d = self.dim;
        dx.resize(rows * d, S::zero());
        let inv_d = S::one() / S::of(d as f64);
        for r in 0..rows {
            let xh = &cache.xhat[r * d..(r + 1) * d];
            let dyr = &dy[r * d..(r + 1) * d];
            let mut sum_dxhat = S::zero();
            let mut sum_dxhat_xhat = S::zero();
            for i in 0..d {
                self.gg.data[i] += dyr[i] * xh[i];
                self.gb.data[i] += dyr[i];
                let dxhat = dyr[i] * self.g.data[i];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xh[i];
            }
            let rs = cache.rstd[r];
            for i in 0..d {
                let dxhat = dyr[i] * self.g.data[i];
                dx[r * d + i] =
                    rs * (dxhat - sum_dxhat * inv_d - xh[i] * sum_dxhat_xhat * inv_d);
            }
        }
    }
}

/// Bidirectional multi-head self-attention.
#[derive(Debug, Clone)]
pub struct Attention<S> {
    pub wqkv: Linear<S>,
    pub wo: Linear<S>,
    pub heads: usize,
    pub dim: usize,
}

pub struct AttentionCache<S> {
    pub x_qkv_in: Vec<S>,
    pub qkv: Vec<S>,
    /// per (batch, head): row-softmax probabilities, `t x t`
    pub probs: Vec<S>,
    /// concatenated head outputs before the output projection
    pub att: Vec<S>,
}

impl<S: Real> Attention<S> {
    pub fn new(dim: usize, heads: usize, rng: &mut Rng) -> Self {
        assert_eq!(dim % heads, 0);
        Attention {
            wqkv: Linear::new(dim, 3 * dim, rng),
            wo: Linear::new(dim, dim, rng),
            heads,
            dim,
        }
    }

    pub fn forward(&self, x: &[S], batch: usize, t: usize, y: &mut Vec<S>) -> AttentionCache<S> {
        let d = self.dim;
        let h = self.heads;
        let hd = d / h;
        let scale = S::of(1.0 / (hd as f64).sqrt());
        let rows = batch * t;

        let mut qkv = Vec::new();
        self.wqkv.forward(x, rows, &mut qkv);

        let mut probs = vec![S::zero(); batch * h * t * t];
        let mut att = vec![S::zero(); rows * d];
        let mut qb = vec![S::zero(); t * hd];
        let mut kb = vec![S::zero(); t * hd];
        let mut vb = vec![S::zero(); t * hd];
        let mut scores = vec![S::zero(); t * t];
        let mut ob = vec![S::zero(); t * hd];

        for b in 0..batch {
            for head in 0..h {
                gather_head(&qkv, b, t, 3 * d, head, hd, 0, &mut qb);
                gather_head(&qkv, b, t, 3 * d, head, hd, d, &mut kb);
                gather_head(&qkv, b, t, 3 * d, head, hd, 2 * d, &mut vb);
                // scores = Q K^T * scale
                gemm(false, true, t, hd, t, scale, &qb, &kb, S::zero(), &mut scores);
                softmax_rows(&mut scores, t, t);
                let pslice = &mut probs[(b * h + head) * t * t..(b * h + head + 1) * t * t];
                pslice.copy_from_slice(&scores);
                // out = probs @ V
                gemm(false, false, t, t, hd, S::one(), &scores, &vb, S::zero(), &mut ob);
                scatter_head(&ob, b, t, d, head, hd, &mut att);
            }
        }
        debug_check_slice(&att, "attention.att");
        self.wo.forward(&att, rows, y);
        AttentionCache {
            x_qkv_in: x.to_vec(),
            qkv,
            probs,
            att,
        }
    }

    pub fn backward(
        &mut self,
        cache: &AttentionCache<S>,
        dy: &[S],
        batch: usize,
        t: usize,
        dx: &mut Vec<S>,
    ) {
        let d = self.dim;
        let h = self.heads;
        let hd = d / h;
        let scale = S::of(1.0 / (hd as f64).sqrt());
        let rows = batch * t;

        let mut datt = Vec::new();
        self.wo.backward(&cache.att, dy, rows, Some(&mut datt));

        let mut dqkv = vec![S::zero(); rows * 3 * d];
        let mut qb = vec![S::zero(); t * hd];
        let mut kb = vec![S::zero(); t * hd];
        let mut vb = vec![S::zero(); t * hd];
        let mut dob = vec![S::zero(); t * hd];
        let mut dprobs = vec![S::zero(); t * t];
        let mut dscores = vec![S::zero(); t * t];
        let mut dqb = vec![S::zero(); t * hd];
        let mut dkb = vec![S::zero(); t * hd];
        let mut dvb = vec![S::zero(); t * hd];

        for b in 0..batch {
            for head in 0..h {
                gather_head(&cache.qkv, b, t, 3 * d, head, hd, 0, &mut qb);
                gather_head(&cache.qkv, b, t, 3 * d, head, hd, d, &mut kb);
                gather_head(&cache.qkv, b, t, 3 * d, head, hd, 2 * d, &mut vb);
                gather_head(&datt, b, t, d, head, hd, 0, &mut dob);
                let probs = &cache.probs[(b * h + head) * t * t..(b * h + head + 1) * t * t];

                // dV = P^T dO ; dP = dO V^T
                gemm(true, false, t, t, hd, S::one(), probs, &dob, S::zero(), &mut dvb);
                gemm(false, true, t, hd, t, S::one(), &dob, &vb, S::zero(), &mut dprobs);
                // softmax backward per row
                for r in 0..t {
                    let p = &probs[r * t..(r + 1) * t];
                    let dp = &dprobs[r * t..(r + 1) * t];
                    let dot = p
                        .iter()
                        .zip(dp)
                        .map(|(&pi, &di)| pi * di)
                        .sum::<S>();
                    for c in 0..t {
                        dscores[r * t + c] = p[c] * (dp[c] - dot);
                    }
                }
                // dQ = dS K * scale ; dK = dS^T Q * scale
                gemm(false, false, t, t, hd, scale, &dscores, &kb, S::zero(), &mut dqb);
                gemm(true, false, t, t, hd, scale, &dscores, &qb, S::zero(), &mut dkb);

                scatter_head_into(&dqb, b, t, 3 * d, head, hd, 0, &mut dqkv);
                scatter_head_into(&dkb, b, t, 3 * d, head, hd, d, &mut dqkv);
                scatter_head_into(&dvb, b, t, 3 * d, head, hd, 2 * d, &mut dqkv);
            }
        }
        self.wqkv.backward(&cache.x_qkv_in, &dqkv, rows, Some(dx));
    }
}

#[allow(clippy::too_many_arguments)]
fn gather_head<S: Real>(
    buf: &[S],
    b: usize,
    t: usize,
    row_w: usize,
    head: usize,
    hd: usize,
    section: usize,
    out: &mut [S],
) {
    for row in 0..t {
        let src = (b * t + row) * row_w + section + head * hd;
        out[row * hd..(row + 1) * hd].copy_from_slice(&buf[src..src + hd]);
    }
}

fn scatter_head<S: Real>(ob: &[S], b: usize, t: usize, d: usize, head: usize, hd: usize, att: &mut [S]) {
    for row in 0..t {
        let dst = (b * t + row) * d + head * hd;
        att[dst..dst + hd].copy_from_slice(&ob[row * hd..(row + 1) * hd]);
    }
}

fn scatter_head_into<S: Real>(
    src: &[S],
    b: usize,
    t: usize,
    row_w: usize,
    head: usize,
    hd: usize,
    section: usize,
    dst: &mut [S],
) {
    for row in 0..t {
        let at = (b * t + row) * row_w + section + head * hd;
        dst[at..at + hd].copy_from_slice(&src[row * hd..(row + 1) * hd]);
    }
}

pub fn softmax_rows<S: Real>(x: &mut [S], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &mut x[r * cols..(r + 1) * cols];
        let mx = row.iter().copied().fold(S::neg_infinity(), S::max);
        let mut sum = S::zero();
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn linear_forward_matches_naive() {
        let mut rng = stream_rng(1, 0);
        let lin = Linear::<f64>::new(3, 2, &mut rng);
        let x = vec![0.5, -1.0, 2.0, 0.1, 0.2, 0.3];
        let mut y = Vec::new();
        lin.forward(&x, 2, &mut y);
        for r in 0..2 {
            for o in 0..2 {
                let mut expect = lin.b.data[o];
                for i in 0..3 {
                    expect += x[r * 3 + i] * lin.w.data[i * 2 + o];
                }
                assert!((y[r * 2 + o] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_rows_normalize() {
        let mut x = vec![1.0f64, 2.0, 3.0, -1.0, 0.0, 1.0];
        softmax_rows(&mut x, 2, 3);
        for r in 0..2 {
            let s: f64 = x[r * 3..(r + 1) * 3].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn layernorm_rows_standardized() {
        let ln = LayerNorm::<f64>::new(4);
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let mut y = Vec::new();
        ln.forward(&x, 1, &mut y);
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-9);
    }
}
