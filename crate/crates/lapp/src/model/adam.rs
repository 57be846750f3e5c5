//! First/second-moment adaptive optimizer with bias correction.

use crate::num::Real;
use crate::tensor::Tensor;

use super::net::CollisionModel;

#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<Tensor<S>>,
    pub v: Vec<Tensor<S>>,
}

impl<S: Real> Adam<S> {
    pub fn new(model: &CollisionModel<S>) -> Self {
        let mut m = Vec::new();
        model.visit_params(&mut |_, w| m.push(Tensor::zeros(&w.shape)));
        let v = m.clone();
        Adam {
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m,
            v,
        }
    }

    /// One update using the gradients currently stored in the model.
    pub fn step(&mut self, model: &mut CollisionModel<S>, lr: f64) {
        self.t += 1;
        let b1 = S::of(self.beta1);
        let b2 = S::of(self.beta2);
        let one = S::one();
        let bc1 = S::of(1.0 - self.beta1.powi(self.t as i32));
        let bc2 = S::of(1.0 - self.beta2.powi(self.t as i32));
        let lr = S::of(lr);
        let eps = S::of(self.eps);
        let mut idx = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        model.visit_params_mut(&mut |_, w, g| {
            let m = &mut ms[idx];
            let v = &mut vs[idx];
            for i in 0..w.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (one - b1) * gi;
                v.data[i] = b2 * v.data[i] + (one - b2) * gi * gi;
                let mhat = m.data[i] / bc1;
                let vhat = v.data[i] / bc2;
                w.data[i] = w.data[i] - lr * mhat / (vhat.sqrt() + eps);
            }
            idx += 1;
        });
    }
}
