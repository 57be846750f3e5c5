//! Dense row-major tensors for the network. Debug builds guard every
//! construction and in-place op against non-finite values.

use rand::Rng as _;

use crate::num::Real;
use crate::rng::Rng;

/// Standard normal draw (Box-Muller).
pub fn normal_sample(rng: &mut Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    pub shape: Vec<usize>,
    pub data: Vec<S>,
}

impl<S: Real> Tensor<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![S::zero(); n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        let t = Tensor {
            shape: shape.to_vec(),
            data,
        };
        t.debug_check("from_vec");
        t
    }

    /// Gaussian init with the given standard deviation.
    pub fn randn(shape: &[usize], std: f64, rng: &mut Rng) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| S::of(normal_sample(rng) * std)).collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: S) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn zero_(&mut self) {
        self.fill(S::zero());
    }

    /// NaN/Inf guard, active in debug builds only.
    #[inline]
    pub fn debug_check(&self, what: &str) {
        debug_assert!(
            self.data.iter().all(|v| v.is_finite()),
            "non-finite value in tensor `{what}`"
        );
    }
}

/// Elementwise checks used by layer code on raw activation buffers.
#[inline]
pub fn debug_check_slice<S: Real>(data: &[S], what: &str) {
    debug_assert!(
        data.iter().all(|v| v.is_finite()),
        "non-finite value in `{what}`"
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn randn_is_deterministic() {
        let mut a = stream_rng(5, 1);
        let mut b = stream_rng(5, 1);
        let x = Tensor::<f32>::randn(&[3, 4], 0.02, &mut a);
        let y = Tensor::<f32>::randn(&[3, 4], 0.02, &mut b);
        assert_eq!(x, y);
        assert_eq!(x.len(), 12);
    }

    #[test]
    #[should_panic(expected = "non-finite")]
    #[cfg(debug_assertions)]
    fn nan_guard_trips() {
        Tensor::<f32>::from_vec(&[2], vec![1.0, f32::NAN]);
    }
}
