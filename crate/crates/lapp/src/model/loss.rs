//! Training objective: the sum of two binary cross-entropy terms, one per
//! head — the language-conditioned label and the unconditional auxiliary
//! label.

use crate::num::Real;

/// Binary cross-entropy with log arguments clamped at 1e-7.
pub fn bce<S: Real>(p: S, y: S) -> S {
    let eps = S::of(1e-7);
    -(y * p.max(eps).ln() + (S::one() - y) * (S::one() - p).max(eps).ln())
}

/// `CE(y_l, p_lang) + CE(y, p_uncond)`.
pub fn loss_pair<S: Real>(p_lang: S, p_uncond: S, y_l: S, y: S) -> S {
    bce(p_lang, y_l) + bce(p_uncond, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let l = loss_pair(1.0f64, 0.0, 1.0, 0.0);
        assert!(l.abs() < 1e-6, "loss {l}");
    }

    #[test]
    fn coin_flip_is_two_ln_two() {
        let l = loss_pair(0.5f64, 0.5, 1.0, 0.0);
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn additivity() {
        let (pl, pu, yl, y) = (0.3f64, 0.8, 1.0, 1.0);
        assert_eq!(loss_pair(pl, pu, yl, y), bce(pl, yl) + bce(pu, y));
    }
}
