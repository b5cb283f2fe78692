use serde::{Deserialize, Serialize};

use super::params::ParameterStore;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-15,
        }
    }
}

impl<F: Real> ParameterStore<F> {
    /// One Adam update with bias correction over every non-frozen array.
    ///
    /// An array whose gradient holds a non-finite value is left untouched
    /// (moments included) and counted in [`ParameterStore::nonfinite_skips`].
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        let t = self.step + 1;
        let bc1 = 1.0 - Real::powf(cfg.beta1, t as f64);
        let bc2 = 1.0 - Real::powf(cfg.beta2, t as f64);
        let lr = F::of(cfg.lr);
        let b1 = F::of(cfg.beta1);
        let b2 = F::of(cfg.beta2);
        let one_m_b1 = F::of(1.0 - cfg.beta1);
        let one_m_b2 = F::of(1.0 - cfg.beta2);
        let inv_bc1 = F::of(1.0 / bc1);
        let inv_bc2 = F::of(1.0 / bc2);
        let eps = F::of(cfg.eps);

        let ParameterStore {
            values,
            grads,
            frozen,
            moment1,
            moment2,
            nonfinite_skips,
            ..
        } = self;
        let arrays = values
            .arrays
            .iter_mut()
            .zip(&grads.arrays)
            .zip(moment1.arrays.iter_mut().zip(moment2.arrays.iter_mut()))
            .zip(frozen.iter());
        for (((p, g), (m, v)), &is_frozen) in arrays {
            if is_frozen {
                continue;
            }
            if g.iter().any(|x| !x.is_finite()) {
                *nonfinite_skips += 1;
                continue;
            }
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + one_m_b1 * g;
                *v = b2 * *v + one_m_b2 * g * g;
                let mh = *m * inv_bc1;
                let vh = *v * inv_bc2;
                *p -= lr * mh / (vh.sqrt() + eps);
            }
        }
        self.step = t;
    }
}
