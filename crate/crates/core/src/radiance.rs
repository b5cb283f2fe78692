//! View-dependent color network `c(x, d, n, z) ∈ (0,1)³`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{sh_encode_into, Activation, DenseCache, DenseLayer, GradBuffer, ParameterStore, Params, SH_COMPONENTS};
use crate::real::Real;

/// Floor on `|∇SDF|` when normalizing gradients into normals.
pub const NORMAL_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadianceConfig {
    pub hidden: usize,
    pub hidden_layers: usize,
    pub geometry_features: usize,
}

#[derive(Clone, Debug)]
pub struct RadianceNetwork {
    layers: Vec<DenseLayer>,
    geometry_features: usize,
}

#[derive(Clone, Debug)]
pub struct RadianceCache<F> {
    input: Vec<F>,
    layers: Vec<DenseCache<F>>,
    deltas: Vec<Vec<F>>,
    d_input: Vec<F>,
    filled: bool,
}

impl<F: Real> RadianceCache<F> {
    pub fn new(net: &RadianceNetwork) -> Self {
        Self {
            input: vec![F::zero(); net.input_dim()],
            layers: net.layers.iter().map(DenseCache::new).collect(),
            deltas: net.layers.iter().map(|l| vec![F::zero(); l.in_dim()]).collect(),
            d_input: vec![F::zero(); net.input_dim()],
            filled: false,
        }
    }

    pub fn color(&self) -> [F; 3] {
        let o = self.layers.last().expect("radiance network has layers").output();
        [o[0], o[1], o[2]]
    }
}

/// Gradient of the color with respect to the differentiable inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RadianceInputGrad<'a, F> {
    pub normal: [F; 3],
    pub features: &'a [F],
}

/// `g / max(|g|, 1e-12)`.
pub fn normalize_gradient<F: Real>(g: [F; 3]) -> [F; 3] {
    let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt().max(F::of(NORMAL_FLOOR));
    [g[0] / n, g[1] / n, g[2] / n]
}

/// Pulls `∂L/∂n` back through [`normalize_gradient`].
pub fn normalize_gradient_backward<F: Real>(g: [F; 3], dn: [F; 3]) -> [F; 3] {
    let len = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if len <= F::of(NORMAL_FLOOR) {
        let inv = F::one() / F::of(NORMAL_FLOOR);
        return [dn[0] * inv, dn[1] * inv, dn[2] * inv];
    }
    let n = [g[0] / len, g[1] / len, g[2] / len];
    let p = n[0] * dn[0] + n[1] * dn[1] + n[2] * dn[2];
    [
        (dn[0] - n[0] * p) / len,
        (dn[1] - n[1] * p) / len,
        (dn[2] - n[2] * p) / len,
    ]
}

impl RadianceNetwork {
    pub fn new<F: Real, R: Rng + ?Sized>(store: &mut ParameterStore<F>, cfg: &RadianceConfig, rng: &mut R) -> Result<Self> {
        if cfg.hidden_layers == 0 || cfg.hidden == 0 {
            return Err(Error::Config("radiance network needs at least one hidden layer".into()));
        }
        let input = 3 + SH_COMPONENTS + 3 + cfg.geometry_features;
        let mut layers = Vec::with_capacity(cfg.hidden_layers + 1);
        let mut fan_in = input;
        for i in 0..cfg.hidden_layers {
            let name = alloc::format!("rgb.layer{i}");
            layers.push(DenseLayer::new(store, &name, fan_in, cfg.hidden, Activation::Relu));
            fan_in = cfg.hidden;
        }
        layers.push(DenseLayer::new(store, "rgb.output", fan_in, 3, Activation::Sigmoid));
        for layer in &layers {
            let limit = Real::sqrt(6.0 / (layer.in_dim() + layer.out_dim()) as f64);
            for w in store.values_mut().get_mut(layer.weight()) {
                *w = F::of(rng.random_range(-limit..limit));
            }
        }
        Ok(Self {
            layers,
            geometry_features: cfg.geometry_features,
        })
    }

    pub fn input_dim(&self) -> usize {
        3 + SH_COMPONENTS + 3 + self.geometry_features
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn forward<F: Real>(
        &self,
        params: &Params<F>,
        x: [F; 3],
        dir: [F; 3],
        normal: [F; 3],
        features: &[F],
        cache: &mut RadianceCache<F>,
    ) -> Result<[F; 3]> {
        if features.len() != self.geometry_features {
            return Err(Error::LengthMismatch {
                what: "geometry features",
                expected: self.geometry_features,
                got: features.len(),
            });
        }
        let inp = &mut cache.input;
        inp[..3].copy_from_slice(&x);
        sh_encode_into(dir, &mut inp[3..3 + SH_COMPONENTS]);
        inp[3 + SH_COMPONENTS..6 + SH_COMPONENTS].copy_from_slice(&normal);
        inp[6 + SH_COMPONENTS..].copy_from_slice(features);
        for i in 0..self.layers.len() {
            let (done, rest) = cache.layers.split_at_mut(i);
            let x = if i == 0 { &cache.input[..] } else { done[i - 1].output() };
            self.layers[i].forward(params, x, &mut rest[0])?;
        }
        cache.filled = true;
        Ok(cache.color())
    }

    /// Accumulates parameter gradients and returns the sensitivities of the
    /// normal and the geometry feature.
    pub fn backward<'c, F: Real>(
        &self,
        params: &Params<F>,
        cache: &'c mut RadianceCache<F>,
        d_color: [F; 3],
        grads: &mut GradBuffer<F>,
    ) -> Result<RadianceInputGrad<'c, F>> {
        if !cache.filled {
            return Err(Error::MissingCache("radiance network"));
        }
        let n = self.layers.len();
        let mut upstream: Vec<F> = d_color.to_vec();
        for i in (0..n).rev() {
            let dx = if i == 0 { &mut cache.d_input } else { &mut cache.deltas[i] };
            self.layers[i].backward(params, &mut cache.layers[i], &upstream, grads, Some(dx))?;
            if i > 0 {
                upstream.clear();
                upstream.extend_from_slice(&cache.deltas[i]);
            }
        }
        let d = &cache.d_input;
        let o = 3 + SH_COMPONENTS;
        Ok(RadianceInputGrad {
            normal: [d[o], d[o + 1], d[o + 2]],
            features: &cache.d_input[o + 3..],
        })
    }
}
