//! Spatially varying per-level mask `s(x) ∈ (0,1)^L`.
//!
//! A small hash grid feeds a one-hidden-layer MLP whose outputs, one per level
//! of the SDF grid, scale the corresponding feature blocks:
//! `h(x) = [s_1(x)·f_1, …, s_L(x)·f_L]`. Gradients never reach the mask
//! outputs of levels that are not yet active.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash_grid::{EncodeCache, GridConfig, HashGrid};
use crate::nn::{Activation, DenseCache, DenseLayer, GradBuffer, ParameterStore, Params};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskActivation {
    Sigmoid,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskFieldConfig {
    pub grid: GridConfig,
    pub hidden: usize,
    pub softplus_beta: f64,
    pub activation: MaskActivation,
    /// Number of SDF grid levels the mask modulates.
    pub sdf_levels: usize,
    pub output_bias_init: f64,
}

#[derive(Clone, Debug)]
pub struct SpatialMaskField {
    grid: HashGrid,
    hidden: DenseLayer,
    output: DenseLayer,
    activation: MaskActivation,
    levels: usize,
}

#[derive(Clone, Debug)]
pub struct MaskCache<F> {
    encode: EncodeCache<F>,
    g: Vec<F>,
    hidden: DenseCache<F>,
    output: DenseCache<F>,
    s: Vec<F>,
    ds: Vec<F>,
    dz: Vec<F>,
    dhidden: Vec<F>,
    dg: Vec<F>,
    filled: bool,
}

impl<F: Real> MaskCache<F> {
    pub fn new(field: &SpatialMaskField) -> Self {
        let l = field.levels;
        Self {
            encode: EncodeCache::new(&field.grid),
            g: vec![F::zero(); field.grid.output_dim()],
            hidden: DenseCache::new(&field.hidden),
            output: DenseCache::new(&field.output),
            s: vec![F::zero(); l],
            ds: vec![F::zero(); l],
            dz: vec![F::zero(); l],
            dhidden: vec![F::zero(); field.hidden.out_dim()],
            dg: vec![F::zero(); field.grid.output_dim()],
            filled: false,
        }
    }

    /// Mask values of the last forward call.
    pub fn values(&self) -> &[F] {
        &self.s
    }

    pub fn clamped(&self) -> bool {
        self.encode.clamped()
    }
}

fn xavier<F: Real, R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> impl Iterator<Item = F> + '_ {
    let limit = Real::sqrt(6.0 / (n_in + n_out) as f64);
    (0..n_in * n_out).map(move |_| F::of(rng.random_range(-limit..limit)))
}

impl SpatialMaskField {
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParameterStore<F>,
        name: &str,
        cfg: &MaskFieldConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let grid = HashGrid::new(store, &format!("{name}.grid"), &cfg.grid, rng)?;
        let beta = cfg.softplus_beta;
        let hidden = DenseLayer::new(
            store,
            &format!("{name}.hidden"),
            grid.output_dim(),
            cfg.hidden,
            Activation::Softplus { beta },
        );
        let output = DenseLayer::new(
            store,
            &format!("{name}.output"),
            cfg.hidden,
            cfg.sdf_levels,
            Activation::Identity,
        );
        let w: Vec<F> = xavier(grid.output_dim(), cfg.hidden, rng).collect();
        store.values_mut().get_mut(hidden.weight()).copy_from_slice(&w);
        let w: Vec<F> = xavier(cfg.hidden, cfg.sdf_levels, rng).collect();
        store.values_mut().get_mut(output.weight()).copy_from_slice(&w);
        store
            .values_mut()
            .get_mut(output.bias())
            .fill(F::of(cfg.output_bias_init));
        Ok(Self {
            grid,
            hidden,
            output,
            activation: cfg.activation,
            levels: cfg.sdf_levels,
        })
    }

    pub fn grid(&self) -> &HashGrid {
        &self.grid
    }

    pub fn hidden_layer(&self) -> &DenseLayer {
        &self.hidden
    }

    pub fn output_layer(&self) -> &DenseLayer {
        &self.output
    }

    pub fn activation(&self) -> MaskActivation {
        self.activation
    }

    pub fn set_activation(&mut self, activation: MaskActivation) {
        self.activation = activation;
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Every parameter array owned by the field.
    pub fn param_ids(&self) -> Vec<crate::nn::ParamId> {
        let mut ids: Vec<_> = self.grid.tables().to_vec();
        ids.extend([
            self.hidden.weight(),
            self.hidden.bias(),
            self.output.weight(),
            self.output.bias(),
        ]);
        ids
    }

    /// `s = act(MLP(g(x)))`, all mask-grid levels active.
    pub fn forward<F: Real>(&self, params: &Params<F>, x: [F; 3], cache: &mut MaskCache<F>) -> Result<()> {
        let levels = self.grid.level_count();
        self.grid.encode(params, x, levels, &mut cache.g, &mut cache.encode)?;
        self.hidden.forward(params, &cache.g, &mut cache.hidden)?;
        self.output.forward(params, cache.hidden.output(), &mut cache.output)?;
        let z = cache.output.output();
        match self.activation {
            MaskActivation::Sigmoid => {
                for (s, &z) in cache.s.iter_mut().zip(z) {
                    *s = crate::nn::activate(Activation::Sigmoid, z);
                }
            }
            MaskActivation::Softmax => {
                let m = z.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
                let mut sum = F::zero();
                for (s, &z) in cache.s.iter_mut().zip(z) {
                    *s = (z - m).exp();
                    sum += *s;
                }
                for s in cache.s.iter_mut() {
                    *s /= sum;
                }
            }
        }
        cache.filled = true;
        Ok(())
    }

    /// Backpropagates `∂L/∂h` through the mask path.
    ///
    /// `∂L/∂s_l = ⟨upstream_l, f_l⟩` for active levels and exactly zero
    /// otherwise; for softmax the pre-activation gradient of inactive levels
    /// is also zeroed so their output rows receive nothing. Writes
    /// `∂L/∂f_l = s_l · upstream_l` into `df`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<F: Real>(
        &self,
        params: &Params<F>,
        cache: &mut MaskCache<F>,
        upstream_h: &[F],
        f: &[F],
        active: usize,
        grads: &mut GradBuffer<F>,
        df: &mut [F],
    ) -> Result<()> {
        if !cache.filled {
            return Err(Error::MissingCache("spatial mask"));
        }
        let nf = check_lengths(cache.s.len(), f.len(), upstream_h.len())?;
        if df.len() != f.len() {
            return Err(Error::LengthMismatch {
                what: "mask feature gradient",
                expected: f.len(),
                got: df.len(),
            });
        }
        for l in 0..self.levels {
            let block = l * nf..(l + 1) * nf;
            if l < active {
                let up = &upstream_h[block.clone()];
                cache.ds[l] = up.iter().zip(&f[block.clone()]).map(|(u, v)| *u * *v).sum();
                let s = cache.s[l];
                for (d, u) in df[block].iter_mut().zip(up) {
                    *d = s * *u;
                }
            } else {
                cache.ds[l] = F::zero();
                df[block].fill(F::zero());
            }
        }
        match self.activation {
            MaskActivation::Sigmoid => {
                for l in 0..self.levels {
                    let s = cache.s[l];
                    cache.dz[l] = cache.ds[l] * s * (F::one() - s);
                }
            }
            MaskActivation::Softmax => {
                let dot: F = cache.s.iter().zip(&cache.ds).map(|(s, d)| *s * *d).sum();
                for l in 0..self.levels {
                    cache.dz[l] = if l < active {
                        cache.s[l] * (cache.ds[l] - dot)
                    } else {
                        F::zero()
                    };
                }
            }
        }
        if cache.dz.iter().all(|d| *d == F::zero()) {
            return Ok(());
        }
        self.output.backward(
            params,
            &mut cache.output,
            &cache.dz,
            grads,
            Some(&mut cache.dhidden),
        )?;
        self.hidden
            .backward(params, &mut cache.hidden, &cache.dhidden, grads, Some(&mut cache.dg))?;
        self.grid.encode_backward(&cache.encode, &cache.dg, grads)?;
        Ok(())
    }
}

fn check_lengths(levels: usize, f_len: usize, up_len: usize) -> Result<usize> {
    if levels == 0 || !f_len.is_multiple_of(levels) {
        return Err(Error::LengthMismatch {
            what: "mask features",
            expected: levels,
            got: f_len,
        });
    }
    if up_len != f_len {
        return Err(Error::LengthMismatch {
            what: "mask upstream",
            expected: f_len,
            got: up_len,
        });
    }
    Ok(f_len / levels)
}

/// Block `l` of `out` = `s_l · f_l` for `l < active`; the rest is zero.
pub fn apply_mask<F: Real>(s: &[F], f: &[F], active: usize, out: &mut [F]) -> Result<()> {
    let nf = check_lengths(s.len(), f.len(), out.len())?;
    for (l, &sl) in s.iter().enumerate() {
        let block = l * nf..(l + 1) * nf;
        if l < active {
            for (o, v) in out[block.clone()].iter_mut().zip(&f[block]) {
                *o = sl * *v;
            }
        } else {
            out[block].fill(F::zero());
        }
    }
    Ok(())
}
