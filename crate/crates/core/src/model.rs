//! The assembled reconstruction model: masked SDF network, color network and
//! opacity sharpness, all living in one [`ParameterStore`].

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{MaskSetting, ModelConfig};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::nn::{ParameterStore, Params};
use crate::radiance::{normalize_gradient, RadianceCache, RadianceNetwork};
use crate::real::Real;
use crate::render::{OpacityConverter, VolumeField};
use crate::sdf::{MaskMode, SdfCache, SdfNetwork, StencilCache};

/// Independent initialization streams, so that adding or removing the mask
/// field leaves every other initial value untouched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum InitStream {
    SdfGrid = 1,
    SdfMlp = 2,
    Mask = 3,
    Radiance = 4,
}

pub fn init_rng(seed: u64, stream: InitStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Clone, Debug)]
pub struct NeuralSurface {
    config: ModelConfig,
    sdf: SdfNetwork,
    radiance: RadianceNetwork,
    opacity: OpacityConverter,
}

impl NeuralSurface {
    pub fn new<F: Real>(config: &ModelConfig, seed: u64, store: &mut ParameterStore<F>) -> Result<Self> {
        if config.mask_setting != MaskSetting::None && config.mask.is_none() {
            return Err(Error::Config("mask setting requires a mask field configuration".into()));
        }
        let mut rng_grid = init_rng(seed, InitStream::SdfGrid);
        let mut rng_mlp = init_rng(seed, InitStream::SdfMlp);
        let mut rng_mask = init_rng(seed, InitStream::Mask);
        let mut rng_rgb = init_rng(seed, InitStream::Radiance);
        let mask_cfg = match config.mask_setting {
            MaskSetting::None => None,
            _ => config.mask.as_ref(),
        };
        let mut sdf = SdfNetwork::new(store, &config.sdf, mask_cfg, &mut rng_grid, &mut rng_mlp, &mut rng_mask)?;
        let radiance = RadianceNetwork::new(store, &config.radiance, &mut rng_rgb)?;
        let opacity = OpacityConverter::new(store);
        if config.mask_setting == MaskSetting::Pinned {
            sdf.set_mask_mode(MaskMode::Pinned(config.mask_pin_value))?;
            for id in sdf.mask_param_ids() {
                store.set_frozen(id, true);
            }
        }
        Ok(Self {
            config: *config,
            sdf,
            radiance,
            opacity,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn sdf(&self) -> &SdfNetwork {
        &self.sdf
    }

    pub fn sdf_mut(&mut self) -> &mut SdfNetwork {
        &mut self.sdf
    }

    pub fn radiance(&self) -> &RadianceNetwork {
        &self.radiance
    }

    pub fn opacity(&self) -> &OpacityConverter {
        &self.opacity
    }

    pub fn levels(&self) -> usize {
        self.sdf.grid().level_count()
    }

    /// SDF with every level active, as used for extraction.
    pub fn field<'a, F: Real>(&'a self, params: &'a Params<F>) -> FieldEval<'a, F> {
        FieldEval {
            net: &self.sdf,
            params,
            active: self.levels(),
        }
    }

    /// Volume-rendering view of the model at a given number of active levels.
    pub fn renderer<'a, F: Real>(&'a self, params: &'a Params<F>, active: usize) -> NeuralRenderer<'a, F> {
        NeuralRenderer {
            model: self,
            params,
            active,
            eps: crate::sdf::epsilon_for_level(active, self.sdf.grid()),
        }
    }
}

/// Pointwise SDF evaluation with a reusable cache.
pub struct FieldEval<'a, F> {
    net: &'a SdfNetwork,
    params: &'a Params<F>,
    active: usize,
}

impl<F: Real> FieldEval<'_, F> {
    pub fn cache(&self) -> SdfCache<F> {
        SdfCache::new(self.net)
    }

    pub fn value(&self, cache: &mut SdfCache<F>, x: Vec3) -> Result<f64> {
        let p = [F::of(x[0]), F::of(x[1]), F::of(x[2])];
        Ok(self.net.value(self.params, p, self.active, false, cache)?.as_f64())
    }

    /// Per-level mask values at `x` (ones when the model is unmasked).
    pub fn mask_values(&self, cache: &mut SdfCache<F>, x: Vec3) -> Result<Vec<f64>> {
        self.value(cache, x)?;
        Ok(cache.mask_values().iter().map(|v| v.as_f64()).collect())
    }
}

pub struct NeuralRenderer<'a, F> {
    model: &'a NeuralSurface,
    params: &'a Params<F>,
    active: usize,
    eps: f64,
}

pub struct RenderScratch<F> {
    stencil: StencilCache<F>,
    rgb: RadianceCache<F>,
}

impl<F: Real> VolumeField for NeuralRenderer<'_, F> {
    type Scratch = RenderScratch<F>;

    fn scratch(&self) -> RenderScratch<F> {
        RenderScratch {
            stencil: StencilCache::new(&self.model.sdf),
            rgb: RadianceCache::new(&self.model.radiance),
        }
    }

    fn sharpness(&self) -> f64 {
        self.model.opacity.sharpness(self.params).as_f64()
    }

    fn sample(&self, s: &mut RenderScratch<F>, x: Vec3, d: Vec3) -> Result<(f64, [f64; 3])> {
        let st = self.model.sdf.stencil(self.params, x, self.eps, self.active, &mut s.stencil)?;
        let n = normalize_gradient(st.gradient);
        let xf = [F::of(x[0]), F::of(x[1]), F::of(x[2])];
        let df = [F::of(d[0]), F::of(d[1]), F::of(d[2])];
        let c = self.model.radiance.forward(
            self.params,
            xf,
            df,
            n,
            s.stencil.center().features(),
            &mut s.rgb,
        )?;
        Ok((st.sdf.as_f64(), [c[0].as_f64(), c[1].as_f64(), c[2].as_f64()]))
    }
}

/// Renders the maximum mask value over a band of levels (0-based, half-open)
/// as a scalar in channel 0.
pub struct MaskBandRenderer<'a, F> {
    model: &'a NeuralSurface,
    params: &'a Params<F>,
    band: core::ops::Range<usize>,
}

impl<'a, F: Real> MaskBandRenderer<'a, F> {
    pub fn new(model: &'a NeuralSurface, params: &'a Params<F>, band: core::ops::Range<usize>) -> Result<Self> {
        if band.is_empty() || band.end > model.levels() {
            return Err(Error::Invalid(alloc::format!(
                "band {}..{} outside the {} grid levels",
                band.start + 1,
                band.end,
                model.levels()
            )));
        }
        Ok(Self { model, params, band })
    }
}

impl<F: Real> VolumeField for MaskBandRenderer<'_, F> {
    type Scratch = SdfCache<F>;

    fn scratch(&self) -> SdfCache<F> {
        SdfCache::new(&self.model.sdf)
    }

    fn sharpness(&self) -> f64 {
        self.model.opacity.sharpness(self.params).as_f64()
    }

    fn sample(&self, cache: &mut SdfCache<F>, x: Vec3, _: Vec3) -> Result<(f64, [f64; 3])> {
        let p = [F::of(x[0]), F::of(x[1]), F::of(x[2])];
        let v = self.model.sdf.value(self.params, p, self.model.levels(), false, cache)?;
        let m = cache.mask_values()[self.band.clone()]
            .iter()
            .fold(f64::NEG_INFINITY, |a, b| a.max(b.as_f64()));
        Ok((v.as_f64(), [m, 0.0, 0.0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScalePreset, TrainConfig};

    fn small(setting: MaskSetting) -> TrainConfig {
        let mut c = TrainConfig::preset(ScalePreset::Desk);
        c.levels = 4;
        c.max_resolution = 64;
        c.sdf_hidden = 16;
        c.geometry_features = 8;
        c.rgb_hidden = 8;
        c.mask = setting;
        c
    }

    #[test]
    fn unmasked_and_masked_share_initial_values() {
        let mut a = ParameterStore::<f64>::new();
        let mut b = ParameterStore::<f64>::new();
        NeuralSurface::new(&small(MaskSetting::Learned).model(), 3, &mut a).unwrap();
        NeuralSurface::new(&small(MaskSetting::None).model(), 3, &mut b).unwrap();
        for id in b.ids() {
            let other = a.id_of(b.name(id)).unwrap();
            assert_eq!(a.values().get(other), b.values().get(id), "{}", b.name(id));
        }
        assert!(a.len() > b.len());
    }

    #[test]
    fn pinned_masks_are_frozen() {
        let mut s = ParameterStore::<f64>::new();
        let m = NeuralSurface::new(&small(MaskSetting::Pinned).model(), 3, &mut s).unwrap();
        let ids = m.sdf().mask_param_ids();
        assert!(!ids.is_empty());
        assert!(ids.iter().all(|&id| s.is_frozen(id)));
        assert_eq!(m.sdf().mask_mode(), MaskMode::Pinned(1.0));
    }

    #[test]
    fn band_bounds_are_checked() {
        let mut s = ParameterStore::<f64>::new();
        let m = NeuralSurface::new(&small(MaskSetting::Learned).model(), 3, &mut s).unwrap();
        assert!(MaskBandRenderer::new(&m, s.values(), 0..4).is_ok());
        assert!(MaskBandRenderer::new(&m, s.values(), 2..5).is_err());
        assert!(MaskBandRenderer::new(&m, s.values(), 2..2).is_err());
    }
}
