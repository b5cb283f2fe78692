//! Run configuration: one flat set of knobs covering the grids, the networks
//! and the optimization, with the two size presets.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash_grid::{level_resolutions, GridConfig};
use crate::mask::{MaskActivation, MaskFieldConfig};
use crate::nn::AdamConfig;
use crate::radiance::RadianceConfig;
use crate::sdf::SdfNetworkConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalePreset {
    /// Full-size networks and grids.
    Paper,
    /// Scaled down to train on one CPU core.
    Desk,
}

/// How the SDF encoding is modulated during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSetting {
    /// Learned spatial mask.
    Learned,
    /// Mask field present but every level scaled by `mask_pin_value`, with
    /// its parameters frozen.
    Pinned,
    /// No mask field at all.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub scale: ScalePreset,
    pub seed: u64,
    pub steps: u64,
    pub rays_per_step: usize,
    pub samples_per_ray: usize,

    pub w_eik: f64,
    pub w_curv: f64,
    pub curvature: bool,
    pub curvature_warmup_steps: u64,

    pub initial_levels: usize,
    pub unveil_interval: u64,

    pub lr: f64,
    pub lr_warmup_steps: u64,
    /// Learning rate at the last step as a fraction of `lr`.
    pub lr_final_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_consecutive_skips: u64,

    pub levels: usize,
    pub min_resolution: u32,
    pub max_resolution: u32,
    pub features: usize,
    pub log2_table_size: u32,

    pub sdf_hidden: usize,
    pub geometry_features: usize,
    pub softplus_beta: f64,
    pub init_radius: f64,
    pub rgb_hidden: usize,
    pub rgb_layers: usize,

    pub mask: MaskSetting,
    pub mask_pin_value: f64,
    pub mask_activation: MaskActivation,
    pub mask_levels: usize,
    /// The mask grid spans resolutions `2^mask_d_min … 2^mask_d_max`.
    pub mask_d_min: u32,
    pub mask_d_max: u32,
    pub mask_features: usize,
    pub mask_log2_table_size: u32,
    pub mask_hidden: usize,
    pub mask_output_bias: f64,
}

/// Network and grid sizes derived from a [`TrainConfig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub sdf: SdfNetworkConfig,
    pub radiance: RadianceConfig,
    pub mask: Option<MaskFieldConfig>,
    pub mask_setting: MaskSetting,
    pub mask_pin_value: f64,
}

impl TrainConfig {
    pub fn preset(scale: ScalePreset) -> Self {
        match scale {
            ScalePreset::Paper => Self {
                scale,
                seed: 0,
                steps: 20_000,
                rays_per_step: 1024,
                samples_per_ray: 128,
                w_eik: 0.1,
                w_curv: 5e-4,
                curvature: true,
                curvature_warmup_steps: 1000,
                initial_levels: 4,
                unveil_interval: 1250,
                lr: 1e-3,
                lr_warmup_steps: 1000,
                lr_final_fraction: 0.05,
                adam_beta1: 0.9,
                adam_beta2: 0.99,
                adam_eps: 1e-15,
                max_consecutive_skips: 100,
                levels: 16,
                min_resolution: 32,
                max_resolution: 2048,
                features: 8,
                log2_table_size: 22,
                sdf_hidden: 256,
                geometry_features: 256,
                softplus_beta: 100.0,
                init_radius: 0.5,
                rgb_hidden: 256,
                rgb_layers: 4,
                mask: MaskSetting::Learned,
                mask_pin_value: 1.0,
                mask_activation: MaskActivation::Sigmoid,
                mask_levels: 8,
                mask_d_min: 5,
                mask_d_max: 11,
                mask_features: 4,
                mask_log2_table_size: 18,
                mask_hidden: 16,
                mask_output_bias: 1.0,
            },
            ScalePreset::Desk => Self {
                scale,
                rays_per_step: 16,
                samples_per_ray: 32,
                levels: 8,
                min_resolution: 16,
                max_resolution: 256,
                features: 2,
                log2_table_size: 16,
                sdf_hidden: 64,
                geometry_features: 64,
                rgb_hidden: 64,
                mask_levels: 4,
                mask_d_min: 4,
                mask_d_max: 8,
                mask_features: 2,
                mask_log2_table_size: 14,
                ..Self::preset(ScalePreset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.w_eik >= 0.0 && self.w_curv >= 0.0) {
            return bad(format!("loss weights must be non-negative (w_eik {}, w_curv {})", self.w_eik, self.w_curv));
        }
        if self.initial_levels < 1 || self.initial_levels > self.levels {
            return bad(format!("initial_levels {} outside 1..={}", self.initial_levels, self.levels));
        }
        if self.unveil_interval == 0 {
            return bad("unveil_interval must be positive".into());
        }
        if self.rays_per_step == 0 || self.samples_per_ray < 2 {
            return bad("need at least one ray and two samples per ray".into());
        }
        if !(self.lr >= 0.0) || !(0.0..=1.0).contains(&self.lr_final_fraction) {
            return bad("invalid learning-rate schedule".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps >= 0.0) {
            return bad("invalid Adam parameters".into());
        }
        if self.mask_d_min > self.mask_d_max || self.mask_d_max > 20 {
            return bad(format!("mask resolution range 2^{}..2^{} is invalid", self.mask_d_min, self.mask_d_max));
        }
        if self.sdf_hidden == 0 || self.rgb_hidden == 0 || self.rgb_layers == 0 || self.mask_hidden == 0 {
            return bad("network widths must be positive".into());
        }
        if self.features == 0 || self.mask_features == 0 || self.log2_table_size > 30 || self.mask_log2_table_size > 30 {
            return bad("invalid grid feature or table size".into());
        }
        if !(self.softplus_beta > 0.0) || !(self.init_radius > 0.0 && self.init_radius < 1.0) {
            return bad("invalid softplus beta or initial radius".into());
        }
        level_resolutions(self.min_resolution, self.max_resolution, self.levels)
            .map_err(|e| Error::Config(format!("sdf grid: {e}")))?;
        level_resolutions(1 << self.mask_d_min, 1 << self.mask_d_max, self.mask_levels)
            .map_err(|e| Error::Config(format!("mask grid: {e}")))?;
        Ok(())
    }

    pub fn grid(&self) -> GridConfig {
        GridConfig {
            levels: self.levels,
            min_resolution: self.min_resolution,
            max_resolution: self.max_resolution,
            features: self.features,
            log2_table_size: self.log2_table_size,
        }
    }

    pub fn model(&self) -> ModelConfig {
        let mask = (self.mask != MaskSetting::None).then(|| MaskFieldConfig {
            grid: GridConfig {
                levels: self.mask_levels,
                min_resolution: 1 << self.mask_d_min,
                max_resolution: 1 << self.mask_d_max,
                features: self.mask_features,
                log2_table_size: self.mask_log2_table_size,
            },
            hidden: self.mask_hidden,
            softplus_beta: self.softplus_beta,
            activation: self.mask_activation,
            sdf_levels: self.levels,
            output_bias_init: self.mask_output_bias,
        });
        ModelConfig {
            sdf: SdfNetworkConfig {
                grid: self.grid(),
                hidden: self.sdf_hidden,
                geometry_features: self.geometry_features,
                softplus_beta: self.softplus_beta,
                init_radius: self.init_radius,
            },
            radiance: RadianceConfig {
                hidden: self.rgb_hidden,
                hidden_layers: self.rgb_layers,
                geometry_features: self.geometry_features,
            },
            mask,
            mask_setting: self.mask,
            mask_pin_value: self.mask_pin_value,
        }
    }

    pub fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::preset(ScalePreset::Desk)
    }
}
