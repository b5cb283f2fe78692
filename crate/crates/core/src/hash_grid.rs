//! Multi-resolution hash-grid encoding over the cube `[-1, 1]³`.
//!
//! Each level stores one feature vector per virtual grid vertex. Coarse levels
//! that fit in the table are addressed densely (row-major); finer levels use
//! the xor-of-primes spatial hash. Queries trilinearly interpolate the eight
//! corners of the enclosing cell.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::float::FloatCore;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{GradBuffer, ParamId, ParameterStore, Params};
use crate::real::Real;

const PRIME_Y: u64 = 2_654_435_761;
const PRIME_Z: u64 = 805_459_861;

/// Half-width of the uniform feature initialization.
pub const FEATURE_INIT_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("invalid level schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error("vertex {vertex:?} outside level resolution {resolution}")]
    VertexOutOfRange { vertex: [u32; 3], resolution: u32 },
    #[error("active level count {active} outside 1..={levels}")]
    ActiveLevels { active: usize, levels: usize },
    #[error("encode_backward called without a cached encode")]
    MissingCache,
    #[error("gradient length {got} does not match encoding width {expected}")]
    UpstreamLength { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Addressing {
    Dense,
    Hashed,
}

/// Geometry of one grid level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLevelSpec {
    pub index: usize,
    /// Cells per axis; the level has `resolution + 1` vertices per axis.
    pub resolution: u32,
    pub features: usize,
    /// Number of feature vectors actually stored for this level.
    pub table_size: usize,
    pub addressing: Addressing,
}

/// Size parameters of a [`HashGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub levels: usize,
    pub min_resolution: u32,
    pub max_resolution: u32,
    pub features: usize,
    pub log2_table_size: u32,
}

/// Geometric resolution schedule `N_l = floor(N_min · b^l)` with
/// `b = (N_max / N_min)^(1 / (L − 1))`; the last level is pinned to `N_max`.
pub fn level_resolutions(n_min: u32, n_max: u32, levels: usize) -> Result<Vec<u32>, GridError> {
    if n_min < 2 {
        return Err(GridError::InvalidSchedule("minimum resolution must be at least 2"));
    }
    if n_max < n_min {
        return Err(GridError::InvalidSchedule("maximum resolution below minimum"));
    }
    if levels == 0 {
        return Err(GridError::InvalidSchedule("at least one level is required"));
    }
    if levels == 1 {
        if n_max != n_min {
            return Err(GridError::InvalidSchedule(
                "a single level needs equal minimum and maximum resolution",
            ));
        }
        return Ok(vec![n_min]);
    }
    let ratio = n_max as f64 / n_min as f64;
    let b = Real::powf(ratio, 1.0 / (levels - 1) as f64);
    let mut out: Vec<u32> = (0..levels)
        .map(|l| {
            // The small bias keeps exact powers (e.g. 32 · 4 = 128) from flooring down.
            FloatCore::floor(n_min as f64 * FloatCore::powi(b, l as i32) + 1e-9) as u32
        })
        .collect();
    out[0] = n_min;
    out[levels - 1] = n_max;
    Ok(out)
}

/// Builds the per-level specs: dense iff `(N + 1)³ ≤ T`.
pub fn level_specs(cfg: &GridConfig) -> Result<Vec<GridLevelSpec>, GridError> {
    let table = 1usize << cfg.log2_table_size;
    let res = level_resolutions(cfg.min_resolution, cfg.max_resolution, cfg.levels)?;
    if res.windows(2).any(|w| w[1] <= w[0]) && cfg.levels > 1 {
        return Err(GridError::InvalidSchedule("resolutions must increase strictly"));
    }
    Ok(res
        .into_iter()
        .enumerate()
        .map(|(index, resolution)| {
            let verts = (resolution as usize + 1).pow(3);
            let (addressing, table_size) = if verts <= table {
                (Addressing::Dense, verts)
            } else {
                (Addressing::Hashed, table)
            };
            GridLevelSpec {
                index,
                resolution,
                features: cfg.features,
                table_size,
                addressing,
            }
        })
        .collect())
}

#[inline(always)]
fn index_unchecked(level: &GridLevelSpec, v: [u32; 3]) -> usize {
    match level.addressing {
        Addressing::Dense => {
            let side = level.resolution as usize + 1;
            v[0] as usize + side * (v[1] as usize + side * v[2] as usize)
        }
        Addressing::Hashed => {
            let h = (v[0] as u64) ^ (v[1] as u64).wrapping_mul(PRIME_Y)
                ^ (v[2] as u64).wrapping_mul(PRIME_Z);
            (h % level.table_size as u64) as usize
        }
    }
}

/// Table slot of grid vertex `v` at `level`.
pub fn vertex_index(level: &GridLevelSpec, v: [u32; 3]) -> Result<usize, GridError> {
    if v.iter().any(|&c| c > level.resolution) {
        return Err(GridError::VertexOutOfRange {
            vertex: v,
            resolution: level.resolution,
        });
    }
    Ok(index_unchecked(level, v))
}

/// Corner slots and trilinear weights of one encode call.
#[derive(Clone, Debug)]
pub struct EncodeCache<F> {
    corners: Vec<u32>,
    weights: Vec<F>,
    active: usize,
    filled: bool,
    clamped: bool,
}

impl<F: Real> EncodeCache<F> {
    pub fn new(grid: &HashGrid) -> Self {
        Self {
            corners: vec![0; grid.levels.len() * 8],
            weights: vec![F::zero(); grid.levels.len() * 8],
            active: 0,
            filled: false,
            clamped: false,
        }
    }

    /// Whether the last query fell outside the domain and was clamped.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn weights(&self, level: usize) -> &[F] {
        &self.weights[level * 8..level * 8 + 8]
    }

    pub fn corners(&self, level: usize) -> &[u32] {
        &self.corners[level * 8..level * 8 + 8]
    }
}

/// Stack of feature tables, one trainable array per level.
#[derive(Clone, Debug)]
pub struct HashGrid {
    levels: Vec<GridLevelSpec>,
    tables: Vec<ParamId>,
    features: usize,
}

impl HashGrid {
    /// Registers one array `<name>.level<l>` per level, filled uniformly in
    /// `[-1e-4, 1e-4]`.
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParameterStore<F>,
        name: &str,
        cfg: &GridConfig,
        rng: &mut R,
    ) -> Result<Self, GridError> {
        let levels = level_specs(cfg)?;
        let tables = levels
            .iter()
            .map(|spec| {
                let values = (0..spec.table_size * spec.features)
                    .map(|_| F::of(rng.random_range(-FEATURE_INIT_SCALE..FEATURE_INIT_SCALE)))
                    .collect();
                store.register(&format!("{name}.level{}", spec.index), values)
            })
            .collect();
        Ok(Self {
            levels,
            tables,
            features: cfg.features,
        })
    }

    pub fn levels(&self) -> &[GridLevelSpec] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    /// Encoding width `L · F`.
    pub fn output_dim(&self) -> usize {
        self.levels.len() * self.features
    }

    pub fn table(&self, level: usize) -> ParamId {
        self.tables[level]
    }

    pub fn tables(&self) -> &[ParamId] {
        &self.tables
    }

    /// Interpolated features of `x`; blocks of levels `>= active` are zero.
    ///
    /// Points outside the cube are clamped onto it and flagged in the cache.
    pub fn encode<F: Real>(
        &self,
        params: &Params<F>,
        x: [F; 3],
        active: usize,
        out: &mut [F],
        cache: &mut EncodeCache<F>,
    ) -> Result<(), GridError> {
        let n_levels = self.levels.len();
        if active == 0 || active > n_levels {
            return Err(GridError::ActiveLevels {
                active,
                levels: n_levels,
            });
        }
        debug_assert_eq!(out.len(), self.output_dim());
        let one = F::one();
        let half = F::of(0.5);
        let mut clamped = false;
        let mut unit = [F::zero(); 3];
        for k in 0..3 {
            let mut c = x[k];
            if !(c >= -one && c <= one) {
                clamped = true;
                c = if c.is_nan() { F::zero() } else { c.max(-one).min(one) };
            }
            unit[k] = (c + one) * half;
        }
        let nf = self.features;
        for (l, spec) in self.levels.iter().enumerate() {
            let block = &mut out[l * nf..(l + 1) * nf];
            if l >= active {
                block.fill(F::zero());
                continue;
            }
            let n = spec.resolution;
            let scale = F::of(n as f64);
            let mut base = [0u32; 3];
            let mut frac = [F::zero(); 3];
            for k in 0..3 {
                let p = unit[k] * scale;
                let mut c = p.floor().to_u32().unwrap_or(0);
                if c >= n {
                    c = n - 1;
                }
                base[k] = c;
                frac[k] = p - F::of(c as f64);
            }
            let table = params.get(self.tables[l]);
            block.fill(F::zero());
            for corner in 0..8 {
                let bits = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
                let mut w = one;
                let mut v = [0u32; 3];
                for k in 0..3 {
                    if bits[k] == 1 {
                        w *= frac[k];
                    } else {
                        w *= one - frac[k];
                    }
                    v[k] = base[k] + bits[k] as u32;
                }
                let idx = index_unchecked(spec, v);
                cache.corners[l * 8 + corner] = idx as u32;
                cache.weights[l * 8 + corner] = w;
                let feat = &table[idx * nf..(idx + 1) * nf];
                for (o, f) in block.iter_mut().zip(feat) {
                    *o += w * *f;
                }
            }
        }
        cache.active = active;
        cache.filled = true;
        cache.clamped = clamped;
        Ok(())
    }

    /// Scatters `upstream · weight` onto the cached corners of each active
    /// level.
    pub fn encode_backward<F: Real>(
        &self,
        cache: &EncodeCache<F>,
        upstream: &[F],
        grads: &mut GradBuffer<F>,
    ) -> Result<(), GridError> {
        if !cache.filled {
            return Err(GridError::MissingCache);
        }
        if upstream.len() != self.output_dim() {
            return Err(GridError::UpstreamLength {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let nf = self.features;
        for l in 0..cache.active {
            let up = &upstream[l * nf..(l + 1) * nf];
            if up.iter().all(|u| *u == F::zero()) {
                continue;
            }
            let g = grads.get_mut(self.tables[l]);
            for corner in 0..8 {
                let idx = cache.corners[l * 8 + corner] as usize;
                let w = cache.weights[l * 8 + corner];
                for (gi, u) in g[idx * nf..(idx + 1) * nf].iter_mut().zip(up) {
                    *gi += w * *u;
                }
            }
        }
        Ok(())
    }
}
