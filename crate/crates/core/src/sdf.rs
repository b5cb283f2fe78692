//! SDF network over the masked hash encoding, with central-difference normals
//! and the discrete Laplacian used by the curvature regularizer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash_grid::{EncodeCache, GridConfig, HashGrid};
use crate::mask::{apply_mask, MaskCache, MaskFieldConfig, SpatialMaskField};
use crate::math::Vec3;
use crate::nn::{Activation, DenseCache, DenseLayer, GradBuffer, ParamId, ParameterStore, Params};
use crate::real::Real;

/// A scalar field that can be sampled pointwise; analytic oracles and the
/// trained network both implement it.
pub trait ScalarField<F> {
    fn value(&self, x: [F; 3]) -> F;
}

impl<F, T: Fn([F; 3]) -> F> ScalarField<F> for T {
    fn value(&self, x: [F; 3]) -> F {
        self(x)
    }
}

/// Stencil order: center, then `±ε` along x, y, z.
pub const STENCIL: [[f64; 3]; 7] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

#[inline]
pub fn stencil_point(x: Vec3, eps: f64, j: usize) -> Vec3 {
    let o = STENCIL[j];
    [x[0] + eps * o[0], x[1] + eps * o[1], x[2] + eps * o[2]]
}

/// `(v(x + εe_k) − v(x − εe_k)) / 2ε` from the seven stencil values.
#[inline]
pub fn gradient_from_stencil<F: Real>(v: &[F; 7], eps: F) -> [F; 3] {
    let inv = F::one() / (eps + eps);
    [(v[1] - v[2]) * inv, (v[3] - v[4]) * inv, (v[5] - v[6]) * inv]
}

/// `Σ_k (v(x + εe_k) + v(x − εe_k) − 2v(x)) / ε²`.
#[inline]
pub fn laplacian_from_stencil<F: Real>(v: &[F; 7], eps: F) -> F {
    let two = F::of(2.0);
    let c = v[0];
    ((v[1] + v[2] - two * c) + (v[3] + v[4] - two * c) + (v[5] + v[6] - two * c)) / (eps * eps)
}

fn sample_stencil<F: Real, S: ScalarField<F> + ?Sized>(field: &S, x: [F; 3], eps: F) -> [F; 7] {
    let mut v = [F::zero(); 7];
    for (j, o) in STENCIL.iter().enumerate() {
        let p = [
            x[0] + eps * F::of(o[0]),
            x[1] + eps * F::of(o[1]),
            x[2] + eps * F::of(o[2]),
        ];
        v[j] = field.value(p);
    }
    v
}

pub fn numerical_gradient<F: Real, S: ScalarField<F> + ?Sized>(field: &S, x: [F; 3], eps: F) -> [F; 3] {
    gradient_from_stencil(&sample_stencil(field, x, eps), eps)
}

pub fn discrete_laplacian<F: Real, S: ScalarField<F> + ?Sized>(field: &S, x: [F; 3], eps: F) -> F {
    laplacian_from_stencil(&sample_stencil(field, x, eps), eps)
}

/// Cell size of the finest active level in the `[-1, 1]` domain:
/// `ε = 2 / N_{active − 1}`.
pub fn epsilon_for_level(active: usize, grid: &HashGrid) -> f64 {
    let levels = grid.levels();
    let l = active.clamp(1, levels.len()) - 1;
    2.0 / levels[l].resolution as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdfNetworkConfig {
    pub grid: GridConfig,
    pub hidden: usize,
    pub geometry_features: usize,
    pub softplus_beta: f64,
    /// Radius of the sphere the untrained network approximates.
    pub init_radius: f64,
}

/// How the SDF encoding is modulated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskMode {
    /// `h = s(x) ⊙ f` with the learned field.
    Learned,
    /// `h = c · f` for a constant `c`; the field's parameters are unused.
    Pinned(f64),
    /// `h = f` (no mask field at all).
    Unmasked,
}

#[derive(Clone, Debug)]
pub struct SdfNetwork {
    grid: HashGrid,
    mask: Option<SpatialMaskField>,
    mode: MaskMode,
    hidden: DenseLayer,
    sdf_head: DenseLayer,
    feature_head: DenseLayer,
}

#[derive(Clone, Debug)]
pub struct SdfCache<F> {
    encode: EncodeCache<F>,
    f: Vec<F>,
    mask: Option<MaskCache<F>>,
    s: Vec<F>,
    input: Vec<F>,
    hidden: DenseCache<F>,
    sdf_head: DenseCache<F>,
    feature_head: DenseCache<F>,
    d_hidden: Vec<F>,
    d_hidden_tmp: Vec<F>,
    d_input: Vec<F>,
    df: Vec<F>,
    active: usize,
    with_features: bool,
    filled: bool,
}

impl<F: Real> SdfCache<F> {
    pub fn new(net: &SdfNetwork) -> Self {
        let enc = net.grid.output_dim();
        let levels = net.grid.level_count();
        Self {
            encode: EncodeCache::new(&net.grid),
            f: vec![F::zero(); enc],
            mask: net.mask.as_ref().map(MaskCache::new),
            s: vec![F::one(); levels],
            input: vec![F::zero(); enc + 3],
            hidden: DenseCache::new(&net.hidden),
            sdf_head: DenseCache::new(&net.sdf_head),
            feature_head: DenseCache::new(&net.feature_head),
            d_hidden: vec![F::zero(); net.hidden.out_dim()],
            d_hidden_tmp: vec![F::zero(); net.hidden.out_dim()],
            d_input: vec![F::zero(); enc + 3],
            df: vec![F::zero(); enc],
            active: 0,
            with_features: false,
            filled: false,
        }
    }

    /// Geometry feature of the last call made with features enabled.
    pub fn features(&self) -> &[F] {
        self.feature_head.output()
    }

    /// Per-level mask values used by the last call.
    pub fn mask_values(&self) -> &[F] {
        &self.s
    }

    /// Masked encoding `h(x)` of the last call.
    pub fn encoding(&self) -> &[F] {
        &self.input[..self.f.len()]
    }

    pub fn clamped(&self) -> bool {
        self.encode.clamped()
    }
}

fn normal_sample<R: Rng + ?Sized>(rng: &mut R, mean: f64, std: f64) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let z = Real::sqrt(-2.0 * Real::ln(u1)) * Real::cos(core::f64::consts::TAU * u2);
    mean + std * z
}

/// Near-uniform unit directions (spherical Fibonacci lattice).
fn fibonacci_directions(n: usize) -> impl Iterator<Item = Vec3> {
    let golden = core::f64::consts::PI * (3.0 - Real::sqrt(5.0));
    (0..n).map(move |i| {
        let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = Real::sqrt(1.0 - y * y);
        let phi = golden * i as f64;
        [r * Real::cos(phi), y, r * Real::sin(phi)]
    })
}

impl SdfNetwork {
    /// Builds the SDF MLP with a geometric initialization approximating
    /// `|x| − r`. Encoding inputs start with zero weights, so an untrained
    /// network is the sphere regardless of the table contents.
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParameterStore<F>,
        cfg: &SdfNetworkConfig,
        mask_cfg: Option<&MaskFieldConfig>,
        rng_grid: &mut R,
        rng_mlp: &mut R,
        rng_mask: &mut R,
    ) -> Result<Self> {
        let grid = HashGrid::new(store, "sdf.grid", &cfg.grid, rng_grid)?;
        let mask = match mask_cfg {
            Some(m) => {
                if m.sdf_levels != grid.level_count() {
                    return Err(Error::Config(format!(
                        "mask field emits {} levels but the SDF grid has {}",
                        m.sdf_levels,
                        grid.level_count()
                    )));
                }
                Some(SpatialMaskField::new(store, "mask", m, rng_mask)?)
            }
            None => None,
        };
        let enc = grid.output_dim();
        let width = cfg.hidden;
        let act = Activation::Softplus {
            beta: cfg.softplus_beta,
        };
        let hidden = DenseLayer::new(store, "sdf.hidden", enc + 3, width, act);
        let sdf_head = DenseLayer::new(store, "sdf.head", width, 1, Activation::Identity);
        let feature_head = DenseLayer::new(
            store,
            "sdf.features",
            width,
            cfg.geometry_features,
            Activation::Identity,
        );

        // Hidden units: hyperplanes through the origin with normals spread
        // over the sphere; the head averages their ReLU-like responses so
        // that Σ c·relu(d_i·x) ≈ |x| (mean of max(0, cos θ) is 1/4).
        {
            let w = store.values_mut().get_mut(hidden.weight());
            for (o, d) in fibonacci_directions(width).enumerate() {
                let row = &mut w[o * (enc + 3)..(o + 1) * (enc + 3)];
                row[enc] = F::of(d[0]);
                row[enc + 1] = F::of(d[1]);
                row[enc + 2] = F::of(d[2]);
            }
        }
        {
            let c = 4.0 / width as f64;
            let w = store.values_mut().get_mut(sdf_head.weight());
            for v in w.iter_mut() {
                *v = F::of(normal_sample(rng_mlp, c, 1e-4 * c));
            }
            store.values_mut().get_mut(sdf_head.bias())[0] = F::of(-cfg.init_radius);
        }
        {
            let limit = Real::sqrt(6.0 / (width + cfg.geometry_features) as f64);
            let w = store.values_mut().get_mut(feature_head.weight());
            for v in w.iter_mut() {
                *v = F::of(rng_mlp.random_range(-limit..limit));
            }
        }
        let mode = if mask.is_some() {
            MaskMode::Learned
        } else {
            MaskMode::Unmasked
        };
        Ok(Self {
            grid,
            mask,
            mode,
            hidden,
            sdf_head,
            feature_head,
        })
    }

    pub fn grid(&self) -> &HashGrid {
        &self.grid
    }

    pub fn mask_field(&self) -> Option<&SpatialMaskField> {
        self.mask.as_ref()
    }

    pub fn mask_field_mut(&mut self) -> Option<&mut SpatialMaskField> {
        self.mask.as_mut()
    }

    pub fn mask_mode(&self) -> MaskMode {
        self.mode
    }

    /// Switches how the encoding is modulated. `Learned` requires a mask
    /// field.
    pub fn set_mask_mode(&mut self, mode: MaskMode) -> Result<()> {
        if mode == MaskMode::Learned && self.mask.is_none() {
            return Err(Error::Config("learned mask requested without a mask field".into()));
        }
        self.mode = mode;
        Ok(())
    }

    pub fn hidden_layer(&self) -> &DenseLayer {
        &self.hidden
    }

    pub fn sdf_head(&self) -> &DenseLayer {
        &self.sdf_head
    }

    pub fn feature_head(&self) -> &DenseLayer {
        &self.feature_head
    }

    pub fn geometry_features(&self) -> usize {
        self.feature_head.out_dim()
    }

    pub fn mask_param_ids(&self) -> Vec<ParamId> {
        self.mask.as_ref().map(SpatialMaskField::param_ids).unwrap_or_default()
    }

    /// SDF value at `x`; when `with_features` is set the geometry feature is
    /// also computed (see [`SdfCache::features`]).
    pub fn value<F: Real>(
        &self,
        params: &Params<F>,
        x: [F; 3],
        active: usize,
        with_features: bool,
        cache: &mut SdfCache<F>,
    ) -> Result<F> {
        self.grid.encode(params, x, active, &mut cache.f, &mut cache.encode)?;
        let enc = cache.f.len();
        match self.mode {
            MaskMode::Learned => {
                let field = self.mask.as_ref().expect("learned mask without field");
                let mc = cache.mask.as_mut().expect("mask cache");
                field.forward(params, x, mc)?;
                cache.s.copy_from_slice(mc.values());
                apply_mask(&cache.s, &cache.f, active, &mut cache.input[..enc])?;
            }
            MaskMode::Pinned(c) => {
                cache.s.fill(F::of(c));
                apply_mask(&cache.s, &cache.f, active, &mut cache.input[..enc])?;
            }
            MaskMode::Unmasked => {
                cache.s.fill(F::one());
                cache.input[..enc].copy_from_slice(&cache.f);
            }
        }
        cache.input[enc..].copy_from_slice(&x);
        self.hidden.forward(params, &cache.input, &mut cache.hidden)?;
        self.sdf_head.forward(params, cache.hidden.output(), &mut cache.sdf_head)?;
        if with_features {
            self.feature_head
                .forward(params, cache.hidden.output(), &mut cache.feature_head)?;
        }
        cache.active = active;
        cache.with_features = with_features;
        cache.filled = true;
        Ok(cache.sdf_head.output()[0])
    }

    pub fn backward<F: Real>(
        &self,
        params: &Params<F>,
        cache: &mut SdfCache<F>,
        d_sdf: F,
        d_features: Option<&[F]>,
        grads: &mut GradBuffer<F>,
    ) -> Result<()> {
        if !cache.filled {
            return Err(Error::MissingCache("sdf network"));
        }
        self.sdf_head
            .backward(params, &mut cache.sdf_head, &[d_sdf], grads, Some(&mut cache.d_hidden))?;
        if let Some(df) = d_features {
            if !cache.with_features {
                return Err(Error::MissingCache("sdf geometry features"));
            }
            self.feature_head.backward(
                params,
                &mut cache.feature_head,
                df,
                grads,
                Some(&mut cache.d_hidden_tmp),
            )?;
            for (a, b) in cache.d_hidden.iter_mut().zip(&cache.d_hidden_tmp) {
                *a += *b;
            }
        }
        self.hidden
            .backward(params, &mut cache.hidden, &cache.d_hidden, grads, Some(&mut cache.d_input))?;
        let enc = cache.f.len();
        let d_h = &cache.d_input[..enc];
        match self.mode {
            MaskMode::Learned => {
                let field = self.mask.as_ref().expect("learned mask without field");
                let mc = cache.mask.as_mut().expect("mask cache");
                field.backward(params, mc, d_h, &cache.f, cache.active, grads, &mut cache.df)?;
            }
            MaskMode::Pinned(c) => {
                let c = F::of(c);
                for (d, u) in cache.df.iter_mut().zip(d_h) {
                    *d = c * *u;
                }
            }
            MaskMode::Unmasked => cache.df.copy_from_slice(d_h),
        }
        self.grid.encode_backward(&cache.encode, &cache.df, grads)?;
        Ok(())
    }

    /// Evaluates the seven-point stencil around `x` through the full masked
    /// pipeline. The center sample also produces geometry features.
    pub fn stencil<F: Real>(
        &self,
        params: &Params<F>,
        x: Vec3,
        eps: f64,
        active: usize,
        cache: &mut StencilCache<F>,
    ) -> Result<StencilSample<F>> {
        for j in 0..7 {
            let p = stencil_point(x, eps, j);
            let p = [F::of(p[0]), F::of(p[1]), F::of(p[2])];
            cache.values[j] = self.value(params, p, active, j == 0, &mut cache.evals[j])?;
        }
        let e = F::of(eps);
        Ok(StencilSample {
            sdf: cache.values[0],
            gradient: gradient_from_stencil(&cache.values, e),
            laplacian: laplacian_from_stencil(&cache.values, e),
        })
    }

    /// Backpropagates through [`SdfNetwork::stencil`]: the six offset
    /// evaluations receive the gradient and Laplacian sensitivities, the
    /// center receives the direct SDF and feature sensitivities.
    #[allow(clippy::too_many_arguments)]
    pub fn stencil_backward<F: Real>(
        &self,
        params: &Params<F>,
        cache: &mut StencilCache<F>,
        eps: f64,
        d_sdf: F,
        d_gradient: [F; 3],
        d_laplacian: F,
        d_features: Option<&[F]>,
        grads: &mut GradBuffer<F>,
    ) -> Result<()> {
        let e = F::of(eps);
        let inv2e = F::one() / (e + e);
        let inv_e2 = F::one() / (e * e);
        let mut d = [F::zero(); 7];
        d[0] = d_sdf - F::of(6.0) * d_laplacian * inv_e2;
        for k in 0..3 {
            d[1 + 2 * k] = d_gradient[k] * inv2e + d_laplacian * inv_e2;
            d[2 + 2 * k] = -d_gradient[k] * inv2e + d_laplacian * inv_e2;
        }
        for j in 0..7 {
            let feats = if j == 0 { d_features } else { None };
            if d[j] == F::zero() && feats.is_none() {
                continue;
            }
            self.backward(params, &mut cache.evals[j], d[j], feats, grads)?;
        }
        Ok(())
    }
}

/// Outputs of one seven-point stencil.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilSample<F> {
    pub sdf: F,
    pub gradient: [F; 3],
    pub laplacian: F,
}

#[derive(Clone, Debug)]
pub struct StencilCache<F> {
    evals: Vec<SdfCache<F>>,
    values: [F; 7],
}

impl<F: Real> StencilCache<F> {
    pub fn new(net: &SdfNetwork) -> Self {
        Self {
            evals: (0..7).map(|_| SdfCache::new(net)).collect(),
            values: [F::zero(); 7],
        }
    }

    pub fn center(&self) -> &SdfCache<F> {
        &self.evals[0]
    }

    pub fn values(&self) -> &[F; 7] {
        &self.values
    }

    /// Number of stencil points that were clamped to the domain.
    pub fn clamped_count(&self) -> usize {
        self.evals.iter().filter(|c| c.clamped()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::MaskActivation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere(x: [f64; 3]) -> f64 {
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - 0.5
    }

    #[test]
    fn central_difference_is_exact_on_linear_fields() {
        let n = [0.25, -0.5, 0.75];
        let lin = move |x: [f64; 3]| n[0] * x[0] + n[1] * x[1] + n[2] * x[2];
        for eps in [0.5, 0.125, 2f64.powi(-10)] {
            let g = numerical_gradient(&lin, [0.5, 0.25, -0.125], eps);
            assert_eq!(g, n);
            assert_eq!(discrete_laplacian(&lin, [0.5, 0.25, -0.125], eps), 0.0);
        }
        let constant = |_: [f64; 3]| 3.0;
        assert_eq!(numerical_gradient(&constant, [0.1, 0.2, 0.3], 1e-3), [0.0; 3]);
    }

    #[test]
    fn quadratic_laplacian_is_six() {
        let q = |x: [f64; 3]| x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        for eps in [0.5, 0.25, 2f64.powi(-8)] {
            assert_eq!(discrete_laplacian(&q, [0.5, -0.25, 0.125], eps), 6.0);
        }
        let l = discrete_laplacian(&q, [0.3, -0.7, 0.11], 1e-3);
        assert!((l - 6.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_gradient_and_laplacian() {
        let g = numerical_gradient(&sphere, [0.3, 0.0, 0.0], 1e-3);
        assert!((g[0] - 1.0).abs() < 1e-6 && g[1].abs() < 1e-6 && g[2].abs() < 1e-6);
        let l = discrete_laplacian(&sphere, [0.4, 0.0, 0.0], 1e-3);
        assert!((l - 5.0).abs() < 0.05 * 0.01 * 5.0 + 1e-5, "{l}");
    }

    #[test]
    fn gradient_converges_at_second_order() {
        // f = sin(2x)·cos(y) + z³, analytic gradient at p.
        let f = |x: [f64; 3]| (2.0 * x[0]).sin() * x[1].cos() + x[2].powi(3);
        let p = [0.3, -0.2, 0.4];
        let exact = [
            2.0 * (2.0 * p[0]).cos() * p[1].cos(),
            -(2.0 * p[0]).sin() * p[1].sin(),
            3.0 * p[2] * p[2],
        ];
        let err = |eps: f64| {
            let g = numerical_gradient(&f, p, eps);
            ((g[0] - exact[0]).powi(2) + (g[1] - exact[1]).powi(2) + (g[2] - exact[2]).powi(2)).sqrt()
        };
        let (e1, e2) = (err(1e-1), err(1e-3));
        let slope = (e1.ln() - e2.ln()) / (1e-1f64.ln() - 1e-3f64.ln());
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    fn net_config(levels: usize) -> SdfNetworkConfig {
        SdfNetworkConfig {
            grid: GridConfig {
                levels,
                min_resolution: 4,
                max_resolution: 32,
                features: 2,
                log2_table_size: 10,
            },
            hidden: 64,
            geometry_features: 8,
            softplus_beta: 100.0,
            init_radius: 0.5,
        }
    }

    fn mask_config(levels: usize) -> MaskFieldConfig {
        MaskFieldConfig {
            grid: GridConfig {
                levels: 2,
                min_resolution: 4,
                max_resolution: 8,
                features: 2,
                log2_table_size: 8,
            },
            hidden: 8,
            softplus_beta: 100.0,
            activation: MaskActivation::Sigmoid,
            sdf_levels: levels,
            output_bias_init: 1.0,
        }
    }

    fn build(masked: bool) -> (ParameterStore<f64>, SdfNetwork) {
        let mut store = ParameterStore::new();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        let mut c = ChaCha8Rng::seed_from_u64(3);
        let mc = mask_config(4);
        let net = SdfNetwork::new(&mut store, &net_config(4), masked.then_some(&mc), &mut a, &mut b, &mut c).unwrap();
        (store, net)
    }

    #[test]
    fn geometric_init_is_a_sphere() {
        let (mut store, net) = build(true);
        for &t in net.grid().tables() {
            store.values_mut().get_mut(t).fill(0.0);
        }
        let mut cache = SdfCache::new(&net);
        let c = net.value(store.values(), [0.0; 3], 4, false, &mut cache).unwrap();
        assert!((c + 0.5).abs() < 0.05, "{c}");
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..core::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            let p = [0.5 * r * phi.cos(), 0.5 * r * phi.sin(), 0.5 * z];
            let v = net.value(store.values(), p, 4, false, &mut cache).unwrap();
            assert!(v.abs() < 0.03, "{v} at {p:?}");
        }
    }

    #[test]
    fn forward_matches_reference_oracle() {
        let (mut store, net) = build(true);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for id in store.ids().collect::<Vec<_>>() {
            for v in store.values_mut().get_mut(id) {
                *v += rng.random_range(-0.05..0.05);
            }
        }
        let x = [0.23, -0.41, 0.66];
        let active = 3;
        let mut cache = SdfCache::new(&net);
        let sdf = net.value(store.values(), x, active, true, &mut cache).unwrap();

        // Oracle: encoding and mask from their own modules, the MLP as loops.
        let p = store.values();
        let grid = net.grid();
        let mut f = vec![0.0; grid.output_dim()];
        let mut ec = crate::hash_grid::EncodeCache::new(grid);
        grid.encode(p, x, active, &mut f, &mut ec).unwrap();
        let field = net.mask_field().unwrap();
        let mut mc = MaskCache::new(field);
        field.forward(p, x, &mut mc).unwrap();
        let nf = grid.features();
        let mut input: Vec<f64> = (0..f.len())
            .map(|i| if i / nf < active { mc.values()[i / nf] * f[i] } else { 0.0 })
            .collect();
        input.extend_from_slice(&x);
        let layer = |l: &DenseLayer, v: &[f64]| -> Vec<f64> {
            let (w, b) = (p.get(l.weight()), p.get(l.bias()));
            (0..l.out_dim())
                .map(|o| b[o] + (0..v.len()).map(|i| w[o * v.len() + i] * v[i]).sum::<f64>())
                .collect()
        };
        let hidden: Vec<f64> = layer(net.hidden_layer(), &input)
            .iter()
            .map(|z| (1.0 + (100.0 * z).exp()).ln() / 100.0)
            .collect();
        assert!((sdf - layer(net.sdf_head(), &hidden)[0]).abs() < 1e-12);
        for (a, b) in cache.features().iter().zip(layer(net.feature_head(), &hidden)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_ones_matches_unmasked_bitwise() {
        let (mut store, mut net) = build(true);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for id in store.ids().collect::<Vec<_>>() {
            for v in store.values_mut().get_mut(id) {
                *v += rng.random_range(-0.1..0.1);
            }
        }
        let (mut base_store, base) = build(false);
        for id in base_store.ids().collect::<Vec<_>>() {
            let name = std::string::String::from(base_store.name(id));
            let src = store.id_of(&name).unwrap();
            base_store.values_mut().get_mut(id).copy_from_slice(store.values().get(src));
        }
        net.set_mask_mode(MaskMode::Pinned(1.0)).unwrap();
        let mut c1 = SdfCache::new(&net);
        let mut c2 = SdfCache::new(&base);
        for x in [[0.1, 0.2, 0.3], [-0.7, 0.05, 0.9], [0.0, 0.0, 0.0]] {
            for active in 1..=4 {
                let a = net.value(store.values(), x, active, true, &mut c1).unwrap();
                let b = base.value(base_store.values(), x, active, true, &mut c2).unwrap();
                assert_eq!(a.to_bits(), b.to_bits());
                assert_eq!(c1.features(), c2.features());
            }
        }
    }

    #[test]
    fn stencil_gradients_match_finite_differences() {
        let (mut store, net) = build(true);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for id in store.ids().collect::<Vec<_>>() {
            for v in store.values_mut().get_mut(id) {
                *v += rng.random_range(-0.05..0.05);
            }
        }
        let x = [0.21, -0.34, 0.43];
        let eps = 0.0625;
        let active = 3;
        let wfeat: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).cos()).collect();
        // L = 0.3·sdf + g·(0.2, -0.4, 0.1) + 0.01·lap + w·feat
        let loss = |p: &Params<f64>| {
            let mut c = StencilCache::new(&net);
            let s = net.stencil(p, x, eps, active, &mut c).unwrap();
            0.3 * s.sdf + 0.2 * s.gradient[0] - 0.4 * s.gradient[1] + 0.1 * s.gradient[2]
                + 0.01 * s.laplacian
                + c.center().features().iter().zip(&wfeat).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut cache = StencilCache::new(&net);
        net.stencil(store.values(), x, eps, active, &mut cache).unwrap();
        let mut grads = store.new_grad_buffer();
        net.stencil_backward(store.values(), &mut cache, eps, 0.3, [0.2, -0.4, 0.1], 0.01, Some(&wfeat), &mut grads)
            .unwrap();
        let opts = crate::nn::gradcheck::GradCheckOptions {
            max_entries_per_array: Some(6),
            ..Default::default()
        };
        let report = crate::nn::gradcheck::grad_check(&mut store, &grads, &opts, loss);
        assert!(report.passed(), "{:?}", report.worst);
        assert!(report.checked > 100);
    }

    #[test]
    fn wide_stencil_couples_neighbouring_cells() {
        let (mut store, net) = build(false);
        // give the encoding inputs non-zero weights so table entries matter
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in store.values_mut().get_mut(net.hidden_layer().weight()) {
            *v += rng.random_range(-0.5..0.5);
        }
        let x = [0.1, 0.1, 0.1];
        let eps = 0.2; // larger than the level-3 cell (2/32)
        let active = 4;
        let mut cache = StencilCache::new(&net);
        let g0 = net.stencil(store.values(), x, eps, active, &mut cache).unwrap().gradient;
        // the +x stencil point lies in a different finest-level cell than x
        let spec = &net.grid().levels()[3];
        let p = stencil_point(x, eps, 1);
        let cell = |c: f64| (((c + 1.0) * 0.5) * spec.resolution as f64).floor() as u32;
        let v = [cell(p[0]), cell(p[1]), cell(p[2])];
        assert_ne!(v[0], cell(x[0]));
        let idx = crate::hash_grid::vertex_index(spec, v).unwrap();
        store.values_mut().get_mut(net.grid().table(3))[idx * 2] += 0.5;
        let g1 = net.stencil(store.values(), x, eps, active, &mut cache).unwrap().gradient;
        assert_ne!(g0[0], g1[0]);
    }

    #[test]
    fn epsilon_tracks_finest_active_level() {
        let (_, net) = build(false);
        let res: Vec<u32> = net.grid().levels().iter().map(|l| l.resolution).collect();
        assert_eq!(epsilon_for_level(1, net.grid()), 2.0 / res[0] as f64);
        let mut prev = f64::INFINITY;
        for a in 1..=4 {
            let e = epsilon_for_level(a, net.grid());
            assert!(e <= prev);
            prev = e;
        }
    }
}
