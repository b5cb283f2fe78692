//! Losses, schedules and the optimization loop.
//!
//! Each step draws a ray batch uniformly over all training pixels, renders it
//! through the masked SDF, and minimizes
//! `L = L_rgb + w_eik·L_eik + w_curv·L_curv`, with the eikonal and curvature
//! terms evaluated at the ray samples using the step's `ε`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::exec::{chunk_ranges, Executor};
use crate::hash_grid::HashGrid;
use crate::math::{self, Vec3};
use crate::model::NeuralSurface;
use crate::nn::{GradBuffer, ParameterStore, Params};
use crate::radiance::{normalize_gradient, normalize_gradient_backward, RadianceCache};
use crate::real::Real;
use crate::render::{
    alpha_and_grad, composite, composite_backward, generate_ray, stratified_depths, unit_sphere_interval,
    AlphaGrad, CameraModel,
};
use crate::sdf::{epsilon_for_level, StencilCache};

/// Mean absolute error over rays and channels.
pub fn loss_rgb(rendered: &[[f64; 3]], target: &[[f64; 3]]) -> Result<f64> {
    if rendered.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "rgb batch",
            expected: rendered.len(),
            got: target.len(),
        });
    }
    if rendered.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = rendered
        .iter()
        .zip(target)
        .map(|(a, b)| (a[0] - b[0]).abs() + (a[1] - b[1]).abs() + (a[2] - b[2]).abs())
        .sum();
    Ok(s / (3 * rendered.len()) as f64)
}

/// Mean of `(‖∇SDF‖ − 1)²`.
pub fn loss_eikonal(gradients: &[[f64; 3]]) -> Result<f64> {
    if gradients.is_empty() {
        return Err(Error::Invalid("eikonal loss of an empty batch".into()));
    }
    let s: f64 = gradients.iter().map(|g| {
        let e = math::norm(*g) - 1.0;
        e * e
    }).sum();
    Ok(s / gradients.len() as f64)
}

/// Mean of `|∇²SDF|`.
pub fn loss_curvature(laplacians: &[f64]) -> Result<f64> {
    if laplacians.is_empty() {
        return Err(Error::Invalid("curvature loss of an empty batch".into()));
    }
    Ok(laplacians.iter().map(|l| l.abs()).sum::<f64>() / laplacians.len() as f64)
}

pub fn total_loss(rgb: f64, eik: f64, curv: f64, w_eik: f64, w_curv: f64) -> Result<f64> {
    if !(rgb.is_finite() && eik.is_finite() && curv.is_finite()) {
        return Err(Error::Divergence(format!("non-finite loss terms rgb {rgb} eik {eik} curv {curv}")));
    }
    Ok(rgb + w_eik * eik + w_curv * curv)
}

/// `active = min(L_init + ⌊step / S⌋, L)` and the matching stencil width.
pub fn unveil_schedule(step: u64, cfg: &TrainConfig, grid: &HashGrid) -> (usize, f64) {
    let extra = (step / cfg.unveil_interval).min(usize::MAX as u64) as usize;
    let active = cfg.initial_levels.saturating_add(extra).min(grid.level_count());
    (active, epsilon_for_level(active, grid))
}

/// Linear warmup to `lr`, then cosine decay to `lr · lr_final_fraction` at the
/// last step.
pub fn learning_rate(step: u64, cfg: &TrainConfig) -> f64 {
    if step < cfg.lr_warmup_steps {
        return cfg.lr * (step + 1) as f64 / cfg.lr_warmup_steps as f64;
    }
    let span = cfg.steps.saturating_sub(cfg.lr_warmup_steps).max(1);
    let t = ((step - cfg.lr_warmup_steps) as f64 / span as f64).min(1.0);
    let f = cfg.lr_final_fraction;
    cfg.lr * (f + (1.0 - f) * 0.5 * (1.0 + Real::cos(core::f64::consts::PI * t)))
}

/// Curvature weight, ramped linearly from zero over the warmup steps.
pub fn curvature_weight(step: u64, cfg: &TrainConfig) -> f64 {
    if !cfg.curvature {
        return 0.0;
    }
    if cfg.curvature_warmup_steps == 0 {
        return cfg.w_curv;
    }
    cfg.w_curv * (step as f64 / cfg.curvature_warmup_steps as f64).min(1.0)
}

/// One posed training image.
#[derive(Clone, Debug)]
pub struct TrainingView {
    pub camera: CameraModel,
    /// Row-major linear RGB.
    pub pixels: Vec<[f32; 3]>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub views: Vec<TrainingView>,
    pub background: [f64; 3],
}

impl Dataset {
    pub fn new(views: Vec<TrainingView>, background: [f64; 3]) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Invalid("dataset has no views".into()));
        }
        for (i, v) in views.iter().enumerate() {
            let n = v.camera.width() as usize * v.camera.height() as usize;
            if v.pixels.len() != n {
                return Err(Error::Invalid(format!("view {i} has {} pixels, expected {n}", v.pixels.len())));
            }
        }
        Ok(Self { views, background })
    }

    pub fn pixel_count(&self) -> usize {
        self.views.iter().map(|v| v.pixels.len()).sum()
    }
}

/// A ray with its sample depths and target color. Rays that miss the unit
/// sphere carry no depths and render as background.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySample {
    pub origin: Vec3,
    pub dir: Vec3,
    pub depths: Vec<f64>,
    pub target: [f64; 3],
}

/// RNG for the ray batch of `step`; depends only on `(seed, step)`.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7261_7973_5f62_6174);
    rng.set_stream(step);
    rng
}

/// Draws `n` pixels uniformly over all views, with pixel jitter and
/// stratified depths.
pub fn sample_batch<R: Rng + ?Sized>(data: &Dataset, n: usize, samples: usize, rng: &mut R) -> Vec<RaySample> {
    let total = data.pixel_count();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut idx = rng.random_range(0..total);
        let mut view = &data.views[0];
        for v in &data.views {
            if idx < v.pixels.len() {
                view = v;
                break;
            }
            idx -= v.pixels.len();
        }
        let w = view.camera.width() as usize;
        let (u, v) = ((idx % w) as u32, (idx / w) as u32);
        let jitter: (f64, f64) = (rng.random(), rng.random());
        let (o, d) = generate_ray(&view.camera, u, v, jitter);
        let mut depths = Vec::with_capacity(samples);
        match unit_sphere_interval(o, d) {
            Some((near, far)) => stratified_depths(near, far, samples, rng, &mut depths),
            None => {
                for _ in 0..samples {
                    let _: f64 = rng.random();
                }
            }
        }
        let p = view.pixels[idx];
        out.push(RaySample {
            origin: o,
            dir: d,
            depths,
            target: [p[0] as f64, p[1] as f64, p[2] as f64],
        });
    }
    out
}

/// Fixed quantities for evaluating one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchContext {
    pub active: usize,
    pub eps: f64,
    pub background: [f64; 3],
    pub w_eik: f64,
    pub w_curv: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    pub rgb: f64,
    pub eik: f64,
    pub curv: f64,
    pub total: f64,
    pub rays: usize,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, Default)]
struct PartialSums {
    rgb: f64,
    eik: f64,
    curv: f64,
}

struct RayScratch<F> {
    stencils: Vec<StencilCache<F>>,
    rgb: Vec<RadianceCache<F>>,
    sdf: Vec<F>,
    grad: Vec<[F; 3]>,
    lap: Vec<F>,
    alphas: Vec<F>,
    alpha_grads: Vec<AlphaGrad<F>>,
    colors: Vec<[F; 3]>,
    d_alpha: Vec<F>,
    d_colors: Vec<[F; 3]>,
    d_sdf: Vec<F>,
}

impl<F: Real> RayScratch<F> {
    fn new() -> Self {
        Self {
            stencils: Vec::new(),
            rgb: Vec::new(),
            sdf: Vec::new(),
            grad: Vec::new(),
            lap: Vec::new(),
            alphas: Vec::new(),
            alpha_grads: Vec::new(),
            colors: Vec::new(),
            d_alpha: Vec::new(),
            d_colors: Vec::new(),
            d_sdf: Vec::new(),
        }
    }
}

#[inline]
fn sign<F: Real>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else if x < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

/// Scales of each per-ray loss term inside the batch mean.
#[derive(Clone, Copy)]
struct TermScales {
    rgb: f64,
    eik: f64,
    curv: f64,
}

#[allow(clippy::too_many_arguments)]
fn ray_forward_backward<F: Real>(
    model: &NeuralSurface,
    params: &Params<F>,
    ray: &RaySample,
    ctx: &BatchContext,
    scales: TermScales,
    s: F,
    scratch: &mut RayScratch<F>,
    grads: Option<&mut GradBuffer<F>>,
) -> Result<PartialSums> {
    let m = ray.depths.len();
    let bg = [F::of(ctx.background[0]), F::of(ctx.background[1]), F::of(ctx.background[2])];
    let target = [F::of(ray.target[0]), F::of(ray.target[1]), F::of(ray.target[2])];
    let mut sums = PartialSums::default();
    if m == 0 {
        for k in 0..3 {
            sums.rgb += (bg[k] - target[k]).abs().as_f64();
        }
        return Ok(sums);
    }
    let sdf_net = model.sdf();
    let rgb_net = model.radiance();
    let sc = scratch;
    for i in 0..m {
        if sc.stencils.len() <= i {
            sc.stencils.push(StencilCache::new(sdf_net));
            sc.rgb.push(RadianceCache::new(rgb_net));
        }
    }
    sc.sdf.clear();
    sc.grad.clear();
    sc.lap.clear();
    for (i, &t) in ray.depths.iter().enumerate() {
        let x = math::madd(ray.origin, ray.dir, t);
        let st = sdf_net.stencil(params, x, ctx.eps, ctx.active, &mut sc.stencils[i])?;
        sc.sdf.push(st.sdf);
        sc.grad.push(st.gradient);
        sc.lap.push(st.laplacian);
    }
    sc.alphas.clear();
    sc.alpha_grads.clear();
    for i in 0..m {
        let next = if i + 1 < m { sc.sdf[i + 1] } else { sc.sdf[i] };
        let (a, g) = alpha_and_grad(s, sc.sdf[i], next);
        sc.alphas.push(a);
        sc.alpha_grads.push(g);
    }
    let dir = [F::of(ray.dir[0]), F::of(ray.dir[1]), F::of(ray.dir[2])];
    sc.colors.clear();
    for i in 0..m {
        if sc.alphas[i] == F::zero() {
            sc.colors.push([F::zero(); 3]);
            continue;
        }
        let x = math::madd(ray.origin, ray.dir, ray.depths[i]);
        let xf = [F::of(x[0]), F::of(x[1]), F::of(x[2])];
        let n = normalize_gradient(sc.grad[i]);
        let c = rgb_net.forward(params, xf, dir, n, sc.stencils[i].center().features(), &mut sc.rgb[i])?;
        sc.colors.push(c);
    }
    let comp = composite(&sc.alphas, &sc.colors, bg)?;
    let mut d_color = [F::zero(); 3];
    for k in 0..3 {
        let diff = comp.color[k] - target[k];
        sums.rgb += diff.abs().as_f64();
        d_color[k] = F::of(scales.rgb) * sign(diff);
    }
    for i in 0..m {
        let g = sc.grad[i];
        let len = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        sums.eik += ((len - F::one()) * (len - F::one())).as_f64();
        sums.curv += sc.lap[i].abs().as_f64();
    }
    let Some(grads) = grads else {
        return Ok(sums);
    };

    composite_backward(&sc.alphas, &sc.colors, bg, &comp, d_color, &mut sc.d_alpha, &mut sc.d_colors);
    sc.d_sdf.clear();
    sc.d_sdf.resize(m, F::zero());
    let mut d_s = F::zero();
    for i in 0..m {
        let da = sc.d_alpha[i];
        let ag = sc.alpha_grads[i];
        if da == F::zero() || sc.alphas[i] == F::zero() {
            continue;
        }
        sc.d_sdf[i] += da * ag.d_sdf_i;
        if i + 1 < m {
            sc.d_sdf[i + 1] += da * ag.d_sdf_next;
        }
        d_s += da * ag.d_s;
    }
    let eik_scale = F::of(scales.eik);
    let curv_scale = F::of(scales.curv);
    for i in 0..m {
        let g = sc.grad[i];
        let len = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let mut d_grad = [F::zero(); 3];
        if len > F::zero() {
            let c = eik_scale * F::of(2.0) * (len - F::one()) / len;
            d_grad = [c * g[0], c * g[1], c * g[2]];
        }
        let d_lap = curv_scale * sign(sc.lap[i]);
        let mut d_feat = None;
        if sc.alphas[i] != F::zero() {
            let rb = rgb_net.backward(params, &mut sc.rgb[i], sc.d_colors[i], grads)?;
            let dn = normalize_gradient_backward(g, rb.normal);
            for k in 0..3 {
                d_grad[k] += dn[k];
            }
            d_feat = Some(rb.features);
        }
        sdf_net.stencil_backward(params, &mut sc.stencils[i], ctx.eps, sc.d_sdf[i], d_grad, d_lap, d_feat, grads)?;
    }
    grads.get_mut(model.opacity().zeta())[0] += d_s * F::of(10.0) * s;
    Ok(sums)
}

/// Loss of a batch and, when `grads` is given, its gradient accumulated into
/// `grads`. Rays are split into one contiguous chunk per worker; chunk
/// gradients are summed in chunk order.
pub fn batch_loss_and_grad<F: Real, E: Executor>(
    model: &NeuralSurface,
    params: &Params<F>,
    rays: &[RaySample],
    ctx: &BatchContext,
    exec: &E,
    grads: Option<&mut GradBuffer<F>>,
) -> Result<BatchLoss> {
    let samples: usize = rays.iter().map(|r| r.depths.len()).sum();
    let n = rays.len();
    let scales = TermScales {
        rgb: 1.0 / (3 * n.max(1)) as f64,
        eik: if samples > 0 { ctx.w_eik / samples as f64 } else { 0.0 },
        curv: if samples > 0 { ctx.w_curv / samples as f64 } else { 0.0 },
    };
    let s = model.opacity().sharpness(params);
    let want_grads = grads.is_some();
    let ranges = chunk_ranges(n, exec.workers());
    let mut grads = grads;
    if ranges.len() <= 1 {
        let mut scratch = RayScratch::new();
        let mut total = PartialSums::default();
        for ray in rays {
            let r = ray_forward_backward(model, params, ray, ctx, scales, s, &mut scratch, grads.as_deref_mut())?;
            total.rgb += r.rgb;
            total.eik += r.eik;
            total.curv += r.curv;
        }
        return Ok(finish_batch(total, n, samples, ctx));
    }
    let parts = exec.map(ranges.len(), |p| -> Result<(PartialSums, Option<GradBuffer<F>>)> {
        let mut scratch = RayScratch::new();
        let mut buf = want_grads.then(|| GradBuffer::zeros_like(params));
        let mut sums = PartialSums::default();
        for ray in &rays[ranges[p].clone()] {
            let r = ray_forward_backward(model, params, ray, ctx, scales, s, &mut scratch, buf.as_mut())?;
            sums.rgb += r.rgb;
            sums.eik += r.eik;
            sums.curv += r.curv;
        }
        Ok((sums, buf))
    });
    let mut total = PartialSums::default();
    for part in parts {
        let (sums, buf) = part?;
        total.rgb += sums.rgb;
        total.eik += sums.eik;
        total.curv += sums.curv;
        if let (Some(g), Some(b)) = (grads.as_deref_mut(), buf) {
            g.accumulate(&b);
        }
    }
    Ok(finish_batch(total, n, samples, ctx))
}

fn finish_batch(total: PartialSums, n: usize, samples: usize, ctx: &BatchContext) -> BatchLoss {
    let rgb = if n > 0 { total.rgb / (3 * n) as f64 } else { 0.0 };
    let (eik, curv) = if samples > 0 {
        (total.eik / samples as f64, total.curv / samples as f64)
    } else {
        (0.0, 0.0)
    };
    let total = rgb + ctx.w_eik * eik + ctx.w_curv * curv;
    BatchLoss {
        rgb,
        eik,
        curv,
        total,
        rays: n,
        samples,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub loss_rgb: f64,
    pub loss_eik: f64,
    pub loss_curv: f64,
    pub loss_total: f64,
    pub active_levels: usize,
    pub epsilon: f64,
    pub sharpness: f64,
    pub lr: f64,
    pub skipped: bool,
    /// Largest `|∂L/∂·|` on the mask output rows of inactive levels.
    pub inactive_mask_grad_max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub step: u64,
    pub active_levels: usize,
    pub epsilon: f64,
    pub avg_rgb: f64,
    pub avg_eik: f64,
    pub avg_curv: f64,
    pub consecutive_skips: u64,
    pub skipped_steps: u64,
}

const AVERAGE_DECAY: f64 = 0.99;

/// Model, parameters and schedule state of one run.
pub struct Trainer<F> {
    config: TrainConfig,
    model: NeuralSurface,
    store: ParameterStore<F>,
    state: TrainState,
}

impl<F: Real> Trainer<F> {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParameterStore::new();
        let model = NeuralSurface::new(&config.model(), config.seed, &mut store)?;
        let (active, eps) = unveil_schedule(0, &config, model.sdf().grid());
        let state = TrainState {
            active_levels: active,
            epsilon: eps,
            ..TrainState::default()
        };
        Ok(Self {
            config,
            model,
            store,
            state,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn model(&self) -> &NeuralSurface {
        &self.model
    }

    pub fn store(&self) -> &ParameterStore<F> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore<F> {
        &mut self.store
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn set_state(&mut self, state: TrainState) {
        self.state = state;
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.config.steps
    }

    pub fn step<E: Executor>(&mut self, data: &Dataset, exec: &E) -> Result<StepMetrics> {
        let cfg = &self.config;
        let step = self.state.step;
        let (active, eps) = unveil_schedule(step, cfg, self.model.sdf().grid());
        let lr = learning_rate(step, cfg);
        let ctx = BatchContext {
            active,
            eps,
            background: data.background,
            w_eik: cfg.w_eik,
            w_curv: curvature_weight(step, cfg),
        };
        let mut rng = step_rng(cfg.seed, step);
        let rays = sample_batch(data, cfg.rays_per_step, cfg.samples_per_ray, &mut rng);
        self.store.zero_grad();
        let (params, grads) = self.store.split();
        let loss = batch_loss_and_grad(&self.model, params, &rays, &ctx, exec, Some(grads))?;
        let inactive_mask_grad_max = self.inactive_mask_grad_max(active);
        let sharpness = self.model.opacity().sharpness(self.store.values()).as_f64();
        let finite = loss.total.is_finite();
        if finite {
            self.store.adam_step(&cfg.adam(lr));
            self.state.consecutive_skips = 0;
            let a = if step == 0 { 0.0 } else { AVERAGE_DECAY };
            self.state.avg_rgb = a * self.state.avg_rgb + (1.0 - a) * loss.rgb;
            self.state.avg_eik = a * self.state.avg_eik + (1.0 - a) * loss.eik;
            self.state.avg_curv = a * self.state.avg_curv + (1.0 - a) * loss.curv;
        } else {
            self.state.consecutive_skips += 1;
            self.state.skipped_steps += 1;
        }
        self.state.step = step + 1;
        self.state.active_levels = active;
        self.state.epsilon = eps;
        if self.state.consecutive_skips > cfg.max_consecutive_skips {
            return Err(Error::Divergence(format!(
                "{} consecutive non-finite steps (last at step {step})",
                self.state.consecutive_skips
            )));
        }
        Ok(StepMetrics {
            step,
            loss_rgb: loss.rgb,
            loss_eik: loss.eik,
            loss_curv: loss.curv,
            loss_total: loss.total,
            active_levels: active,
            epsilon: eps,
            sharpness,
            lr,
            skipped: !finite,
            inactive_mask_grad_max,
        })
    }

    fn inactive_mask_grad_max(&self, active: usize) -> f64 {
        let Some(field) = self.model.sdf().mask_field() else {
            return 0.0;
        };
        let out = field.output_layer();
        let grads = self.store.grads();
        let (w, b) = (grads.get(out.weight()), grads.get(out.bias()));
        let width = out.in_dim();
        let mut m = 0.0f64;
        for l in active..out.out_dim() {
            for v in w[l * width..(l + 1) * width].iter().chain(core::iter::once(&b[l])) {
                m = m.max(v.abs().as_f64());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScalePreset;

    #[test]
    fn rgb_loss_oracles() {
        let a = [[0.1, 0.2, 0.3], [0.5, 0.5, 0.5]];
        assert_eq!(loss_rgb(&a, &a).unwrap(), 0.0);
        let b: Vec<[f64; 3]> = a.iter().map(|c| [c[0] + 0.1, c[1] + 0.1, c[2] + 0.1]).collect();
        assert!((loss_rgb(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        assert!(loss_rgb(&a, &b[..1]).is_err());
    }

    #[test]
    fn eikonal_and_curvature_oracles() {
        assert_eq!(loss_eikonal(&[[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]]).unwrap(), 0.0);
        assert_eq!(loss_eikonal(&[[2.0, 0.0, 0.0], [0.0, 0.0, -2.0]]).unwrap(), 1.0);
        assert_eq!(loss_curvature(&[1.0, -3.0]).unwrap(), loss_curvature(&[-1.0, 3.0]).unwrap());
        assert_eq!(loss_curvature(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(loss_eikonal(&[]).is_err() && loss_curvature(&[]).is_err());
    }

    #[test]
    fn total_loss_weights() {
        assert!((total_loss(1.0, 1.0, 1.0, 0.1, 5e-4).unwrap() - 1.1005).abs() < 1e-15);
        assert_eq!(total_loss(0.3, 1.0, 1.0, 0.0, 0.0).unwrap(), 0.3);
        assert!(total_loss(f64::NAN, 0.0, 0.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn schedules() {
        let cfg = TrainConfig::preset(ScalePreset::Paper);
        assert_eq!(learning_rate(0, &cfg), 1e-3 / 1000.0);
        assert!((learning_rate(999, &cfg) - 1e-3).abs() < 1e-15);
        assert!((learning_rate(1000, &cfg) - 1e-3).abs() < 1e-15);
        assert!((learning_rate(cfg.steps, &cfg) - 1e-3 * cfg.lr_final_fraction).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for s in (1000..cfg.steps).step_by(500) {
            let lr = learning_rate(s, &cfg);
            assert!(lr <= prev);
            prev = lr;
        }
        assert_eq!(curvature_weight(0, &cfg), 0.0);
        assert_eq!(curvature_weight(500, &cfg), 2.5e-4);
        assert_eq!(curvature_weight(5000, &cfg), 5e-4);
        let mut off = cfg.clone();
        off.curvature = false;
        assert_eq!(curvature_weight(5000, &off), 0.0);
    }

    #[test]
    fn step_rng_is_a_function_of_seed_and_step() {
        let a: u64 = step_rng(1, 5).random();
        let b: u64 = step_rng(1, 5).random();
        let c: u64 = step_rng(1, 6).random();
        let d: u64 = step_rng(2, 5).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
