//! Pinhole rays, stratified sampling, SDF-to-opacity conversion and alpha
//! compositing.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{chunk_ranges, Executor};
use crate::math::{self, Vec3};
use crate::nn::{ParamId, ParameterStore, Params};
use crate::real::Real;

/// Initial value of the sharpness parameter `ζ` (`s = exp(10ζ)`).
pub const ZETA_INIT: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Square-pixel intrinsics with the principal point at the image center.
    pub fn from_fov(width: u32, height: u32, half_fov_y: f64) -> Self {
        let f = 0.5 * height as f64 / Real::tan(half_fov_y);
        Self {
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
        }
    }
}

/// OpenCV-style pinhole camera: x right, y down, z forward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    /// Camera-to-world `[R | t]`, row-major 3×4.
    pub pose: [f64; 12],
}

impl CameraModel {
    pub fn new(intrinsics: Intrinsics, pose: [f64; 12]) -> Result<Self> {
        let col = |j: usize| [pose[j], pose[4 + j], pose[8 + j]];
        for i in 0..3 {
            for j in 0..3 {
                let d = math::dot(col(i), col(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                if !(d - expect).abs().le(&1e-6) {
                    return Err(Error::Invalid("camera rotation is not orthonormal".into()));
                }
            }
        }
        if intrinsics.width == 0 || intrinsics.height == 0 || !(intrinsics.fx > 0.0 && intrinsics.fy > 0.0) {
            return Err(Error::Invalid("degenerate camera intrinsics".into()));
        }
        Ok(Self { intrinsics, pose })
    }

    /// Camera at `eye` looking at `target`; image y points away from `up`.
    pub fn look_at(intrinsics: Intrinsics, eye: Vec3, target: Vec3, up: Vec3) -> Result<Self> {
        let z = math::normalize(math::sub(target, eye));
        let mut x = math::cross(z, up);
        if math::norm(x) < 1e-6 {
            x = math::cross(z, [0.0, 0.0, 1.0]);
        }
        let x = math::normalize(x);
        let y = math::cross(z, x);
        let pose = [
            x[0], y[0], z[0], eye[0], //
            x[1], y[1], z[1], eye[1], //
            x[2], y[2], z[2], eye[2],
        ];
        Self::new(intrinsics, pose)
    }

    pub fn center(&self) -> Vec3 {
        [self.pose[3], self.pose[7], self.pose[11]]
    }

    pub fn rotate(&self, d: Vec3) -> Vec3 {
        let p = &self.pose;
        [
            p[0] * d[0] + p[1] * d[1] + p[2] * d[2],
            p[4] * d[0] + p[5] * d[1] + p[6] * d[2],
            p[8] * d[0] + p[9] * d[1] + p[10] * d[2],
        ]
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }
}

/// World-space ray through pixel `(u, v)` offset by `jitter ∈ [0,1)²`.
pub fn generate_ray(cam: &CameraModel, u: u32, v: u32, jitter: (f64, f64)) -> (Vec3, Vec3) {
    let k = &cam.intrinsics;
    let dc = [
        (u as f64 + jitter.0 - k.cx) / k.fx,
        (v as f64 + jitter.1 - k.cy) / k.fy,
        1.0,
    ];
    (cam.center(), math::normalize(cam.rotate(dc)))
}

/// Chord of the ray `o + t·d` (unit `d`) inside the unit sphere, clipped to
/// `t ≥ 0`. Misses and tangent rays give `None`.
pub fn unit_sphere_interval(o: Vec3, d: Vec3) -> Option<(f64, f64)> {
    let b = math::dot(o, d);
    let c = math::dot(o, o) - 1.0;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let h = Real::sqrt(disc);
    let near = (-b - h).max(0.0);
    let far = -b + h;
    (far > near).then_some((near, far))
}

/// `t_i = near + (far − near)(i + u_i)/M` with `u_i ~ U[0,1)`.
pub fn stratified_depths<R: Rng + ?Sized>(near: f64, far: f64, m: usize, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    let step = (far - near) / m as f64;
    for i in 0..m {
        let u: f64 = rng.random();
        out.push(near + step * (i as f64 + u));
    }
}

/// Bin midpoints, used when rendering without jitter.
pub fn midpoint_depths(near: f64, far: f64, m: usize, out: &mut Vec<f64>) {
    out.clear();
    let step = (far - near) / m as f64;
    out.extend((0..m).map(|i| near + step * (i as f64 + 0.5)));
}

/// Logistic density CDF `Φ_s(x) = 1/(1 + e^{−s·x})`.
pub fn logistic_cdf<F: Real>(s: F, x: F) -> F {
    let z = s * x;
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

fn log_sigmoid<F: Real>(z: F) -> F {
    // log σ(z) = −softplus(−z)
    if z >= F::zero() {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// `α = max((Φ_s(a) − Φ_s(b)) / Φ_s(a), 0)`, evaluated as `1 − Φ_s(b)/Φ_s(a)`
/// in the log domain so that deep interior samples stay finite.
pub fn alpha_from_sdf<F: Real>(s: F, sdf_i: F, sdf_next: F) -> F {
    alpha_and_grad(s, sdf_i, sdf_next).0
}

/// Partial derivatives of [`alpha_from_sdf`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlphaGrad<F> {
    pub d_sdf_i: F,
    pub d_sdf_next: F,
    pub d_s: F,
}

pub fn alpha_and_grad<F: Real>(s: F, a: F, b: F) -> (F, AlphaGrad<F>) {
    let za = s * a;
    let zb = s * b;
    let r = (log_sigmoid(zb) - log_sigmoid(za)).exp();
    let alpha = F::one() - r;
    if !(alpha > F::zero()) {
        return (F::zero(), AlphaGrad::default());
    }
    let one_m_p = logistic_cdf(F::one(), -za);
    let one_m_q = logistic_cdf(F::one(), -zb);
    let g = AlphaGrad {
        d_sdf_i: r * s * one_m_p,
        d_sdf_next: -r * s * one_m_q,
        d_s: r * (a * one_m_p - b * one_m_q),
    };
    (alpha, g)
}

/// Trainable sharpness `s = exp(10·ζ)`.
#[derive(Clone, Copy, Debug)]
pub struct OpacityConverter {
    zeta: ParamId,
}

impl OpacityConverter {
    pub fn new<F: Real>(store: &mut ParameterStore<F>) -> Self {
        Self {
            zeta: store.register("render.zeta", vec![F::of(ZETA_INIT)]),
        }
    }

    pub fn zeta(&self) -> ParamId {
        self.zeta
    }

    pub fn sharpness<F: Real>(&self, params: &Params<F>) -> F {
        (F::of(10.0) * params.get(self.zeta)[0]).exp()
    }
}

/// Alphas for consecutive SDF samples; the last sample pairs with itself and
/// gets `α = 0`.
pub fn alphas_from_sdfs<F: Real>(s: F, sdf: &[F], out: &mut Vec<F>) {
    out.clear();
    for i in 0..sdf.len() {
        let next = sdf.get(i + 1).copied().unwrap_or(sdf[i]);
        out.push(alpha_from_sdf(s, sdf[i], next));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Composite<F> {
    pub color: [F; 3],
    pub weights: Vec<F>,
    /// Transmittance before each sample, `T_1 … T_M`.
    pub transmittance: Vec<F>,
    /// `T_{M+1}`.
    pub residual: F,
}

/// `T_1 = 1, T_{i+1} = T_i(1 − α_i), w_i = T_i α_i`,
/// `ĉ = Σ w_i c_i + T_{M+1}·background`.
pub fn composite<F: Real>(alphas: &[F], colors: &[[F; 3]], background: [F; 3]) -> Result<Composite<F>> {
    if alphas.len() != colors.len() {
        return Err(Error::LengthMismatch {
            what: "composite colors",
            expected: alphas.len(),
            got: colors.len(),
        });
    }
    let mut t = F::one();
    let mut color = [F::zero(); 3];
    let mut weights = Vec::with_capacity(alphas.len());
    let mut transmittance = Vec::with_capacity(alphas.len());
    for (&a, c) in alphas.iter().zip(colors) {
        let w = t * a;
        for k in 0..3 {
            color[k] += w * c[k];
        }
        weights.push(w);
        transmittance.push(t);
        t *= F::one() - a;
    }
    for k in 0..3 {
        color[k] += t * background[k];
    }
    Ok(Composite {
        color,
        weights,
        transmittance,
        residual: t,
    })
}

/// Gradients of `⟨d_color, ĉ⟩` with respect to the alphas and colors:
/// `∂ĉ/∂c_i = w_i`, `∂ĉ/∂α_i = T_i (c_i − R_{i+1})` where `R` is the color
/// composited from sample `i + 1` onward (background included).
pub fn composite_backward<F: Real>(
    alphas: &[F],
    colors: &[[F; 3]],
    background: [F; 3],
    comp: &Composite<F>,
    d_color: [F; 3],
    d_alpha: &mut Vec<F>,
    d_colors: &mut Vec<[F; 3]>,
) {
    let m = alphas.len();
    d_alpha.clear();
    d_alpha.resize(m, F::zero());
    d_colors.clear();
    d_colors.resize(m, [F::zero(); 3]);
    let mut rest = background;
    for i in (0..m).rev() {
        let (a, c, t, w) = (alphas[i], colors[i], comp.transmittance[i], comp.weights[i]);
        let mut da = F::zero();
        for k in 0..3 {
            da += d_color[k] * (c[k] - rest[k]);
            d_colors[i][k] = d_color[k] * w;
            rest[k] = a * c[k] + (F::one() - a) * rest[k];
        }
        d_alpha[i] = t * da;
    }
}

/// Anything that can be volume rendered: an SDF plus a per-sample payload
/// that gets composited (a color, or a scalar diagnostic in channel 0).
pub trait VolumeField: Sync {
    type Scratch: Send;

    fn scratch(&self) -> Self::Scratch;

    /// Sharpness `s` of the opacity conversion.
    fn sharpness(&self) -> f64;

    /// SDF and payload at `x` seen along the unit direction `d`.
    fn sample(&self, scratch: &mut Self::Scratch, x: Vec3, d: Vec3) -> Result<(f64, [f64; 3])>;
}

/// Renders one ray with bin-midpoint depths.
pub fn render_ray<V: VolumeField>(
    field: &V,
    scratch: &mut V::Scratch,
    o: Vec3,
    d: Vec3,
    samples: usize,
    background: [f64; 3],
) -> Result<Composite<f64>> {
    let Some((near, far)) = unit_sphere_interval(o, d) else {
        return composite(&[], &[], background);
    };
    let mut depths = Vec::with_capacity(samples);
    midpoint_depths(near, far, samples, &mut depths);
    let mut sdf = Vec::with_capacity(samples);
    let mut colors = Vec::with_capacity(samples);
    for &t in &depths {
        let (v, c) = field.sample(scratch, math::madd(o, d, t), d)?;
        sdf.push(v);
        colors.push(c);
    }
    let mut alphas = Vec::with_capacity(samples);
    alphas_from_sdfs(field.sharpness(), &sdf, &mut alphas);
    composite(&alphas, &colors, background)
}

/// Linear RGB image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn filled(width: u32, height: u32, c: [f64; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![c; width as usize * height as usize],
        }
    }

    pub fn get(&self, u: u32, v: u32) -> [f64; 3] {
        self.pixels[v as usize * self.width as usize + u as usize]
    }
}

/// Full-frame render through pixel centers with midpoint depths; rows are
/// split across the executor and reassembled in order.
pub fn render_image<V: VolumeField, E: Executor>(
    field: &V,
    cam: &CameraModel,
    samples: usize,
    background: [f64; 3],
    exec: &E,
) -> Result<Image> {
    let (w, h) = (cam.width(), cam.height());
    let ranges = chunk_ranges(h as usize, exec.workers() * 4);
    let parts = exec.map(ranges.len(), |p| -> Result<Vec<[f64; 3]>> {
        let mut scratch = field.scratch();
        let mut out = Vec::with_capacity(ranges[p].len() * w as usize);
        for v in ranges[p].clone() {
            for u in 0..w {
                let (o, d) = generate_ray(cam, u, v as u32, (0.5, 0.5));
                out.push(render_ray(field, &mut scratch, o, d, samples, background)?.color);
            }
        }
        Ok(out)
    });
    let mut pixels = Vec::with_capacity(w as usize * h as usize);
    for p in parts {
        pixels.extend(p?);
    }
    Ok(Image {
        width: w,
        height: h,
        pixels,
    })
}
