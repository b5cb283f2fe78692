//! Analytic ground truth: SDF primitives composed with min/max, sphere
//! tracing, Lambertian dataset synthesis and surface sampling.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::real::Real;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::math::{self, Vec3};
use crate::render::{generate_ray, unit_sphere_interval, CameraModel, Image, Intrinsics, VolumeField};

pub const AMBIENT: f64 = 0.1;
pub const TRACE_TOLERANCE: f64 = 1e-5;
pub const TRACE_MAX_STEPS: usize = 512;
pub const CAMERA_RADIUS: f64 = 2.5;
/// Half of the vertical field of view of generated cameras, in radians.
pub const HALF_FOV: f64 = 0.35;
pub const SCENE_NAMES: [&str; 4] = ["sphere", "sphere-box", "box", "torus"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    Sphere { center: Vec3, radius: f64 },
    Box { center: Vec3, half: Vec3 },
    /// Torus around the y axis through `center`.
    Torus { center: Vec3, major: f64, minor: f64 },
}

impl Primitive {
    pub fn sdf(&self, x: Vec3) -> f64 {
        match *self {
            Primitive::Sphere { center, radius } => math::norm(math::sub(x, center)) - radius,
            Primitive::Box { center, half } => {
                let p = math::sub(x, center);
                let q = [p[0].abs() - half[0], p[1].abs() - half[1], p[2].abs() - half[2]];
                let outside = math::norm([q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)]);
                outside + q[0].max(q[1]).max(q[2]).min(0.0)
            }
            Primitive::Torus { center, major, minor } => {
                let p = math::sub(x, center);
                let rho = Real::sqrt(p[0] * p[0] + p[2] * p[2]);
                Real::sqrt((rho - major) * (rho - major) + p[1] * p[1]) - minor
            }
        }
    }

    /// Closed-form gradient; unit length away from the medial axis.
    pub fn normal(&self, x: Vec3) -> Vec3 {
        match *self {
            Primitive::Sphere { center, .. } => math::normalize(math::sub(x, center)),
            Primitive::Box { center, half } => {
                let p = math::sub(x, center);
                let q = [p[0].abs() - half[0], p[1].abs() - half[1], p[2].abs() - half[2]];
                let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
                if q.iter().any(|&v| v > 0.0) {
                    let m = [q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)];
                    let n = math::normalize(m);
                    [n[0] * sgn(p[0]), n[1] * sgn(p[1]), n[2] * sgn(p[2])]
                } else {
                    let k = if q[0] >= q[1] && q[0] >= q[2] {
                        0
                    } else if q[1] >= q[2] {
                        1
                    } else {
                        2
                    };
                    let mut n = [0.0; 3];
                    n[k] = sgn(p[k]);
                    n
                }
            }
            Primitive::Torus { center, major, .. } => {
                let p = math::sub(x, center);
                let rho = Real::sqrt(p[0] * p[0] + p[2] * p[2]);
                if rho == 0.0 {
                    return [0.0, p[1].signum(), 0.0];
                }
                let q = [rho - major, p[1]];
                let len = Real::sqrt(q[0] * q[0] + q[1] * q[1]);
                if len == 0.0 {
                    return [0.0; 3];
                }
                [q[0] / len * p[0] / rho, q[1] / len, q[0] / len * p[2] / rho]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SceneNode {
    Shape { primitive: Primitive, albedo: [f64; 3] },
    Union(Box<SceneNode>, Box<SceneNode>),
    Intersection(Box<SceneNode>, Box<SceneNode>),
}

impl SceneNode {
    /// SDF value and the primitive leaf that realizes it.
    fn eval(&self, x: Vec3) -> (f64, &Primitive, [f64; 3]) {
        match self {
            SceneNode::Shape { primitive, albedo } => (primitive.sdf(x), primitive, *albedo),
            SceneNode::Union(a, b) => {
                let (ra, rb) = (a.eval(x), b.eval(x));
                if rb.0 < ra.0 {
                    rb
                } else {
                    ra
                }
            }
            SceneNode::Intersection(a, b) => {
                let (ra, rb) = (a.eval(x), b.eval(x));
                if rb.0 > ra.0 {
                    rb
                } else {
                    ra
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceResult {
    Hit { t: f64, point: Vec3 },
    Miss,
    /// Step budget ran out; callers treat it as a miss.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticScene {
    pub root: SceneNode,
    /// Unit direction towards the light.
    pub light: Vec3,
}

fn shape(primitive: Primitive, albedo: [f64; 3]) -> SceneNode {
    SceneNode::Shape { primitive, albedo }
}

pub const SPHERE_ALBEDO: [f64; 3] = [0.85, 0.35, 0.3];
pub const BOX_ALBEDO: [f64; 3] = [0.3, 0.55, 0.85];

impl AnalyticScene {
    pub fn new(root: SceneNode) -> Self {
        Self {
            root,
            light: math::normalize([0.45, 0.8, -0.4]),
        }
    }

    /// Built-in scenes by name (see [`SCENE_NAMES`]).
    pub fn named(name: &str) -> Option<Self> {
        let root = match name {
            "sphere" => shape(Primitive::Sphere { center: [0.0; 3], radius: 0.5 }, SPHERE_ALBEDO),
            "sphere-box" => SceneNode::Union(
                Box::new(shape(Primitive::Sphere { center: [-0.25, 0.0, 0.0], radius: 0.35 }, SPHERE_ALBEDO)),
                Box::new(shape(Primitive::Box { center: [0.3, 0.0, 0.0], half: [0.25; 3] }, BOX_ALBEDO)),
            ),
            "box" => shape(Primitive::Box { center: [0.0; 3], half: [0.35; 3] }, BOX_ALBEDO),
            "torus" => shape(Primitive::Torus { center: [0.0; 3], major: 0.45, minor: 0.18 }, SPHERE_ALBEDO),
            _ => return None,
        };
        Some(Self::new(root))
    }

    pub fn sdf(&self, x: Vec3) -> f64 {
        self.root.eval(x).0
    }

    pub fn normal(&self, x: Vec3) -> Vec3 {
        self.root.eval(x).1.normal(x)
    }

    pub fn albedo(&self, x: Vec3) -> [f64; 3] {
        self.root.eval(x).2
    }

    /// `albedo · max(0, n·l) + ambient`, clamped to `[0, 1]`.
    pub fn shade(&self, x: Vec3) -> [f64; 3] {
        let (_, prim, albedo) = self.root.eval(x);
        let lambert = math::dot(prim.normal(x), self.light).max(0.0);
        [
            (albedo[0] * lambert + AMBIENT).min(1.0),
            (albedo[1] * lambert + AMBIENT).min(1.0),
            (albedo[2] * lambert + AMBIENT).min(1.0),
        ]
    }

    /// Marches `t += sdf` inside the unit sphere until `sdf < tol`.
    pub fn sphere_trace(&self, o: Vec3, d: Vec3, max_steps: usize, tol: f64) -> TraceResult {
        let Some((near, far)) = unit_sphere_interval(o, d) else {
            return TraceResult::Miss;
        };
        let mut t = near;
        for _ in 0..max_steps {
            let p = math::madd(o, d, t);
            let v = self.sdf(p);
            if v < tol {
                let t = self.refine_hit(o, d, t, far, tol);
                return TraceResult::Hit {
                    t,
                    point: math::madd(o, d, t),
                };
            }
            t += v;
            if t > far {
                return TraceResult::Miss;
            }
        }
        TraceResult::Exhausted
    }

    /// Sharpens a sphere-tracing hit on grazing rays: if the ray enters the
    /// surface shortly after `t`, bisects to the crossing.
    fn refine_hit(&self, o: Vec3, d: Vec3, t: f64, far: f64, tol: f64) -> f64 {
        let mut step = tol;
        while t + step <= far && step < 1e3 * tol {
            let t2 = t + step;
            if self.sdf(math::madd(o, d, t2)) < 0.0 {
                let (mut lo, mut hi) = (t, t2);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.sdf(math::madd(o, d, mid)) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return lo;
            }
            step *= 2.0;
        }
        t
    }

    /// Color of one camera ray, or `None` on a miss.
    pub fn trace_color(&self, o: Vec3, d: Vec3) -> Option<[f64; 3]> {
        match self.sphere_trace(o, d, TRACE_MAX_STEPS, TRACE_TOLERANCE) {
            TraceResult::Hit { point, .. } => Some(self.shade(point)),
            _ => None,
        }
    }

    /// Renders a view with 2×2 supersampling per pixel.
    pub fn render_view<E: Executor>(&self, cam: &CameraModel, background: [f64; 3], exec: &E) -> Image {
        const SUB: [(f64, f64); 4] = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];
        let (w, h) = (cam.width(), cam.height());
        let rows = exec.map(h as usize, |v| {
            (0..w)
                .map(|u| {
                    let mut acc = [0.0; 3];
                    for &j in &SUB {
                        let (o, d) = generate_ray(cam, u, v as u32, j);
                        let c = self.trace_color(o, d).unwrap_or(background);
                        for k in 0..3 {
                            acc[k] += c[k];
                        }
                    }
                    [acc[0] / 4.0, acc[1] / 4.0, acc[2] / 4.0]
                })
                .collect::<Vec<_>>()
        });
        Image {
            width: w,
            height: h,
            pixels: rows.into_iter().flatten().collect(),
        }
    }

    /// Approximately uniform surface samples: uniform points in a band around
    /// the surface, projected along the analytic gradient until
    /// `|sdf| < 1e-6`.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Vec<Vec3> {
        const BAND: f64 = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut x = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            if self.sdf(x).abs() > BAND {
                continue;
            }
            for _ in 0..64 {
                let v = self.sdf(x);
                if v.abs() < 1e-6 {
                    out.push(x);
                    break;
                }
                x = math::madd(x, self.normal(x), -v);
            }
        }
        out
    }
}

/// Cameras on a spherical Fibonacci lattice of radius 2.5 looking at the
/// origin; `seed` rotates the lattice about the y axis.
pub fn dataset_cameras(n_views: usize, resolution: u32, seed: u64) -> Result<Vec<CameraModel>> {
    if n_views < 2 {
        return Err(Error::Invalid("need at least two views".into()));
    }
    if resolution == 0 {
        return Err(Error::Invalid("image resolution must be positive".into()));
    }
    let offset: f64 = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..core::f64::consts::TAU);
    let golden = core::f64::consts::PI * (3.0 - Real::sqrt(5.0));
    let k = Intrinsics::from_fov(resolution, resolution, HALF_FOV);
    (0..n_views)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n_views as f64;
            let r = Real::sqrt(1.0 - y * y);
            let phi = golden * i as f64 + offset;
            let eye = math::scale([r * Real::cos(phi), y, r * Real::sin(phi)], CAMERA_RADIUS);
            CameraModel::look_at(k, eye, [0.0; 3], [0.0, 1.0, 0.0])
        })
        .collect()
}

/// The scene's SDF rendered volumetrically with a constant white payload,
/// for comparing silhouettes against sphere tracing.
pub struct WhiteScene<'a> {
    pub scene: &'a AnalyticScene,
    pub sharpness: f64,
}

impl VolumeField for WhiteScene<'_> {
    type Scratch = ();

    fn scratch(&self) {}

    fn sharpness(&self) -> f64 {
        self.sharpness
    }

    fn sample(&self, _: &mut (), x: Vec3, _: Vec3) -> Result<(f64, [f64; 3])> {
        Ok((self.scene.sdf(x), [1.0; 3]))
    }
}
