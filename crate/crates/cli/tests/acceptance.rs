//! Acceptance suite: one PASS/FAIL line per criterion on stdout, run
//! progress on stderr. `ACCEPTANCE_CRITERIA=1,2,5` restricts the run.

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use adaptive_hash::commands::{self, default_bands};
use adaptive_hash::dataset;
use adaptive_hash_core::chamfer::{chamfer_l1, chamfer_l1_brute_force};
use adaptive_hash_core::config::{MaskSetting, ScalePreset};
use adaptive_hash_core::exec::Sequential;
use adaptive_hash_core::mask::MaskActivation;
use adaptive_hash_core::math::{madd, norm, normalize, sub};
use adaptive_hash_core::mesh::mesh_to_points;
use adaptive_hash_core::nn::gradcheck::{grad_check, GradCheckOptions};
use adaptive_hash_core::render::{alpha_from_sdf, alphas_from_sdfs, composite, midpoint_depths, render_image, unit_sphere_interval};
use adaptive_hash_core::scene::AnalyticScene;
use adaptive_hash_core::sdf::{discrete_laplacian, epsilon_for_level, numerical_gradient};
use adaptive_hash_core::training::{batch_loss_and_grad, loss_eikonal, sample_batch, step_rng, BatchContext, Dataset, Trainer};
use adaptive_hash_core::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCENE: &str = "sphere-box";
const VIEWS: usize = 48;
const RES: u32 = 128;
const DATA_SEED: u64 = 7;
const SEEDS: [u64; 3] = [0, 1, 2];
const CHAMFER_BOUND: f64 = 0.05;
const RUN_BUDGET: Duration = Duration::from_secs(60 * 60);
const EVAL_POINTS: usize = 10_000;
const EVAL_SEED: u64 = 0;
const CURVATURE_POINTS: usize = 2_000;
const MASK_POINTS: usize = 1_000;
const GRADCHECK_BUDGET: Duration = Duration::from_secs(5 * 60);
const BLOCKING_STEPS: u64 = 2_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Variant {
    Adaptive,
    Baseline,
    Softmax,
    CurvatureOff,
}

impl Variant {
    fn config(self, seed: u64) -> TrainConfig {
        let mut c = TrainConfig::preset(ScalePreset::Desk);
        c.seed = seed;
        match self {
            Variant::Adaptive => {}
            Variant::Baseline => {
                c.mask = MaskSetting::Pinned;
                c.mask_pin_value = 1.0;
            }
            Variant::Softmax => c.mask_activation = MaskActivation::Softmax,
            Variant::CurvatureOff => c.curvature = false,
        }
        c
    }
}

#[derive(Clone, Debug)]
struct RunResult {
    chamfer: f64,
    wall: Duration,
    curvature: f64,
    /// Steps among the first [`BLOCKING_STEPS`] with inactive levels, and
    /// the largest inactive mask-row gradient seen on them.
    blocked_steps: u64,
    blocked_grad_max: f64,
    mask_edge: f64,
    mask_sphere: f64,
}

struct Runs {
    data: Dataset,
    cache: HashMap<(Variant, u64), RunResult>,
}

impl Runs {
    fn get(&mut self, variant: Variant, seed: u64) -> RunResult {
        if let Some(r) = self.cache.get(&(variant, seed)) {
            return r.clone();
        }
        let r = train_and_measure(&self.data, variant, seed);
        eprintln!(
            "  run {variant:?} seed {seed}: chamfer {:.5}, curvature {:.3}, {:.0} s",
            r.chamfer,
            r.curvature,
            r.wall.as_secs_f64()
        );
        self.cache.insert((variant, seed), r.clone());
        r
    }
}

fn train_and_measure(data: &Dataset, variant: Variant, seed: u64) -> RunResult {
    let start = Instant::now();
    let cfg = variant.config(seed);
    let levels = cfg.levels;
    let mut t = Trainer::<f32>::new(cfg).expect("valid config");
    let (mut blocked_steps, mut blocked_grad_max) = (0, 0.0f64);
    while !t.is_finished() {
        let m = t.step(data, &Sequential).expect("training step");
        if m.step < BLOCKING_STEPS && m.active_levels < levels {
            blocked_steps += 1;
            blocked_grad_max = blocked_grad_max.max(m.inactive_mask_grad_max);
        }
        if (m.step + 1).is_multiple_of(5000) {
            eprintln!("    {variant:?} seed {seed} step {}: rgb {:.5} s {:.0}", m.step + 1, m.loss_rgb, m.sharpness);
        }
    }
    let mesh = commands::extract(&t, commands::DEFAULT_EXTRACT_RESOLUTION, &Sequential).expect("extraction");
    let chamfer = match commands::evaluate_mesh(&mesh, SCENE, EVAL_POINTS, EVAL_SEED) {
        Ok(r) => r.chamfer,
        Err(_) => f64::INFINITY,
    };
    let wall = start.elapsed();

    let field = t.model().field(t.store().values());
    let mut cache = field.cache();
    let eps = 2.0 / commands::DEFAULT_EXTRACT_RESOLUTION as f64;
    let cell = RefCell::new(field.cache());
    let sdf = |p: [f64; 3]| field.value(&mut cell.borrow_mut(), p).unwrap();
    let curvature = match mesh_to_points(&mesh, CURVATURE_POINTS, 1) {
        Ok(points) => {
            let sum: f64 = points.iter().map(|&x| discrete_laplacian(&sdf, x, eps).abs()).sum();
            sum / points.len() as f64
        }
        Err(_) => f64::NAN,
    };

    let scene = AnalyticScene::named(SCENE).unwrap();
    let high = default_bands(levels).pop().unwrap().1;
    let band = high.start() - 1..*high.end();
    let mut mean_mask = |points: &[[f64; 3]]| {
        let total: f64 = points
            .iter()
            .map(|&x| {
                let m = field.mask_values(&mut cache, x).unwrap();
                m[band.clone()].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            })
            .sum();
        total / points.len() as f64
    };
    let mask_edge = mean_mask(&box_edge_points(&scene, MASK_POINTS, 3));
    let mask_sphere = mean_mask(&sphere_points(&scene, MASK_POINTS, 4));
    RunResult {
        chamfer,
        wall,
        curvature,
        blocked_steps,
        blocked_grad_max,
        mask_edge,
        mask_sphere,
    }
}

/// Points on the twelve box edges that lie on the scene surface.
fn box_edge_points(scene: &AnalyticScene, n: usize, seed: u64) -> Vec<[f64; 3]> {
    let (center, half) = ([0.3, 0.0, 0.0], 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let axis = rng.random_range(0..3usize);
        let signs = [rng.random_bool(0.5), rng.random_bool(0.5)];
        let mut x = center;
        x[axis] += rng.random_range(-half..half);
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        x[u] += if signs[0] { half } else { -half };
        x[v] += if signs[1] { half } else { -half };
        if scene.sdf(x).abs() < 1e-6 {
            out.push(x);
        }
    }
    out
}

/// Points on the sphere that lie on the scene surface.
fn sphere_points(scene: &AnalyticScene, n: usize, seed: u64) -> Vec<[f64; 3]> {
    let (center, radius) = ([-0.25, 0.0, 0.0], 0.35);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let d: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = norm(d);
        if !(0.1..=1.0).contains(&r) {
            continue;
        }
        let x = madd(center, normalize(d), radius);
        if scene.sdf(x).abs() < 1e-6 {
            out.push(x);
        }
    }
    out
}

/// Seeds are taken in order until the 2-of-3 outcome is decided.
fn two_of_three(mut holds: impl FnMut(u64) -> (bool, String)) -> Verdict {
    let (mut yes, mut no) = (0, 0);
    let mut notes = Vec::new();
    for seed in SEEDS {
        let (ok, note) = holds(seed);
        notes.push(format!("seed {seed} {} ({note})", if ok { "holds" } else { "fails" }));
        if ok {
            yes += 1;
        } else {
            no += 1;
        }
        if yes >= 2 || no >= 2 {
            break;
        }
    }
    verdict(yes >= 2, notes.join("; "))
}

fn criterion_1(data: &Dataset) -> Verdict {
    let start = Instant::now();
    let mut cfg = TrainConfig::preset(ScalePreset::Desk);
    cfg.seed = 5;
    let mut t = Trainer::<f64>::new(cfg.clone()).unwrap();
    for _ in 0..50 {
        t.step(data, &Sequential).unwrap();
    }
    let model = t.model().clone();
    let levels = model.levels();
    let ctx = BatchContext {
        active: levels,
        eps: epsilon_for_level(levels, model.sdf().grid()),
        background: data.background,
        w_eik: cfg.w_eik,
        w_curv: cfg.w_curv,
    };
    let rays = sample_batch(data, 8, cfg.samples_per_ray, &mut step_rng(cfg.seed, 1 << 40));
    let store = t.store_mut();
    let mut grads = store.new_grad_buffer();
    batch_loss_and_grad(&model, store.values(), &rays, &ctx, &Sequential, Some(&mut grads)).unwrap();
    let opts = GradCheckOptions {
        max_entries_per_array: Some(16),
        ..Default::default()
    };
    let report = grad_check(store, &grads, &opts, |p| {
        batch_loss_and_grad(&model, p, &rays, &ctx, &Sequential, None).unwrap().total
    });
    let groups = store.ids().filter(|&id| !store.is_frozen(id)).count();
    let elapsed = start.elapsed();
    verdict(
        report.passed() && report.max_rel_error < 1e-4 && elapsed < GRADCHECK_BUDGET,
        format!(
            "max rel. error {:.2e} over {} entries in {groups} arrays (tol 1e-4), {:.0} s (limit 300 s){}",
            report.max_rel_error,
            report.checked,
            elapsed.as_secs_f64(),
            if report.passed() { String::new() } else { format!(", failing {:?}", report.failing_names()) }
        ),
    )
}

fn criterion_2() -> Verdict {
    let cfg = TrainConfig::preset(ScalePreset::Desk);
    let t = Trainer::<f32>::new(cfg).unwrap();
    let field = t.model().field(t.store().values());
    let mut cache = field.cache();
    let s_model = t.model().opacity().sharpness(t.store().values());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut worst, mut clamped, mut rays) = (0.0f32, 0usize, 0usize);
    let mut depths = Vec::new();
    while rays < 10_000 {
        let o = madd([0.0; 3], normalize([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]), 2.5);
        let target = [rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)];
        let d = normalize(sub(target, o));
        let Some((near, far)) = unit_sphere_interval(o, d) else { continue };
        let s = [s_model, 100.0, 2000.0][rays % 3];
        midpoint_depths(near, far, 64, &mut depths);
        let sdf: Vec<f32> = depths.iter().map(|&z| field.value(&mut cache, madd(o, d, z)).unwrap() as f32).collect();
        let mut alphas = Vec::new();
        alphas_from_sdfs(s, &sdf, &mut alphas);
        for (w, a) in sdf.windows(2).zip(&alphas) {
            if w[1] >= w[0] {
                clamped += 1;
                if *a != 0.0 {
                    return verdict(false, format!("alpha {a} for non-decreasing pair {w:?}"));
                }
            }
        }
        let colors = vec![[0.5f32; 3]; alphas.len()];
        let c = composite(&alphas, &colors, [1.0f32; 3]).unwrap();
        let total: f32 = c.weights.iter().sum::<f32>() + c.residual;
        worst = worst.max((total - 1.0).abs());
        rays += 1;
    }
    let oracle = alpha_from_sdf(1.0f64, 0.1, -0.1);
    let reverse = alpha_from_sdf(1.0f64, -0.1, 0.1);
    verdict(
        worst <= 1e-5 && clamped > 0 && (oracle - 0.095162).abs() < 1e-6 && reverse == 0.0,
        format!(
            "max |Σw + T − 1| = {worst:.1e} over {rays} rays (tol 1e-5); {clamped} clamped intervals; α(1, 0.1, −0.1) = {oracle:.8} (oracle 0.095162, tol 1e-6); reversed pair α = {reverse}"
        ),
    )
}

fn criterion_3(data: &Dataset) -> Verdict {
    let config = |mask| {
        let mut c = TrainConfig::preset(ScalePreset::Desk);
        c.mask = mask;
        c.mask_pin_value = 1.0;
        c.seed = 3;
        c
    };
    let mut pinned = Trainer::<f32>::new(config(MaskSetting::Pinned)).unwrap();
    let mut plain = Trainer::<f32>::new(config(MaskSetting::None)).unwrap();
    let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();

    let cam = data.views[0].camera;
    let a = render_image(&pinned.model().renderer(pinned.store().values(), 8), &cam, 32, [1.0; 3], &Sequential).unwrap();
    let b = render_image(&plain.model().renderer(plain.store().values(), 8), &cam, 32, [1.0; 3], &Sequential).unwrap();
    let forward = a.pixels.iter().zip(&b.pixels).all(|(p, q)| p.map(f64::to_bits) == q.map(f64::to_bits));

    let mut steps_equal = 0;
    for _ in 0..100 {
        let ma = pinned.step(data, &Sequential).unwrap();
        let mb = plain.step(data, &Sequential).unwrap();
        if ma.loss_total.to_bits() != mb.loss_total.to_bits() {
            break;
        }
        steps_equal += 1;
    }
    let params_equal = plain.store().ids().all(|id| {
        let name = plain.store().name(id);
        pinned
            .store()
            .id_of(name)
            .is_some_and(|other| bits(plain.store().values().get(id)) == bits(pinned.store().values().get(other)))
    });
    verdict(
        forward && steps_equal == 100 && params_equal,
        format!("forward image bitwise equal: {forward}; bitwise-equal losses for {steps_equal}/100 steps; final parameters equal: {params_equal}"),
    )
}

fn criterion_4(runs: &mut Runs) -> Verdict {
    let r = runs.get(Variant::Adaptive, SEEDS[0]);
    verdict(
        r.blocked_steps > 0 && r.blocked_grad_max == 0.0,
        format!(
            "{} of the first {BLOCKING_STEPS} steps had inactive levels; max |grad| on their mask rows = {:e} (required exactly 0)",
            r.blocked_steps, r.blocked_grad_max
        ),
    )
}

fn criterion_5() -> Verdict {
    let sphere = |x: [f64; 3]| norm(x) - 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut grads = Vec::new();
    while grads.len() < 1000 {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if norm(x) > 0.1 {
            grads.push(numerical_gradient(&sphere, x, 1e-3));
        }
    }
    let eik = loss_eikonal(&grads).unwrap();

    let quadratic = |x: [f64; 3]| x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let mut quad_exact = true;
    for i in -8..=8 {
        for j in [-3, 0, 5] {
            let x = [i as f64 / 16.0, j as f64 / 8.0, 0.375];
            quad_exact &= discrete_laplacian(&quadratic, x, 0.0625) == 6.0;
        }
    }

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = normalize([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let lap = discrete_laplacian(&sphere, madd([0.0; 3], d, 0.4), 1e-3);
        worst = worst.max((lap - 5.0).abs() / 5.0);
    }
    verdict(
        eik < 1e-6 && quad_exact && worst < 0.01,
        format!("sphere eikonal {eik:.2e} (tol 1e-6); quadratic Laplacian exactly 6: {quad_exact}; sphere Laplacian at |x| = 0.4 worst rel. error {worst:.2e} (tol 1e-2)"),
    )
}

fn criterion_6(runs: &mut Runs) -> Verdict {
    two_of_three(|seed| {
        let a = runs.get(Variant::Adaptive, seed);
        let b = runs.get(Variant::Baseline, seed);
        let in_time = a.wall <= RUN_BUDGET && b.wall <= RUN_BUDGET;
        (
            a.chamfer < CHAMFER_BOUND && a.chamfer <= b.chamfer && in_time,
            format!(
                "adaptive {:.4} < {CHAMFER_BOUND}, baseline {:.4}, runs {:.0}/{:.0} s ≤ 3600 s",
                a.chamfer,
                b.chamfer,
                a.wall.as_secs_f64(),
                b.wall.as_secs_f64()
            ),
        )
    })
}

fn criterion_7(runs: &mut Runs) -> Verdict {
    two_of_three(|seed| {
        let a = runs.get(Variant::Adaptive, seed);
        let s = runs.get(Variant::Softmax, seed);
        let c = runs.get(Variant::CurvatureOff, seed);
        (
            a.chamfer <= s.chamfer && c.curvature > a.curvature,
            format!(
                "sigmoid {:.4} vs softmax {:.4}; mean |∇²SDF| curvature-off {:.3} vs on {:.3}",
                a.chamfer, s.chamfer, c.curvature, a.curvature
            ),
        )
    })
}

fn criterion_8(runs: &mut Runs) -> Verdict {
    let r = runs.get(Variant::Adaptive, SEEDS[0]);
    verdict(
        r.mask_edge > r.mask_sphere,
        format!(
            "mean high-band mask: box edges {:.4} vs sphere {:.4} ({MASK_POINTS} points each, seed {})",
            r.mask_edge, r.mask_sphere, SEEDS[0]
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cloud = |n: usize, scale: f64| -> Vec<[f64; 3]> {
            (0..n)
                .map(|_| [0, 1, 2].map(|_| rng.random_range(-scale..scale)))
                .collect()
        };
        let a = cloud(200, 1.0);
        let b = cloud(200, 0.5 + seed as f64 * 0.1);
        let g = chamfer_l1(&a, &b).unwrap();
        let f = chamfer_l1_brute_force(&a, &b).unwrap();
        for (x, y) in [(g.chamfer, f.chamfer), (g.acc, f.acc), (g.comp, f.comp)] {
            worst = worst.max((x - y).abs());
        }
    }
    verdict(worst <= 1e-12, format!("max |grid − brute force| = {worst:.1e} over 20 pairs of 200-point clouds (tol 1e-12)"))
}

const TINY: &str = r#"{
  "levels": 3, "initial_levels": 2, "max_resolution": 32, "log2_table_size": 10,
  "sdf_hidden": 16, "geometry_features": 8, "rgb_hidden": 16,
  "mask_levels": 2, "mask_d_min": 3, "mask_d_max": 5, "mask_log2_table_size": 8,
  "rays_per_step": 8, "samples_per_ray": 16, "unveil_interval": 10,
  "lr_warmup_steps": 5, "curvature_warmup_steps": 5,
  "steps": 40, "checkpoint_interval": 20, "seed": 6
}"#;

fn criterion_10(tmp: &Path) -> Verdict {
    let exe = env!("CARGO_BIN_EXE_adaptive-hash");
    let cfg = tmp.join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let run = |dir: &Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        std::fs::create_dir_all(dir).unwrap();
        let s = |p: &Path| p.to_str().unwrap().to_string();
        let data = dir.join("data");
        let ck = dir.join("run").join("checkpoint.bin");
        let commands: Vec<Vec<String>> = vec![
            vec!["generate".into(), "--scene".into(), SCENE.into(), "--views".into(), "6".into(), "--res".into(), "24".into(), "--seed".into(), "1".into(), "--out".into(), s(&data)],
            vec!["train".into(), "--config".into(), s(&cfg), "--data".into(), s(&data), "--out".into(), s(&dir.join("run")), "-q".into()],
            vec!["extract-mesh".into(), "--checkpoint".into(), s(&ck), "--resolution".into(), "48".into(), "--out".into(), s(&dir.join("mesh.ply"))],
            vec!["render".into(), "--checkpoint".into(), s(&ck), "--data".into(), s(&data), "--view".into(), "2".into(), "--samples".into(), "32".into(), "--out".into(), s(&dir.join("view.ppm"))],
            vec!["eval".into(), "--checkpoint".into(), s(&ck), "--scene".into(), SCENE.into(), "--points".into(), "2000".into(), "--resolution".into(), "48".into(), "--out".into(), s(&dir.join("eval.json"))],
            vec!["dump-masks".into(), "--checkpoint".into(), s(&ck), "--data".into(), s(&data), "--samples".into(), "32".into(), "--out".into(), s(&dir.join("masks"))],
        ];
        for args in &commands {
            let out = Command::new(exe).args(args).env("ADAPTIVE_HASH_THREADS", "1").output().unwrap();
            if !out.status.success() {
                return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
            }
        }
        let mut files = Vec::new();
        collect(dir, dir, &mut files);
        files.retain(|(name, _)| !name.ends_with("config.json"));
        files.sort();
        Ok(files)
    };
    let (a, b) = match (run(&tmp.join("first")), run(&tmp.join("second"))) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return verdict(false, e),
    };
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    verdict(
        a.len() == b.len() && differing.is_empty(),
        format!("{} output files from generate, train, extract-mesh, render, eval and dump-masks; differing: {differing:?}", a.len()),
    )
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let path: PathBuf = e.unwrap().path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().display().to_string();
            out.push((rel, std::fs::read(&path).unwrap()));
        }
    }
}

fn main() {
    // Under `cargo test -- <filter>` style invocations, only run when not
    // asked to list tests.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let selected: Option<Vec<u32>> = std::env::var("ACCEPTANCE_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |c: u32| selected.as_ref().is_none_or(|s| s.contains(&c));

    let tmp = tempfile::tempdir().unwrap();
    let needs_data = [1, 3, 4, 6, 7, 8].iter().any(|&c| wanted(c));
    let data = if needs_data {
        let dir = tmp.path().join("data");
        dataset::generate(SCENE, VIEWS, RES, DATA_SEED, &dir, &Sequential).unwrap();
        dataset::load(&dir).unwrap().1
    } else {
        Dataset::new(
            vec![adaptive_hash_core::training::TrainingView {
                camera: adaptive_hash_core::scene::dataset_cameras(2, 1, 0).unwrap()[0],
                pixels: vec![[1.0; 3]],
            }],
            [1.0; 3],
        )
        .unwrap()
    };
    let mut runs = Runs {
        data: data.clone(),
        cache: HashMap::new(),
    };

    type Check<'a> = Box<dyn FnOnce(&mut Runs) -> Verdict + 'a>;
    let tmp_path = tmp.path().to_path_buf();
    let checks: Vec<(u32, &str, Check)> = vec![
        (1, "gradient integrity", Box::new(|_| criterion_1(&data))),
        (2, "compositing identity", Box::new(|_| criterion_2())),
        (3, "mask identity reduction", Box::new(|_| criterion_3(&data))),
        (5, "regularizer oracles", Box::new(|_| criterion_5())),
        (9, "chamfer evaluator exactness", Box::new(|_| criterion_9())),
        (10, "determinism", Box::new(move |_| criterion_10(&tmp_path))),
        (4, "gradient blocking", Box::new(criterion_4)),
        (6, "end-to-end reconstruction", Box::new(criterion_6)),
        (8, "mask spatial adaptivity", Box::new(criterion_8)),
        (7, "ablation directions", Box::new(criterion_7)),
    ];
    let mut results = Vec::new();
    for (id, name, check) in checks {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let v = check(&mut runs);
        let line = format!(
            "criterion {id:>2} {name}: {} [{:.1} s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
        println!("{line}");
        results.push((id, v.pass));
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
