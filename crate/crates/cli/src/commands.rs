//! The subcommands, as plain functions over typed arguments.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use adaptive_hash_core::chamfer::{chamfer_l1, ChamferReport};
use adaptive_hash_core::exec::Executor;
use adaptive_hash_core::mesh::{marching_cubes_grid, mesh_to_points, sample_grid, TriangleMesh};
use adaptive_hash_core::model::MaskBandRenderer;
use adaptive_hash_core::render::render_image;
use adaptive_hash_core::training::{Dataset, StepMetrics, Trainer};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, Checkpoint};
use crate::dataset;
use crate::error::{CliError, Result};
use crate::mesh_io;
use crate::metrics::MetricsLog;
use crate::ppm;
use crate::run_config::RunConfig;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_ECHO_FILE: &str = "config.json";
pub const DEFAULT_EXTRACT_RESOLUTION: usize = 256;
pub const DEFAULT_RENDER_SAMPLES: usize = 128;
pub const DEFAULT_EVAL_POINTS: usize = 10_000;
pub const BOUNDS: (f64, f64) = (-1.0, 1.0);

/// Offsets the ground-truth sample stream from the mesh sample stream.
const SURFACE_SEED_OFFSET: u64 = 0x5eed;

pub fn generate<E: Executor>(scene: &str, views: usize, res: u32, seed: u64, out: &Path, exec: &E) -> Result<()> {
    dataset::generate(scene, views, res, seed, out, exec).map(|_| ())
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Continue from `<out_dir>/checkpoint.bin` when it exists.
    pub resume: bool,
    /// Stop (with a checkpoint) once this many steps have been taken in
    /// total, leaving the run resumable.
    pub stop_at: Option<u64>,
    pub verbose: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub step: u64,
    pub finished: bool,
    pub last: Option<StepMetrics>,
}

/// Trains the configured run, writing the checkpoint every
/// `checkpoint_interval` steps and at the end.
pub fn train<E: Executor>(cfg: &RunConfig, data: &Dataset, opts: &TrainOptions, exec: &E) -> Result<TrainOutcome> {
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let ck_path = out.join(CHECKPOINT_FILE);
    let mut trainer = if opts.resume && ck_path.exists() {
        let t = checkpoint::load_trainer(&ck_path)?;
        if t.config() != &cfg.train {
            return Err(CliError::Config(format!(
                "{} was written with a different configuration",
                ck_path.display()
            )));
        }
        t
    } else {
        Trainer::<f32>::new(cfg.train.clone())?
    };
    let echo = out.join(CONFIG_ECHO_FILE);
    std::fs::write(&echo, cfg.to_json_string()).map_err(|e| CliError::io(&echo, e))?;
    let mut log = MetricsLog::open(&out.join(METRICS_FILE), trainer.state().step)?;
    let stop = opts.stop_at.map_or(cfg.train.steps, |s| s.min(cfg.train.steps));
    let mut last = None;
    while trainer.state().step < stop {
        let m = match trainer.step(data, exec) {
            Ok(m) => m,
            Err(e) => {
                log.flush()?;
                return Err(e.into());
            }
        };
        log.append(&m)?;
        let step = trainer.state().step;
        if step % cfg.checkpoint_interval == 0 && step < stop {
            log.flush()?;
            Checkpoint::capture(&trainer).save(&ck_path)?;
            if opts.verbose {
                eprintln!(
                    "step {step}: rgb {:.5} eik {:.5} curv {:.4} levels {} s {:.1}",
                    m.loss_rgb, m.loss_eik, m.loss_curv, m.active_levels, m.sharpness
                );
            }
        }
        last = Some(m);
    }
    log.flush()?;
    Checkpoint::capture(&trainer).save(&ck_path)?;
    Ok(TrainOutcome {
        checkpoint: ck_path,
        step: trainer.state().step,
        finished: trainer.is_finished(),
        last,
    })
}

/// Zero level set of the trained SDF on a `resolution³` grid over
/// `[-1, 1]³`, with every level active and the live masks.
pub fn extract<E: Executor>(trainer: &Trainer<f32>, resolution: usize, exec: &E) -> Result<TriangleMesh> {
    let field = trainer.model().field(trainer.store().values());
    let grid = sample_grid(resolution, BOUNDS.0, BOUNDS.1, exec, || field.cache(), |c, x| field.value(c, x))?;
    Ok(marching_cubes_grid(&grid))
}

pub fn extract_mesh<E: Executor>(checkpoint: &Path, resolution: usize, out: &Path, exec: &E) -> Result<TriangleMesh> {
    mesh_io::MeshFormat::from_path(out)?;
    let trainer = checkpoint::load_trainer(checkpoint)?;
    let mesh = extract(&trainer, resolution, exec)?;
    mesh_io::write(&mesh, out)?;
    Ok(mesh)
}

pub fn render<E: Executor>(checkpoint: &Path, data_dir: &Path, view: usize, samples: usize, out: &Path, exec: &E) -> Result<()> {
    let trainer = checkpoint::load_trainer(checkpoint)?;
    let manifest = dataset::read_manifest(data_dir)?;
    let cam = manifest.camera(view)?;
    let params = trainer.store().values();
    let field = trainer.model().renderer(params, trainer.state().active_levels);
    let img = render_image(&field, &cam, samples.max(1), manifest.background, exec)?;
    ppm::write(out, img.width, img.height, &img.pixels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub chamfer: f64,
    pub acc: f64,
    pub comp: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl EvalReport {
    fn new(r: ChamferReport, n_points: usize, seed: u64) -> Self {
        Self {
            chamfer: r.chamfer,
            acc: r.acc,
            comp: r.comp,
            n_points,
            seed,
        }
    }
}

/// Chamfer-L1 between `n_points` samples of a mesh and of the analytic
/// surface.
pub fn evaluate_mesh(mesh: &TriangleMesh, scene: &str, n_points: usize, seed: u64) -> Result<EvalReport> {
    let scene = dataset::scene_by_name(scene)?;
    if n_points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    if mesh.is_empty() {
        return Err(CliError::Core(adaptive_hash_core::Error::Invalid(
            "extracted mesh is empty".into(),
        )));
    }
    let pred = mesh_to_points(mesh, n_points, seed)?;
    let gt = scene.sample_surface(n_points, seed ^ SURFACE_SEED_OFFSET);
    Ok(EvalReport::new(chamfer_l1(&pred, &gt)?, n_points, seed))
}

pub fn eval<E: Executor>(
    checkpoint: &Path,
    scene: &str,
    n_points: usize,
    seed: u64,
    resolution: usize,
    exec: &E,
) -> Result<EvalReport> {
    dataset::scene_by_name(scene)?;
    let trainer = checkpoint::load_trainer(checkpoint)?;
    let mesh = extract(&trainer, resolution, exec)?;
    evaluate_mesh(&mesh, scene, n_points, seed)
}

pub fn eval_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Low, mid and high bands (1-based, inclusive) for `levels` grid levels:
/// levels 1–8, 9–14 and 15–16 of sixteen, scaled proportionally.
pub fn default_bands(levels: usize) -> Vec<(String, RangeInclusive<usize>)> {
    let low = (levels / 2).max(1);
    let mid = (levels * 14 / 16).clamp(low + 1, levels.saturating_sub(1).max(low + 1));
    let mut bands = vec![("low".to_string(), 1..=low)];
    if mid <= levels && mid > low {
        bands.push(("mid".to_string(), low + 1..=mid));
    }
    if mid < levels {
        bands.push(("high".to_string(), mid + 1..=levels));
    }
    bands
}

/// Parses `a-b` or `a` (1-based, inclusive).
pub fn parse_band(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || CliError::Usage(format!("invalid band '{s}', expected FIRST-LAST (1-based)"));
    let (a, b) = match s.split_once('-') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let a = s.trim().parse().map_err(|_| bad())?;
            (a, a)
        }
    };
    Ok(a..=b)
}

/// Maps a mask value in `[0, 1]` from blue (0) to red (1).
pub fn colormap(v: f64) -> [f64; 3] {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    [v, 0.0, 1.0 - v]
}

/// Renders, for each band, the per-sample maximum mask value over the band
/// composited with the volume-rendering weights, and writes it through the
/// colormap as `mask_<name>.ppm`. Returns the written paths.
pub fn dump_masks<E: Executor>(
    checkpoint: &Path,
    data_dir: &Path,
    view: usize,
    bands: &[(String, RangeInclusive<usize>)],
    samples: usize,
    out: &Path,
    exec: &E,
) -> Result<Vec<PathBuf>> {
    let trainer = checkpoint::load_trainer(checkpoint)?;
    let levels = trainer.model().levels();
    for (name, b) in bands {
        if *b.start() < 1 || b.start() > b.end() || *b.end() > levels {
            return Err(CliError::Usage(format!(
                "band {name} ({}-{}) outside levels 1-{levels}",
                b.start(),
                b.end()
            )));
        }
    }
    let cam = dataset::read_manifest(data_dir)?.camera(view)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let params = trainer.store().values();
    let mut written = Vec::with_capacity(bands.len());
    for (name, b) in bands {
        let field = MaskBandRenderer::new(trainer.model(), params, b.start() - 1..*b.end())?;
        let img = render_image(&field, &cam, samples.max(1), [0.0; 3], exec)?;
        let pixels: Vec<[f64; 3]> = img.pixels.iter().map(|p| colormap(p[0])).collect();
        let path = out.join(format!("mask_{name}.ppm"));
        ppm::write(&path, img.width, img.height, &pixels)?;
        written.push(path);
    }
    Ok(written)
}
