//! Posed-image datasets on disk: one PPM per view plus `manifest.json`.

use std::path::{Path, PathBuf};

use adaptive_hash_core::exec::Executor;
use adaptive_hash_core::render::{CameraModel, Intrinsics};
use adaptive_hash_core::scene::{dataset_cameras, AnalyticScene, SCENE_NAMES};
use adaptive_hash_core::training::{Dataset, TrainingView};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::ppm;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BACKGROUND: [f64; 3] = [1.0, 1.0, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub file: String,
    /// Camera-to-world `[R | t]`, row-major 3×4.
    pub transform: [f64; 12],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub intrinsics: Intrinsics,
    pub background: [f64; 3],
    pub frames: Vec<Frame>,
}

impl Manifest {
    pub fn camera(&self, index: usize) -> Result<CameraModel> {
        let frame = self
            .frames
            .get(index)
            .ok_or_else(|| CliError::Usage(format!("view {index} out of range (dataset has {})", self.frames.len())))?;
        Ok(CameraModel::new(self.intrinsics, frame.transform)?)
    }
}

pub fn scene_by_name(name: &str) -> Result<AnalyticScene> {
    AnalyticScene::named(name)
        .ok_or_else(|| CliError::Usage(format!("unknown scene '{name}' (expected one of {})", SCENE_NAMES.join(", "))))
}

/// Renders `n_views` sphere-traced views of `scene` into `out`.
pub fn generate<E: Executor>(
    scene_name: &str,
    n_views: usize,
    resolution: u32,
    seed: u64,
    out: &Path,
    exec: &E,
) -> Result<Manifest> {
    let scene = scene_by_name(scene_name)?;
    if n_views < 2 {
        return Err(CliError::Usage("need at least two views".into()));
    }
    if resolution == 0 {
        return Err(CliError::Usage("resolution must be positive".into()));
    }
    let cameras = dataset_cameras(n_views, resolution, seed)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut frames = Vec::with_capacity(n_views);
    for (i, cam) in cameras.iter().enumerate() {
        let img = scene.render_view(cam, BACKGROUND, exec);
        let file = format!("view_{i:03}.ppm");
        ppm::write(&out.join(&file), img.width, img.height, &img.pixels)?;
        frames.push(Frame {
            file,
            transform: cam.pose,
        });
    }
    let manifest = Manifest {
        intrinsics: cameras[0].intrinsics,
        background: BACKGROUND,
        frames,
    };
    write_manifest(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(&path, e.to_string()))
}

/// Loads the manifest and every referenced image, checking dimensions.
pub fn load(dir: &Path) -> Result<(Manifest, Dataset)> {
    let manifest = read_manifest(dir)?;
    let k = manifest.intrinsics;
    let mut views = Vec::with_capacity(manifest.frames.len());
    for (i, frame) in manifest.frames.iter().enumerate() {
        let path: PathBuf = dir.join(&frame.file);
        let img = ppm::read(&path)?;
        if (img.width, img.height) != (k.width, k.height) {
            return Err(CliError::format(
                &path,
                format!("image is {}x{}, manifest declares {}x{}", img.width, img.height, k.width, k.height),
            ));
        }
        views.push(TrainingView {
            camera: manifest.camera(i)?,
            pixels: img.pixels,
        });
    }
    let data = Dataset::new(views, manifest.background)?;
    Ok((manifest, data))
}
