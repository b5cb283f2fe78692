//! Per-step metrics log in CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use adaptive_hash_core::training::StepMetrics;

use crate::error::{CliError, Result};

pub const HEADER: &str = "step,loss_rgb,loss_eik,loss_curv,active_levels,epsilon,sharpness,lr";

pub fn row(m: &StepMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        m.step, m.loss_rgb, m.loss_eik, m.loss_curv, m.active_levels, m.epsilon, m.sharpness, m.lr
    )
}

pub struct MetricsLog {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl MetricsLog {
    /// Opens the log for a run starting at `first_step`: rows of later steps
    /// left behind by an interrupted run are dropped.
    pub fn open(path: &Path, first_step: u64) -> Result<Self> {
        let mut kept = vec![HEADER.to_string()];
        if first_step > 0 {
            if let Ok(text) = std::fs::read_to_string(path) {
                kept.extend(
                    text.lines()
                        .skip(1)
                        .filter(|l| l.split(',').next().and_then(|s| s.parse::<u64>().ok()).is_some_and(|s| s < first_step))
                        .map(str::to_string),
                );
            }
        }
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = BufWriter::new(file);
        for line in kept {
            writeln!(out, "{line}").map_err(|e| CliError::io(path, e))?;
        }
        Ok(Self {
            out,
            path: path.to_path_buf(),
        })
    }

    pub fn append(&mut self, m: &StepMetrics) -> Result<()> {
        writeln!(self.out, "{}", row(m)).map_err(|e| CliError::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}
