//! Single-file checkpoint container.
//!
//! Layout: the 8-byte magic `AHCKPT\0\0`, a little-endian `u64` header length,
//! the JSON header, a `u32` array count, then per array a `u32` name length,
//! the UTF-8 name, a `u64` element count and the elements as little-endian
//! `f32`. Parameter arrays use their store names; Adam moments are stored as
//! `adam.m/<name>` and `adam.v/<name>`.

use std::collections::BTreeMap;
use std::path::Path;

use adaptive_hash_core::training::{TrainState, Trainer};
use adaptive_hash_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"AHCKPT\0\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step: u64,
    pub nonfinite_skips: u64,
}

/// Ray batches are drawn from a stream keyed by `(seed, step)`, so this pair
/// is the whole random state of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub next_step: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub version: u32,
    pub config: TrainConfig,
    pub state: TrainState,
    pub optimizer: OptimizerState,
    pub rng: RngState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub arrays: Vec<(String, Vec<f32>)>,
}

fn moment_names(name: &str) -> (String, String) {
    (format!("adam.m/{name}"), format!("adam.v/{name}"))
}

impl Checkpoint {
    pub fn capture(trainer: &Trainer<f32>) -> Self {
        let store = trainer.store();
        let mut arrays = Vec::new();
        for id in store.ids() {
            arrays.push((store.name(id).to_string(), store.values().get(id).to_vec()));
        }
        for id in store.ids() {
            let (m, v) = store.moments(id);
            let (mn, vn) = moment_names(store.name(id));
            arrays.push((mn, m.to_vec()));
            arrays.push((vn, v.to_vec()));
        }
        let state = trainer.state().clone();
        Self {
            header: Header {
                version: VERSION,
                config: trainer.config().clone(),
                optimizer: OptimizerState {
                    step: store.step(),
                    nonfinite_skips: store.nonfinite_skips(),
                },
                rng: RngState {
                    seed: trainer.config().seed,
                    next_step: state.step,
                },
                state,
            },
            arrays,
        }
    }

    /// Rebuilds the trainer with parameters, optimizer moments and schedule
    /// state exactly as captured.
    pub fn restore(&self) -> std::result::Result<Trainer<f32>, String> {
        let mut trainer = Trainer::<f32>::new(self.header.config.clone()).map_err(|e| e.to_string())?;
        let by_name: BTreeMap<&str, &[f32]> = self.arrays.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        let get = |name: &str, len: usize| -> std::result::Result<&[f32], String> {
            let v = by_name.get(name).ok_or_else(|| format!("missing array '{name}'"))?;
            if v.len() != len {
                return Err(format!("array '{name}' has {} values, expected {len}", v.len()));
            }
            Ok(v)
        };
        let store = trainer.store_mut();
        let expected = 3 * store.len();
        if self.arrays.len() != expected {
            return Err(format!("checkpoint holds {} arrays, model needs {expected}", self.arrays.len()));
        }
        for id in store.ids().collect::<Vec<_>>() {
            let name = store.name(id).to_string();
            let len = store.values().get(id).len();
            let values = get(&name, len)?;
            store.values_mut().get_mut(id).copy_from_slice(values);
            let (mn, vn) = moment_names(&name);
            let (m, v) = (get(&mn, len)?, get(&vn, len)?);
            store.restore_optimizer(id, m, v);
        }
        store.set_step(self.header.optimizer.step, self.header.optimizer.nonfinite_skips);
        trainer.set_state(self.header.state.clone());
        Ok(trainer)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(header.len() + 32 + self.arrays.iter().map(|(n, v)| n.len() + 12 + 4 * v.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for (name, values) in &self.arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err("not a checkpoint file".into());
        }
        let header_len = usize::try_from(r.u64()?).map_err(|_| "header too large")?;
        let header: Header = serde_json::from_slice(r.take(header_len)?).map_err(|e| format!("bad header: {e}"))?;
        if header.version != VERSION {
            return Err(format!("unsupported checkpoint version {}", header.version));
        }
        let count = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| "array name is not UTF-8")?.to_string();
            let n = usize::try_from(r.u64()?).map_err(|_| "array too large")?;
            let raw = r.take(n.checked_mul(4).ok_or("array too large")?)?;
            let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            arrays.push((name, values));
        }
        if r.pos != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - r.pos));
        }
        Ok(Self { header, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|m| CliError::format(path, m))
    }
}

/// Loads a checkpoint and rebuilds its trainer.
pub fn load_trainer(path: &Path) -> Result<Trainer<f32>> {
    Checkpoint::load(path)?.restore().map_err(|m| CliError::format(path, m))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated checkpoint")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
