//! Checkpoints: one SPDT tensor file per parameter plus a JSON manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spadsr_core::spdt::{self, Payload};

use crate::error::{NetError, Result};
use crate::model::HistNet;

pub const MANIFEST_NAME: &str = "manifest.json";
const FORMAT: &str = "spadsr-checkpoint-v1";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    file: String,
    dims: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    width_scale: f64,
    widths: Vec<usize>,
    step: usize,
    tensors: Vec<TensorEntry>,
}

/// Save a network (and the step count it was trained to) into `dir`.
pub fn save(dir: &Path, net: &HistNet, step: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(net.params.tensors.len());
    for t in &net.params.tensors {
        let file = format!("{}.spdt", t.name);
        spdt::write(&dir.join(&file), &t.shape, &Payload::F32(t.data.clone()))?;
        entries.push(TensorEntry {
            name: t.name.clone(),
            file,
            dims: t.shape.clone(),
        });
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        width_scale: net.width_scale,
        widths: net.widths.to_vec(),
        step,
        tensors: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join(MANIFEST_NAME), json)?;
    Ok(())
}

/// Load a checkpoint saved by [`save`]. Returns the network and its step.
pub fn load(dir: &Path) -> Result<(HistNet, usize)> {
    let raw = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let manifest: Manifest = serde_json::from_str(&raw)?;
    if manifest.format != FORMAT {
        return Err(NetError::Checkpoint(format!(
            "unknown checkpoint format {:?}",
            manifest.format
        )));
    }
    let mut net = HistNet::new(manifest.width_scale, 0);
    if manifest.widths != net.widths.to_vec() {
        return Err(NetError::Checkpoint(format!(
            "manifest widths {:?} disagree with scale {} (expected {:?})",
            manifest.widths, manifest.width_scale, net.widths
        )));
    }
    if manifest.tensors.len() != net.params.tensors.len() {
        return Err(NetError::Checkpoint(format!(
            "expected {} tensors, manifest lists {}",
            net.params.tensors.len(),
            manifest.tensors.len()
        )));
    }
    for (slot, entry) in net.params.tensors.iter_mut().zip(manifest.tensors.iter()) {
        if slot.name != entry.name || slot.shape != entry.dims {
            return Err(NetError::Checkpoint(format!(
                "tensor {} with dims {:?} does not match expected {} {:?}",
                entry.name, entry.dims, slot.name, slot.shape
            )));
        }
        let (dims, data) = spdt::read_f32(&dir.join(&entry.file))?;
        if dims != slot.shape {
            return Err(NetError::Checkpoint(format!(
                "{}: file dims {:?} vs manifest {:?}",
                entry.name, dims, slot.shape
            )));
        }
        slot.data = data;
    }
    Ok((net, manifest.step))
}
