//! Binary field snapshots: raw little-endian `f64` samples, components in
//! sequence, each in row-major order, plus a JSON sidecar.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Grid, RealField};

/// Sidecar metadata stored next to each `.bin` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub box_scale: f64,
    pub components: usize,
    pub time: f64,
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_snapshot(stem: &Path, field: &RealField<f64>, time: f64) -> Result<()> {
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(stem.with_extension("bin"), bytes)?;
    let grid = field.grid();
    let meta = SnapshotMeta {
        dim: grid.dim(),
        n: grid.n(),
        box_scale: grid.box_scale(),
        components: field.components(),
        time,
    };
    fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]. The dealias fraction is not
/// stored and defaults to 2/3.
pub fn read_snapshot(stem: &Path) -> Result<(RealField<f64>, f64)> {
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    let grid = Grid::new(meta.dim, meta.n, meta.box_scale)?;
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() != grid.len() * meta.components * 8 {
        return Err(LabError::ComponentMismatch { expected: grid.len() * meta.components * 8, found: bytes.len() });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((RealField::from_values(grid, meta.components, values)?, meta.time))
}
