//! File formats. Every writer goes through a temporary file in the target
//! directory and renames it into place, so a failed write leaves nothing behind.

mod boxes;
mod cloud;
mod kitti;
mod ppsm;
mod rig;

pub use boxes::{format_boxes, parse_boxes, read_boxes, write_boxes};
pub use cloud::{decode_point_cloud, encode_point_cloud, read_point_cloud, write_point_cloud};
pub use kitti::{parse_kitti_calib, KittiCalibration};
pub use ppsm::{decode_score_map, encode_score_map, read_score_map, write_score_map, PPSM_MAGIC, PPSM_VERSION};
pub use rig::{format_rig, load_rig, parse_rig, write_rig, RigCamera, RigDescription};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` via a sibling temporary file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses whitespace-separated floats, naming the offending token on failure.
pub(crate) fn parse_floats(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| format!("'{tok}' is not a number")))
        .collect()
}
