//! KITTI object-benchmark calibration files (`calib/*.txt`).
//!
//! Relevant lines look like `P2: <12 floats>`, `R0_rect: <9 floats>` and
//! `Tr_velo_to_cam: <12 floats>`. The rectifying rotation is folded into the
//! lidar-to-camera extrinsic so the camera matrix stays a pure projection.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{parse_floats, read_text};
use crate::error::{Error, Result};
use crate::geom::{CameraMatrix, RigidTransform};

/// Calibration files print rotations with ~6 significant digits.
const CALIB_ROTATION_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct KittiCalibration {
    entries: HashMap<String, (usize, Vec<f64>)>,
}

impl KittiCalibration {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, rest)) = line.split_once(':') else {
                return Err(Error::Format(format!(
                    "calib line {line_no}: expected '<key>: <values>'"
                )));
            };
            let values = parse_floats(rest)
                .map_err(|e| Error::Format(format!("calib line {line_no} ({key}): {e}")))?;
            entries.insert(key.trim().to_owned(), (line_no, values));
        }
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_str(&read_text(path.as_ref())?)
    }

    fn get(&self, key: &str, count: usize) -> Result<&[f64]> {
        let (line_no, values) = self
            .entries
            .get(key)
            .ok_or_else(|| Error::Format(format!("calibration is missing {key}")))?;
        if values.len() != count {
            return Err(Error::Format(format!(
                "calib line {line_no} ({key}): expected {count} values, got {}",
                values.len()
            )));
        }
        Ok(values)
    }

    /// Projection matrix `Pn` (e.g. `"P2"`) for an image of the given size.
    pub fn camera(&self, key: &str, width: u32, height: u32) -> Result<CameraMatrix> {
        CameraMatrix::from_row_slice(self.get(key, 12)?, width, height)
    }

    pub fn r0_rect(&self) -> Result<RigidTransform> {
        let r = Matrix3::from_row_slice(self.get("R0_rect", 9)?);
        RigidTransform::from_parts_snapped(r, Vector3::zeros(), CALIB_ROTATION_TOLERANCE)
    }

    pub fn velo_to_cam(&self) -> Result<RigidTransform> {
        let v = self.get("Tr_velo_to_cam", 12)?;
        let r = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let t = Vector3::new(v[3], v[7], v[11]);
        RigidTransform::from_parts_snapped(r, t, CALIB_ROTATION_TOLERANCE)
    }

    /// `R0_rect · Tr_velo_to_cam`: lidar to rectified camera.
    pub fn lidar_to_camera(&self) -> Result<RigidTransform> {
        Ok(self.r0_rect()?.compose(&self.velo_to_cam()?))
    }
}

/// Camera matrix `P2` and the lidar-to-rectified-camera transform.
pub fn parse_kitti_calib(
    path: impl AsRef<Path>,
    width: u32,
    height: u32,
) -> Result<(CameraMatrix, RigidTransform)> {
    let calib = KittiCalibration::read(path)?;
    Ok((calib.camera("P2", width, height)?, calib.lidar_to_camera()?))
}
