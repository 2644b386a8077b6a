//! Raw point clouds: consecutive little-endian `f32` records of `D` values,
//! the KITTI velodyne `.bin` layout when `D = 4`.

use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub fn decode_point_cloud(bytes: &[u8], dims: usize) -> Result<PointCloud> {
    if dims < 3 {
        return Err(Error::invalid("point cloud", format!("need at least 3 columns, got {dims}")));
    }
    let record = 4 * dims;
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of {record}-byte records ({dims} x f32)",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    PointCloud::new(dims, data)
}

pub fn encode_point_cloud(cloud: &PointCloud) -> Vec<u8> {
    cloud.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn read_point_cloud(path: impl AsRef<Path>, dims: usize) -> Result<PointCloud> {
    decode_point_cloud(&read_bytes(path.as_ref())?, dims)
}

pub fn write_point_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_point_cloud(cloud))
}
