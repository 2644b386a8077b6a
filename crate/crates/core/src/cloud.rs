//! Dense lidar point storage.

use crate::error::{Error, Result};

/// `N × D` lidar returns stored row-major as `f32`.
///
/// Columns 0..3 are x, y, z in meters. Any further columns (reflectance,
/// relative timestamp, appended class scores) are opaque to geometry code.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dims: usize,
    data: Vec<f32>,
}

impl PointCloud {
    pub fn new(dims: usize, data: Vec<f32>) -> Result<Self> {
        if dims < 3 {
            return Err(Error::invalid(
                "point cloud",
                format!("need at least 3 columns, got {dims}"),
            ));
        }
        if !data.len().is_multiple_of(dims) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of {dims}",
                data.len()
            )));
        }
        if let Some((i, _)) = data
            .chunks_exact(dims)
            .enumerate()
            .find(|(_, row)| !row[..3].iter().all(|v| v.is_finite()))
        {
            return Err(Error::invalid(
                "point cloud",
                format!("point {i} has a non-finite coordinate"),
            ));
        }
        Ok(Self { dims, data })
    }

    pub fn empty(dims: usize) -> Result<Self> {
        Self::new(dims, Vec::new())
    }

    pub(crate) fn from_parts_unchecked(dims: usize, data: Vec<f32>) -> Self {
        debug_assert!(dims >= 3 && data.len().is_multiple_of(dims));
        Self { dims, data }
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<f32> {
        &mut self.data
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn point(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn xyz(&self, i: usize) -> [f64; 3] {
        let p = self.point(i);
        [p[0] as f64, p[1] as f64, p[2] as f64]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dims)
    }

    /// Rows `start..end` as a new cloud.
    pub fn slice(&self, start: usize, end: usize) -> PointCloud {
        Self::from_parts_unchecked(
            self.dims,
            self.data[start * self.dims..end * self.dims].to_vec(),
        )
    }

    /// Checks that column `col` holds reflectance values in `[0, 1]`.
    pub fn check_reflectance(&self, col: usize) -> Result<()> {
        if col < 3 || col >= self.dims {
            return Err(Error::OutOfRange {
                axis: "column",
                index: col,
                len: self.dims,
            });
        }
        match self
            .points()
            .position(|p| !(0.0..=1.0).contains(&p[col]))
        {
            Some(i) => Err(Error::invalid(
                "point cloud",
                format!("reflectance {} of point {i} outside [0, 1]", self.point(i)[col]),
            )),
            None => Ok(()),
        }
    }
}
