//! Painting from ground-truth 3D boxes instead of a segmentation network.

use super::{PaintedCloud, PointSource};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Yaw-oriented 3D box in the lidar frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Box3D {
    pub center: [f64; 3],
    /// Length (along heading), width, height in meters.
    pub size: [f64; 3],
    /// Heading about +z, radians.
    pub yaw: f64,
    pub class_index: usize,
}

impl Box3D {
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64, class_index: usize) -> Result<Self> {
        if !size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid("box", format!("sizes {size:?} must be positive")));
        }
        if !center.iter().all(|c| c.is_finite()) || !yaw.is_finite() {
            return Err(Error::invalid("box", "non-finite pose"));
        }
        Ok(Self {
            center,
            size,
            yaw,
            class_index,
        })
    }

    pub fn volume(&self) -> f64 {
        self.size[0] * self.size[1] * self.size[2]
    }

    /// Point expressed in the box frame.
    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let dz = p[2] - self.center[2];
        [c * dx + s * dy, -s * dx + c * dy, dz]
    }

    /// Closed containment test.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let q = self.to_local(p);
        q.iter()
            .zip(&self.size)
            .all(|(x, extent)| x.abs() <= extent / 2.0)
    }

    /// The eight corners in the lidar frame.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let (s, c) = self.yaw.sin_cos();
        let [l, w, h] = self.size;
        let mut out = [[0.0; 3]; 8];
        for (k, corner) in out.iter_mut().enumerate() {
            let x = if k & 1 == 0 { -l / 2.0 } else { l / 2.0 };
            let y = if k & 2 == 0 { -w / 2.0 } else { w / 2.0 };
            let z = if k & 4 == 0 { -h / 2.0 } else { h / 2.0 };
            *corner = [
                self.center[0] + c * x - s * y,
                self.center[1] + s * x + c * y,
                self.center[2] + z,
            ];
        }
        out
    }
}

pub fn point_in_box(xyz: [f64; 3], b: &Box3D) -> bool {
    b.contains(xyz)
}

/// One-hot paints each point with the class of the smallest box containing it
/// (first listed on equal volume); points in no box get background. No point
/// is dropped.
pub fn paint_from_boxes(
    cloud: &PointCloud,
    boxes: &[Box3D],
    class_names: &[String],
) -> Result<PaintedCloud> {
    let c = class_names.len();
    if c < 2 {
        return Err(Error::invalid("box painting", "need at least 2 classes"));
    }
    let background = c - 1;
    if let Some(b) = boxes.iter().find(|b| b.class_index >= background) {
        return Err(Error::invalid(
            "box painting",
            format!(
                "box class {} is not a foreground class of {c}",
                b.class_index
            ),
        ));
    }
    let dims = cloud.dims();
    let mut data = Vec::with_capacity(cloud.len() * (dims + c));
    let mut source = Vec::with_capacity(cloud.len());
    for (i, point) in cloud.points().enumerate() {
        let xyz = cloud.xyz(i);
        let mut best: Option<(usize, f64)> = None;
        for (k, b) in boxes.iter().enumerate() {
            if b.contains(xyz) && best.is_none_or(|(_, v)| b.volume() < v) {
                best = Some((k, b.volume()));
            }
        }
        data.extend_from_slice(point);
        let start = data.len();
        data.resize(start + c, 0.0);
        match best {
            Some((k, _)) => {
                data[start + boxes[k].class_index] = 1.0;
                source.push(PointSource::Box(k as u32));
            }
            None => {
                data[start + background] = 1.0;
                source.push(PointSource::None);
            }
        }
    }
    PaintedCloud::new(
        PointCloud::from_parts_unchecked(dims + c, data),
        dims,
        class_names.to_vec(),
        source,
    )
}
