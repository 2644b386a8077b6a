//! Rigid transforms, transform chains and pinhole projection.
//!
//! All arithmetic here is `f64`. Point clouds are stored as `f32`, so every
//! coordinate is widened before it enters a transform chain and narrowed only
//! when written back into a cloud.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Points whose camera-frame depth is at or below this value never project.
pub const DEPTH_EPSILON: f64 = 1e-6;

/// Tolerance for `RᵀR = I` and `det R = 1` when a transform is constructed.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// A 4×4 homogeneous rigid-body transform (rotation + translation, meters).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    matrix: Matrix4<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix4::identity(),
        }
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        let mut matrix = Matrix4::identity();
        matrix[(0, 3)] = x;
        matrix[(1, 3)] = y;
        matrix[(2, 3)] = z;
        Self { matrix }
    }

    /// Rotation about the x axis by `angle` radians.
    pub fn rotation_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_parts_unchecked(
            Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            Vector3::zeros(),
        )
    }

    /// Rotation about the y axis by `angle` radians.
    pub fn rotation_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_parts_unchecked(
            Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            Vector3::zeros(),
        )
    }

    /// Rotation about the z axis by `angle` radians.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_parts_unchecked(
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            Vector3::zeros(),
        )
    }

    /// Builds a transform from a rotation block and a translation, validating the rotation.
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation, ORTHONORMAL_TOLERANCE)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rigid transform", "non-finite translation"));
        }
        Ok(Self::from_parts_unchecked(rotation, translation))
    }

    /// Validates a full 4×4 homogeneous matrix.
    pub fn from_matrix(matrix: Matrix4<f64>) -> Result<Self> {
        if matrix.row(3) != Matrix4::<f64>::identity().row(3) {
            return Err(Error::invalid(
                "rigid transform",
                format!(
                    "bottom row must be [0, 0, 0, 1], got {:?}",
                    matrix.row(3).iter().collect::<Vec<_>>()
                ),
            ));
        }
        let rotation: Matrix3<f64> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let translation: Vector3<f64> = matrix.fixed_view::<3, 1>(0, 3).into_owned();
        Self::from_parts(rotation, translation)
    }

    /// Row-major 16 values, as found in calibration and rig files.
    pub fn from_row_slice(values: &[f64]) -> Result<Self> {
        if values.len() != 16 {
            return Err(Error::invalid(
                "rigid transform",
                format!("expected 16 values, got {}", values.len()),
            ));
        }
        Self::from_matrix(Matrix4::from_row_slice(values))
    }

    /// Like [`RigidTransform::from_parts`], but a rotation block that is only
    /// approximately orthonormal (within `tolerance`) is snapped to the nearest
    /// rotation. Calibration files print rotations with a handful of digits.
    pub fn from_parts_snapped(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if check_rotation(&rotation, ORTHONORMAL_TOLERANCE).is_ok() {
            return Self::from_parts(rotation, translation);
        }
        check_rotation(&rotation, tolerance)?;
        let svd = rotation.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::invalid("rigid transform", "svd failed")),
        };
        Self::from_parts(u * v_t, translation)
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut matrix = Matrix4::identity();
        matrix.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        matrix.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation_vector(&self) -> Vector3<f64> {
        self.matrix.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// `self · other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            matrix: self.matrix * other.matrix,
        }
    }

    /// Closed-form inverse `[Rᵀ, −Rᵀp; 0 1]`.
    pub fn invert(&self) -> RigidTransform {
        let r_t = self.rotation().transpose();
        let p = self.translation_vector();
        Self::from_parts_unchecked(r_t, -(r_t * p))
    }

    /// Maps one point. The evaluation order is fixed so that results are
    /// reproducible across every caller.
    #[inline]
    pub fn transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        let [x, y, z] = p;
        [
            m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)] * z + m[(0, 3)],
            m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)] * z + m[(1, 3)],
            m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)] * z + m[(2, 3)],
        ]
    }

    /// Applies the transform to the xyz columns of a cloud; every other column
    /// is copied through untouched.
    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        let dims = cloud.dims();
        let mut data = cloud.as_slice().to_vec();
        for row in data.chunks_exact_mut(dims) {
            let q = self.transform_point([row[0] as f64, row[1] as f64, row[2] as f64]);
            row[0] = q[0] as f32;
            row[1] = q[1] as f32;
            row[2] = q[2] as f32;
        }
        PointCloud::from_parts_unchecked(dims, data)
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Free-function spelling of [`RigidTransform::compose`].
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.invert()
}

pub fn apply(t: &RigidTransform, cloud: &PointCloud) -> PointCloud {
    t.apply(cloud)
}

/// `camera←ego · ego(t_c)←ego(t_l) · ego←lidar`. With an identity middle
/// factor this is the single static lidar-to-camera extrinsic.
pub fn build_lidar_to_camera(
    cam_from_ego: &RigidTransform,
    ego_tc_from_ego_tl: &RigidTransform,
    ego_from_lidar: &RigidTransform,
) -> RigidTransform {
    cam_from_ego.compose(&ego_tc_from_ego_tl.compose(ego_from_lidar))
}

fn check_rotation(r: &Matrix3<f64>, tolerance: f64) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("rigid transform", "non-finite rotation"));
    }
    let err = (r.transpose() * r - Matrix3::identity()).abs().max();
    if err > tolerance {
        return Err(Error::invalid(
            "rigid transform",
            format!("rotation block not orthonormal (max |RᵀR − I| = {err:e})"),
        ));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > tolerance {
        return Err(Error::invalid(
            "rigid transform",
            format!("rotation determinant {det} is not 1"),
        ));
    }
    Ok(())
}

/// A 3×4 pinhole projection matrix with the image size it projects into.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraMatrix {
    matrix: Matrix3x4<f64>,
    width: u32,
    height: u32,
}

impl CameraMatrix {
    pub fn new(matrix: Matrix3x4<f64>, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(
                "camera matrix",
                format!("image size {width}x{height} must be positive"),
            ));
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("camera matrix", "non-finite entry"));
        }
        // The third row produces depth; it must depend on the point.
        if matrix[(2, 0)] == 0.0 && matrix[(2, 1)] == 0.0 && matrix[(2, 2)] == 0.0 {
            return Err(Error::invalid(
                "camera matrix",
                "third row has no spatial component, depth is undefined",
            ));
        }
        Ok(Self {
            matrix,
            width,
            height,
        })
    }

    pub fn from_row_slice(values: &[f64], width: u32, height: u32) -> Result<Self> {
        if values.len() != 12 {
            return Err(Error::invalid(
                "camera matrix",
                format!("expected 12 values, got {}", values.len()),
            ));
        }
        Self::new(Matrix3x4::from_row_slice(values), width, height)
    }

    /// Ideal pinhole `[[f,0,cx,0],[0,f,cy,0],[0,0,1,0]]`.
    pub fn pinhole(focal: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(
            Matrix3x4::new(focal, 0.0, cx, 0.0, 0.0, focal, cy, 0.0, 0.0, 0.0, 1.0, 0.0),
            width,
            height,
        )
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.matrix
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Projects a camera-frame point. `None` when the point is at or behind
    /// the image plane.
    #[inline]
    pub fn project_camera_point(&self, p: [f64; 3]) -> Option<PixelCoord> {
        let m = &self.matrix;
        let [x, y, z] = p;
        let w = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)] * z + m[(2, 3)];
        if !(w > DEPTH_EPSILON) {
            return None;
        }
        let a = m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)] * z + m[(0, 3)];
        let b = m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)] * z + m[(1, 3)];
        Some(PixelCoord {
            u: a / w,
            v: b / w,
            depth: w,
        })
    }
}

/// Continuous image coordinates of a projected point. `u` runs along columns,
/// `v` along rows; snapping to integer pixels is the painter's business.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Transforms `xyz` by `t` and projects it through `m`.
#[inline]
pub fn project(m: &CameraMatrix, t: &RigidTransform, xyz: [f64; 3]) -> Option<PixelCoord> {
    m.project_camera_point(t.transform_point(xyz))
}
