//! Sequential lidar/camera fusion by painting.
//!
//! Lidar points are projected into the per-pixel class-score maps produced by
//! an image segmentation network and the sampled score vector is appended to
//! each point, turning an `N × D` cloud into an `N × (D + C)` one that any
//! lidar detector with a learned encoder can consume.
//!
//! The crate is network-free: score maps arrive as files (see [`io`]), and
//! the [`synth`] module generates scenes with a known painting for testing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod error;
pub mod geom;
pub mod io;
pub mod painter;
pub mod remap;
pub mod scoremap;
pub mod synth;
pub mod temporal;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use geom::{build_lidar_to_camera, project, CameraMatrix, PixelCoord, RigidTransform};
pub use painter::{
    paint, paint_from_boxes, paint_indexed, paint_with_threads, point_in_box, resolve_overlap,
    Box3D, CameraView, OovPolicy, OverlapStrategy, PaintConfig, PaintStats, PaintedCloud,
    PointSource, Snapping,
};
pub use remap::{remap_cyclist, RemapRule, RemapStats};
pub use scoremap::{miou, LabelMap, ScoreMap, ScoreMode, ScoreVector};
pub use synth::{synth_scene, Scene, SceneSpec};
pub use temporal::{
    ego_compensate, match_frames, simulate_pipeline, EgoPose, FrameStream, LatencyReport,
    MatchPolicy, PipelineConfig,
};
