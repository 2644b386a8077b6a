//! Deterministic synthetic scenes with a known painting.
//!
//! A scene is a ring of cameras around the lidar, a few planted boxes, score
//! maps in which each box's image footprint carries its class, and a point
//! cloud mixing in-box points, clutter, points behind the cameras and points
//! out of frame. The expected painted cloud is produced by [`reference_paint`],
//! a per-point scalar implementation that shares nothing with the painter
//! except the projection primitive.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{project, CameraMatrix, RigidTransform, DEPTH_EPSILON};
use crate::io::{
    write_atomic, write_boxes, write_point_cloud, write_rig, write_score_map, RigCamera,
    RigDescription,
};
use crate::painter::{
    Box3D, CameraView, OovPolicy, OverlapStrategy, PaintConfig, PaintedCloud, PointSource,
    Snapping,
};
use crate::scoremap::{ScoreMap, ScoreMode};

/// Horizontal field of view of every synthetic camera.
const HFOV_DEG: f64 = 100.0;
/// Largest angle between neighbouring cameras; below the field of view, so
/// neighbours always overlap.
const MAX_SPACING_DEG: f64 = 70.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub num_points: usize,
    pub num_cameras: usize,
    pub num_boxes: usize,
    /// 0 gives one-hot score vectors, 1 the noisiest maps that still keep the
    /// painted class on top.
    pub score_noise: f32,
    pub dims: usize,
    pub class_names: Vec<String>,
    pub image_width: u32,
    pub image_height: u32,
    pub paint: PaintConfig,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            num_points: 2000,
            num_cameras: 1,
            num_boxes: 3,
            score_noise: 0.5,
            dims: 4,
            class_names: ["car", "pedestrian", "cyclist", "background"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            image_width: 96,
            image_height: 64,
            paint: PaintConfig::default(),
        }
    }
}

impl SceneSpec {
    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("scene spec", reason));
        if self.num_cameras == 0 {
            return bad("need at least one camera".into());
        }
        if self.dims < 3 {
            return bad(format!("dims {} < 3", self.dims));
        }
        if self.class_names.len() < 2 {
            return bad("need at least two classes".into());
        }
        if self.class_names.last().map(String::as_str) != Some("background") {
            return bad("last class must be background".into());
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.score_noise) {
            return bad(format!("score noise {} outside [0, 1]", self.score_noise));
        }
        Ok(())
    }

    /// `key = value` lines describing the spec.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "points = {}", self.num_points);
        let _ = writeln!(out, "cameras = {}", self.num_cameras);
        let _ = writeln!(out, "boxes = {}", self.num_boxes);
        let _ = writeln!(out, "noise = {}", self.score_noise);
        let _ = writeln!(out, "dims = {}", self.dims);
        let _ = writeln!(out, "classes = {}", self.class_names.join(" "));
        let _ = writeln!(out, "size = {} {}", self.image_width, self.image_height);
        let _ = writeln!(out, "overlap = {}", self.paint.overlap.name());
        if let OverlapStrategy::Random { seed } = self.paint.overlap {
            let _ = writeln!(out, "overlap_seed = {seed}");
        }
        let _ = writeln!(out, "oov = {}", self.paint.oov);
        let _ = writeln!(out, "snap = {}", self.paint.snapping);
        out
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub spec: SceneSpec,
    pub cloud: PointCloud,
    /// Score paths are bare file names, relative to wherever the scene is written.
    pub rig: RigDescription,
    pub score_maps: Vec<ScoreMap>,
    pub boxes: Vec<Box3D>,
    pub expected: PaintedCloud,
}

impl Scene {
    pub fn views(&self) -> Vec<CameraView> {
        self.rig
            .cameras
            .iter()
            .zip(&self.score_maps)
            .map(|(cam, scores)| {
                CameraView::new(cam.camera, cam.lidar_to_camera, scores.clone())
                    .expect("synthetic views are consistent")
            })
            .collect()
    }

    /// Writes `cloud.bin`, `rig.txt`, `cam<k>.ppsm`, `boxes.txt`,
    /// `expected.bin` and `scene.txt` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_point_cloud(&self.cloud, dir.join("cloud.bin"))?;
        for (cam, scores) in self.rig.cameras.iter().zip(&self.score_maps) {
            write_score_map(scores, dir.join(&cam.scores_path))?;
        }
        write_rig(&self.rig, dir.join("rig.txt"))?;
        write_boxes(&self.boxes, dir.join("boxes.txt"))?;
        write_point_cloud(self.expected.cloud(), dir.join("expected.bin"))?;
        write_atomic(&dir.join("scene.txt"), self.spec.to_text().as_bytes())
    }
}

fn camera_yaw(k: usize, n: usize) -> f64 {
    let spacing = (360.0 / n as f64).min(MAX_SPACING_DEG);
    (k as f64 * spacing).to_radians()
}

/// Camera `k` of `n`: looks horizontally along its yaw, mounted just ahead of
/// and below the lidar.
fn ring_camera(k: usize, n: usize, width: u32, height: u32) -> Result<(CameraMatrix, RigidTransform)> {
    let yaw = camera_yaw(k, n);
    let (s, c) = yaw.sin_cos();
    // rows: camera x (right), y (down), z (forward) in lidar coordinates
    let r = Matrix3::new(s, -c, 0.0, 0.0, 0.0, -1.0, c, s, 0.0);
    let center = Vector3::new(0.3 * c, 0.3 * s, -0.1);
    let t = RigidTransform::from_parts(r, -(r * center))?;
    let focal = (width as f64 / 2.0) / (HFOV_DEG.to_radians() / 2.0).tan();
    let m = CameraMatrix::pinhole(focal, width as f64 / 2.0, height as f64 / 2.0, width, height)?;
    Ok((m, t))
}

fn random_box(rng: &mut ChaCha8Rng, spec: &SceneSpec) -> Result<Box3D> {
    let fg = spec.class_names.len() - 1;
    let class = rng.random_range(0..fg);
    let cam = rng.random_range(0..spec.num_cameras);
    let heading = camera_yaw(cam, spec.num_cameras) + rng.random_range(-0.5..0.5);
    let range = rng.random_range(6.0..25.0);
    let size = [
        rng.random_range(0.6..4.5),
        rng.random_range(0.5..2.0),
        rng.random_range(1.0..2.0),
    ];
    let center = [
        range * heading.cos(),
        range * heading.sin(),
        -1.2 + size[2] / 2.0,
    ];
    Box3D::new(center, size, rng.random_range(-PI..PI), class)
}

fn random_score_vector(rng: &mut ChaCha8Rng, dominant: usize, c: usize, noise: f32) -> Vec<f32> {
    let raw: Vec<f64> = (0..c)
        .map(|i| {
            let r = rng.random::<f64>() * noise as f64;
            if i == dominant {
                1.0 + r
            } else {
                r
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / total) as f32).collect()
}

fn render_scores(
    rng: &mut ChaCha8Rng,
    spec: &SceneSpec,
    camera: &CameraMatrix,
    lidar_to_camera: &RigidTransform,
    boxes: &[Box3D],
) -> Result<ScoreMap> {
    let (w, h) = (spec.image_width as usize, spec.image_height as usize);
    let c = spec.class_names.len();
    let background = c - 1;
    let mut dominant = vec![background; w * h];

    // Paint far boxes first so nearer ones cover them.
    let mut footprints: Vec<(f64, usize, [usize; 4])> = Vec::new();
    for b in boxes {
        let corners: Option<Vec<_>> = b
            .corners()
            .iter()
            .map(|&p| project(camera, lidar_to_camera, p))
            .collect();
        let Some(px) = corners else { continue };
        let depth = px.iter().map(|p| p.depth).fold(f64::INFINITY, f64::min);
        let u0 = px.iter().map(|p| p.u).fold(f64::INFINITY, f64::min).floor().max(0.0);
        let u1 = px.iter().map(|p| p.u).fold(f64::NEG_INFINITY, f64::max).ceil().min(w as f64);
        let v0 = px.iter().map(|p| p.v).fold(f64::INFINITY, f64::min).floor().max(0.0);
        let v1 = px.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max).ceil().min(h as f64);
        if u0 < u1 && v0 < v1 {
            footprints.push((depth, b.class_index, [u0 as usize, u1 as usize, v0 as usize, v1 as usize]));
        }
    }
    footprints.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, class, [u0, u1, v0, v1]) in footprints {
        for v in v0..v1 {
            dominant[v * w + u0..v * w + u1].fill(class);
        }
    }

    let data: Vec<f32> = dominant
        .iter()
        .flat_map(|&d| random_score_vector(rng, d, c, spec.score_noise))
        .collect();
    ScoreMap::new(h, w, ScoreMode::Scores, data, spec.class_names.clone())
}

fn random_points(rng: &mut ChaCha8Rng, spec: &SceneSpec, boxes: &[Box3D]) -> PointCloud {
    let mut data = Vec::with_capacity(spec.num_points * spec.dims);
    for _ in 0..spec.num_points {
        let roll: f64 = rng.random();
        let xyz: [f64; 3] = if roll < 0.35 && !boxes.is_empty() {
            let b = &boxes[rng.random_range(0..boxes.len())];
            let local = b.size.map(|e| rng.random_range(-e / 2.0..=e / 2.0));
            let (s, c) = b.yaw.sin_cos();
            [
                b.center[0] + c * local[0] - s * local[1],
                b.center[1] + s * local[0] + c * local[1],
                b.center[2] + local[2],
            ]
        } else if roll < 0.40 {
            // close to a camera's image plane
            let yaw = camera_yaw(rng.random_range(0..spec.num_cameras), spec.num_cameras);
            let off = rng.random_range(-1.0..1.0);
            let depth = rng.random_range(-1e-3..1e-3);
            [
                (0.3 + depth) * yaw.cos() + off * yaw.sin(),
                (0.3 + depth) * yaw.sin() - off * yaw.cos(),
                -0.1 + rng.random_range(-0.5..0.5),
            ]
        } else {
            let az = rng.random_range(-PI..PI);
            let r = rng.random_range(1.0..40.0);
            [r * az.cos(), r * az.sin(), rng.random_range(-2.5..4.0)]
        };
        data.extend(xyz.iter().map(|&v| v as f32));
        if spec.dims > 3 {
            data.push(rng.random::<f32>());
        }
        for _ in 4..spec.dims {
            data.push(rng.random_range(-0.5f32..0.0));
        }
    }
    PointCloud::new(spec.dims, data).expect("finite synthetic points")
}

/// Builds the scene described by `spec`; identical specs give identical scenes.
pub fn synth_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let boxes = (0..spec.num_boxes)
        .map(|_| random_box(&mut rng, spec))
        .collect::<Result<Vec<_>>>()?;

    let mut cameras = Vec::with_capacity(spec.num_cameras);
    let mut score_maps = Vec::with_capacity(spec.num_cameras);
    for k in 0..spec.num_cameras {
        let (camera, lidar_to_camera) =
            ring_camera(k, spec.num_cameras, spec.image_width, spec.image_height)?;
        score_maps.push(render_scores(&mut rng, spec, &camera, &lidar_to_camera, &boxes)?);
        cameras.push(RigCamera {
            name: format!("cam{k}"),
            camera,
            lidar_to_camera,
            scores_path: PathBuf::from(format!("cam{k}.ppsm")),
        });
    }
    let cloud = random_points(&mut rng, spec, &boxes);
    let rig = RigDescription {
        class_names: spec.class_names.clone(),
        dims: spec.dims,
        columns: (0..spec.dims)
            .map(|i| match i {
                0 => "x".into(),
                1 => "y".into(),
                2 => "z".into(),
                3 => "r".into(),
                _ => format!("t{}", i - 4),
            })
            .collect(),
        cameras,
    };
    let views: Vec<CameraView> = rig
        .cameras
        .iter()
        .zip(&score_maps)
        .map(|(cam, s)| CameraView::new(cam.camera, cam.lidar_to_camera, s.clone()))
        .collect::<Result<_>>()?;
    let expected = reference_paint(&cloud, &views, &spec.paint)?;
    Ok(Scene {
        spec: spec.clone(),
        cloud,
        rig,
        score_maps,
        boxes,
        expected,
    })
}

fn reference_snap(x: f64, snapping: Snapping, len: u32) -> Option<usize> {
    let s = match snapping {
        Snapping::Floor => x.floor(),
        Snapping::RoundHalfUp => (x + 0.5).floor(),
    };
    (0.0 <= s && s < len as f64).then_some(s as usize)
}

fn reference_entropy(s: &[f32]) -> f64 {
    s.iter()
        .filter(|&&p| p > 0.0)
        .fold(0.0, |h, &p| h + -(p as f64 * (p as f64).ln()))
}

fn reference_margin(s: &[f32]) -> f64 {
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[0] as f64 - sorted[1] as f64
}

/// Scalar, one-point-at-a-time painting used as the test oracle.
pub fn reference_paint(
    cloud: &PointCloud,
    views: &[CameraView],
    cfg: &PaintConfig,
) -> Result<PaintedCloud> {
    let first = views
        .first()
        .ok_or_else(|| Error::invalid("paint request", "no camera views"))?;
    let class_names = first.scores().class_names().to_vec();
    let c = class_names.len();
    let mut data = Vec::new();
    let mut source = Vec::new();
    for i in 0..cloud.len() {
        let xyz = cloud.xyz(i);
        let mut candidates: Vec<(usize, Vec<f32>)> = Vec::new();
        for (k, view) in views.iter().enumerate() {
            let Some(px) = project(view.camera(), view.lidar_to_camera(), xyz) else {
                continue;
            };
            debug_assert!(px.depth > DEPTH_EPSILON);
            let cam = view.camera();
            let (Some(u), Some(v)) = (
                reference_snap(px.u, cfg.snapping, cam.width()),
                reference_snap(px.v, cfg.snapping, cam.height()),
            ) else {
                continue;
            };
            let scores = view.scores();
            let start = (v * scores.width() + u) * c;
            candidates.push((k, scores.as_slice()[start..start + c].to_vec()));
        }
        let winner = match candidates.len() {
            0 => None,
            1 => Some(0),
            n => Some(match cfg.overlap {
                OverlapStrategy::Random { seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    rng.random_range(0..n)
                }
                OverlapStrategy::Entropy => {
                    let h: Vec<f64> = candidates.iter().map(|(_, s)| reference_entropy(s)).collect();
                    (0..n).fold(0, |best, k| if h[k] < h[best] { k } else { best })
                }
                OverlapStrategy::Margin => {
                    let m: Vec<f64> = candidates.iter().map(|(_, s)| reference_margin(s)).collect();
                    (0..n).fold(0, |best, k| if m[k] > m[best] { k } else { best })
                }
            }),
        };
        let point = cloud.point(i);
        match winner {
            Some(w) => {
                data.extend_from_slice(point);
                data.extend_from_slice(&candidates[w].1);
                source.push(PointSource::Camera(candidates[w].0 as u32));
            }
            None => {
                let mut fill = vec![0.0f32; c];
                match cfg.oov {
                    OovPolicy::Drop => continue,
                    OovPolicy::Zeros => {}
                    OovPolicy::Background => fill[c - 1] = 1.0,
                }
                data.extend_from_slice(point);
                data.extend_from_slice(&fill);
                source.push(PointSource::None);
            }
        }
    }
    PaintedCloud::new(
        PointCloud::new(cloud.dims() + c, data)?,
        cloud.dims(),
        class_names,
        source,
    )
}
