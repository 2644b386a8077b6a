//! Painting: project every lidar point into the camera score maps and append
//! the sampled class-score vector to it.
//!
//! Output is bit-identical for any thread count. Work is split into fixed
//! chunks that are reassembled in input order, and the random overlap choice
//! draws from a stream keyed by `(seed, point index)` rather than from a
//! shared generator.

mod boxes;

pub use boxes::{paint_from_boxes, point_in_box, Box3D};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{project, CameraMatrix, RigidTransform};
use crate::scoremap::{entropy, margin, ScoreMap, ScoreVector};

const CHUNK_POINTS: usize = 2048;

/// One camera: its projection, its extrinsic, and the score map of its image.
#[derive(Clone, Debug)]
pub struct CameraView {
    camera: CameraMatrix,
    lidar_to_camera: RigidTransform,
    scores: ScoreMap,
}

impl CameraView {
    pub fn new(
        camera: CameraMatrix,
        lidar_to_camera: RigidTransform,
        scores: ScoreMap,
    ) -> Result<Self> {
        if scores.width() != camera.width() as usize || scores.height() != camera.height() as usize
        {
            return Err(Error::Shape(format!(
                "score map is {}x{} but camera image is {}x{}",
                scores.width(),
                scores.height(),
                camera.width(),
                camera.height()
            )));
        }
        Ok(Self {
            camera,
            lidar_to_camera,
            scores,
        })
    }

    pub fn camera(&self) -> &CameraMatrix {
        &self.camera
    }

    pub fn lidar_to_camera(&self) -> &RigidTransform {
        &self.lidar_to_camera
    }

    pub fn scores(&self) -> &ScoreMap {
        &self.scores
    }

    /// Same view with the extrinsic replaced.
    pub fn with_lidar_to_camera(&self, lidar_to_camera: RigidTransform) -> Self {
        Self {
            lidar_to_camera,
            ..self.clone()
        }
    }

    /// Snapped in-bounds pixel hit by `xyz`, if any.
    #[inline]
    pub fn hit(&self, xyz: [f64; 3], snapping: Snapping) -> Option<(usize, usize)> {
        let px = project(&self.camera, &self.lidar_to_camera, xyz)?;
        let u = snapping.snap(px.u, self.camera.width())?;
        let v = snapping.snap(px.v, self.camera.height())?;
        Some((u, v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapStrategy {
    /// Uniform choice among the hit cameras, reproducible from the seed.
    Random { seed: u64 },
    /// Lowest-entropy score vector; ties go to the lowest camera index.
    Entropy,
    /// Largest top-two margin; ties go to the lowest camera index.
    Margin,
}

/// What happens to points that land in no camera image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OovPolicy {
    Drop,
    Background,
    Zeros,
}

impl OovPolicy {
    /// `Drop` for a single camera, `Background` for multi-camera rigs.
    pub fn default_for(num_cameras: usize) -> Self {
        if num_cameras <= 1 {
            OovPolicy::Drop
        } else {
            OovPolicy::Background
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Snapping {
    #[default]
    Floor,
    RoundHalfUp,
}

impl Snapping {
    /// Integer pixel index for a continuous coordinate, `None` outside `0..len`.
    #[inline]
    pub fn snap(self, x: f64, len: u32) -> Option<usize> {
        let s = match self {
            Snapping::Floor => x.floor(),
            Snapping::RoundHalfUp => (x + 0.5).floor(),
        };
        if s >= 0.0 && s < len as f64 {
            Some(s as usize)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PaintConfig {
    pub overlap: OverlapStrategy,
    pub oov: OovPolicy,
    pub snapping: Snapping,
}

impl Default for PaintConfig {
    fn default() -> Self {
        Self {
            overlap: OverlapStrategy::Random { seed: 0 },
            oov: OovPolicy::Drop,
            snapping: Snapping::Floor,
        }
    }
}

impl OverlapStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            OverlapStrategy::Random { .. } => "random",
            OverlapStrategy::Entropy => "entropy",
            OverlapStrategy::Margin => "margin",
        }
    }
}

impl fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OovPolicy::Drop => "drop",
            OovPolicy::Background => "background",
            OovPolicy::Zeros => "zeros",
        })
    }
}

impl FromStr for OovPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(OovPolicy::Drop),
            "background" => Ok(OovPolicy::Background),
            "zeros" => Ok(OovPolicy::Zeros),
            _ => Err(Error::invalid("out-of-view policy", format!("'{s}'"))),
        }
    }
}

impl fmt::Display for Snapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Snapping::Floor => "floor",
            Snapping::RoundHalfUp => "round",
        })
    }
}

impl FromStr for Snapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" => Ok(Snapping::Floor),
            "round" | "round_half_up" => Ok(Snapping::RoundHalfUp),
            _ => Err(Error::invalid("snapping", format!("'{s}'"))),
        }
    }
}

/// Where a painted point's appended scores came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointSource {
    Camera(u32),
    Box(u32),
    /// No camera saw the point; it carries the out-of-view fill.
    None,
}

/// A cloud of `D + C` columns: the input columns followed by class scores.
#[derive(Clone, Debug, PartialEq)]
pub struct PaintedCloud {
    cloud: PointCloud,
    input_dims: usize,
    class_names: Vec<String>,
    source: Vec<PointSource>,
}

impl PaintedCloud {
    pub fn new(
        cloud: PointCloud,
        input_dims: usize,
        class_names: Vec<String>,
        source: Vec<PointSource>,
    ) -> Result<Self> {
        if cloud.dims() != input_dims + class_names.len() {
            return Err(Error::Shape(format!(
                "painted cloud has {} columns, expected {input_dims} + {}",
                cloud.dims(),
                class_names.len()
            )));
        }
        if source.len() != cloud.len() {
            return Err(Error::Shape(format!(
                "{} source entries for {} points",
                source.len(),
                cloud.len()
            )));
        }
        Ok(Self {
            cloud,
            input_dims,
            class_names,
            source,
        })
    }

    /// Reinterprets a plain cloud as painted, with unknown provenance.
    pub fn from_cloud(cloud: PointCloud, class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len();
        if cloud.dims() < 3 + c {
            return Err(Error::Shape(format!(
                "{} columns cannot hold xyz plus {c} scores",
                cloud.dims()
            )));
        }
        let input_dims = cloud.dims() - c;
        let source = vec![PointSource::None; cloud.len()];
        Self::new(cloud, input_dims, class_names, source)
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn into_cloud(self) -> PointCloud {
        self.cloud
    }

    pub fn input_dims(&self) -> usize {
        self.input_dims
    }

    pub fn dims(&self) -> usize {
        self.cloud.dims()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn source(&self) -> &[PointSource] {
        &self.source
    }

    /// The appended class scores of point `i`.
    pub fn scores(&self, i: usize) -> &[f32] {
        &self.cloud.point(i)[self.input_dims..]
    }

    pub(crate) fn scores_mut(&mut self, i: usize) -> &mut [f32] {
        let (dims, input) = (self.cloud.dims(), self.input_dims);
        &mut self.cloud.data_mut()[i * dims + input..(i + 1) * dims]
    }
}

/// Counters reported alongside a painted cloud.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PaintStats {
    pub points_in: usize,
    pub points_out: usize,
    /// Points with an in-bounds hit, per camera.
    pub hits_per_camera: Vec<usize>,
    /// Points seen by two or more cameras.
    pub overlap_points: usize,
    /// Points seen by no camera.
    pub out_of_view: usize,
}

impl PaintStats {
    fn merge(&mut self, other: &PaintStats) {
        self.points_in += other.points_in;
        self.points_out += other.points_out;
        for (a, b) in self.hits_per_camera.iter_mut().zip(&other.hits_per_camera) {
            *a += b;
        }
        self.overlap_points += other.overlap_points;
        self.out_of_view += other.out_of_view;
    }
}

/// Deterministic generator for the random overlap choice of one point.
pub fn point_stream(seed: u64, point_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point_index);
    rng
}

/// Picks one of `candidates` (camera index, scores). `candidates` must be in
/// increasing camera order for the tie rules to mean "lowest camera index".
/// Returns the position of the winner within `candidates`.
fn choose(candidates: &[(usize, &[f32])], strategy: OverlapStrategy, point_index: u64) -> usize {
    match strategy {
        OverlapStrategy::Random { seed } => {
            point_stream(seed, point_index).random_range(0..candidates.len())
        }
        OverlapStrategy::Entropy => {
            let mut best = 0;
            let mut best_h = entropy(candidates[0].1);
            for (i, (_, s)) in candidates.iter().enumerate().skip(1) {
                let h = entropy(s);
                if h < best_h {
                    best = i;
                    best_h = h;
                }
            }
            best
        }
        OverlapStrategy::Margin => {
            let mut best = 0;
            let mut best_m = margin(candidates[0].1);
            for (i, (_, s)) in candidates.iter().enumerate().skip(1) {
                let m = margin(s);
                if m > best_m {
                    best = i;
                    best_m = m;
                }
            }
            best
        }
    }
}

/// Resolves a point seen by several cameras to one score vector.
///
/// Candidates are ordered by camera index before choosing. `point_index`
/// keys the random stream and is ignored by the other strategies.
pub fn resolve_overlap(
    candidates: &[(usize, ScoreVector)],
    strategy: OverlapStrategy,
    point_index: u64,
) -> Option<(usize, ScoreVector)> {
    if candidates.is_empty() {
        return None;
    }
    let mut sorted: Vec<(usize, &[f32])> =
        candidates.iter().map(|(c, s)| (*c, s.as_slice())).collect();
    sorted.sort_by_key(|(c, _)| *c);
    let (cam, scores) = sorted[choose(&sorted, strategy, point_index)];
    Some((cam, ScoreVector(scores.to_vec())))
}

fn check_views(views: &[CameraView]) -> Result<&[String]> {
    let first = views
        .first()
        .ok_or_else(|| Error::invalid("paint request", "no camera views"))?;
    let names = first.scores.class_names();
    for (i, view) in views.iter().enumerate().skip(1) {
        if view.scores.num_classes() != names.len() {
            return Err(Error::invalid(
                "paint request",
                format!(
                    "view {i} has {} classes, view 0 has {}",
                    view.scores.num_classes(),
                    names.len()
                ),
            ));
        }
        if view.scores.class_names() != names {
            return Err(Error::invalid(
                "paint request",
                format!("view {i} class names differ from view 0"),
            ));
        }
    }
    Ok(names)
}

struct ChunkOutput {
    data: Vec<f32>,
    source: Vec<PointSource>,
    stats: PaintStats,
}

fn paint_chunk(
    cloud: &PointCloud,
    range: std::ops::Range<usize>,
    index_offset: u64,
    views: &[CameraView],
    cfg: &PaintConfig,
) -> ChunkOutput {
    let dims = cloud.dims();
    let c = views[0].scores.num_classes();
    let background = c - 1;
    let mut out = ChunkOutput {
        data: Vec::with_capacity(range.len() * (dims + c)),
        source: Vec::with_capacity(range.len()),
        stats: PaintStats {
            points_in: range.len(),
            hits_per_camera: vec![0; views.len()],
            ..Default::default()
        },
    };
    let mut hits: Vec<(usize, &[f32])> = Vec::with_capacity(views.len());
    for i in range {
        let point = cloud.point(i);
        let xyz = [point[0] as f64, point[1] as f64, point[2] as f64];
        hits.clear();
        for (k, view) in views.iter().enumerate() {
            if let Some((u, v)) = view.hit(xyz, cfg.snapping) {
                hits.push((k, view.scores.pixel(u, v)));
                out.stats.hits_per_camera[k] += 1;
            }
        }
        let chosen = match hits.len() {
            0 => {
                out.stats.out_of_view += 1;
                None
            }
            1 => Some(hits[0]),
            _ => {
                out.stats.overlap_points += 1;
                Some(hits[choose(&hits, cfg.overlap, index_offset + i as u64)])
            }
        };
        match chosen {
            Some((cam, scores)) => {
                out.data.extend_from_slice(point);
                out.data.extend_from_slice(scores);
                out.source.push(PointSource::Camera(cam as u32));
            }
            None => match cfg.oov {
                OovPolicy::Drop => continue,
                OovPolicy::Background | OovPolicy::Zeros => {
                    out.data.extend_from_slice(point);
                    let start = out.data.len();
                    out.data.resize(start + c, 0.0);
                    if cfg.oov == OovPolicy::Background {
                        out.data[start + background] = 1.0;
                    }
                    out.source.push(PointSource::None);
                }
            },
        }
        out.stats.points_out += 1;
    }
    out
}

/// Paints `cloud` using the current rayon pool. Point `i` of `cloud` is
/// treated as global point `index_offset + i` for the random overlap stream,
/// so painting a partition piecewise with matching offsets reproduces a
/// whole-cloud paint exactly.
pub fn paint_indexed(
    cloud: &PointCloud,
    views: &[CameraView],
    cfg: &PaintConfig,
    index_offset: u64,
) -> Result<(PaintedCloud, PaintStats)> {
    let class_names = check_views(views)?.to_vec();
    let n = cloud.len();
    let chunks: Vec<ChunkOutput> = (0..n.div_ceil(CHUNK_POINTS))
        .into_par_iter()
        .map(|k| {
            let start = k * CHUNK_POINTS;
            let end = (start + CHUNK_POINTS).min(n);
            paint_chunk(cloud, start..end, index_offset, views, cfg)
        })
        .collect();

    let out_dims = cloud.dims() + class_names.len();
    let mut stats = PaintStats {
        hits_per_camera: vec![0; views.len()],
        ..Default::default()
    };
    let mut data = Vec::with_capacity(chunks.iter().map(|c| c.data.len()).sum());
    let mut source = Vec::with_capacity(chunks.iter().map(|c| c.source.len()).sum());
    for chunk in chunks {
        stats.merge(&chunk.stats);
        data.extend_from_slice(&chunk.data);
        source.extend_from_slice(&chunk.source);
    }
    let painted = PaintedCloud {
        cloud: PointCloud::from_parts_unchecked(out_dims, data),
        input_dims: cloud.dims(),
        class_names,
        source,
    };
    Ok((painted, stats))
}

/// Paints every point of `cloud` into the given views.
pub fn paint(cloud: &PointCloud, views: &[CameraView], cfg: &PaintConfig) -> Result<PaintedCloud> {
    paint_indexed(cloud, views, cfg, 0).map(|(p, _)| p)
}

/// [`paint_indexed`] on a dedicated pool of `threads` workers.
pub fn paint_with_threads(
    cloud: &PointCloud,
    views: &[CameraView],
    cfg: &PaintConfig,
    threads: usize,
) -> Result<(PaintedCloud, PaintStats)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid("thread pool", e.to_string()))?;
    pool.install(|| paint_indexed(cloud, views, cfg, 0))
}
