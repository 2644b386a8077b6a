//! Lidar/camera frame matching, ego-motion compensation and a deterministic
//! latency simulator for the painting pipeline.
//!
//! All times are milliseconds.

use std::fmt;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::RigidTransform;

/// Capture times of one sensor. Camera streams also carry the time their
/// segmentation output became available.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStream {
    sensor_id: String,
    capture_times: Vec<f64>,
    segmentation_done: Option<Vec<f64>>,
}

impl FrameStream {
    pub fn lidar(sensor_id: impl Into<String>, capture_times: Vec<f64>) -> Result<Self> {
        check_increasing(&capture_times)?;
        Ok(Self {
            sensor_id: sensor_id.into(),
            capture_times,
            segmentation_done: None,
        })
    }

    pub fn camera(
        sensor_id: impl Into<String>,
        capture_times: Vec<f64>,
        segmentation_done: Vec<f64>,
    ) -> Result<Self> {
        check_increasing(&capture_times)?;
        if segmentation_done.len() != capture_times.len() {
            return Err(Error::Shape(format!(
                "{} segmentation times for {} frames",
                segmentation_done.len(),
                capture_times.len()
            )));
        }
        if let Some(i) = capture_times
            .iter()
            .zip(&segmentation_done)
            .position(|(c, d)| !(d >= c))
        {
            return Err(Error::invalid(
                "frame stream",
                format!("frame {i} finishes segmentation before it is captured"),
            ));
        }
        Ok(Self {
            sensor_id: sensor_id.into(),
            capture_times,
            segmentation_done: Some(segmentation_done),
        })
    }

    pub fn sensor_id(&self) -> &str {
        &self.sensor_id
    }

    pub fn capture_times(&self) -> &[f64] {
        &self.capture_times
    }

    /// Segmentation completion times; for a lidar stream, the capture times.
    pub fn ready_times(&self) -> &[f64] {
        self.segmentation_done
            .as_deref()
            .unwrap_or(&self.capture_times)
    }

    pub fn len(&self) -> usize {
        self.capture_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capture_times.is_empty()
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if !times.iter().all(|t| t.is_finite()) {
        return Err(Error::invalid("frame stream", "non-finite capture time"));
    }
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "frame stream",
            format!("capture times not strictly increasing at frame {}", i + 1),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchPolicy {
    /// Nearest camera capture; ties go to the earlier frame. Waits for segmentation.
    Concurrent,
    /// Latest camera frame whose segmentation is done by the lidar capture.
    Consecutive,
}

impl fmt::Display for MatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchPolicy::Concurrent => "concurrent",
            MatchPolicy::Consecutive => "consecutive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameMatch {
    pub lidar: usize,
    pub camera: Option<usize>,
}

/// Pairs every lidar frame with a camera frame under `policy`.
pub fn match_frames(lidar: &FrameStream, camera: &FrameStream, policy: MatchPolicy) -> Vec<FrameMatch> {
    let cam_t = camera.capture_times();
    match policy {
        MatchPolicy::Concurrent => lidar
            .capture_times()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let after = cam_t.partition_point(|&c| c < t);
                let best = match (after.checked_sub(1), cam_t.get(after)) {
                    (None, None) => None,
                    (Some(b), None) => Some(b),
                    (None, Some(_)) => Some(after),
                    (Some(b), Some(&a)) => {
                        if t - cam_t[b] <= a - t {
                            Some(b)
                        } else {
                            Some(after)
                        }
                    }
                };
                FrameMatch {
                    lidar: i,
                    camera: best,
                }
            })
            .collect(),
        MatchPolicy::Consecutive => {
            // Sweep lidar frames in time order over cameras sorted by readiness,
            // tracking the latest-captured camera that is ready.
            let ready = camera.ready_times();
            let mut by_ready: Vec<usize> = (0..camera.len()).collect();
            by_ready.sort_by(|&a, &b| ready[a].total_cmp(&ready[b]).then(a.cmp(&b)));
            let mut next = 0;
            let mut latest: Option<usize> = None;
            lidar
                .capture_times()
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    while next < by_ready.len() && ready[by_ready[next]] <= t {
                        latest = latest.max(Some(by_ready[next]));
                        next += 1;
                    }
                    FrameMatch {
                        lidar: i,
                        camera: latest,
                    }
                })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgoPose {
    pub time: f64,
    pub world_from_ego: RigidTransform,
}

/// `ego(t_image) ← ego(t_lidar)`: the motion of the vehicle between captures.
/// Identical poses give the exact identity rather than `W⁻¹·W` with rounding.
pub fn ego_motion(pose_at_lidar: &EgoPose, pose_at_image: &EgoPose) -> RigidTransform {
    if pose_at_lidar.world_from_ego == pose_at_image.world_from_ego {
        return RigidTransform::identity();
    }
    pose_at_image
        .world_from_ego
        .invert()
        .compose(&pose_at_lidar.world_from_ego)
}

/// Lidar frame to ego frame at image time.
pub fn ego_compensation_transform(
    pose_at_lidar: &EgoPose,
    pose_at_image: &EgoPose,
    ego_from_lidar: &RigidTransform,
) -> RigidTransform {
    ego_motion(pose_at_lidar, pose_at_image).compose(ego_from_lidar)
}

/// Re-expresses a lidar sweep in the ego frame at the image capture time.
pub fn ego_compensate(
    cloud: &PointCloud,
    pose_at_lidar: &EgoPose,
    pose_at_image: &EgoPose,
    ego_from_lidar: &RigidTransform,
) -> PointCloud {
    ego_compensation_transform(pose_at_lidar, pose_at_image, ego_from_lidar).apply(cloud)
}

/// Stage latencies and sensor periods for the simulator, in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub policy: MatchPolicy,
    /// Image segmentation.
    pub t_seg: f64,
    /// Projecting and painting the points.
    pub t_proj: f64,
    /// Extra encoder time caused by the wider painted points.
    pub t_enc_delta: f64,
    /// The lidar detector itself.
    pub t_det: f64,
    pub lidar_period: f64,
    pub camera_period: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            policy: MatchPolicy::Consecutive,
            t_seg: 50.0,
            t_proj: 0.15,
            t_enc_delta: 0.6,
            t_det: 16.0,
            lidar_period: 50.0,
            camera_period: 1000.0 / 12.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_seg", self.t_seg),
            ("t_proj", self.t_proj),
            ("t_enc_delta", self.t_enc_delta),
            ("t_det", self.t_det),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    "pipeline config",
                    format!("{name} = {v} must be a non-negative latency"),
                ));
            }
        }
        for (name, v) in [
            ("lidar_period", self.lidar_period),
            ("camera_period", self.camera_period),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    "pipeline config",
                    format!("{name} = {v} must be positive"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameLatency {
    pub lidar_capture: f64,
    pub camera: Option<usize>,
    /// Capture to detections out; `None` for frames left unpainted.
    pub latency: Option<f64>,
    /// Same frame through the unpainted detector.
    pub baseline_latency: f64,
    /// `|lidar capture − matched image capture|`.
    pub image_age: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyReport {
    pub policy: MatchPolicy,
    pub frames: Vec<FrameLatency>,
    pub painted_frames: usize,
    pub unmatched_frames: usize,
    pub mean_latency: f64,
    pub max_latency: f64,
    /// Mean of `latency − baseline_latency` over painted frames.
    pub added_latency: f64,
    /// Painted frames finished inside the simulated window, per second.
    pub throughput: f64,
    pub mean_image_age: f64,
}

impl LatencyReport {
    /// `key=value` lines for scripting.
    pub fn to_kv(&self) -> String {
        format!(
            "policy={}\nframes={}\npainted_frames={}\nunmatched_frames={}\nmean_latency_ms={}\nmax_latency_ms={}\nadded_latency_ms={}\nthroughput_fps={}\nmean_image_age_ms={}\n",
            self.policy,
            self.frames.len(),
            self.painted_frames,
            self.unmatched_frames,
            self.mean_latency,
            self.max_latency,
            self.added_latency,
            self.throughput,
            self.mean_image_age,
        )
    }
}

impl fmt::Display for LatencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "matching policy      {}", self.policy)?;
        writeln!(
            f,
            "lidar frames         {} ({} painted, {} unmatched)",
            self.frames.len(),
            self.painted_frames,
            self.unmatched_frames
        )?;
        writeln!(f, "mean latency         {:.4} ms", self.mean_latency)?;
        writeln!(f, "max latency          {:.4} ms", self.max_latency)?;
        writeln!(f, "added vs unpainted   {:.4} ms", self.added_latency)?;
        writeln!(f, "throughput           {:.3} frames/s", self.throughput)?;
        write!(f, "mean image age       {:.4} ms", self.mean_image_age)
    }
}

fn periodic(period: f64, duration_ms: f64) -> Vec<f64> {
    (0u64..)
        .map(|k| k as f64 * period)
        .take_while(|&t| t < duration_ms)
        .collect()
}

/// Runs both sensors for `duration_s` seconds through a two-stage pipeline.
///
/// The segmentation network and the lidar network are each a single FIFO
/// server with fixed service times. Under concurrent matching a lidar frame
/// cannot start painting before its image's segmentation is done; under
/// consecutive matching the matched segmentation is complete by construction.
pub fn simulate_pipeline(cfg: &PipelineConfig, duration_s: f64) -> Result<LatencyReport> {
    cfg.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(
            "simulation",
            format!("duration {duration_s} s must be positive"),
        ));
    }
    let duration_ms = duration_s * 1000.0;
    let lidar_t = periodic(cfg.lidar_period, duration_ms);
    let cam_t = periodic(cfg.camera_period, duration_ms);

    let mut seg_free = f64::NEG_INFINITY;
    let seg_done: Vec<f64> = cam_t
        .iter()
        .map(|&c| {
            let done = c.max(seg_free) + cfg.t_seg;
            seg_free = done;
            done
        })
        .collect();

    let lidar = FrameStream::lidar("lidar", lidar_t.clone())?;
    let camera = FrameStream::camera("camera", cam_t.clone(), seg_done.clone())?;
    let matches = match_frames(&lidar, &camera, cfg.policy);

    let mut net_free = f64::NEG_INFINITY;
    let mut base_free = f64::NEG_INFINITY;
    let mut frames = Vec::with_capacity(lidar_t.len());
    for m in &matches {
        let capture = lidar_t[m.lidar];
        let base_finish = capture.max(base_free) + cfg.t_det;
        base_free = base_finish;
        let baseline_latency = base_finish - capture;

        let (latency, image_age) = match m.camera {
            Some(j) => {
                let ready = match cfg.policy {
                    MatchPolicy::Concurrent => capture.max(seg_done[j]),
                    MatchPolicy::Consecutive => capture,
                };
                let finish = ready.max(net_free) + cfg.t_proj + cfg.t_enc_delta + cfg.t_det;
                net_free = finish;
                (Some(finish - capture), Some((capture - cam_t[j]).abs()))
            }
            None => (None, None),
        };
        frames.push(FrameLatency {
            lidar_capture: capture,
            camera: m.camera,
            latency,
            baseline_latency,
            image_age,
        });
    }

    let painted: Vec<&FrameLatency> = frames.iter().filter(|f| f.latency.is_some()).collect();
    let n = painted.len();
    let mean = |f: &dyn Fn(&FrameLatency) -> f64| {
        if n == 0 {
            0.0
        } else {
            painted.iter().map(|fr| f(fr)).sum::<f64>() / n as f64
        }
    };
    let mean_latency = mean(&|f| f.latency.unwrap_or(0.0));
    let added_latency = mean(&|f| f.latency.unwrap_or(0.0) - f.baseline_latency);
    let mean_image_age = mean(&|f| f.image_age.unwrap_or(0.0));
    let max_latency = painted
        .iter()
        .filter_map(|f| f.latency)
        .fold(0.0, f64::max);
    let finished = painted
        .iter()
        .filter(|f| f.lidar_capture + f.latency.unwrap_or(f64::INFINITY) <= duration_ms)
        .count();

    Ok(LatencyReport {
        policy: cfg.policy,
        unmatched_frames: frames.len() - n,
        painted_frames: n,
        frames,
        mean_latency,
        max_latency,
        added_latency,
        throughput: finished as f64 / duration_s,
        mean_image_age,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concurrent_tie_goes_to_earlier() {
        let lidar = FrameStream::lidar("l", vec![100.0]).unwrap();
        let cam = FrameStream::camera("c", vec![95.0, 105.0], vec![95.0, 105.0]).unwrap();
        let m = match_frames(&lidar, &cam, MatchPolicy::Concurrent);
        assert_eq!(m[0].camera, Some(0));
    }

    #[test]
    fn consecutive_skips_unfinished_segmentation() {
        let lidar = FrameStream::lidar("l", vec![100.0]).unwrap();
        let cam = FrameStream::camera("c", vec![45.0, 95.0], vec![90.0, 140.0]).unwrap();
        let m = match_frames(&lidar, &cam, MatchPolicy::Consecutive);
        assert_eq!(m[0].camera, Some(0));
        let early = FrameStream::lidar("l", vec![10.0]).unwrap();
        assert_eq!(match_frames(&early, &cam, MatchPolicy::Consecutive)[0].camera, None);
    }

    #[test]
    fn streams_are_validated() {
        assert!(FrameStream::lidar("l", vec![1.0, 1.0]).is_err());
        assert!(FrameStream::camera("c", vec![1.0], vec![0.5]).is_err());
        assert!(FrameStream::camera("c", vec![1.0], vec![]).is_err());
    }

    #[test]
    fn ego_motion_shifts_points() {
        let cloud = PointCloud::new(4, vec![1.0, 2.0, 3.0, 0.5]).unwrap();
        let at_image = EgoPose {
            time: 0.0,
            world_from_ego: RigidTransform::identity(),
        };
        let at_lidar = EgoPose {
            time: 50.0,
            world_from_ego: RigidTransform::translation(1.0, 0.0, 0.0),
        };
        let out = ego_compensate(&cloud, &at_lidar, &at_image, &RigidTransform::identity());
        assert_eq!(out.as_slice(), &[2.0, 2.0, 3.0, 0.5]);
        let still = ego_compensate(&cloud, &at_image, &at_image, &RigidTransform::identity());
        assert_eq!(still, cloud);
    }

    #[test]
    fn consecutive_adds_only_paint_cost() {
        let cfg = PipelineConfig::default();
        let r = simulate_pipeline(&cfg, 2.0).unwrap();
        assert!((r.added_latency - 0.75).abs() < 1e-9);
        assert!(r.unmatched_frames > 0);
    }

    #[test]
    fn concurrent_analytic_sum() {
        let cfg = PipelineConfig {
            policy: MatchPolicy::Concurrent,
            t_seg: 50.0,
            t_proj: 0.15,
            t_enc_delta: 0.6,
            t_det: 16.0,
            lidar_period: 100.0,
            camera_period: 100.0,
        };
        let r = simulate_pipeline(&cfg, 1.0).unwrap();
        assert_eq!(r.frames.len(), 10);
        for f in &r.frames {
            assert!((f.latency.unwrap() - 66.75).abs() < 1e-9);
            assert_eq!(f.image_age, Some(0.0));
        }
    }

    #[test]
    fn config_validation() {
        let cfg = PipelineConfig {
            t_seg: -1.0,
            ..Default::default()
        };
        assert!(simulate_pipeline(&cfg, 1.0).is_err());
        let cfg = PipelineConfig {
            lidar_period: 0.0,
            ..Default::default()
        };
        assert!(simulate_pipeline(&cfg, 1.0).is_err());
        assert!(simulate_pipeline(&PipelineConfig::default(), 0.0).is_err());
    }
}
