//! Rig descriptions: which cameras exist, how to project into them, and where
//! their score maps live.
//!
//! Line-oriented text. `#` starts a comment; blank lines are ignored. Global
//! keys come first, then one `[camera <name>]` section per camera:
//!
//! ```text
//! classes = car pedestrian cyclist background   # background last
//! dims = 4                                      # columns per input point
//! columns = x y z r                             # optional, one name per column
//!
//! [camera front]
//! size = 1242 375                               # width height, pixels
//! matrix = <12 floats, row-major 3x4>
//! lidar_to_camera = <16 floats, row-major 4x4>
//! scores = front.ppsm                           # relative to the rig file
//! ```
//!
//! Instead of `lidar_to_camera` a section may give the three-factor chain
//! `cam_from_ego`, `ego_from_lidar` and optionally `ego_tc_from_ego_tl`
//! (identity when absent); the chain is composed at load time.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{parse_floats, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::geom::{build_lidar_to_camera, CameraMatrix, RigidTransform};
use crate::io::read_score_map;
use crate::painter::CameraView;

#[derive(Clone, Debug, PartialEq)]
pub struct RigCamera {
    pub name: String,
    pub camera: CameraMatrix,
    pub lidar_to_camera: RigidTransform,
    pub scores_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigDescription {
    pub class_names: Vec<String>,
    pub dims: usize,
    pub columns: Vec<String>,
    pub cameras: Vec<RigCamera>,
}

impl RigDescription {
    /// Reads and validates every camera's score map.
    pub fn load_views(&self) -> Result<Vec<CameraView>> {
        self.cameras
            .iter()
            .map(|cam| {
                let scores = read_score_map(&cam.scores_path)?;
                if scores.class_names() != self.class_names.as_slice() {
                    return Err(Error::invalid(
                        "score map",
                        format!(
                            "{}: classes {:?} differ from rig classes {:?}",
                            cam.scores_path.display(),
                            scores.class_names(),
                            self.class_names
                        ),
                    ));
                }
                let report = scores.validate();
                if !report.is_ok() {
                    return Err(Error::invalid(
                        "score map",
                        format!("{}: {report}", cam.scores_path.display()),
                    ));
                }
                CameraView::new(cam.camera, cam.lidar_to_camera, scores)
            })
            .collect()
    }
}

#[derive(Default)]
struct Section {
    name: String,
    line: usize,
    size: Option<(u32, u32)>,
    matrix: Option<Vec<f64>>,
    lidar_to_camera: Option<RigidTransform>,
    cam_from_ego: Option<RigidTransform>,
    ego_tc_from_ego_tl: Option<RigidTransform>,
    ego_from_lidar: Option<RigidTransform>,
    scores: Option<PathBuf>,
}

impl Section {
    fn finish(self) -> Result<RigCamera> {
        let missing = |key: &str| {
            Error::Format(format!(
                "rig line {}: camera '{}' is missing '{key}'",
                self.line, self.name
            ))
        };
        let (width, height) = self.size.ok_or_else(|| missing("size"))?;
        let matrix = self.matrix.as_deref().ok_or_else(|| missing("matrix"))?;
        let camera = CameraMatrix::from_row_slice(matrix, width, height).map_err(|e| {
            Error::Format(format!("rig camera '{}': {e}", self.name))
        })?;
        let chain = self.cam_from_ego.is_some()
            || self.ego_from_lidar.is_some()
            || self.ego_tc_from_ego_tl.is_some();
        let lidar_to_camera = match (self.lidar_to_camera, chain) {
            (Some(_), true) => {
                return Err(Error::Format(format!(
                    "rig line {}: camera '{}' gives both lidar_to_camera and a transform chain",
                    self.line, self.name
                )))
            }
            (Some(t), false) => t,
            (None, true) => build_lidar_to_camera(
                &self.cam_from_ego.ok_or_else(|| missing("cam_from_ego"))?,
                &self.ego_tc_from_ego_tl.unwrap_or_default(),
                &self.ego_from_lidar.ok_or_else(|| missing("ego_from_lidar"))?,
            ),
            (None, false) => return Err(missing("lidar_to_camera")),
        };
        let scores_path = self.scores.ok_or_else(|| missing("scores"))?;
        Ok(RigCamera {
            name: self.name,
            camera,
            lidar_to_camera,
            scores_path,
        })
    }
}

/// Parses rig text; relative score paths are resolved against `base_dir`.
/// Does not touch the filesystem.
pub fn parse_rig(text: &str, base_dir: &Path) -> Result<RigDescription> {
    let mut class_names: Option<Vec<String>> = None;
    let mut dims: Option<usize> = None;
    let mut columns: Option<(usize, Vec<String>)> = None;
    let mut sections: Vec<Section> = Vec::new();
    let mut seen = HashSet::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |msg: String| Error::Format(format!("rig line {line_no}: {msg}"));
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let inner = header
                .strip_suffix(']')
                .ok_or_else(|| err("unterminated section header".into()))?;
            let name = inner
                .trim()
                .strip_prefix("camera")
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| err(format!("expected '[camera <name>]', got '[{inner}]'")))?;
            if !seen.insert(name.to_owned()) {
                return Err(err(format!("duplicate camera name '{name}'")));
            }
            sections.push(Section {
                name: name.to_owned(),
                line: line_no,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let floats = |count: usize| -> Result<Vec<f64>> {
            let v = parse_floats(value).map_err(|e| err(format!("{key}: {e}")))?;
            if v.len() != count {
                return Err(err(format!("{key}: expected {count} values, got {}", v.len())));
            }
            Ok(v)
        };
        let transform = || -> Result<RigidTransform> {
            RigidTransform::from_row_slice(&floats(16)?).map_err(|e| err(format!("{key}: {e}")))
        };

        let Some(section) = sections.last_mut() else {
            match key {
                "classes" => {
                    class_names = Some(value.split_whitespace().map(str::to_owned).collect())
                }
                "dims" => {
                    dims = Some(value.parse().map_err(|_| err(format!("dims: '{value}'")))?)
                }
                "columns" => {
                    columns = Some((
                        line_no,
                        value.split_whitespace().map(str::to_owned).collect(),
                    ))
                }
                _ => return Err(err(format!("unknown global key '{key}'"))),
            }
            continue;
        };
        let duplicate = match key {
            "size" => {
                let parts: Vec<u32> = value
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| err(format!("size: '{t}'"))))
                    .collect::<Result<_>>()?;
                let [w, h] = parts[..] else {
                    return Err(err("size: expected '<width> <height>'".into()));
                };
                section.size.replace((w, h)).is_some()
            }
            "matrix" => section.matrix.replace(floats(12)?).is_some(),
            "lidar_to_camera" => section.lidar_to_camera.replace(transform()?).is_some(),
            "cam_from_ego" => section.cam_from_ego.replace(transform()?).is_some(),
            "ego_tc_from_ego_tl" => section.ego_tc_from_ego_tl.replace(transform()?).is_some(),
            "ego_from_lidar" => section.ego_from_lidar.replace(transform()?).is_some(),
            "scores" => {
                if value.is_empty() {
                    return Err(err("scores: empty path".into()));
                }
                section.scores.replace(base_dir.join(value)).is_some()
            }
            _ => return Err(err(format!("unknown camera key '{key}'"))),
        };
        if duplicate {
            return Err(err(format!("duplicate key '{key}'")));
        }
    }

    let class_names =
        class_names.ok_or_else(|| Error::Format("rig: missing 'classes'".into()))?;
    if class_names.len() < 2 {
        return Err(Error::Format("rig: need at least 2 classes".into()));
    }
    if class_names.last().map(String::as_str) != Some("background") {
        return Err(Error::Format(format!(
            "rig: last class must be 'background', got {:?}",
            class_names.last()
        )));
    }
    let dims = dims.ok_or_else(|| Error::Format("rig: missing 'dims'".into()))?;
    if dims < 3 {
        return Err(Error::Format(format!("rig: dims {dims} < 3")));
    }
    let columns = match columns {
        Some((line_no, cols)) if cols.len() != dims => {
            return Err(Error::Format(format!(
                "rig line {line_no}: {} column names for dims {dims}",
                cols.len()
            )))
        }
        Some((_, cols)) => cols,
        None => default_columns(dims),
    };
    if sections.is_empty() {
        return Err(Error::Format("rig: no [camera] sections".into()));
    }
    let cameras = sections
        .into_iter()
        .map(Section::finish)
        .collect::<Result<Vec<_>>>()?;
    Ok(RigDescription {
        class_names,
        dims,
        columns,
        cameras,
    })
}

fn default_columns(dims: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["x", "y", "z", "r", "t"].iter().map(|s| s.to_string()).collect();
    cols.truncate(dims);
    cols.extend((cols.len()..dims).map(|i| format!("f{i}")));
    cols
}

/// Parses a rig file and checks that every referenced score map exists.
pub fn load_rig(path: impl AsRef<Path>) -> Result<RigDescription> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let rig = parse_rig(&read_text(path)?, base)?;
    for cam in &rig.cameras {
        if !cam.scores_path.is_file() {
            return Err(Error::io(
                &cam.scores_path,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("score map for camera '{}' not found", cam.name),
                ),
            ));
        }
    }
    Ok(rig)
}

fn join_floats<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serializes a rig. Score paths under `base_dir` are written relative to it.
/// Floats use shortest round-trip formatting, so parsing gives back the same bits.
pub fn format_rig(rig: &RigDescription, base_dir: &Path) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "classes = {}", rig.class_names.join(" "));
    let _ = writeln!(out, "dims = {}", rig.dims);
    let _ = writeln!(out, "columns = {}", rig.columns.join(" "));
    for cam in &rig.cameras {
        let m = cam.camera.matrix();
        let t = cam.lidar_to_camera.matrix();
        let rows_m: Vec<f64> = (0..3).flat_map(|r| (0..4).map(move |c| m[(r, c)])).collect();
        let rows_t: Vec<f64> = (0..4).flat_map(|r| (0..4).map(move |c| t[(r, c)])).collect();
        let scores = cam
            .scores_path
            .strip_prefix(base_dir)
            .unwrap_or(&cam.scores_path);
        let _ = writeln!(out);
        let _ = writeln!(out, "[camera {}]", cam.name);
        let _ = writeln!(out, "size = {} {}", cam.camera.width(), cam.camera.height());
        let _ = writeln!(out, "matrix = {}", join_floats(&rows_m));
        let _ = writeln!(out, "lidar_to_camera = {}", join_floats(&rows_t));
        let _ = writeln!(out, "scores = {}", scores.display());
    }
    out
}

pub fn write_rig(rig: &RigDescription, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    write_atomic(path, format_rig(rig, base).as_bytes())
}
