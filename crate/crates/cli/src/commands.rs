use std::path::{Path, PathBuf};
use std::time::Instant;

use pointpaint::io::{
    load_rig, parse_rig, read_point_cloud, read_score_map, write_point_cloud,
};
use pointpaint::painter::{paint_indexed, paint_with_threads};
use pointpaint::{
    remap_cyclist, simulate_pipeline, synth_scene, Error, PaintedCloud, PipelineConfig,
    RemapRule, SceneSpec,
};

use crate::{
    BenchArgs, CliError, FileKind, PaintArgs, RemapArgs, Report, SimulateArgs, SynthArgs,
    ValidateArgs,
};

type CmdResult = Result<Report, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn split_names(list: &str) -> Vec<String> {
    list.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn class_index(names: &[String], flag: &str, name: &str) -> Result<usize, CliError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| usage(format!("--{flag}: no class named '{name}' in {names:?}")))
}

pub fn paint(a: &PaintArgs) -> CmdResult {
    if a.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    if a.dims.is_some_and(|d| d < 3) {
        return Err(usage("--dims must be at least 3"));
    }
    let rig = load_rig(&a.rig)?;
    let dims = a.dims.unwrap_or(rig.dims);
    if dims != rig.dims {
        return Err(Error::Invalid {
            what: "rig",
            reason: format!("--dims {dims} but the rig declares {}", rig.dims),
        }
        .into());
    }
    let cloud = read_point_cloud(&a.cloud, dims)?;
    let views = rig.load_views()?;
    let cfg = a.options.config(views.len());
    let (painted, stats) = match a.threads {
        Some(t) => paint_with_threads(&cloud, &views, &cfg, t)?,
        None => paint_indexed(&cloud, &views, &cfg, 0)?,
    };
    write_point_cloud(painted.cloud(), &a.out)?;

    let mut r = Report::new();
    r.value("points in", "n_in", stats.points_in)
        .value("points out", "n_out", stats.points_out)
        .value("dims out", "dims_out", painted.dims());
    for (cam, hits) in rig.cameras.iter().zip(&stats.hits_per_camera) {
        r.value(&format!("hits {}", cam.name), &format!("hits_{}", cam.name), hits);
    }
    r.value("overlap points", "overlap_points", stats.overlap_points)
        .value("out of view", "out_of_view", stats.out_of_view)
        .value("overlap strategy", "overlap", cfg.overlap.name())
        .value("out-of-view policy", "oov", cfg.oov)
        .value("snapping", "snap", cfg.snapping);
    Ok(r)
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn remap(a: &RemapArgs) -> CmdResult {
    let (names, rig_dims) = match (&a.classes, &a.rig) {
        (Some(list), _) => (split_names(list), None),
        (None, Some(path)) => {
            let base = path.parent().unwrap_or(Path::new("."));
            let rig = parse_rig(&read_text(path)?, base)?;
            (rig.class_names, Some(rig.dims))
        }
        (None, None) => return Err(usage("one of --classes or --rig is required")),
    };
    let dims = a
        .dims
        .or(rig_dims)
        .ok_or_else(|| usage("--dims is required with --classes"))?;
    if dims < 3 {
        return Err(usage("--dims must be at least 3"));
    }
    let rule = RemapRule {
        source_class: class_index(&names, "source", &a.source)?,
        anchor_class: class_index(&names, "anchor", &a.anchor)?,
        target_class: class_index(&names, "target", &a.target)?,
        fallback_class: class_index(&names, "fallback", &a.fallback)?,
        radius: a.radius,
    };
    if let Err(e) = rule.validate(names.len()) {
        return Err(usage(e.to_string()));
    }
    let cloud = read_point_cloud(&a.cloud, dims + names.len())?;
    let painted = PaintedCloud::from_cloud(cloud, names)?;
    let (out, stats) = remap_cyclist(&painted, &rule)?;
    write_point_cloud(out.cloud(), &a.out)?;

    let mut r = Report::new();
    r.value("points", "points", out.len())
        .value(&format!("{} -> {}", a.source, a.target), "to_target", stats.source_to_target)
        .value(&format!("{} -> {}", a.source, a.fallback), "to_fallback", stats.source_to_fallback)
        .value(&format!("{} -> {}", a.anchor, a.target), "anchors", stats.anchors)
        .value(&format!("{} total", a.target), "target_total", stats.target_total())
        .value("radius (m)", "radius", a.radius);
    Ok(r)
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    let cfg = PipelineConfig {
        policy: a.policy.into(),
        t_seg: a.t_seg,
        t_proj: a.t_proj,
        t_enc_delta: a.t_enc_delta,
        t_det: a.t_det,
        lidar_period: a.lidar_period,
        camera_period: a.camera_period,
    };
    let report = simulate_pipeline(&cfg, a.duration).map_err(|e| usage(e.to_string()))?;
    let mut r = Report::new();
    for line in report.to_string().lines() {
        r.line(line);
    }
    for line in report.to_kv().lines() {
        if let Some((k, v)) = line.split_once('=') {
            r.pair(k, v);
        }
    }
    Ok(r)
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn bench(a: &BenchArgs) -> CmdResult {
    if a.cameras == 0 || a.threads == 0 || a.repeat == 0 {
        return Err(usage("--cameras, --threads and --repeat must be at least 1"));
    }
    let spec = SceneSpec {
        seed: a.options.seed,
        num_points: a.points,
        num_cameras: a.cameras,
        num_boxes: 8,
        image_width: 640,
        image_height: 360,
        ..Default::default()
    };
    let scene = synth_scene(&spec)?;
    let views = scene.views();
    let cfg = a.options.config(views.len());

    let other = if a.threads == 1 { 4 } else { a.threads };
    let (single, _) = paint_with_threads(&scene.cloud, &views, &cfg, 1)?;
    let (multi, _) = paint_with_threads(&scene.cloud, &views, &cfg, other)?;
    let identical = single == multi;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| usage(e.to_string()))?;
    let mut times = Vec::with_capacity(a.repeat);
    let mut points_out = 0;
    for _ in 0..a.repeat {
        let start = Instant::now();
        let (out, _) = pool.install(|| paint_indexed(&scene.cloud, &views, &cfg, 0))?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        points_out = out.len();
    }
    times.sort_by(f64::total_cmp);
    let median = percentile(&times, 50.0);
    let p95 = percentile(&times, 95.0);

    let mut r = Report::new();
    r.value("points", "points", a.points)
        .value("cameras", "cameras", a.cameras)
        .value("threads", "threads", a.threads)
        .value("repeat", "repeat", a.repeat)
        .value("points painted", "points_out", points_out)
        .value(&format!("identical 1 vs {other}"), "identical", identical)
        .value("median ms/frame", "median_ms", format!("{median:.3}"))
        .value("p95 ms/frame", "p95_ms", format!("{p95:.3}"))
        .value(
            "points/s",
            "points_per_s",
            format!("{:.0}", a.points as f64 / (median / 1e3)),
        );
    if !identical {
        r.line(format!("output differs between 1 and {other} threads")).fail();
    }
    Ok(r)
}

pub fn synth(a: &SynthArgs) -> CmdResult {
    let class_names = split_names(&a.classes);
    let spec = SceneSpec {
        seed: a.seed,
        num_points: a.points,
        num_cameras: a.cameras,
        num_boxes: a.boxes,
        score_noise: a.noise,
        dims: a.dims,
        class_names,
        image_width: a.width,
        image_height: a.height,
        paint: a.paint_options().config(a.cameras),
    };
    let scene = synth_scene(&spec).map_err(|e| usage(e.to_string()))?;
    write_dir(&a.out, |dir| scene.write_to(dir))?;

    let mut r = Report::new();
    r.value("directory", "out", a.out.display())
        .value("points", "points", scene.cloud.len())
        .value("cameras", "cameras", scene.rig.cameras.len())
        .value("boxes", "boxes", scene.boxes.len())
        .value("expected points", "expected_points", scene.expected.len())
        .value("expected dims", "expected_dims", scene.expected.dims());
    Ok(r)
}

/// Fills a new directory in a sibling temp dir and renames it into place.
/// An existing directory is updated file by file, each file atomically.
fn write_dir(out: &Path, fill: impl FnOnce(&Path) -> pointpaint::Result<()>) -> Result<(), Error> {
    if out.exists() {
        return fill(out);
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let tmp = tempfile::Builder::new()
        .prefix(".synth-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;
    fill(tmp.path())?;
    let kept = tmp.keep();
    std::fs::rename(&kept, out).map_err(|e| {
        let _ = std::fs::remove_dir_all(&kept);
        io_err(out)(e)
    })
}

fn guess_kind(path: &Path) -> Result<FileKind, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppsm") => return Ok(FileKind::Ppsm),
        Some("bin") => return Ok(FileKind::Cloud),
        Some("txt" | "rig") => return Ok(FileKind::Rig),
        _ => {}
    }
    let mut magic = [0u8; 4];
    let head = std::fs::File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut magic))
        .is_ok();
    if head && magic == pointpaint::io::PPSM_MAGIC {
        Ok(FileKind::Ppsm)
    } else {
        Err(usage(format!("cannot tell the kind of {}; pass --kind", path.display())))
    }
}

pub fn validate(a: &ValidateArgs) -> CmdResult {
    let kind = match a.kind {
        Some(k) => k,
        None => guess_kind(&a.path)?,
    };
    let mut r = Report::new();
    match kind {
        FileKind::Ppsm => {
            let map = read_score_map(&a.path)?;
            let report = map.validate();
            r.value("kind", "kind", "ppsm")
                .value("size", "size", format!("{}x{}", map.width(), map.height()))
                .value("classes", "classes", map.num_classes())
                .value("violations", "violations", report.violations.len());
            if !report.is_ok() {
                r.line(report.to_string()).fail();
            }
        }
        FileKind::Cloud => {
            let dims = a.dims.ok_or_else(|| usage("--dims is required for point clouds"))?;
            let cloud = read_point_cloud(&a.path, dims)?;
            r.value("kind", "kind", "cloud")
                .value("points", "points", cloud.len())
                .value("dims", "dims", cloud.dims());
        }
        FileKind::Rig => {
            let rig = load_rig(&a.path)?;
            let views = rig.load_views()?;
            r.value("kind", "kind", "rig")
                .value("cameras", "cameras", views.len())
                .value("classes", "classes", rig.class_names.len())
                .value("dims", "dims", rig.dims);
        }
    }
    if !r.failed() {
        r.line("ok");
    }
    Ok(r)
}
