//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! hard criterion fails or overruns its time budget.
//!
//! Run with `cargo test -p pointpaint-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pointpaint::io::{
    decode_score_map, encode_point_cloud, encode_score_map, parse_kitti_calib, read_point_cloud,
    read_score_map, write_point_cloud, write_score_map,
};
use pointpaint::painter::paint_with_threads;
use pointpaint::remap::remap_cyclist;
use pointpaint::scoremap::entropy;
use pointpaint::synth::reference_paint;
use pointpaint::temporal::ego_motion;
use pointpaint::{
    build_lidar_to_camera, ego_compensate, miou, paint, paint_from_boxes, project,
    simulate_pipeline, synth_scene, Box3D, CameraView, EgoPose, Error, LabelMap, MatchPolicy,
    OovPolicy, OverlapStrategy, PaintConfig, PaintedCloud, PipelineConfig, PointCloud, RemapRule,
    RigidTransform, SceneSpec, ScoreMap, ScoreMode, Snapping,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn class_names(c: usize) -> Vec<String> {
    let mut v: Vec<String> = (0..c - 1).map(|k| format!("class_{k}")).collect();
    v.push("background".into());
    v
}

fn all_configs() -> Vec<PaintConfig> {
    let mut out = Vec::new();
    for overlap in [
        OverlapStrategy::Random { seed: 17 },
        OverlapStrategy::Entropy,
        OverlapStrategy::Margin,
    ] {
        for oov in [OovPolicy::Drop, OovPolicy::Background, OovPolicy::Zeros] {
            for snapping in [Snapping::Floor, Snapping::RoundHalfUp] {
                out.push(PaintConfig { overlap, oov, snapping });
            }
        }
    }
    out
}

fn same_bits(a: &PaintedCloud, b: &PaintedCloud) -> bool {
    a.source() == b.source() && encode_point_cloud(a.cloud()) == encode_point_cloud(b.cloud())
}

fn dimension_contract() -> Outcome {
    let mut seen = Vec::new();
    for (dims, classes, cameras, want) in [(4, 4, 1, 8), (7, 11, 6, 18)] {
        let scene = synth_scene(&SceneSpec {
            dims,
            class_names: class_names(classes),
            num_cameras: cameras,
            num_points: 1000,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let out = paint(&scene.cloud, &scene.views(), &PaintConfig::default()).map_err(|e| e.to_string())?;
        ensure(out.dims() == want, || format!("D={dims} C={classes}: got {}", out.dims()))?;
        seen.push(format!("{dims}->{}", out.dims()));
    }
    Ok(seen.join(", "))
}

fn oracle_equivalence() -> Outcome {
    let configs = all_configs();
    let mut runs = 0;
    let mut points = 0;
    for seed in 1..=50u64 {
        let spec = SceneSpec {
            seed,
            num_points: 1000 + (seed as usize * 1871) % 9001,
            num_cameras: 1 + (seed as usize % 6),
            num_boxes: 2 + (seed as usize % 4),
            ..Default::default()
        };
        let scene = synth_scene(&spec).map_err(|e| e.to_string())?;
        let views = scene.views();
        for cfg in &configs {
            let got = paint(&scene.cloud, &views, cfg).map_err(|e| e.to_string())?;
            let want = reference_paint(&scene.cloud, &views, cfg).map_err(|e| e.to_string())?;
            ensure(same_bits(&got, &want), || format!("seed {seed} {cfg:?} differs from oracle"))?;
            runs += 1;
        }
        points += scene.cloud.len();
    }
    Ok(format!("{runs} paints over 50 scenes ({points} points), bit-identical"))
}

fn thread_determinism() -> Outcome {
    for seed in 0..10u64 {
        let scene = synth_scene(&SceneSpec {
            seed: 1000 + seed,
            num_points: 10_000,
            num_cameras: 6,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let views = scene.views();
        let cfg = PaintConfig {
            overlap: OverlapStrategy::Random { seed },
            oov: OovPolicy::Background,
            snapping: Snapping::Floor,
        };
        let mut base: Option<Vec<u8>> = None;
        for threads in [1, 2, 4, 8] {
            let (out, _) = paint_with_threads(&scene.cloud, &views, &cfg, threads).map_err(|e| e.to_string())?;
            let bytes = encode_point_cloud(out.cloud());
            match &base {
                None => base = Some(bytes),
                Some(b) => ensure(*b == bytes, || format!("scene {seed}: {threads} threads differ"))?,
            }
        }
    }
    Ok("10 scenes x {1,2,4,8} threads byte-identical".into())
}

fn latency_arithmetic() -> Outcome {
    let base = PipelineConfig {
        t_proj: 0.15,
        t_enc_delta: 0.6,
        ..Default::default()
    };
    let cons = simulate_pipeline(&PipelineConfig { policy: MatchPolicy::Consecutive, ..base }, 10.0)
        .map_err(|e| e.to_string())?;
    let conc = simulate_pipeline(&PipelineConfig { policy: MatchPolicy::Concurrent, ..base }, 10.0)
        .map_err(|e| e.to_string())?;
    ensure((cons.added_latency - 0.75).abs() <= 1e-9, || {
        format!("added latency {} ms", cons.added_latency)
    })?;
    let mut compared = 0;
    for (a, b) in cons.frames.iter().zip(&conc.frames) {
        if let (Some(x), Some(y)) = (a.latency, b.latency) {
            ensure(x <= y, || format!("frame at {} ms: {x} > {y}", a.lidar_capture))?;
            compared += 1;
        }
    }
    Ok(format!(
        "added {:.12} ms; consecutive <= concurrent on {compared} frames (mean {:.2} vs {:.2} ms)",
        cons.added_latency, cons.mean_latency, conc.mean_latency
    ))
}

fn zero_ego_motion() -> Outcome {
    let scene = synth_scene(&SceneSpec {
        seed: 5,
        num_points: 8000,
        num_cameras: 6,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let ego_from_lidar = RigidTransform::translation(0.94, 0.0, 1.73).compose(&RigidTransform::rotation_z(0.012));
    let lidar_from_ego = ego_from_lidar.invert();
    let world = RigidTransform::translation(311.2, -42.5, 0.3).compose(&RigidTransform::rotation_z(1.1));
    let at_lidar = EgoPose { time: 1000.0, world_from_ego: world };
    let at_prev_image = EgoPose { time: 1000.0 - 1000.0 / 12.0, world_from_ego: world };
    let cfg = PaintConfig {
        overlap: OverlapStrategy::Entropy,
        oov: OovPolicy::Background,
        snapping: Snapping::Floor,
    };

    let current = scene.views();
    let cam_from_ego: Vec<RigidTransform> = current
        .iter()
        .map(|v| v.lidar_to_camera().compose(&lidar_from_ego))
        .collect();
    // previous frame's maps, equal in content to the current ones
    let previous: Vec<ScoreMap> = scene.score_maps.to_vec();

    // transform chain: concurrent uses the static extrinsic, consecutive
    // inserts the ego motion between capture times
    let concurrent: Vec<CameraView> = current
        .iter()
        .zip(&cam_from_ego)
        .map(|(v, c)| v.with_lidar_to_camera(c.compose(&ego_from_lidar)))
        .collect();
    let motion = ego_motion(&at_lidar, &at_prev_image);
    let consecutive: Vec<CameraView> = current
        .iter()
        .zip(&cam_from_ego)
        .zip(&previous)
        .map(|((v, c), prev)| {
            CameraView::new(*v.camera(), build_lidar_to_camera(c, &motion, &ego_from_lidar), prev.clone())
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let a = paint(&scene.cloud, &concurrent, &cfg).map_err(|e| e.to_string())?;
    let b = paint(&scene.cloud, &consecutive, &cfg).map_err(|e| e.to_string())?;
    ensure(same_bits(&a, &b), || "transform-chain paths differ".into())?;

    // cloud path: compensate the sweep into the ego frame, then paint
    let ego_views: Vec<CameraView> = current
        .iter()
        .zip(&cam_from_ego)
        .zip(&previous)
        .map(|((v, c), prev)| CameraView::new(*v.camera(), *c, prev.clone()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let compensated = ego_compensate(&scene.cloud, &at_lidar, &at_prev_image, &ego_from_lidar);
    let static_ego = ego_from_lidar.apply(&scene.cloud);
    ensure(compensated == static_ego, || "compensation is not the static transform".into())?;
    let c = paint(&compensated, &ego_views, &cfg).map_err(|e| e.to_string())?;
    let d = paint(&static_ego, &ego_views, &cfg).map_err(|e| e.to_string())?;
    ensure(same_bits(&c, &d), || "cloud paths differ".into())?;
    Ok(format!("{} points x 6 cameras, both paths bit-identical", scene.cloud.len()))
}

fn one_hot_cloud(points: &[([f64; 3], usize)], c: usize) -> Result<PaintedCloud, Error> {
    let mut data = Vec::new();
    for &(p, class) in points {
        data.extend(p.iter().map(|&x| x as f32));
        data.push(0.0);
        data.extend((0..c).map(|k| if k == class { 1.0 } else { 0.0 }));
    }
    let names: Vec<String> = ["car", "bicycle", "rider", "cyclist", "background"].map(String::from).to_vec();
    PaintedCloud::from_cloud(PointCloud::new(4 + c, data)?, names)
}

fn remap_boundary() -> Outcome {
    let rule = RemapRule {
        source_class: 1,
        anchor_class: 2,
        target_class: 3,
        fallback_class: 4,
        radius: 1.0,
    };
    let argmax_of = |cloud: &PaintedCloud, i: usize| {
        let s = cloud.scores(i);
        (0..s.len()).fold(0, |b, k| if s[k] > s[b] { k } else { b })
    };
    let cloud = one_hot_cloud(
        &[([0.0; 3], 2), ([0.5, 0.0, 0.0], 1), ([1.0, 0.0, 0.0], 1), ([1.5, 0.0, 0.0], 1)],
        5,
    )
    .map_err(|e| e.to_string())?;
    let (out, _) = remap_cyclist(&cloud, &rule).map_err(|e| e.to_string())?;
    let got: Vec<usize> = (1..4).map(|i| argmax_of(&out, i)).collect();
    ensure(got == [3, 3, 4], || format!("bikes at 0.5/1.0/1.5 m -> {got:?}"))?;

    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<([f64; 3], usize)> = (0..2000)
            .map(|_| {
                (
                    [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-1.0..1.0)],
                    rng.random_range(0..5),
                )
            })
            .collect();
        let cloud = one_hot_cloud(&pts, 5).map_err(|e| e.to_string())?;
        let (once, _) = remap_cyclist(&cloud, &rule).map_err(|e| e.to_string())?;
        let (twice, _) = remap_cyclist(&once, &rule).map_err(|e| e.to_string())?;
        ensure(once == twice, || format!("scene {seed} not idempotent"))?;
    }
    Ok("cyclist/cyclist/background; idempotent on 20 scenes".into())
}

fn score_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (h, w, c) = (1000, 1000, 4);
    let mut data = Vec::with_capacity(h * w * c);
    for _ in 0..h * w {
        let raw: [f32; 4] = std::array::from_fn(|_| rng.random_range(0.0f32..1.0));
        let s: f32 = raw.iter().sum();
        data.extend(raw.iter().map(|v| v / s));
    }
    let map = ScoreMap::new(h, w, ScoreMode::Scores, data, class_names(c)).map_err(|e| e.to_string())?;
    let once = map.to_one_hot();
    let twice = once.to_one_hot();
    ensure(
        once.as_slice().iter().zip(twice.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()),
        || "to_one_hot is not idempotent".into(),
    )?;
    ensure(once.argmax_labels() == map.argmax_labels(), || "argmax changed".into())?;

    let e = entropy(&[0.25; 4]);
    ensure((e - 4f64.ln()).abs() <= 1e-9, || format!("entropy {e}"))?;

    let truth = LabelMap::new(2, 2, vec![0, 0, 1, 1]).map_err(|e| e.to_string())?;
    let pred = LabelMap::new(2, 2, vec![0, 1, 1, 1]).map_err(|e| e.to_string())?;
    let m = miou(&pred, &truth, 2).map_err(|e| e.to_string())?;
    ensure(m == 7.0 / 12.0, || format!("mIoU {m:?}"))?;
    Ok(format!("10^6 pixels; H(uniform) = {e:.12}; mIoU = {m}"))
}

fn format_round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..100 {
        let dims = rng.random_range(3..9);
        let n = rng.random_range(0..500);
        let values: Vec<f32> = (0..n * dims).map(|_| rng.random_range(-300.0f32..300.0)).collect();
        let cloud = PointCloud::new(dims, values).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("c{k}.bin"));
        write_point_cloud(&cloud, &path).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let back = read_point_cloud(&path, dims).map_err(|e| e.to_string())?;
        ensure(encode_point_cloud(&back) == bytes && back == cloud, || format!("cloud {k}"))?;

        let (h, w, c) = (rng.random_range(1..20), rng.random_range(1..20), rng.random_range(2..12));
        let mut data = Vec::new();
        for _ in 0..h * w {
            let raw: Vec<f32> = (0..c).map(|_| rng.random_range(0.001f32..1.0)).collect();
            let s: f32 = raw.iter().sum();
            data.extend(raw.iter().map(|v| v / s));
        }
        let mut map = ScoreMap::new(h, w, ScoreMode::Scores, data, class_names(c)).map_err(|e| e.to_string())?;
        if k % 3 == 0 {
            map = map.to_one_hot();
        }
        let path = dir.path().join(format!("m{k}.ppsm"));
        write_score_map(&map, &path).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let back = read_score_map(&path).map_err(|e| e.to_string())?;
        let again = encode_score_map(&back).map_err(|e| e.to_string())?;
        ensure(again == bytes && back == map, || format!("ppsm {k}"))?;
    }

    let bytes = encode_score_map(&ScoreMap::uniform(4, 5, class_names(3)).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"PPSN");
    let magic = decode_score_map(&bad).map_err(|e| e.to_string()).unwrap_err();
    ensure(magic.contains("magic"), || format!("corrupted magic: {magic}"))?;
    for cut in [0, 3, 12, 23, 24, 100, bytes.len() - 1] {
        let err = decode_score_map(&bytes[..cut]).map_err(|e| e.to_string()).unwrap_err();
        ensure(err.contains("truncated"), || format!("cut at {cut}: {err}"))?;
    }
    let cloud_err = pointpaint::io::decode_point_cloud(&[0u8; 30], 4).unwrap_err().to_string();
    ensure(cloud_err.contains("16-byte records"), || format!("cloud truncation: {cloud_err}"))?;
    Ok("100 clouds + 100 maps bit-exact; magic/truncation rejected".into())
}

fn kitti_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/kitti")
        .join(name)
}

/// `P2 · pad4(R0_rect) · pad4(Tr_velo_to_cam) · [x y z 1]` straight from the file text.
fn oracle_projection(text: &str, x: [f64; 3]) -> Option<(f64, f64)> {
    let row = |key: &str| -> Vec<f64> {
        let line = text.lines().find(|l| l.starts_with(&format!("{key}:"))).unwrap();
        line[key.len() + 1..].split_whitespace().map(|t| t.parse().unwrap()).collect()
    };
    let (p, r, t) = (row("P2"), row("R0_rect"), row("Tr_velo_to_cam"));
    let velo = [x[0], x[1], x[2], 1.0];
    let cam0: Vec<f64> = (0..3).map(|i| (0..4).map(|k| t[4 * i + k] * velo[k]).sum()).collect();
    let mut rect: Vec<f64> = (0..3).map(|i| (0..3).map(|k| r[3 * i + k] * cam0[k]).sum()).collect();
    rect.push(1.0);
    let img: Vec<f64> = (0..3).map(|i| (0..4).map(|k| p[4 * i + k] * rect[k]).sum()).collect();
    (img[2] > 1e-6).then(|| (img[0] / img[2], img[1] / img[2]))
}

fn kitti_deviation(name: &str) -> Result<(f64, usize), String> {
    let path = kitti_fixture(name);
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let (m, t) = parse_kitti_calib(&path, 1242, 375).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..40 {
        for j in 0..25 {
            let x = [1.0 + 2.0 * i as f64, -30.0 + 2.5 * j as f64, -2.0 + 0.16 * j as f64];
            match (project(&m, &t, x), oracle_projection(&text, x)) {
                (Some(px), Some((u, v))) => {
                    worst = worst.max((px.u - u).abs()).max((px.v - v).abs());
                    checked += 1;
                }
                (None, None) => {}
                _ => return Err(format!("{name}: visibility disagrees at {x:?}")),
            }
        }
    }
    Ok((worst, checked))
}

fn kitti_calibration() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for name in ["calib_a.txt", "calib_b.txt"] {
        let (d, n) = kitti_deviation(name)?;
        ensure(d <= 1e-9, || format!("{name}: max deviation {d:e} px"))?;
        worst = worst.max(d);
        checked += n;
    }
    // six-digit rotations are snapped to SO(3); reported, not part of the bound
    let (six, _) = kitti_deviation("six_digit.txt")?;
    Ok(format!(
        "{checked} projections, max deviation {worst:.1e} px; six-digit file after snapping {six:.1e} px"
    ))
}

fn contains(b: &Box3D, p: [f64; 3]) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let d = [p[0] - b.center[0], p[1] - b.center[1], p[2] - b.center[2]];
    let x = c * d[0] + s * d[1];
    let y = -s * d[0] + c * d[1];
    x.abs() <= b.size[0] / 2.0 && y.abs() <= b.size[1] / 2.0 && d[2].abs() <= b.size[2] / 2.0
}

fn box_oracle() -> Outcome {
    let names: Vec<String> = ["car", "pedestrian", "cyclist", "background"].map(String::from).to_vec();
    let mut nested_hits = 0;
    for seed in 1..=20u64 {
        let scene = synth_scene(&SceneSpec {
            seed,
            num_points: 5000,
            num_boxes: 4,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let mut boxes = scene.boxes.clone();
        for b in scene.boxes.iter().take(2) {
            let inner = Box3D::new(
                b.center,
                [b.size[0] * 0.5, b.size[1] * 0.5, b.size[2] * 0.5],
                b.yaw + 0.4,
                (b.class_index + 1) % 3,
            )
            .map_err(|e| e.to_string())?;
            boxes.push(inner);
        }
        let out = paint_from_boxes(&scene.cloud, &boxes, &names).map_err(|e| e.to_string())?;
        for i in 0..scene.cloud.len() {
            let p = scene.cloud.xyz(i);
            let mut best: Option<usize> = None;
            for (k, b) in boxes.iter().enumerate() {
                if contains(b, p) && best.is_none_or(|j| b.volume() < boxes[j].volume()) {
                    best = Some(k);
                }
            }
            let class = best.map_or(3, |k| boxes[k].class_index);
            if best.is_some_and(|k| k >= scene.boxes.len()) {
                nested_hits += 1;
            }
            let want: Vec<f32> = (0..4).map(|k| if k == class { 1.0 } else { 0.0 }).collect();
            ensure(out.scores(i) == want.as_slice(), || format!("seed {seed} point {i}"))?;
        }
    }
    ensure(nested_hits > 0, || "no point landed in a nested box".into())?;
    Ok(format!("20 scenes, {nested_hits} points resolved to the inner box"))
}

fn performance_smoke() -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let args = [
        "pointpaint", "--emit", "kv", "bench", "--points", "100000", "--cameras", "6",
        "--threads", "1", "--repeat", "10",
    ];
    let code = pointpaint_cli::run(args, &mut out, &mut err);
    let text = String::from_utf8_lossy(&out).into_owned();
    let get = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap_or("?")
            .to_owned()
    };
    ensure(code == 0 && get("identical") == "true", || {
        format!("bench exit {code}: {}", String::from_utf8_lossy(&err))
    })?;
    let median: f64 = get("median_ms").parse().unwrap_or(f64::NAN);
    let verdict = if median < 50.0 { "within" } else { "over" };
    Ok(format!(
        "1 vs 4 threads identical; median {median:.2} ms/frame, p95 {} ms ({verdict} the 50 ms soft target)",
        get("p95_ms")
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    hard_budget: bool,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "dimension contract", budget: Duration::from_secs(1), hard_budget: true, run: dimension_contract },
        Criterion { id: 2, name: "oracle equivalence", budget: Duration::from_secs(60), hard_budget: true, run: oracle_equivalence },
        Criterion { id: 3, name: "determinism under parallelism", budget: Duration::from_secs(30), hard_budget: true, run: thread_determinism },
        Criterion { id: 4, name: "latency arithmetic", budget: Duration::from_secs(1), hard_budget: true, run: latency_arithmetic },
        Criterion { id: 5, name: "zero-ego-motion equivalence", budget: Duration::from_secs(5), hard_budget: true, run: zero_ego_motion },
        Criterion { id: 6, name: "remap boundary", budget: Duration::from_secs(5), hard_budget: true, run: remap_boundary },
        Criterion { id: 7, name: "score-map algebra", budget: Duration::from_secs(10), hard_budget: true, run: score_algebra },
        Criterion { id: 8, name: "format round-trips", budget: Duration::from_secs(10), hard_budget: true, run: format_round_trips },
        Criterion { id: 9, name: "KITTI calibration", budget: Duration::from_secs(1), hard_budget: true, run: kitti_calibration },
        Criterion { id: 10, name: "oracle painter", budget: Duration::from_secs(10), hard_budget: true, run: box_oracle },
        Criterion { id: 11, name: "performance smoke", budget: Duration::from_secs(120), hard_budget: false, run: performance_smoke },
    ];

    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let over = c.hard_budget && elapsed > c.budget;
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {:?} budget; {d}", c.budget)),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!(
            "criterion {:>2}  {status}  {:<30} {:>7.2}s  {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
