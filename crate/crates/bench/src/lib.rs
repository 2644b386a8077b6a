//! Scenes shared by the criterion benches.

use pointpaint::{synth_scene, CameraView, PaintedCloud, PointCloud, SceneSpec};

/// A synthetic cloud with `cameras` ring cameras at 640×360.
pub fn bench_scene(points: usize, cameras: usize) -> (PointCloud, Vec<CameraView>) {
    let scene = synth_scene(&SceneSpec {
        seed: 11,
        num_points: points,
        num_cameras: cameras,
        num_boxes: 8,
        image_width: 640,
        image_height: 360,
        ..Default::default()
    })
    .expect("bench scene spec is valid");
    let views = scene.views();
    (scene.cloud, views)
}

/// A painted cloud where about a fifth of the points are bikes or riders.
pub fn remap_scene(points: usize) -> PaintedCloud {
    let names: Vec<String> = ["car", "bicycle", "rider", "cyclist", "background"]
        .map(String::from)
        .to_vec();
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut data = Vec::with_capacity(points * 9);
    for _ in 0..points {
        let class = match next() {
            r if r < 0.1 => 1,
            r if r < 0.2 => 2,
            r if r < 0.4 => 0,
            _ => 4,
        };
        data.extend([(next() * 80.0 - 40.0) as f32, (next() * 80.0 - 40.0) as f32, next() as f32, 0.0]);
        data.extend((0..5).map(|k| if k == class { 1.0f32 } else { 0.0 }));
    }
    let cloud = PointCloud::new(9, data).expect("finite coordinates");
    PaintedCloud::from_cloud(cloud, names).expect("9 columns hold 4 + 5")
}
