#![allow(clippy::needless_range_loop)]

use nalgebra::{Matrix3x4, Matrix4};
use pointpaint::geom::{apply, build_lidar_to_camera, compose, invert, project, DEPTH_EPSILON};
use pointpaint::{CameraMatrix, PointCloud, RigidTransform};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_rigid() -> impl Strategy<Value = RigidTransform> {
    (
        -3.2..3.2f64,
        -3.2..3.2f64,
        -3.2..3.2f64,
        -20.0..20.0f64,
        -20.0..20.0f64,
        -20.0..20.0f64,
    )
        .prop_map(|(a, b, c, x, y, z)| {
            RigidTransform::translation(x, y, z)
                .compose(&RigidTransform::rotation_z(a))
                .compose(&RigidTransform::rotation_y(b))
                .compose(&RigidTransform::rotation_x(c))
        })
}

fn arb_point() -> impl Strategy<Value = [f64; 3]> {
    [-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64]
}

fn max_diff(a: &RigidTransform, b: &RigidTransform) -> f64 {
    (a.matrix() - b.matrix()).abs().max()
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

proptest! {
    #[test]
    fn composition_is_associative(a in arb_rigid(), b in arb_rigid(), c in arb_rigid()) {
        let left = compose(&a, &compose(&b, &c));
        let right = compose(&compose(&a, &b), &c);
        prop_assert!(max_diff(&left, &right) < 1e-9);
    }

    #[test]
    fn invert_is_an_involution(t in arb_rigid()) {
        prop_assert!(max_diff(&invert(&invert(&t)), &t) < 1e-12);
        let id = compose(&t, &invert(&t));
        prop_assert!((id.matrix() - Matrix4::identity()).abs().max() < 1e-9);
    }

    #[test]
    fn projection_commutes_with_transform(t in arb_rigid(), p in arb_point()) {
        let m = CameraMatrix::pinhole(700.0, 600.0, 180.0, 1242, 375).unwrap();
        let direct = project(&m, &t, p);
        let staged = project(&m, &RigidTransform::identity(), t.transform_point(p));
        prop_assert_eq!(direct, staged);
        if let Some(px) = direct {
            prop_assert!(px.depth > DEPTH_EPSILON);
        }
    }

    #[test]
    fn transforms_preserve_distances(t in arb_rigid(), a in arb_point(), b in arb_point()) {
        let d0 = dist(a, b);
        let d1 = dist(t.transform_point(a), t.transform_point(b));
        prop_assert!((d0 - d1).abs() < 1e-9);
    }

    #[test]
    fn composed_transforms_stay_rigid(a in arb_rigid(), b in arb_rigid(), c in arb_rigid()) {
        let chain = build_lidar_to_camera(&a, &b, &c);
        prop_assert!(RigidTransform::from_matrix(*chain.matrix()).is_ok());
    }
}

#[test]
fn chain_matches_direct_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mut t = || {
            RigidTransform::translation(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 1.0)
                .compose(&RigidTransform::rotation_z(rng.random_range(-3.0..3.0)))
                .compose(&RigidTransform::rotation_x(rng.random_range(-3.0..3.0)))
        };
        let (a, b, c) = (t(), t(), t());
        // plain triple loop product, left to right
        let mut ab = [[0.0f64; 4]; 4];
        let mut abc = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                ab[i][j] = (0..4).map(|k| a.matrix()[(i, k)] * b.matrix()[(k, j)]).sum();
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                abc[i][j] = (0..4).map(|k| ab[i][k] * c.matrix()[(k, j)]).sum();
            }
        }
        let chain = build_lidar_to_camera(&a, &b, &c);
        for i in 0..4 {
            for j in 0..4 {
                assert!((chain.matrix()[(i, j)] - abc[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn apply_matches_per_point_multiply() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f32> = (0..1000 * 5).map(|_| rng.random_range(-80.0f32..80.0)).collect();
    let cloud = PointCloud::new(5, data).unwrap();
    let t = RigidTransform::rotation_z(0.7)
        .compose(&RigidTransform::rotation_x(-0.2))
        .compose(&RigidTransform::translation(1.5, -0.25, 1.73));
    let out = apply(&t, &cloud);
    let m = t.matrix();
    for (src, dst) in cloud.points().zip(out.points()) {
        let h = [src[0] as f64, src[1] as f64, src[2] as f64, 1.0];
        for r in 0..3 {
            let mut acc = m[(r, 0)] * h[0];
            for c in 1..4 {
                acc += m[(r, c)] * h[c];
            }
            assert_eq!(dst[r], acc as f32);
        }
        assert_eq!(&dst[3..], &src[3..]);
    }
    assert_eq!(apply(&RigidTransform::identity(), &cloud), cloud);
}

#[test]
fn general_camera_matrix_projection() {
    // KITTI-style P2 with a baseline term in the last column
    let m = CameraMatrix::new(
        Matrix3x4::new(721.5, 0.0, 609.6, 44.86, 0.0, 721.5, 172.9, 0.2164, 0.0, 0.0, 1.0, 0.002746),
        1242,
        375,
    )
    .unwrap();
    let p = [2.0, -1.0, 15.0];
    let px = project(&m, &RigidTransform::identity(), p).unwrap();
    let w = 15.0 + 0.002746;
    assert!((px.u - (721.5 * 2.0 + 609.6 * 15.0 + 44.86) / w).abs() < 1e-9);
    assert!((px.v - (-721.5 + 172.9 * 15.0 + 0.2164) / w).abs() < 1e-9);
    assert_eq!(px.depth, w);
}
