use bandsim_core::scene::{
    check_flow_bound, default_bin_span, make_trajectory, min_obstacle_distance, render_frames,
    render_pose, sample_forest, student_distance_map, teacher_distance_map, BearingInterval,
    CameraPose, CameraTrajectory, Cylinder, ForestScene, PathSpec, PoissonConfig, RenderConfig,
    SpeedProfile, WorldBox, SKY_INTENSITY,
};
use nalgebra::Vector3;
use ndarray::Array2;
use proptest::prelude::*;

fn tree_ahead() -> ForestScene {
    ForestScene::empty(WorldBox::default()).with_cylinders(vec![Cylinder {
        x: 30.0,
        y: 50.0,
        r: 0.5,
        albedo: 0.6,
    }])
}

fn level_pose() -> CameraPose {
    CameraPose::new([20.0, 50.0, 2.0], 0.0, 0.0)
}

#[test]
fn empty_scene_splits_into_sky_and_ground() {
    let scene = ForestScene::empty(WorldBox::default());
    let cfg = RenderConfig::default();
    let (intensity, depth) = render_pose(&scene, &level_pose(), &cfg);
    let (w, h) = (cfg.width, cfg.height);
    for v in 0..h {
        let row_i = &intensity[v * w..(v + 1) * w];
        let row_d = &depth[v * w..(v + 1) * w];
        if v < h / 2 {
            assert!(row_i.iter().all(|&i| i == SKY_INTENSITY as f32), "row {v}");
            assert!(row_d.iter().all(|&d| d == cfg.max_range));
        } else {
            assert!(row_i.iter().all(|&i| i < SKY_INTENSITY as f32 * 0.5), "row {v}");
            assert!(row_d.iter().all(|&d| (d - row_d[0]).abs() < 1e-9), "row {v}");
        }
    }
}

#[test]
fn silhouette_matches_projected_width() {
    let cfg = RenderConfig {
        width: 320,
        height: 32,
        ..RenderConfig::default()
    };
    let (_, depth) = render_pose(&tree_ahead(), &level_pose(), &cfg);
    let v = cfg.height / 2;
    let occupied = depth[v * cfg.width..(v + 1) * cfg.width]
        .iter()
        .filter(|&&d| d < 10.0)
        .count() as f64;
    let half_angle = (0.5f64 / 10.0).asin();
    let expected = 2.0 * cfg.focal() * half_angle.tan();
    assert!((occupied - expected).abs() <= 1.0, "{occupied} vs {expected}");
}

#[test]
fn rendered_depth_lies_on_a_surface() {
    let scene = sample_forest(&PoissonConfig::default().with_delta(0.2), 9).unwrap();
    let cfg = RenderConfig {
        width: 48,
        height: 36,
        ..RenderConfig::default()
    };
    let traj = make_trajectory(
        &PathSpec::Straight {
            start: [0.5, 50.0, 1.5],
            yaw: 0.3,
            length: 2.0,
        },
        SpeedProfile::Constant { speed: 1.0 },
        2.0,
        None,
    )
    .unwrap();
    let (_, depth) = render_frames(&scene, &traj, &cfg).unwrap();
    let mut checked = 0;
    for (k, pose) in traj.poses().iter().enumerate() {
        let rot = pose.rotation();
        for v in 0..cfg.height {
            for u in 0..cfg.width {
                let d = depth.depths[[k, v, u]];
                assert!(d > 0.0 && d <= cfg.max_range);
                if d >= cfg.max_range {
                    continue;
                }
                let p = pose.origin() + rot * cfg.body_ray(u, v) * d;
                let on_ground = p.z.abs() < 1e-6;
                let on_tree = scene
                    .cylinders
                    .iter()
                    .any(|c| ((p.x - c.x).hypot(p.y - c.y) - c.r).abs() < 1e-6);
                assert!(on_ground || on_tree, "pixel ({u}, {v}) frame {k} at {p:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn static_camera_renders_identical_frames() {
    let scene = sample_forest(&PoissonConfig::default(), 2).unwrap();
    let pose = CameraPose::new([0.0, 50.0, 2.0], 0.1, 0.0);
    let traj = CameraTrajectory::new(vec![pose, CameraPose { time: 0.01, ..pose }], 0.01).unwrap();
    let cfg = RenderConfig::default();
    let (frames, depth) = render_frames(&scene, &traj, &cfg).unwrap();
    assert_eq!(frames.frame(0), frames.frame(1));
    assert_eq!(depth.frame(0), depth.frame(1));
    assert!(check_flow_bound(&depth, &traj, &cfg).unwrap() < 1e-9);
}

#[test]
fn distance_to_single_tree() {
    let d = min_obstacle_distance(&tree_ahead(), [20.0, 50.0], BearingInterval::centered(0.0, default_bin_span()), 50.0);
    assert!((d - 9.5).abs() < 1e-12);
}

#[test]
fn teacher_map_ignores_pitch_and_roll() {
    let scene = sample_forest(&PoissonConfig::default().with_delta(0.05), 21).unwrap();
    let base = CameraPose::new([5.0, 48.0, 2.0], 0.2, 0.0);
    let reference = teacher_distance_map(&scene, &base, 10, default_bin_span(), 50.0).unwrap();
    assert!(reference.bins.iter().any(|&b| b < 50.0));
    for deg in [-30.0f64, 30.0] {
        for (pitch, roll) in [(deg.to_radians(), 0.0), (0.0, deg.to_radians()), (deg.to_radians(), deg.to_radians())] {
            let tilted = base.with_attitude(pitch, roll);
            assert_eq!(teacher_distance_map(&scene, &tilted, 10, default_bin_span(), 50.0).unwrap(), reference);
        }
    }
}

#[test]
fn teacher_map_shifts_with_yaw() {
    let span = default_bin_span();
    for seed in 0..5 {
        let scene = sample_forest(&PoissonConfig::default().with_delta(0.08), seed).unwrap();
        let pose = CameraPose::new([30.0, 50.0, 2.0], 0.1, 0.0);
        let turned = CameraPose::new([30.0, 50.0, 2.0], 0.1 + span, 0.0);
        let a = teacher_distance_map(&scene, &pose, 10, span, 50.0).unwrap();
        let b = teacher_distance_map(&scene, &turned, 10, span, 50.0).unwrap();
        assert_eq!(&b.bins[1..], &a.bins[..9], "seed {seed}");
    }
}

#[test]
fn student_single_near_column() {
    let cfg = RenderConfig::default();
    let mut depth = Array2::from_elem((cfg.height, cfg.width), 30.0);
    for v in 0..cfg.height / 3 {
        depth[[v, 20]] = 2.0;
    }
    let m = student_distance_map(depth.view(), &cfg, 10, default_bin_span()).unwrap();
    assert_eq!(m.band(0).iter().filter(|&&d| d == 2.0).count(), 1);
    assert!(m.band(1).iter().chain(m.band(2)).all(|&d| d != 2.0));
}

#[test]
fn yaw_rate_flow() {
    let cfg = RenderConfig {
        width: 64,
        height: 48,
        horizontal_fov: 20f64.to_radians(),
        ..RenderConfig::default()
    };
    let scene = ForestScene::empty(WorldBox::default());
    let omega = 1.0;
    let dt = 0.01;
    let poses = (0..3)
        .map(|k| CameraPose::new([50.0, 50.0, 2.0], omega * dt * k as f64, dt * k as f64))
        .collect();
    let traj = CameraTrajectory::new(poses, dt).unwrap();
    let (_, depth) = render_frames(&scene, &traj, &cfg).unwrap();
    let flow = check_flow_bound(&depth, &traj, &cfg).unwrap();
    let expected = omega * dt / (cfg.horizontal_fov / cfg.width as f64);
    assert!((flow / expected - 1.0).abs() < 0.1, "{flow} vs {expected}");
}

#[test]
fn doubling_frame_rate_halves_flow() {
    let scene = sample_forest(&PoissonConfig::default(), 4).unwrap();
    let cfg = RenderConfig::default();
    let flow_at = |rate: f64| {
        let traj = make_trajectory(
            &PathSpec::Straight {
                start: [0.0, 50.0, 2.0],
                yaw: 0.0,
                length: 1.0,
            },
            SpeedProfile::Constant { speed: 5.0 },
            rate,
            None,
        )
        .unwrap();
        let (_, depth) = render_frames(&scene, &traj, &cfg).unwrap();
        check_flow_bound(&depth, &traj, &cfg).unwrap()
    };
    let slow = flow_at(100.0);
    let fast = flow_at(200.0);
    assert!(slow > 0.0);
    assert!((fast / slow - 0.5).abs() < 0.05, "{fast} / {slow}");
}

#[test]
fn poisson_mean_count() {
    let cfg = PoissonConfig::default();
    let mean = (0..100)
        .map(|s| sample_forest(&cfg, s).unwrap().cylinders.len() as f64)
        .sum::<f64>()
        / 100.0;
    assert!((mean / 400.0 - 1.0).abs() < 0.05, "{mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forests_respect_their_config(
        seed in any::<u64>(),
        delta in 0.0f64..0.1,
        r_min in 0.05f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        let cfg = PoissonConfig { delta, r_min, r_max: r_min + extra, ..PoissonConfig::default() };
        let scene = sample_forest(&cfg, seed).unwrap();
        for c in &scene.cylinders {
            prop_assert!(c.r >= cfg.r_min && c.r <= cfg.r_max);
            prop_assert!(scene.world_box.contains_xy(c.x, c.y));
            prop_assert!(c.surface_distance(cfg.start[0], cfg.start[1]) >= cfg.min_clearance);
        }
        prop_assert_eq!(sample_forest(&cfg, seed).unwrap(), scene);
    }

    #[test]
    fn student_map_is_monotone(
        seed_vals in prop::collection::vec(0.5f64..60.0, 48 * 64),
        v in 0usize..48,
        u in 0usize..64,
        smaller in 0.1f64..1.0,
    ) {
        let cfg = RenderConfig::default();
        let depth = Array2::from_shape_vec((48, 64), seed_vals).unwrap();
        let before = student_distance_map(depth.view(), &cfg, 10, default_bin_span()).unwrap();
        let mut changed = depth.clone();
        changed[[v, u]] *= smaller;
        let after = student_distance_map(changed.view(), &cfg, 10, default_bin_span()).unwrap();
        prop_assert!(before.bands.iter().zip(&after.bands).all(|(b, a)| a <= b));
        prop_assert!(before.bands.iter().all(|&d| d > 0.0 && d <= cfg.max_range));
    }
}

#[test]
fn ray_of_center_pixel_points_along_yaw() {
    let cfg = RenderConfig {
        width: 3,
        height: 3,
        ..RenderConfig::default()
    };
    let pose = CameraPose::new([0.0, 0.0, 1.0], 0.5, 0.0);
    let d = pose.rotation() * cfg.body_ray(1, 1);
    let expect = Vector3::new(0.5f64.cos(), 0.5f64.sin(), 0.0);
    assert!((d - expect).norm() < 1e-12);
}
