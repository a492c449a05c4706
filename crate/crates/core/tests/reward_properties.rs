use bandsim_core::reward::{
    compute_reward, evaluate_episode, progress_reward, ActionCommand, CommandInput, EpisodeConfig,
    Obstacle, QuadState, RewardWeights,
};
use bandsim_core::scene::{make_trajectory, sample_forest, ForestScene, PathSpec, PoissonConfig, SpeedProfile};
use nalgebra::Vector3;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn action() -> impl Strategy<Value = ActionCommand> {
    (-1.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0)
        .prop_map(|(t, a, b, c)| ActionCommand::new(t, Vector3::new(a, b, c)).unwrap())
}

fn obstacles() -> impl Strategy<Value = Vec<Obstacle>> {
    prop::collection::vec(
        (0.0f64..50.0, -10.0f64..10.0).prop_map(|(distance, bearing)| Obstacle { distance, bearing }),
        0..8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn components_stay_in_range(
        vel in vec3(20.0),
        cmd in vec3(10.0).prop_filter("nonzero", |c| c.norm() > 1e-3),
        yaw in -10.0f64..10.0,
        a in action(),
        prev in action(),
        obs in obstacles(),
        crashed in any::<bool>(),
    ) {
        let state = QuadState::new(Vector3::zeros(), vel, yaw);
        let cmd = CommandInput::new(cmd).unwrap();
        let r = compute_reward(&state, &cmd, &a, &prev, &obs, crashed, &RewardWeights::default()).unwrap();
        prop_assert!(r.prog <= 0.25 && r.prog >= -0.25 - vel.z.abs());
        prop_assert!(r.act <= 0.0 && r.act >= -4.0);
        prop_assert!(r.br <= 0.0 && r.br >= -3f64.sqrt() - 1e-12);
        prop_assert!(r.perc.abs() <= 1.0 + 1e-12);
        prop_assert!(r.obs_dist <= 0.0 && r.obs_dist >= -1.0);
        prop_assert!(r.crash <= 0.0);
        prop_assert_eq!(r.crash == 0.0, !crashed);
        let sum = r.prog + r.act + r.br + r.perc + r.obs_dist + r.crash;
        prop_assert!((r.total - sum).abs() <= 1e-9 * (1.0 + sum.abs()));
    }

    #[test]
    fn weights_scale_the_total(
        vel in vec3(10.0),
        yaw in -4.0f64..4.0,
        a in action(),
        prev in action(),
        obs in obstacles(),
        crashed in any::<bool>(),
        k in 0.0f64..5.0,
    ) {
        let state = QuadState::new(Vector3::zeros(), vel, yaw);
        let cmd = CommandInput::new(Vector3::new(3.0, 1.0, 0.0)).unwrap();
        let w = RewardWeights { prog: 0.7, act: 0.2, br: 0.1, perc: 0.5, obs_dist: 1.5, crash: 2.0 };
        let base = compute_reward(&state, &cmd, &a, &prev, &obs, crashed, &w).unwrap();
        let scaled = compute_reward(&state, &cmd, &a, &prev, &obs, crashed, &w.scaled(k)).unwrap();
        prop_assert!((scaled.total - k * base.total).abs() <= 1e-9 * (1.0 + (k * base.total).abs()));
    }

    #[test]
    fn obstacles_only_lower_the_reward(
        yaw in -4.0f64..4.0,
        obs in obstacles(),
    ) {
        let state = QuadState::new(Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0), yaw);
        let cmd = CommandInput::new(Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let a = ActionCommand::new(0.0, Vector3::zeros()).unwrap();
        let w = RewardWeights::default();
        let mut more = obs.clone();
        more.push(Obstacle { distance: 0.0, bearing: yaw });
        let base = compute_reward(&state, &cmd, &a, &a, &obs, false, &w).unwrap();
        let near = compute_reward(&state, &cmd, &a, &a, &more, false, &w).unwrap();
        prop_assert!(near.obs_dist <= base.obs_dist);
    }
}

#[test]
fn progress_peaks_for_parallel_velocity() {
    for heading in [0.0f64, 0.7, 2.5, -1.9] {
        let c = Vector3::new(heading.cos(), heading.sin(), 0.0) * 6.0;
        let cmd = CommandInput::new(c).unwrap();
        for speed in [0.5, 2.0, 4.0, 6.0] {
            let best = progress_reward(&(c.normalize() * speed), &cmd);
            for i in 0..720 {
                let theta = i as f64 * std::f64::consts::TAU / 720.0;
                let v = Vector3::new(theta.cos(), theta.sin(), 0.0) * speed;
                assert!(progress_reward(&v, &cmd) <= best + 1e-12, "heading {heading} theta {theta} speed {speed}");
            }
        }
        let best = progress_reward(&c, &cmd);
        for vz in [-1.0, -0.1, 0.1, 1.0] {
            assert!(progress_reward(&(c + Vector3::new(0.0, 0.0, vz)), &cmd) < best);
        }
    }
}

#[test]
fn removing_a_tree_never_breaks_a_success() {
    let cmd = CommandInput::new(Vector3::new(8.0, 0.0, 0.0)).unwrap();
    let cfg = EpisodeConfig::default();
    let mut checked = 0;
    for seed in 0..40 {
        let forest = sample_forest(&PoissonConfig::default().with_delta(0.01), seed).unwrap();
        let traj = make_trajectory(
            &PathSpec::Straight { start: [0.0, 50.0, 2.0], yaw: 0.0, length: 48.0 },
            SpeedProfile::Constant { speed: 8.0 },
            50.0,
            None,
        )
        .unwrap();
        let full = evaluate_episode(&forest, &traj, &cmd, &cfg);
        for skip in 0..forest.cylinders.len().min(10) {
            let mut trees = forest.cylinders.clone();
            trees.remove(skip);
            let thinner = ForestScene { cylinders: trees, ..forest.clone() };
            let stats = evaluate_episode(&thinner, &traj, &cmd, &cfg);
            if full.success {
                assert!(stats.success, "seed {seed} tree {skip}");
                checked += 1;
            }
            if let (Some(a), Some(b)) = (full.crash_step, stats.crash_step) {
                assert!(b >= a);
            }
        }
    }
    assert!(checked > 0);
}
