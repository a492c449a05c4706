use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fmt::sig9;
use crate::scene::{wrap_angle, CameraTrajectory, ForestScene};

use super::{compute_reward, obstacles_in_view, ActionCommand, CommandInput, QuadState, RewardBreakdown, RewardWeights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    /// Collision radius of the vehicle around its position.
    pub quad_radius: f64,
    /// Distance along the command needed for a successful episode.
    pub success_threshold: f64,
    /// Heights at or below `ground + ground_margin` count as a ground crash.
    pub ground_margin: f64,
    /// Crash height; defaults to the top of the world box.
    pub ceiling: Option<f64>,
    /// Half-width of the obstacle field of view used by the reward.
    pub obstacle_half_fov: f64,
    pub obstacle_max_range: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            quad_radius: 0.15,
            success_threshold: 40.0,
            ground_margin: 0.1,
            ceiling: None,
            obstacle_half_fov: 60f64.to_radians(),
            obstacle_max_range: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashCause {
    Obstacle(usize),
    Ground,
    Ceiling,
    OutOfBounds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub success: bool,
    pub distance_along_command: f64,
    pub mean_velocity: f64,
    pub crash_step: Option<usize>,
    pub crash_cause: Option<CrashCause>,
}

/// Collision test for a single position.
pub fn crash_at(scene: &ForestScene, p: [f64; 3], cfg: &EpisodeConfig) -> Option<CrashCause> {
    let wb = &scene.world_box;
    if !wb.contains_xy(p[0], p[1]) {
        return Some(CrashCause::OutOfBounds);
    }
    if p[2] <= wb.min[2] + cfg.ground_margin {
        return Some(CrashCause::Ground);
    }
    if p[2] >= cfg.ceiling.unwrap_or(wb.max[2]) {
        return Some(CrashCause::Ceiling);
    }
    scene
        .cylinders
        .iter()
        .position(|c| c.surface_distance(p[0], p[1]) <= cfg.quad_radius)
        .map(CrashCause::Obstacle)
}

/// Walk a trajectory until the first crash and score it.
pub fn evaluate_episode(
    scene: &ForestScene,
    traj: &CameraTrajectory,
    cmd: &CommandInput,
    cfg: &EpisodeConfig,
) -> EpisodeStats {
    let poses = traj.poses();
    let crash = poses
        .iter()
        .enumerate()
        .find_map(|(k, p)| crash_at(scene, p.position, cfg).map(|c| (k, c)));
    let end = crash.map_or(poses.len() - 1, |(k, _)| k);
    let start = Vector3::from(poses[0].position);
    let stop = Vector3::from(poses[end].position);
    let distance = (stop - start).dot(&cmd.direction());
    let path: f64 = poses[..=end]
        .windows(2)
        .map(|w| (Vector3::from(w[1].position) - Vector3::from(w[0].position)).norm())
        .sum();
    let elapsed = poses[end].time - poses[0].time;
    let mean_velocity = if elapsed > 0.0 { path / elapsed } else { 0.0 };
    EpisodeStats {
        success: crash.is_none() && distance > cfg.success_threshold,
        distance_along_command: distance,
        mean_velocity,
        crash_step: crash.map(|(k, _)| k),
        crash_cause: crash.map(|(_, c)| c),
    }
}

/// Normalization for body rates recovered from a trajectory.
pub const MAX_BODY_RATE: f64 = 6.0;
const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReward {
    pub step: usize,
    pub time: f64,
    pub crashed: bool,
    pub reward: RewardBreakdown,
}

fn finite_difference(values: &[Vector3<f64>], k: usize, dt: f64) -> Vector3<f64> {
    match values.len() {
        0 | 1 => Vector3::zeros(),
        n if k + 1 < n => (values[k + 1] - values[k]) / dt,
        _ => (values[k] - values[k - 1]) / dt,
    }
}

/// Kinematic actions implied by a trajectory: thrust from the specific force
/// relative to hover, body rates from attitude differences.
pub fn kinematic_actions(traj: &CameraTrajectory) -> Vec<ActionCommand> {
    let dt = traj.frame_period();
    let poses = traj.poses();
    let pos: Vec<Vector3<f64>> = poses.iter().map(|p| Vector3::from(p.position)).collect();
    let vel: Vec<Vector3<f64>> = (0..pos.len()).map(|k| finite_difference(&pos, k, dt)).collect();
    let att: Vec<Vector3<f64>> = poses.iter().map(|p| Vector3::new(p.roll, p.pitch, p.yaw)).collect();
    (0..poses.len())
        .map(|k| {
            let acc = finite_difference(&vel, k, dt);
            let thrust = ((acc + Vector3::new(0.0, 0.0, GRAVITY)).norm() / GRAVITY - 1.0).clamp(-1.0, 1.0);
            let rates = if att.len() < 2 {
                Vector3::zeros()
            } else {
                let (a, b) = if k + 1 < att.len() { (k, k + 1) } else { (k - 1, k) };
                (att[b] - att[a]).map(wrap_angle) / dt
            };
            ActionCommand {
                thrust,
                body_rates: (rates / MAX_BODY_RATE).map(|v| v.clamp(-1.0, 1.0)),
            }
        })
        .collect()
}

/// Per-step rewards along a trajectory up to and including the first crash.
pub fn rollout_rewards(
    scene: &ForestScene,
    traj: &CameraTrajectory,
    cmd: &CommandInput,
    weights: &RewardWeights,
    cfg: &EpisodeConfig,
) -> Result<Vec<StepReward>> {
    let dt = traj.frame_period();
    let poses = traj.poses();
    let pos: Vec<Vector3<f64>> = poses.iter().map(|p| Vector3::from(p.position)).collect();
    let actions = kinematic_actions(traj);
    let mut out = Vec::with_capacity(poses.len());
    for (k, pose) in poses.iter().enumerate() {
        let velocity = finite_difference(&pos, k, dt);
        let state = QuadState::new(pos[k], velocity, pose.yaw);
        let obstacles = obstacles_in_view(
            scene,
            [pose.position[0], pose.position[1]],
            state.yaw,
            cfg.obstacle_half_fov,
            cfg.obstacle_max_range,
        );
        let crashed = crash_at(scene, pose.position, cfg).is_some();
        let prev = if k == 0 { &actions[0] } else { &actions[k - 1] };
        let reward = compute_reward(&state, cmd, &actions[k], prev, &obstacles, crashed, weights)?;
        out.push(StepReward {
            step: k,
            time: pose.time,
            crashed,
            reward,
        });
        if crashed {
            break;
        }
    }
    Ok(out)
}

pub fn rewards_csv(rows: &[StepReward]) -> String {
    let mut out = String::from("step,time,r_prog,r_act,r_br,r_perc,r_obs_dist,r_crash,r_total,crash\n");
    for r in rows {
        let b = &r.reward;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            sig9(r.time),
            sig9(b.prog),
            sig9(b.act),
            sig9(b.br),
            sig9(b.perc),
            sig9(b.obs_dist),
            sig9(b.crash),
            sig9(b.total),
            r.crashed
        );
    }
    out
}

/// One row of the episode report.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode_id: usize,
    pub seed: u64,
    pub poisson_delta: Option<f64>,
    pub stats: EpisodeStats,
}

pub fn episode_report_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode_id,seed,poisson_delta,success,distance_m,mean_velocity_mps,crash_step\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.episode_id,
            r.seed,
            r.poisson_delta.map(sig9).unwrap_or_default(),
            r.stats.success,
            sig9(r.stats.distance_along_command),
            sig9(r.stats.mean_velocity),
            r.stats.crash_step.map(|s| s.to_string()).unwrap_or_default()
        );
    }
    out
}
