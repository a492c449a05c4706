use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{wrap_angle, ForestScene};

/// Kinematic quadrotor state used by the reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub yaw: f64,
    /// Unit heading in the horizontal plane, `(cos yaw, sin yaw, 0)`.
    pub heading: Vector3<f64>,
}

impl QuadState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, yaw: f64) -> Self {
        let yaw = wrap_angle(yaw);
        Self {
            position,
            velocity,
            yaw,
            heading: Vector3::new(yaw.cos(), yaw.sin(), 0.0),
        }
    }
}

/// Commanded flight direction; its norm is the target speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandInput {
    velocity: Vector3<f64>,
}

impl CommandInput {
    pub fn new(velocity: Vector3<f64>) -> Result<Self> {
        let n = velocity.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(
                "command velocity",
                format!("norm must be finite and > 0, got {n}"),
            ));
        }
        Ok(Self { velocity })
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.velocity
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.velocity.normalize()
    }
}

/// Collective thrust and body rates, both normalized to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionCommand {
    pub thrust: f64,
    pub body_rates: Vector3<f64>,
}

impl ActionCommand {
    pub fn new(thrust: f64, body_rates: Vector3<f64>) -> Result<Self> {
        let a = Self { thrust, body_rates };
        if a.as_vector().iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::invalid("action", "components must be finite and within [-1, 1]"));
        }
        Ok(a)
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.thrust, self.body_rates.x, self.body_rates.y, self.body_rates.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    /// Distance to the surface, meters.
    pub distance: f64,
    /// World bearing, radians.
    pub bearing: f64,
}

/// Cylinders whose centers lie within `half_fov` of `yaw` and whose surfaces
/// are within `max_range` of `position`.
pub fn obstacles_in_view(
    scene: &ForestScene,
    position: [f64; 2],
    yaw: f64,
    half_fov: f64,
    max_range: f64,
) -> Vec<Obstacle> {
    scene
        .cylinders
        .iter()
        .filter_map(|c| {
            let distance = c.surface_distance(position[0], position[1]).max(0.0);
            let bearing = wrap_angle((c.y - position[1]).atan2(c.x - position[0]));
            (distance <= max_range && wrap_angle(bearing - yaw).abs() <= half_fov).then_some(Obstacle {
                distance,
                bearing,
            })
        })
        .collect()
}

/// Weights of the six reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub prog: f64,
    pub act: f64,
    pub br: f64,
    pub perc: f64,
    pub obs_dist: f64,
    pub crash: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            prog: 1.0,
            act: 1.0,
            br: 1.0,
            perc: 1.0,
            obs_dist: 1.0,
            crash: 1.0,
        }
    }
}

impl RewardWeights {
    fn as_array(&self) -> [f64; 6] {
        [self.prog, self.act, self.br, self.perc, self.obs_dist, self.crash]
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 6] = ["prog", "act", "br", "perc", "obs_dist", "crash"];
        for (name, w) in NAMES.iter().zip(self.as_array()) {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(
                    format!("weight {name}"),
                    format!("must be finite and >= 0, got {w}"),
                ));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            prog: self.prog * k,
            act: self.act * k,
            br: self.br * k,
            perc: self.perc * k,
            obs_dist: self.obs_dist * k,
            crash: self.crash * k,
        }
    }
}

/// Unweighted reward terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub prog: f64,
    pub act: f64,
    pub br: f64,
    pub perc: f64,
    pub obs_dist: f64,
    pub crash: f64,
    pub total: f64,
}

/// Progress term: rewards speed along the command while penalizing deviation
/// from the commanded velocity and vertical speed.
pub fn progress_reward(velocity: &Vector3<f64>, cmd: &CommandInput) -> f64 {
    let c = cmd.velocity();
    let c_norm = c.norm();
    let along = velocity.dot(&c) / c_norm;
    let deviation = (velocity - c).norm();
    (along + 1.0).tanh() * (c_norm - deviation + 1.0).tanh() * 0.25 * (velocity.norm() / c_norm).min(1.0)
        - velocity.z.abs()
}

pub fn perception_reward(cmd: &CommandInput, heading: &Vector3<f64>) -> f64 {
    cmd.velocity().dot(heading) / (cmd.velocity().norm() * heading.norm())
}

/// Mean of `exp(-d - wrap(yaw - bearing)^2)`, negated; zero without obstacles.
pub fn obstacle_reward(yaw: f64, obstacles: &[Obstacle]) -> f64 {
    if obstacles.is_empty() {
        return 0.0;
    }
    let sum: f64 = obstacles
        .iter()
        .map(|o| {
            let da = wrap_angle(yaw - o.bearing);
            (-o.distance - da * da).exp()
        })
        .sum();
    -sum / obstacles.len() as f64
}

pub fn crash_reward(velocity: &Vector3<f64>, crashed: bool) -> f64 {
    if crashed {
        -velocity.norm() - 1.0
    } else {
        0.0
    }
}

pub fn compute_reward(
    state: &QuadState,
    cmd: &CommandInput,
    action: &ActionCommand,
    prev_action: &ActionCommand,
    obstacles: &[Obstacle],
    crashed: bool,
    weights: &RewardWeights,
) -> Result<RewardBreakdown> {
    weights.validate()?;
    let prog = progress_reward(&state.velocity, cmd);
    let act = -(action.as_vector() - prev_action.as_vector()).norm();
    let br = -action.body_rates.norm();
    let perc = perception_reward(cmd, &state.heading);
    let obs_dist = obstacle_reward(state.yaw, obstacles);
    let crash = crash_reward(&state.velocity, crashed);
    let terms = [prog, act, br, perc, obs_dist, crash];
    let total = terms
        .iter()
        .zip(weights.as_array())
        .map(|(r, w)| r * w)
        .sum();
    Ok(RewardBreakdown {
        prog,
        act,
        br,
        perc,
        obs_dist,
        crash,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn x_cmd() -> CommandInput {
        CommandInput::new(Vector3::new(1.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn still_actions_cost_nothing() {
        let a = ActionCommand::new(0.3, Vector3::zeros()).unwrap();
        let s = QuadState::new(Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0), 0.0);
        let r = compute_reward(&s, &x_cmd(), &a, &a, &[], false, &RewardWeights::default()).unwrap();
        assert_eq!(r.act, 0.0);
        assert_eq!(r.br, 0.0);
        assert_eq!(r.crash, 0.0);
        assert_eq!(r.obs_dist, 0.0);
    }

    #[test]
    fn matching_velocity_progress() {
        let r = progress_reward(&Vector3::new(1.0, 0.0, 0.0), &x_cmd());
        assert_abs_diff_eq!(r, 2f64.tanh().powi(2) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn vertical_speed_is_penalized() {
        let flat = progress_reward(&Vector3::new(1.0, 0.0, 0.0), &x_cmd());
        let climbing = progress_reward(&Vector3::new(1.0, 0.0, 0.5), &x_cmd());
        assert!(climbing < flat - 0.5);
    }

    #[test]
    fn obstacle_on_heading() {
        let r = obstacle_reward(0.4, &[Obstacle { distance: 1.0, bearing: 0.4 }]);
        assert_abs_diff_eq!(r, -(-1f64).exp(), epsilon = 1e-15);
        // Bearing parameterization does not matter.
        let wrapped = obstacle_reward(3.1, &[Obstacle { distance: 1.0, bearing: -3.1 }]);
        let direct = obstacle_reward(0.0, &[Obstacle { distance: 1.0, bearing: 2.0 * std::f64::consts::PI - 6.2 }]);
        assert_abs_diff_eq!(wrapped, direct, epsilon = 1e-12);
    }

    #[test]
    fn crash_penalty() {
        assert_eq!(crash_reward(&Vector3::new(0.0, 2.0, 0.0), true), -3.0);
        assert_eq!(crash_reward(&Vector3::new(0.0, 2.0, 0.0), false), 0.0);
    }

    #[test]
    fn heading_alignment() {
        assert_abs_diff_eq!(perception_reward(&x_cmd(), &Vector3::new(1.0, 0.0, 0.0)), 1.0);
        assert_abs_diff_eq!(perception_reward(&x_cmd(), &Vector3::new(-1.0, 0.0, 0.0)), -1.0);
    }

    #[test]
    fn validation() {
        assert!(CommandInput::new(Vector3::zeros()).is_err());
        assert!(ActionCommand::new(1.5, Vector3::zeros()).is_err());
        let mut w = RewardWeights::default();
        w.act = -1.0;
        let s = QuadState::new(Vector3::zeros(), Vector3::zeros(), 0.0);
        let a = ActionCommand::default();
        assert!(compute_reward(&s, &x_cmd(), &a, &a, &[], false, &w).is_err());
    }

    #[test]
    fn weights_reject_unknown_keys() {
        let w: RewardWeights = serde_json::from_str(r#"{"prog": 2.0}"#).unwrap();
        assert_eq!(w.prog, 2.0);
        assert_eq!(w.crash, 1.0);
        assert!(serde_json::from_str::<RewardWeights>(r#"{"progress": 2.0}"#).is_err());
    }
}
