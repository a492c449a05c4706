//! Navigation reward and episode evaluation.

mod episode;
mod reward;

pub use episode::{
    crash_at, episode_report_csv, evaluate_episode, kinematic_actions, rewards_csv, rollout_rewards,
    CrashCause, EpisodeConfig, EpisodeRecord, EpisodeStats, StepReward, MAX_BODY_RATE,
};
pub use reward::{
    compute_reward, crash_reward, obstacle_reward, obstacles_in_view, perception_reward,
    progress_reward, ActionCommand, CommandInput, Obstacle, QuadState, RewardBreakdown,
    RewardWeights,
};
