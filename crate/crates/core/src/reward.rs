//! Per-step reward: terminal goal bonus, collision penalty, and otherwise a
//! personal-space penalty plus progress toward the running target.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::sim::Status;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub r_goal: f64,
    pub r_collision: f64,
    /// Social penalty factor (negative).
    pub r_s: f64,
    /// Personal-space distance (m).
    pub personal_space: f64,
    /// Progress shaping factor.
    pub r_p: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            r_goal: 15.0,
            r_collision: -25.0,
            r_s: -0.25,
            personal_space: 0.3,
            r_p: 2.5,
        }
    }
}

/// Which branch produced a step reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardBranch {
    Goal,
    Collision,
    Shaping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub branch: RewardBranch,
    pub social: f64,
    pub progress: f64,
    pub total: f64,
}

/// Linear penalty inside the personal-space band, zero outside it.
pub fn social_penalty(d_min: f64, cfg: &RewardConfig) -> f64 {
    if d_min >= cfg.personal_space || d_min < 0.0 {
        return 0.0;
    }
    cfg.r_s * (cfg.personal_space - d_min) / cfg.personal_space
}

/// Distance decrease toward the time-`t` target, scaled by `r_p`.
pub fn progress_reward(prev_pos: Vec2, curr_pos: Vec2, target: Vec2, cfg: &RewardConfig) -> f64 {
    cfg.r_p * (prev_pos.dist(target) - curr_pos.dist(target))
}

/// Goal is checked first, and is only reached with `d_min ≥ 0` because the
/// simulator marks penetrating robots as collided.
pub fn step_reward(
    status: Status,
    d_min: f64,
    prev_pos: Vec2,
    curr_pos: Vec2,
    target: Vec2,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    if status == Status::ReachedGoal && d_min >= 0.0 {
        return RewardBreakdown { branch: RewardBranch::Goal, social: 0.0, progress: 0.0, total: cfg.r_goal };
    }
    if d_min < 0.0 {
        return RewardBreakdown {
            branch: RewardBranch::Collision,
            social: 0.0,
            progress: 0.0,
            total: cfg.r_collision,
        };
    }
    let social = social_penalty(d_min, cfg);
    let progress = progress_reward(prev_pos, curr_pos, target, cfg);
    RewardBreakdown { branch: RewardBranch::Shaping, social, progress, total: social + progress }
}
