//! Deterministic 2D multi-robot navigation: differential-drive simulation,
//! LiDAR perception, global path guidance, model-free cluster tracking, an
//! attentive actor-critic policy trained with PPO, and an NH-ORCA baseline.
//!
//! The crate is `no_std` and only needs `alloc`. All transcendental math goes
//! through `libm`, so trajectories are bit-identical across platforms for a
//! fixed seed.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bench;
pub mod controller;
pub mod env;
pub mod exec;
pub mod geom;
pub mod lidar;
pub mod nn;
pub mod obs;
pub mod orca;
pub mod planner;
pub mod policy;
pub mod ppo;
pub mod reward;
pub mod scenarios;
pub mod sim;
pub mod tracker;

pub use geom::Vec2;
pub use sim::{Action, RobotState, Status, World, WorldConfig};
