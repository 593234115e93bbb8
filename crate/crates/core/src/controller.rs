//! Per-step action selection for every robot in an environment.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::NavEnv;
use crate::obs::perturbation;
use crate::orca::{nh_track, orca_velocity, preferred_velocity, AgentState, OrcaConfig};
use crate::policy::{sample_action, Policy, PolicyError};
use crate::sim::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Straight,
    Orca,
    Policy,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Straight => "straight",
            ControllerKind::Orca => "orca",
            ControllerKind::Policy => "policy",
        }
    }
}

impl core::str::FromStr for ControllerKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straight" => Ok(ControllerKind::Straight),
            "orca" => Ok(ControllerKind::Orca),
            "policy" => Ok(ControllerKind::Policy),
            _ => Err("expected one of straight, orca, policy"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    /// Track the running target, ignoring everything else.
    Straight(OrcaConfig),
    Orca(OrcaConfig),
    Policy { policy: &'a Policy, deterministic: bool },
}

impl Controller<'_> {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Straight(_) => ControllerKind::Straight,
            Controller::Orca(_) => ControllerKind::Orca,
            Controller::Policy { .. } => ControllerKind::Policy,
        }
    }

    /// Only the learned policy reads LiDAR and tracker output.
    pub fn needs_perception(&self) -> bool {
        matches!(self, Controller::Policy { .. })
    }

    /// Commands for all robots; terminal robots get [`Action::STOP`].
    pub fn act<R: Rng + ?Sized>(&self, env: &mut NavEnv, rng: &mut R) -> Result<Vec<Action>, PolicyError> {
        match self {
            Controller::Straight(cfg) => Ok(straight_actions(env, cfg)),
            Controller::Orca(cfg) => Ok(orca_actions(env, cfg)),
            Controller::Policy { policy, deterministic } => policy_actions(env, policy, *deterministic, rng),
        }
    }
}

pub fn straight_actions(env: &NavEnv, cfg: &OrcaConfig) -> Vec<Action> {
    let dt = env.world.config.dt;
    env.world
        .robots
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if !r.is_active() {
                return Action::STOP;
            }
            let pref = preferred_velocity(r.position, env.target(i).position, cfg.max_speed, dt);
            nh_track(pref, r, cfg)
        })
        .collect()
}

/// NH-ORCA on ground-truth neighbor states perturbed by the environment's
/// state-noise settings.
pub fn orca_actions(env: &mut NavEnv, cfg: &OrcaConfig) -> Vec<Action> {
    let dt = env.world.config.dt;
    let noise = env.config().noise;
    let n = env.num_agents();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let me = env.world.robots[i];
        if !me.is_active() {
            out.push(Action::STOP);
            continue;
        }
        let mut neighbors = Vec::with_capacity(n - 1);
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut a = AgentState::of(&env.world.robots[j]);
            let rng = env.rng();
            a.position += perturbation(rng, noise.position, noise.kind);
            a.velocity += perturbation(rng, noise.velocity, noise.kind);
            neighbors.push(a);
        }
        let pref = preferred_velocity(me.position, env.target(i).position, cfg.max_speed, dt);
        let v = orca_velocity(&AgentState::of(&me), &neighbors, &env.world.config.obstacles, pref, cfg, dt);
        out.push(nh_track(v, &me, cfg));
    }
    out
}

pub fn policy_actions<R: Rng + ?Sized>(
    env: &NavEnv,
    policy: &Policy,
    deterministic: bool,
    rng: &mut R,
) -> Result<Vec<Action>, PolicyError> {
    let norm = *policy.normalizer();
    let mut out = Vec::with_capacity(env.num_agents());
    for (i, r) in env.world.robots.iter().enumerate() {
        if !r.is_active() {
            out.push(Action::STOP);
            continue;
        }
        let (dist, _) = policy.forward(&env.normalized(i, &norm))?;
        out.push(if deterministic { dist.mean_action() } else { sample_action(&dist, rng).0 });
    }
    Ok(out)
}
